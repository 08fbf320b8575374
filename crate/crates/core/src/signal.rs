//! Uniformly sampled signals, truncated inner products and orthonormal bases.
//!
//! All integrals use the trapezoidal rule on the sample grid. A signal with
//! `n` samples and step `dt` covers the horizon `[0, (n - 1) * dt]`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when snapping a time onto the sample grid.
const GRID_SNAP: f64 = 1e-6;

/// Orthonormality tolerance for constructed bases.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// Minimum number of samples per period of the fastest basis component.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    dt: f64,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::range("dt", dt, "(0, inf)"));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a signal needs at least 2 samples, got {}",
                values.len()
            )));
        }
        Ok(Self { dt, values })
    }

    pub fn zeros(dt: f64, horizon: f64) -> Result<Self> {
        let n = samples_for(horizon, dt)?;
        Self::new(dt, vec![0.0; n])
    }

    /// Samples `f(t)` on `[0, horizon]` with step `dt`.
    pub fn from_fn(dt: f64, horizon: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = samples_for(horizon, dt)?;
        Self::new(dt, (0..n).map(|k| f(k as f64 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Horizon `T = dt * (len - 1)`.
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// Index of the last sample at or before `t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(t > 0.0) || t > horizon * (1.0 + 1e-12) + GRID_SNAP * self.dt {
            return Err(Error::range("T", t, format!("(0, {horizon}]")));
        }
        let k = (t / self.dt + GRID_SNAP).floor() as usize;
        Ok(k.min(self.values.len() - 1))
    }

    /// Truncation to `[0, t]`: a prefix of the same sample grid.
    pub fn truncate(&self, t: f64) -> Result<Signal> {
        let k = self.index_at(t)?;
        Signal::new(self.dt, self.values[..=k].to_vec())
    }

    pub fn same_grid(&self, other: &Signal) -> bool {
        self.values.len() == other.values.len() && (self.dt - other.dt).abs() <= 1e-12 * self.dt.max(other.dt)
    }

    fn check_grid(&self, other: &Signal) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_dt: self.dt,
                right_dt: other.dt,
                left_len: self.len(),
                right_len: other.len(),
            })
        }
    }

    pub fn scale(&self, factor: f64) -> Signal {
        Signal {
            dt: self.dt,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Sample-wise `self + factor * other`.
    pub fn add_scaled(&self, other: &Signal, factor: f64) -> Result<Signal> {
        self.check_grid(other)?;
        Ok(Signal {
            dt: self.dt,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    /// CSV with header `t,value`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        out.push_str("t,value\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.time(k), v);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Signal> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("t,value") => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "expected header `t,value`, found {other:?}"
                )))
            }
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let mut cols = line.split(',');
            let (Some(t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::InvalidArgument(format!("malformed row `{line}`")));
            };
            times.push(parse_f64(t)?);
            values.push(parse_f64(v)?);
        }
        if times.len() < 2 {
            return Err(Error::InvalidArgument("signal CSV has fewer than 2 rows".into()));
        }
        let dt = times[1] - times[0];
        for (k, t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * dt.max(1.0) * (k as f64 + 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "non-uniform time grid at row {k}"
                )));
            }
        }
        Signal::new(dt, values)
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidArgument(format!("cannot parse `{s}` as a number: {e}")))
}

/// Number of samples covering `[0, horizon]` with step `dt`.
pub fn samples_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::range("dt", dt, "(0, inf)"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::range("T", horizon, "(0, inf)"));
    }
    let steps = (horizon / dt).round();
    if steps < 1.0 {
        return Err(Error::range("T", horizon, format!("[dt, inf) with dt = {dt}")));
    }
    if (steps * dt - horizon).abs() > GRID_SNAP * dt {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is not a multiple of dt = {dt}"
        )));
    }
    Ok(steps as usize + 1)
}

/// Trapezoidal integral of `f(k)` for samples `0..=last`.
fn trapezoid(dt: f64, last: usize, f: impl Fn(usize) -> f64) -> f64 {
    if last == 0 {
        return 0.0;
    }
    let interior: f64 = (1..last).map(&f).sum();
    dt * (interior + 0.5 * (f(0) + f(last)))
}

/// Truncated inner product `<x, y>_T` over `[0, t]`.
pub fn inner_product_t(x: &Signal, y: &Signal, t: f64) -> Result<f64> {
    x.check_grid(y)?;
    let last = x.index_at(t)?;
    Ok(trapezoid(x.dt, last, |k| x.values[k] * y.values[k]))
}

/// Inner product over the full horizon.
pub fn inner_product(x: &Signal, y: &Signal) -> Result<f64> {
    inner_product_t(x, y, x.horizon())
}

pub fn norm_t(x: &Signal, t: f64) -> Result<f64> {
    Ok(inner_product_t(x, x, t)?.sqrt())
}

/// Running truncated inner product: element `k` equals `<x, y>_{t_k}`.
pub fn running_inner_product(x: &Signal, y: &Signal) -> Result<Vec<f64>> {
    x.check_grid(y)?;
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..x.len() {
        acc += 0.5 * x.dt * (x.values[k - 1] * y.values[k - 1] + x.values[k] * y.values[k]);
        out.push(acc);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisKind {
    /// Constant, then `(sin, cos)` pairs at harmonics `2 pi k / T`, `k = 1, 2, ...`.
    FourierSequential,
    /// A constant for a zero frequency, otherwise `sin(omega t)`.
    FourierExplicit { frequencies: Vec<f64> },
    /// Shifted Legendre polynomials on `[0, T]`.
    Legendre,
}

/// A finite family of functions sampled on `[0, T]` that is orthonormal under
/// the discrete inner product.
#[derive(Clone, Debug)]
pub struct BasisSet {
    kind: BasisKind,
    horizon: f64,
    dt: f64,
    functions: Vec<Vec<f64>>,
}

impl BasisSet {
    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn n_basis(&self) -> usize {
        self.functions.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.functions[0].len()
    }

    pub fn function(&self, i: usize) -> Signal {
        Signal {
            dt: self.dt,
            values: self.functions[i].clone(),
        }
    }

    /// Gram matrix of the sampled functions under the discrete inner product.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.n_basis();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = discrete_dot(self.dt, &self.functions[i], &self.functions[j]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram();
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

fn discrete_dot(dt: f64, a: &[f64], b: &[f64]) -> f64 {
    trapezoid(dt, a.len() - 1, |k| a[k] * b[k])
}

fn normalize(dt: f64, f: &mut [f64]) -> Result<()> {
    let n = discrete_dot(dt, f, f).sqrt();
    if !(n > 0.0) {
        return Err(Error::DegenerateData("basis function has zero norm".into()));
    }
    f.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

fn check_resolution(frequency: f64, dt: f64) -> Result<()> {
    if frequency <= 0.0 {
        return Ok(());
    }
    let samples_per_period = 2.0 * PI / (frequency * dt);
    if samples_per_period < MIN_SAMPLES_PER_PERIOD * (1.0 - 1e-9) {
        return Err(Error::Resolution {
            frequency,
            samples_per_period,
        });
    }
    Ok(())
}

/// Builds a sampled orthonormal basis on `[0, horizon]`.
///
/// For [`BasisKind::FourierExplicit`] `n_basis` must equal the number of
/// listed frequencies, and the resulting functions must be orthogonal on the
/// grid (integer harmonics of `2 pi / T` are).
pub fn make_basis(kind: BasisKind, n_basis: usize, horizon: f64, dt: f64) -> Result<BasisSet> {
    if n_basis == 0 {
        return Err(Error::InvalidArgument("n_basis must be at least 1".into()));
    }
    let n = samples_for(horizon, dt)?;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();

    let mut functions = match &kind {
        BasisKind::FourierSequential => {
            let top = n_basis / 2;
            check_resolution(2.0 * PI * top as f64 / horizon, dt)?;
            (0..n_basis)
                .map(|i| {
                    if i == 0 {
                        return vec![1.0; n];
                    }
                    let w = 2.0 * PI * i.div_ceil(2) as f64 / horizon;
                    if i % 2 == 1 {
                        times.iter().map(|t| (w * t).sin()).collect()
                    } else {
                        times.iter().map(|t| (w * t).cos()).collect()
                    }
                })
                .collect::<Vec<Vec<f64>>>()
        }
        BasisKind::FourierExplicit { frequencies } => {
            if frequencies.len() != n_basis {
                return Err(Error::Dimension {
                    expected: n_basis,
                    got: frequencies.len(),
                });
            }
            frequencies
                .iter()
                .map(|&w| {
                    if !(w >= 0.0) || !w.is_finite() {
                        return Err(Error::range("frequency", w, "[0, inf)"));
                    }
                    check_resolution(w, dt)?;
                    Ok(if w == 0.0 {
                        vec![1.0; n]
                    } else {
                        times.iter().map(|t| (w * t).sin()).collect()
                    })
                })
                .collect::<Result<Vec<Vec<f64>>>>()?
        }
        BasisKind::Legendre => {
            let degree = n_basis - 1;
            if degree > 0 {
                // A degree-d polynomial oscillates like a sinusoid of period 2T/d.
                check_resolution(PI * degree as f64 / horizon, dt)?;
            }
            legendre_shifted(n_basis, &times, horizon)
        }
    };

    for f in functions.iter_mut() {
        normalize(dt, f)?;
    }
    if kind == BasisKind::Legendre {
        // The recurrence is orthogonal in the continuous inner product only;
        // re-orthogonalize on the grid so the discrete Gram matrix is exact.
        for _ in 0..2 {
            for i in 0..functions.len() {
                let (done, rest) = functions.split_at_mut(i);
                let f = &mut rest[0];
                for g in done.iter() {
                    let p = discrete_dot(dt, f, g);
                    f.iter_mut().zip(g).for_each(|(a, b)| *a -= p * b);
                }
                normalize(dt, f)?;
            }
        }
    }

    let basis = BasisSet {
        kind,
        horizon,
        dt,
        functions,
    };
    let err = basis.orthonormality_error();
    if err > ORTHONORMAL_TOL {
        return Err(Error::InvalidArgument(format!(
            "basis functions are not orthonormal on the grid (Gram error {err:.3e})"
        )));
    }
    Ok(basis)
}

/// First `count` shifted Legendre polynomials via the three-term recurrence.
fn legendre_shifted(count: usize, times: &[f64], horizon: f64) -> Vec<Vec<f64>> {
    let xs: Vec<f64> = times.iter().map(|t| 2.0 * t / horizon - 1.0).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    out.push(vec![1.0; xs.len()]);
    if count > 1 {
        out.push(xs.clone());
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        let next = xs
            .iter()
            .enumerate()
            .map(|(k, x)| ((2.0 * nf + 1.0) * x * out[n][k] - nf * out[n - 1][k]) / (nf + 1.0))
            .collect();
        out.push(next);
    }
    out
}

/// Coefficient-weighted sum of the basis functions.
pub fn synthesize(basis: &BasisSet, coeffs: &[f64]) -> Result<Signal> {
    if coeffs.len() != basis.n_basis() {
        return Err(Error::Dimension {
            expected: basis.n_basis(),
            got: coeffs.len(),
        });
    }
    let mut values = vec![0.0; basis.n_samples()];
    for (c, f) in coeffs.iter().zip(&basis.functions) {
        if *c == 0.0 {
            continue;
        }
        values.iter_mut().zip(f).for_each(|(v, fk)| *v += c * fk);
    }
    Signal::new(basis.dt, values)
}

/// Admissible input space: coefficient amplitude bound, norm floor and basis.
#[derive(Clone, Debug)]
pub struct InputSpaceConfig {
    pub u_max: f64,
    pub eps_min: f64,
    pub basis: BasisSet,
}

impl InputSpaceConfig {
    pub fn new(u_max: f64, eps_min: f64, basis: BasisSet) -> Result<Self> {
        if !(u_max > 0.0) || !u_max.is_finite() {
            return Err(Error::range("u_max", u_max, "(0, inf)"));
        }
        if !(eps_min >= 0.0) || eps_min >= u_max {
            return Err(Error::range("eps_min", eps_min, format!("[0, u_max = {u_max})")));
        }
        Ok(Self {
            u_max,
            eps_min,
            basis,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.basis.horizon()
    }

    pub fn n_basis(&self) -> usize {
        self.basis.n_basis()
    }
}
