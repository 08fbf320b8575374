//! Hard one-class SVM over trajectory Gram features, and its PAC bound.
//!
//! A trajectory's feature is the Gram integral
//! `Gamma(u) = int [y; u] [y; u]^T dt`, a symmetric PSD matrix of size
//! `m + r`. It is flattened row-major over the upper triangle with
//! off-diagonal entries scaled by `sqrt(2)`, so the flat dot product equals
//! the Frobenius inner product. For SISO data the flat feature is
//! `(||y||^2, sqrt(2) <y, u>, ||u||^2)` and
//! `<Pi, Gamma> = Q ||y||^2 + 2 S <y, u> + R ||u||^2`.
//!
//! The hard OC-SVM
//!
//! ```text
//!     min  ||Pi||_F^2 / 2 - rho   s.t.  <Pi, Gamma_i> >= rho
//! ```
//!
//! has the dual `min ||sum l_i Gamma_i||^2 / 2` over the simplex, so `Pi` is
//! the minimum-norm point of the convex hull of the features and
//! `rho = ||Pi||^2`. It is solved exactly with Wolfe's minimum-norm-point
//! active-set method.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::cone::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Default constant in the generalization bound.
pub const DEFAULT_BOUND_C: f64 = 103.0;

const MAX_OUTER: usize = 10_000;
const MAX_INNER: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    values: Vec<f64>,
}

/// Flattened dimension of a symmetric `n x n` matrix.
pub fn flat_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

fn flatten_sym(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    let mut out = Vec::with_capacity(flat_dim(n));
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: row.len(),
            });
        }
        for j in i..n {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * (m[i][j].abs() + m[j][i].abs()).max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
            out.push(if i == j { m[i][j] } else { SQRT_2 * m[i][j] });
        }
    }
    Ok(out)
}

fn unflatten_sym(v: &[f64]) -> Vec<Vec<f64>> {
    let n = ((((8 * v.len() + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    let mut m = vec![vec![0.0; n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let x = if i == j { v[k] } else { v[k] / SQRT_2 };
            m[i][j] = x;
            m[j][i] = x;
            k += 1;
        }
    }
    m
}

impl FeaturePoint {
    pub fn from_matrix(gamma: &[Vec<f64>]) -> Result<Self> {
        Ok(Self {
            values: flatten_sym(gamma)?,
        })
    }

    /// Wraps an already flattened vector.
    pub fn from_flat(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn from_record(rec: &TrajectoryRecord) -> Self {
        Self {
            values: vec![rec.norm_y_sq, SQRT_2 * rec.cross, rec.norm_u_sq],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        unflatten_sym(&self.values)
    }

    pub fn dot(&self, pi: &[f64]) -> f64 {
        dot(&self.values, pi)
    }
}

/// SISO feature `(||y||^2, sqrt(2) <y, u>, ||u||^2)` at horizon `t`.
pub fn feature_map(u: &Signal, y: &Signal, t: f64) -> Result<FeaturePoint> {
    Ok(FeaturePoint::from_record(&TrajectoryRecord::from_signals(
        u, y, t,
    )?))
}

/// Learned supply rate `Pi = [Q S; S^T R]` (flattened) and offset `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplyRate {
    pub pi: Vec<f64>,
    pub rho: f64,
    pub frobenius_norm: f64,
}

impl SupplyRate {
    pub fn new(pi: Vec<f64>, rho: f64) -> Self {
        let frobenius_norm = dot(&pi, &pi).sqrt();
        Self {
            pi,
            rho,
            frobenius_norm,
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        unflatten_sym(&self.pi)
    }

    /// `(Q, S, R)` for a SISO supply rate.
    pub fn siso_qsr(&self) -> Option<(f64, f64, f64)> {
        (self.pi.len() == 3).then(|| (self.pi[0], self.pi[1] / SQRT_2, self.pi[2]))
    }

    pub fn evaluate(&self, point: &FeaturePoint) -> f64 {
        point.dot(&self.pi)
    }

    /// The sector `(a, b)` with the same half-plane after scaling to `Q = -1`;
    /// `None` unless `Q < 0` and the sector is real.
    pub fn as_cone(&self) -> Option<(f64, f64)> {
        let (q, s, r) = self.siso_qsr()?;
        if q >= 0.0 {
            return None;
        }
        let sum = 2.0 * s / -q;
        let prod = r / q;
        let disc = sum * sum - 4.0 * prod;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some((0.5 * (sum - root), 0.5 * (sum + root)))
    }
}

/// Optimality certificate of a hard OC-SVM solve.
#[derive(Clone, Debug, PartialEq)]
pub struct KktCertificate {
    /// Dual weights, one per input point: nonnegative, summing to one.
    pub weights: Vec<f64>,
    /// `||Pi||^2 - min_i <Pi, Gamma_i>`: primal minus dual objective.
    pub duality_gap: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `[G 1; 1^T 0] [mu; nu] = [0; 1]` by Gaussian elimination with
/// partial pivoting. Returns `None` when the system is singular.
fn affine_min_weights(points: &[&[f64]], ridge: f64) -> Option<Vec<f64>> {
    let k = points.len();
    let n = k + 1;
    let mut m = vec![vec![0.0; n + 1]; n];
    let mut scale: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            m[i][j] = dot(points[i], points[j]);
            scale = scale.max(m[i][j].abs());
        }
        m[i][i] += ridge;
        m[i][k] = 1.0;
        m[k][i] = 1.0;
    }
    m[k][n] = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-14 * scale.max(1.0) {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    x.truncate(k);
    Some(x)
}

fn combine(points: &[FeaturePoint], active: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].dim()];
    for (&i, &w) in active.iter().zip(weights) {
        x.iter_mut()
            .zip(points[i].values())
            .for_each(|(a, p)| *a += w * p);
    }
    x
}

/// Hard one-class SVM with its KKT certificate.
pub fn ocsvm_hard_certified(points: &[FeaturePoint]) -> Result<(SupplyRate, KktCertificate)> {
    let Some(first) = points.first() else {
        return Err(Error::NoData("no feature points".into()));
    };
    let dim = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: p.dim(),
        });
    }
    if points.iter().any(|p| p.values().iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument("non-finite feature value".into()));
    }
    let max_sq = points
        .iter()
        .map(|p| dot(p.values(), p.values()))
        .fold(0.0, f64::max);
    if max_sq == 0.0 {
        return Err(Error::DegenerateData("all feature points are zero".into()));
    }
    let tol = 1e-12 * max_sq;

    let start = (0..points.len())
        .min_by(|&a, &b| {
            dot(points[a].values(), points[a].values())
                .total_cmp(&dot(points[b].values(), points[b].values()))
        })
        .unwrap();
    let mut active = vec![start];
    let mut weights = vec![1.0];
    let mut x = points[start].values().to_vec();
    let mut iterations = 0;

    loop {
        iterations += 1;
        let xx = dot(&x, &x);
        let (j, xp) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.dot(&x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xp <= tol || active.contains(&j) {
            break;
        }
        if iterations > MAX_OUTER {
            return Err(Error::Convergence {
                iterations,
                gap: xx - xp,
            });
        }
        active.push(j);
        weights.push(0.0);

        let mut inner = 0;
        loop {
            inner += 1;
            if inner > MAX_INNER {
                return Err(Error::Convergence {
                    iterations,
                    gap: xx - xp,
                });
            }
            let refs: Vec<&[f64]> = active.iter().map(|&i| points[i].values()).collect();
            let Some(mu) =
                affine_min_weights(&refs, 0.0).or_else(|| affine_min_weights(&refs, 1e-12 * max_sq))
            else {
                return Err(Error::Convergence {
                    iterations,
                    gap: xx - xp,
                });
            };
            if mu.iter().all(|&m| m > 1e-14) {
                weights = mu;
                x = combine(points, &active, &weights);
                break;
            }
            let mut theta: f64 = 1.0;
            for (w, m) in weights.iter().zip(&mu) {
                if *m <= 1e-14 && w - m > 0.0 {
                    theta = theta.min(w / (w - m));
                }
            }
            for (w, m) in weights.iter_mut().zip(&mu) {
                *w = theta * m + (1.0 - theta) * *w;
            }
            let mut k = 0;
            while k < active.len() {
                if weights[k] <= 1e-14 {
                    active.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
    }

    let norm_sq = dot(&x, &x);
    if norm_sq <= 1e-24 * max_sq {
        return Err(Error::DegenerateData(
            "the origin lies in the convex hull of the features; no separating half-plane".into(),
        ));
    }
    let rho = points.iter().map(|p| p.dot(&x)).fold(f64::INFINITY, f64::min);
    let mut full = vec![0.0; points.len()];
    for (&i, &w) in active.iter().zip(&weights) {
        full[i] += w;
    }
    let cert = KktCertificate {
        weights: full,
        duality_gap: norm_sq - rho,
        iterations,
    };
    Ok((SupplyRate::new(x, rho), cert))
}

/// Hard one-class SVM: the tightest half-plane `<Pi, Gamma> >= rho` holding
/// all points.
pub fn ocsvm_hard(points: &[FeaturePoint]) -> Result<SupplyRate> {
    ocsvm_hard_certified(points).map(|(s, _)| s)
}

/// Fraction of points strictly outside the half-plane `<Pi, Gamma> >= 0`.
pub fn empirical_loss(points: &[FeaturePoint], supply: &SupplyRate) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let bad = points.iter().filter(|p| supply.evaluate(p) < 0.0).count();
    bad as f64 / points.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationBoundInput {
    /// Sample count `K`.
    pub samples: u64,
    pub c: f64,
    /// Normalized margin `gamma / ||Pi||_F`.
    pub gamma_hat: f64,
    /// Confidence parameter: the bound holds with probability `1 - confidence`.
    pub confidence: f64,
}

impl GeneralizationBoundInput {
    pub fn new(samples: u64, c: f64, gamma_hat: f64, confidence: f64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::range("c", c, "(0, inf)"));
        }
        if !(gamma_hat > 0.0) || !gamma_hat.is_finite() {
            return Err(Error::range("gamma_hat", gamma_hat, "(0, inf)"));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::range("delta", confidence, "(0, 1)"));
        }
        Ok(Self {
            samples,
            c,
            gamma_hat,
            confidence,
        })
    }

    /// Margin `gamma = rho` relative to the learned `||Pi||_F`.
    pub fn for_supply(samples: u64, supply: &SupplyRate, confidence: f64) -> Result<Self> {
        Self::new(
            samples,
            DEFAULT_BOUND_C,
            supply.rho / supply.frobenius_norm,
            confidence,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationBound {
    pub bound: f64,
    /// The value carries no information: it is at least one, or the inner
    /// logarithm's argument is at most one.
    pub vacuous: bool,
}

/// `(2/K) (log2(K^2 / (2 delta)) + 16 c^2 / g^2 * log2(ln2 / (4 c^2) * g^2 K) + 2)`.
pub fn generalization_bound(inp: &GeneralizationBoundInput) -> GeneralizationBound {
    let k = inp.samples as f64;
    let g2 = inp.gamma_hat * inp.gamma_hat;
    let c2 = inp.c * inp.c;
    let inner = std::f64::consts::LN_2 / (4.0 * c2) * g2 * k;
    let first = 2.0 * k.log2() - (2.0 * inp.confidence).log2();
    let bound = 2.0 / k * (first + 16.0 * c2 / g2 * inner.log2() + 2.0);
    GeneralizationBound {
        bound,
        vacuous: !(bound < 1.0) || inner <= 1.0,
    }
}

/// Supply-rate report written by estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplyReport {
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub rho: f64,
    pub frobenius_norm: f64,
    pub empirical_loss: f64,
    pub bound: Option<f64>,
    pub vacuous: Option<bool>,
}

impl SupplyReport {
    pub fn new(
        supply: &SupplyRate,
        points: &[FeaturePoint],
        bound: Option<GeneralizationBound>,
    ) -> Result<Self> {
        let (q, s, r) = supply.siso_qsr().ok_or(Error::Dimension {
            expected: 3,
            got: supply.pi.len(),
        })?;
        Ok(Self {
            q,
            s,
            r,
            rho: supply.rho,
            frobenius_norm: supply.frobenius_norm,
            empirical_loss: empirical_loss(points, supply),
            bound: bound.map(|b| b.bound),
            vacuous: bound.map(|b| b.vacuous),
        })
    }
}

/// Feature table with header `f1,f2,f3`.
pub fn features_to_csv(points: &[FeaturePoint]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("f1,f2,f3\n");
    for p in points {
        let v = p.values();
        let _ = writeln!(out, "{},{},{}", v[0], v[1], v[2]);
    }
    out
}
