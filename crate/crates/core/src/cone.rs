//! Conic-sector and gain estimates from trajectory moments.
//!
//! A SISO system lies in `cone(a, b)` when every trajectory satisfies
//!
//! ```text
//!     -||y||^2 + (a + b) <y, u> - a b ||u||^2 >= 0,
//! ```
//!
//! i.e. it is `(Q, S, R) = (-1, (a + b)/2, -a b)`-dissipative with the cross
//! term counted as `<y, S u> + <u, S y>`. Two tightest sectors are computed:
//! maximize the lower bound first (`a_R`, then `b_I`), or minimize the upper
//! bound first (`b_L`, then `a_I`).
//!
//! With a covering radius `delta` and Lipschitz bound `L`, each record's
//! moments are widened by the margins
//! `L1 = delta`, `L2 = L delta`, `L3 = L delta ||u|| + delta ||y|| + L delta^2`
//! and every bound is taken at the worst case over the widened moments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{inner_product_t, parse_f64, Signal};

/// Slack allowed on the Cauchy-Schwarz check of a record.
const CS_SLACK: f64 = 1e-9;

/// Relative threshold below which a bound's denominator counts as zero.
const DENOM_TOL: f64 = 1e-9;

/// Truncated moments of one input-output trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub norm_u_sq: f64,
    pub cross: f64,
    pub norm_y_sq: f64,
}

impl TrajectoryRecord {
    pub fn new(horizon: f64, norm_u_sq: f64, cross: f64, norm_y_sq: f64) -> Result<Self> {
        if !(norm_u_sq >= 0.0) || !(norm_y_sq >= 0.0) || !cross.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid moments ({norm_u_sq}, {cross}, {norm_y_sq})"
            )));
        }
        let bound = norm_u_sq * norm_y_sq;
        if cross * cross > bound + CS_SLACK * bound.max(f64::MIN_POSITIVE) + 1e-300 {
            return Err(Error::InvalidArgument(format!(
                "moments violate Cauchy-Schwarz: cross^2 = {} > {}",
                cross * cross,
                bound
            )));
        }
        Ok(Self {
            horizon,
            norm_u_sq,
            cross,
            norm_y_sq,
        })
    }

    /// Moments of `(u, y)` truncated at `horizon`.
    pub fn from_signals(u: &Signal, y: &Signal, horizon: f64) -> Result<Self> {
        let norm_u_sq = inner_product_t(u, u, horizon)?;
        let cross = inner_product_t(y, u, horizon)?;
        let norm_y_sq = inner_product_t(y, y, horizon)?;
        Ok(Self {
            horizon,
            norm_u_sq,
            cross,
            norm_y_sq,
        })
    }

    pub fn norm_u(&self) -> f64 {
        self.norm_u_sq.sqrt()
    }

    pub fn norm_y(&self) -> f64 {
        self.norm_y_sq.sqrt()
    }

    /// `<y, u> / ||u||^2`, the sector slope realized by this record.
    pub fn ratio(&self) -> f64 {
        self.cross / self.norm_u_sq
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            horizon: self.horizon,
            norm_u_sq: self.norm_u_sq * factor,
            cross: self.cross * factor,
            norm_y_sq: self.norm_y_sq * factor,
        }
    }
}

/// `Q ||y||^2 + 2 S <y, u> + R ||u||^2`: nonnegative iff the record is
/// consistent with `(Q, S, R)`-dissipativity at its horizon.
pub fn qsr_residual(record: &TrajectoryRecord, q: f64, s: f64, r: f64) -> f64 {
    q * record.norm_y_sq + 2.0 * s * record.cross + r * record.norm_u_sq
}

/// `(Q, S, R)` of `cone(a, b)`, including the degenerate half-infinite sectors.
pub fn cone_supply_rate(a: f64, b: f64) -> (f64, f64, f64) {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => (-1.0, 0.5 * (a + b), -a * b),
        (true, false) => (0.0, 0.5, -a),
        (false, true) => (0.0, -0.5, b),
        (false, false) => (0.0, 0.0, 0.0),
    }
}

/// Reads `Y = ||y||^2` perturbations either additively (`Y +- L2`) or as a
/// perturbed norm (`(||y|| +- L2)^2`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    #[default]
    AsWritten,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustMargins {
    pub lipschitz: f64,
    pub delta: f64,
    #[serde(default)]
    pub mode: PerturbationMode,
}

impl RobustMargins {
    pub fn zero() -> Self {
        Self {
            lipschitz: 0.0,
            delta: 0.0,
            mode: PerturbationMode::AsWritten,
        }
    }

    pub fn new(lipschitz: f64, delta: f64) -> Result<Self> {
        let m = Self {
            lipschitz,
            delta,
            mode: PerturbationMode::AsWritten,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn strict(mut self) -> Self {
        self.mode = PerturbationMode::Strict;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::range("delta", self.delta, "[0, inf)"));
        }
        if self.delta > 0.0 && !(self.lipschitz > 0.0) {
            return Err(Error::range("L", self.lipschitz, "(0, inf) when delta > 0"));
        }
        if !(self.lipschitz >= 0.0) || !self.lipschitz.is_finite() {
            return Err(Error::range("L", self.lipschitz, "[0, inf)"));
        }
        Ok(())
    }

    /// `(L1, L2, L3)` for one record.
    pub fn lambdas(&self, record: &TrajectoryRecord) -> (f64, f64, f64) {
        let d = self.delta;
        let l = self.lipschitz;
        (
            d,
            l * d,
            l * d * record.norm_u() + d * record.norm_y() + l * d * d,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeMethod {
    Empirical,
    Robust,
}

/// Estimated sector bounds; infinite values denote degenerate sectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeBounds {
    #[serde(rename = "a_R", with = "ext_real")]
    pub a_r: f64,
    #[serde(rename = "b_I", with = "ext_real")]
    pub b_i: f64,
    #[serde(rename = "b_L", with = "ext_real")]
    pub b_l: f64,
    #[serde(rename = "a_I", with = "ext_real")]
    pub a_i: f64,
    pub method: ConeMethod,
    pub margins: RobustMargins,
    pub n_records: usize,
    /// Records dropped because `||u|| <= L1`.
    pub n_excluded: usize,
    /// Set when an index set was empty and a bound fell back to +-inf.
    pub degenerate: bool,
}

impl ConeBounds {
    /// `(a_R, b_I)`: the sector obtained by maximizing the lower bound first.
    pub fn lower_first(&self) -> (f64, f64) {
        (self.a_r, self.b_i)
    }

    /// `(a_I, b_L)`: the sector obtained by minimizing the upper bound first.
    pub fn upper_first(&self) -> (f64, f64) {
        (self.a_i, self.b_l)
    }

    /// Checks `a_I <= a_R <= b_L <= b_I` where all four are finite.
    pub fn is_ordered(&self, tol: f64) -> bool {
        let v = [self.a_i, self.a_r, self.b_l, self.b_i];
        if v.iter().any(|x| !x.is_finite()) {
            return true;
        }
        v.windows(2).all(|w| w[0] <= w[1] + tol * w[1].abs().max(1.0))
    }
}

/// Worst-case moment intervals for one record under the margins.
struct Widened {
    u_lo: f64,
    u_hi: f64,
    c_lo: f64,
    c_hi: f64,
    y_hi: f64,
}

fn widen(rec: &TrajectoryRecord, m: &RobustMargins) -> Widened {
    let (l1, l2, l3) = m.lambdas(rec);
    let nu = rec.norm_u();
    let y_hi = match m.mode {
        PerturbationMode::AsWritten => rec.norm_y_sq + l2,
        PerturbationMode::Strict => (rec.norm_y() + l2).powi(2),
    };
    Widened {
        u_lo: (nu - l1).max(0.0).powi(2),
        u_hi: (nu + l1).powi(2),
        c_lo: rec.cross - l3,
        c_hi: rec.cross + l3,
        y_hi,
    }
}

/// Smallest `C / U` over the widened box.
fn lower_ratio(w: &Widened) -> f64 {
    if w.c_lo >= 0.0 {
        w.c_lo / w.u_hi
    } else {
        w.c_lo / w.u_lo
    }
}

/// Largest `C / U` over the widened box.
fn upper_ratio(w: &Widened) -> f64 {
    if w.c_hi >= 0.0 {
        w.c_hi / w.u_lo
    } else {
        w.c_hi / w.u_hi
    }
}

/// Sector bounds from the records with margins; `delta = 0` gives the
/// empirical bounds.
pub fn robust_cone(records: &[TrajectoryRecord], margins: &RobustMargins) -> Result<ConeBounds> {
    margins.validate()?;

    let eligible: Vec<(&TrajectoryRecord, Widened)> = records
        .iter()
        .filter(|r| r.norm_u() - margins.delta > 0.0)
        .map(|r| (r, widen(r, margins)))
        .collect();
    let n_excluded = records.len() - eligible.len();
    let mut degenerate = eligible.is_empty();

    let a_r = eligible
        .iter()
        .map(|(_, w)| lower_ratio(w))
        .fold(f64::INFINITY, f64::min);
    let b_l = eligible
        .iter()
        .map(|(_, w)| upper_ratio(w))
        .fold(f64::NEG_INFINITY, f64::max);
    let (a_r, b_l) = if eligible.is_empty() {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        (a_r, b_l)
    };

    // b_I >= N2 / D2 with N2 = Y - a C, D2 = C - a U, over records with D2 > 0.
    let mut b_i = b_l;
    if a_r.is_finite() {
        let a = a_r;
        for (_, w) in &eligible {
            let n_hi = w.y_hi - if a >= 0.0 { a * w.c_lo } else { a * w.c_hi };
            let (d_lo, d_hi) = if a >= 0.0 {
                (w.c_lo - a * w.u_hi, w.c_hi - a * w.u_lo)
            } else {
                (w.c_lo - a * w.u_lo, w.c_hi - a * w.u_hi)
            };
            let d = if n_hi >= 0.0 { d_lo } else { d_hi };
            let scale = w.c_hi.abs().max(w.c_lo.abs()) + a.abs() * w.u_hi;
            if d > DENOM_TOL * scale {
                b_i = b_i.max(n_hi / d);
            }
        }
    }

    // a <= N1 / D1 with N1 = b C - Y, D1 = b U - C, over records with D1 > 0.
    let mut a_i = a_r;
    if b_l.is_finite() {
        let b = b_l;
        for (_, w) in &eligible {
            let n_lo = if b >= 0.0 { b * w.c_lo } else { b * w.c_hi } - w.y_hi;
            let (d_lo, d_hi) = if b >= 0.0 {
                (b * w.u_lo - w.c_hi, b * w.u_hi - w.c_lo)
            } else {
                (b * w.u_hi - w.c_hi, b * w.u_lo - w.c_lo)
            };
            let d = if n_lo >= 0.0 { d_hi } else { d_lo };
            let scale = w.c_hi.abs().max(w.c_lo.abs()) + b.abs() * w.u_hi;
            if d > DENOM_TOL * scale {
                a_i = a_i.min(n_lo / d);
            }
        }
    }
    if !a_r.is_finite() || !b_l.is_finite() {
        degenerate = true;
    }

    Ok(ConeBounds {
        a_r,
        b_i,
        b_l,
        a_i,
        method: if margins.delta == 0.0 {
            ConeMethod::Empirical
        } else {
            ConeMethod::Robust
        },
        margins: *margins,
        n_records: records.len(),
        n_excluded,
        degenerate,
    })
}

/// Sector bounds of the data itself (no covering margins).
pub fn empirical_cone(records: &[TrajectoryRecord]) -> Result<ConeBounds> {
    if !records.iter().any(|r| r.norm_u_sq > 0.0) {
        return Err(Error::NoData("every record has zero input".into()));
    }
    robust_cone(records, &RobustMargins::zero())
}

/// Worst-case gain `max (L delta + ||y||) / (||u|| - delta)` over records with
/// `||u|| > delta`.
pub fn robust_gain(records: &[TrajectoryRecord], margins: &RobustMargins) -> Result<f64> {
    margins.validate()?;
    let d = margins.delta;
    records
        .iter()
        .filter(|r| r.norm_u() > d)
        .map(|r| (margins.lipschitz * d + r.norm_y()) / (r.norm_u() - d))
        .reduce(f64::max)
        .ok_or_else(|| Error::NoData(format!("no record with ||u|| > delta = {d}")))
}

/// Record table with header `T,norm_u_sq,cross,norm_y_sq`.
pub fn records_to_csv(records: &[TrajectoryRecord]) -> String {
    let mut out = String::from("T,norm_u_sq,cross,norm_y_sq\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.horizon, r.norm_u_sq, r.cross, r.norm_y_sq);
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("T,norm_u_sq,cross,norm_y_sq") => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "expected header `T,norm_u_sq,cross,norm_y_sq`, found {other:?}"
            )))
        }
    }
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::InvalidArgument(format!("malformed row `{line}`")));
            }
            TrajectoryRecord::new(
                parse_f64(cols[0])?,
                parse_f64(cols[1])?,
                parse_f64(cols[2])?,
                parse_f64(cols[3])?,
            )
        })
        .collect()
}

/// Estimate report written next to record tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(rename = "a_R", with = "ext_real")]
    pub a_r: f64,
    #[serde(rename = "b_I", with = "ext_real")]
    pub b_i: f64,
    #[serde(rename = "b_L", with = "ext_real")]
    pub b_l: f64,
    #[serde(rename = "a_I", with = "ext_real")]
    pub a_i: f64,
    #[serde(with = "ext_real_opt")]
    pub gamma: Option<f64>,
    pub delta: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub n_records: usize,
    pub n_excluded: usize,
    pub mode: String,
}

impl EstimateReport {
    pub fn new(bounds: &ConeBounds, gamma: Option<f64>) -> Self {
        let mode = match (bounds.method, bounds.margins.mode) {
            (ConeMethod::Empirical, _) => "empirical",
            (ConeMethod::Robust, PerturbationMode::AsWritten) => "robust",
            (ConeMethod::Robust, PerturbationMode::Strict) => "robust_strict",
        };
        Self {
            a_r: bounds.a_r,
            b_i: bounds.b_i,
            b_l: bounds.b_l,
            a_i: bounds.a_i,
            gamma,
            delta: bounds.margins.delta,
            lipschitz: bounds.margins.lipschitz,
            n_records: bounds.n_records,
            n_excluded: bounds.n_excluded,
            mode: mode.to_string(),
        }
    }
}

/// Extended reals in JSON: finite numbers as numbers, infinities as `"inf"`/`"-inf"`.
pub mod ext_real {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

pub mod ext_real_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::ext_real::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::ext_real")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
