//! Input generators: covering grids, uniform coefficient draws and random walks.
//!
//! Stochastic generators derive one ChaCha8 stream per item from the run seed
//! (`seed`, stream = item index; see [`item_rng`]). Items can therefore be
//! produced on any worker, in any order, with identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{samples_for, InputSpaceConfig, Signal};

/// Default hard cap on the number of grid trajectories.
pub const DEFAULT_GRID_CAP: u64 = 10_000_000;

/// Maximum draws spent on a single accepted coefficient vector.
const MAX_DRAWS_PER_VECTOR: usize = 10_000;

/// Split function: the RNG for item `index` of a run seeded with `seed`.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Coefficient grid `{u_max (k - N) / N : k = 1..2N-1}` along every basis axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCoverSpec {
    pub u_max: f64,
    pub n_basis: usize,
    /// Grid half-density `N`; each axis carries `2N - 1` points.
    pub half_density: u32,
    pub cap: u64,
}

impl GridCoverSpec {
    pub fn new(u_max: f64, n_basis: usize, half_density: u32) -> Result<Self> {
        if !(u_max > 0.0) || !u_max.is_finite() {
            return Err(Error::range("u_max", u_max, "(0, inf)"));
        }
        if n_basis == 0 {
            return Err(Error::InvalidArgument("n_basis must be at least 1".into()));
        }
        if half_density == 0 {
            return Err(Error::InvalidArgument(
                "grid half-density N must be at least 1".into(),
            ));
        }
        Ok(Self {
            u_max,
            n_basis,
            half_density,
            cap: DEFAULT_GRID_CAP,
        })
    }

    pub fn for_space(space: &InputSpaceConfig, half_density: u32) -> Result<Self> {
        Self::new(space.u_max, space.n_basis(), half_density)
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn points_per_axis(&self) -> u64 {
        2 * self.half_density as u64 - 1
    }

    /// `K = (2N - 1)^b`, or `None` when it does not fit in a `u64`.
    pub fn cardinality(&self) -> Option<u64> {
        let exp = u32::try_from(self.n_basis).ok()?;
        self.points_per_axis().checked_pow(exp)
    }

    /// `K` as a float, finite even when it overflows integer types.
    pub fn cardinality_f64(&self) -> f64 {
        (self.points_per_axis() as f64).powf(self.n_basis as f64)
    }

    /// Covering radius `b u_max / (2N - 1)`.
    pub fn cover_radius(&self) -> f64 {
        self.n_basis as f64 * self.u_max / self.points_per_axis() as f64
    }

    pub fn axis_values(&self) -> Vec<f64> {
        let n = self.half_density as f64;
        (1..=self.points_per_axis())
            .map(|k| self.u_max * (k as f64 - n) / n)
            .collect()
    }

    /// The `index`-th grid point in lexicographic order (first axis slowest).
    pub fn point(&self, index: u64) -> Vec<f64> {
        let axis = self.axis_values();
        let base = self.points_per_axis();
        let mut digits = vec![0usize; self.n_basis];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = (rest % base) as usize;
            rest /= base;
        }
        digits.into_iter().map(|d| axis[d]).collect()
    }

    pub fn check_budget(&self) -> Result<u64> {
        match self.cardinality() {
            Some(k) if k <= self.cap => Ok(k),
            _ => Err(Error::BudgetExceeded {
                k: self.cardinality_f64(),
                cap: self.cap,
            }),
        }
    }
}

/// Lazy lexicographic iterator over a covering grid.
#[derive(Clone, Debug)]
pub struct GridCover {
    axis: Vec<f64>,
    digits: Vec<usize>,
    remaining: u64,
}

impl Iterator for GridCover {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.remaining == 0 {
            return None;
        }
        let out = self.digits.iter().map(|&d| self.axis[d]).collect();
        self.remaining -= 1;
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.axis.len() {
                break;
            }
            *d = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

impl ExactSizeIterator for GridCover {}

/// Every grid point, lazily; fails if `K` exceeds the spec's cap.
pub fn grid_cover(spec: &GridCoverSpec) -> Result<GridCover> {
    let k = spec.check_budget()?;
    Ok(GridCover {
        axis: spec.axis_values(),
        digits: vec![0; spec.n_basis],
        remaining: k,
    })
}

/// `count` coefficient vectors with i.i.d. `U[-u_max, u_max]` entries,
/// rejecting vectors whose norm is below `eps_min`.
///
/// By orthonormality of the basis the synthesized signal norm equals the
/// Euclidean coefficient norm, so rejection is done on coefficients.
pub fn uniform_coeffs(
    u_max: f64,
    eps_min: f64,
    n_basis: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !(u_max > 0.0) {
        return Err(Error::range("u_max", u_max, "(0, inf)"));
    }
    if n_basis == 0 {
        return Err(Error::InvalidArgument("n_basis must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    for i in 0..count {
        let mut rng = item_rng(seed, i as u64);
        let mut draws = 0;
        loop {
            if draws == MAX_DRAWS_PER_VECTOR {
                return Err(Error::InfeasibleSpace {
                    accepted: out.len(),
                    attempts,
                });
            }
            draws += 1;
            attempts += 1;
            let v: Vec<f64> = (0..n_basis).map(|_| rng.random_range(-u_max..=u_max)).collect();
            if v.iter().map(|c| c * c).sum::<f64>().sqrt() >= eps_min {
                out.push(v);
                break;
            }
        }
    }
    if (out.len() as f64) < 0.01 * attempts as f64 {
        return Err(Error::InfeasibleSpace {
            accepted: out.len(),
            attempts,
        });
    }
    Ok(out)
}

/// Coefficient draws for an input space.
pub fn uniform_coeffs_in(space: &InputSpaceConfig, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    uniform_coeffs(space.u_max, space.eps_min, space.n_basis(), count, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WienerHorizon {
    Fixed {
        horizon: f64,
    },
    /// Prefixes of one path at `t_min, t_min + step, ..., t_max`.
    Sweep {
        t_min: f64,
        t_max: f64,
        step: f64,
    },
}

/// Discrete random walk: `u(0) = 0`, `u(t + dt) = u(t) + step_scale * z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerSpec {
    pub dt: f64,
    pub horizon: WienerHorizon,
    pub step_scale: f64,
    pub seed: u64,
}

impl WienerSpec {
    pub fn fixed(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon: WienerHorizon::Fixed { horizon },
            step_scale: 1.0,
            seed,
        }
    }

    pub fn sweep(dt: f64, t_min: f64, t_max: f64, step: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon: WienerHorizon::Sweep { t_min, t_max, step },
            step_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::range("dt", self.dt, "(0, inf)"));
        }
        if !(self.step_scale >= 0.0) || !self.step_scale.is_finite() {
            return Err(Error::range("step_scale", self.step_scale, "[0, inf)"));
        }
        match self.horizon {
            WienerHorizon::Fixed { horizon } => {
                samples_for(horizon, self.dt)?;
            }
            WienerHorizon::Sweep { t_min, t_max, step } => {
                if !(t_min >= self.dt * (1.0 - 1e-9)) {
                    return Err(Error::range("T_min", t_min, format!("[dt = {}, inf)", self.dt)));
                }
                if !(t_max >= t_min) {
                    return Err(Error::range("T_max", t_max, format!("[T_min = {t_min}, inf)")));
                }
                samples_for(t_min, self.dt)?;
                samples_for(t_max, self.dt)?;
                samples_for(step, self.dt)?;
            }
        }
        Ok(())
    }

    /// Sample indices at which the sweep's prefixes end (one entry for a fixed horizon).
    pub fn prefix_ends(&self) -> Result<Vec<usize>> {
        self.validate()?;
        Ok(match self.horizon {
            WienerHorizon::Fixed { horizon } => vec![samples_for(horizon, self.dt)? - 1],
            WienerHorizon::Sweep { t_min, t_max, step } => {
                let first = samples_for(t_min, self.dt)? - 1;
                let last = samples_for(t_max, self.dt)? - 1;
                let stride = samples_for(step, self.dt)? - 1;
                (first..=last).step_by(stride).collect()
            }
        })
    }

    fn full_horizon(&self) -> f64 {
        match self.horizon {
            WienerHorizon::Fixed { horizon } => horizon,
            WienerHorizon::Sweep { t_max, .. } => t_max,
        }
    }
}

/// One random walk on `[0, horizon]` drawn from `rng`.
pub fn random_walk(dt: f64, horizon: f64, step_scale: f64, rng: &mut impl Rng) -> Result<Signal> {
    let n = samples_for(horizon, dt)?;
    let mut values = Vec::with_capacity(n);
    let mut u = 0.0;
    values.push(u);
    for _ in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        u += step_scale * z;
        values.push(u);
    }
    Signal::new(dt, values)
}

/// The walk for a fixed horizon, or every prefix of a single walk for a sweep.
pub fn wiener(spec: &WienerSpec) -> Result<Vec<Signal>> {
    let ends = spec.prefix_ends()?;
    let mut rng = item_rng(spec.seed, 0);
    let path = random_walk(spec.dt, spec.full_horizon(), spec.step_scale, &mut rng)?;
    ends.iter()
        .map(|&k| Signal::new(spec.dt, path.values()[..=k].to_vec()))
        .collect()
}

/// `count` independent fixed-length walks; walk `i` uses stream `i`.
pub fn wiener_batch(dt: f64, horizon: f64, step_scale: f64, count: usize, seed: u64) -> Result<Vec<Signal>> {
    (0..count)
        .map(|i| random_walk(dt, horizon, step_scale, &mut item_rng(seed, i as u64)))
        .collect()
}
