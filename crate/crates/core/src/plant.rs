//! Benchmark plants simulated from rest with fixed-step RK4.
//!
//! The input is held constant between samples (zero-order hold) unless a
//! first-order hold is selected. Outputs are
//! reported on the input's sample grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Documented reference Lipschitz bound of [`PlantKind::LtiCircle`]: its L2
/// gain, the rightmost point of the Nyquist circle.
pub const LTI_CIRCLE_LIPSCHITZ: f64 = 1.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantKind {
    /// `dx/dt = -x + u`, `y = x + u/4`; transfer function `1/(jw + 1) + 1/4`.
    LtiCircle,
    /// `theta'' = -sin(theta) - theta' + u`, `y = theta' + u/4`.
    Pendulum,
    /// Linear SISO state space `dx/dt = A x + B u`, `y = C x + D u`.
    StateSpace {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: f64,
    },
}

/// How the sampled input is reconstructed between samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputHold {
    /// Piecewise constant: `u(t) = u_k` on `[t_k, t_k+1)`.
    #[default]
    ZeroOrder,
    /// Piecewise linear between samples, consistent with trapezoidal
    /// quadrature of the recorded moments.
    FirstOrder,
}

impl InputHold {
    /// Input at the start, midpoint and end of step `k`.
    fn stages(self, values: &[f64], k: usize) -> (f64, f64, f64) {
        let (a, b) = (values[k], values[k + 1]);
        match self {
            InputHold::ZeroOrder => (a, a, a),
            InputHold::FirstOrder => (a, 0.5 * (a + b), b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    #[serde(flatten)]
    pub kind: PlantKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
    #[serde(default)]
    pub hold: InputHold,
}

impl PlantModel {
    pub fn lti_circle() -> Self {
        Self {
            kind: PlantKind::LtiCircle,
            lipschitz_bound: Some(LTI_CIRCLE_LIPSCHITZ),
            hold: InputHold::ZeroOrder,
        }
    }

    pub fn pendulum() -> Self {
        Self {
            kind: PlantKind::Pendulum,
            lipschitz_bound: None,
            hold: InputHold::ZeroOrder,
        }
    }

    pub fn state_space(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        if let Some(row) = a.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: row.len(),
            });
        }
        for v in [&b, &c] {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            kind: PlantKind::StateSpace { a, b, c, d },
            lipschitz_bound: None,
            hold: InputHold::ZeroOrder,
        })
    }

    pub fn with_hold(mut self, hold: InputHold) -> Self {
        self.hold = hold;
        self
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    /// The configured Lipschitz bound, falling back to the known one of the
    /// benchmark LTI plant.
    pub fn lipschitz(&self) -> Option<f64> {
        match (self.lipschitz_bound, &self.kind) {
            (Some(l), _) => Some(l),
            (None, PlantKind::LtiCircle) => Some(LTI_CIRCLE_LIPSCHITZ),
            (None, _) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PlantKind::LtiCircle => "lti_circle",
            PlantKind::Pendulum => "pendulum",
            PlantKind::StateSpace { .. } => "state_space",
        }
    }

    /// Output for input `u` from zero initial state.
    pub fn simulate(&self, u: &Signal) -> Result<Signal> {
        let dt = u.dt();
        let y = match &self.kind {
            PlantKind::LtiCircle => rk4([0.0], u, self.hold, |x, v| [-x[0] + v], |x, v| x[0] + 0.25 * v)?,
            PlantKind::Pendulum => rk4(
                [0.0, 0.0],
                u,
                self.hold,
                |x, v| [x[1], -x[0].sin() - x[1] + v],
                |x, v| x[1] + 0.25 * v,
            )?,
            PlantKind::StateSpace { a, b, c, d } => simulate_state_space(a, b, c, *d, u, self.hold)?,
        };
        Signal::new(dt, y)
    }
}

/// Input-output pair as CSV with header `t,u,y`.
pub fn trajectory_to_csv(u: &Signal, y: &Signal) -> Result<String> {
    use std::fmt::Write as _;
    if !u.same_grid(y) {
        return Err(Error::GridMismatch {
            left_dt: u.dt(),
            right_dt: y.dt(),
            left_len: u.len(),
            right_len: y.len(),
        });
    }
    let mut out = String::from("t,u,y\n");
    for (k, (a, b)) in u.values().iter().zip(y.values()).enumerate() {
        let _ = writeln!(out, "{},{},{}", u.time(k), a, b);
    }
    Ok(out)
}

/// Frequency response of [`PlantKind::LtiCircle`]: `1/(jw + 1) + 1/4`.
pub fn lti_circle_response(omega: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) / Complex64::new(1.0, omega) + 0.25
}

fn rk4<const N: usize>(
    x0: [f64; N],
    u: &Signal,
    hold: InputHold,
    f: impl Fn(&[f64; N], f64) -> [f64; N],
    out: impl Fn(&[f64; N], f64) -> f64,
) -> Result<Vec<f64>> {
    let dt = u.dt();
    let values = u.values();
    let mut x = x0;
    let mut y = Vec::with_capacity(values.len());
    y.push(out(&x, values[0]));
    let axpy = |x: &[f64; N], k: &[f64; N], h: f64| {
        let mut r = *x;
        r.iter_mut().zip(k).for_each(|(r, k)| *r += h * k);
        r
    };
    for i in 0..values.len() - 1 {
        let (v0, vm, v1) = hold.stages(values, i);
        let k1 = f(&x, v0);
        let k2 = f(&axpy(&x, &k1, 0.5 * dt), vm);
        let k3 = f(&axpy(&x, &k2, 0.5 * dt), vm);
        let k4 = f(&axpy(&x, &k3, dt), v1);
        for j in 0..N {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if x.iter().any(|s| !s.is_finite()) {
            return Err(Error::Divergence {
                index: i + 1,
                time: (i + 1) as f64 * dt,
            });
        }
        y.push(out(&x, values[i + 1]));
    }
    Ok(y)
}

fn simulate_state_space(
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
    d: f64,
    u: &Signal,
    hold: InputHold,
) -> Result<Vec<f64>> {
    let n = a.len();
    let dt = u.dt();
    let deriv = |x: &[f64], v: f64| -> Vec<f64> {
        (0..n)
            .map(|i| a[i].iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + b[i] * v)
            .collect()
    };
    let output = |x: &[f64], v: f64| c.iter().zip(x).map(|(ci, xi)| ci * xi).sum::<f64>() + d * v;
    let shifted =
        |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + h * k).collect() };

    let values = u.values();
    let mut x = vec![0.0; n];
    let mut y = Vec::with_capacity(values.len());
    y.push(output(&x, values[0]));
    for i in 0..values.len() - 1 {
        let (v0, vm, v1) = hold.stages(values, i);
        let k1 = deriv(&x, v0);
        let k2 = deriv(&shifted(&x, &k1, 0.5 * dt), vm);
        let k3 = deriv(&shifted(&x, &k2, 0.5 * dt), vm);
        let k4 = deriv(&shifted(&x, &k3, dt), v1);
        for j in 0..n {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if x.iter().any(|s| !s.is_finite()) {
            return Err(Error::Divergence {
                index: i + 1,
                time: (i + 1) as f64 * dt,
            });
        }
        y.push(output(&x, values[i + 1]));
    }
    Ok(y)
}
