//! Data-driven dissipativity estimation.
//!
//! Estimates conic sectors, L2 gains and general `(Q, S, R)` supply rates of
//! input-output systems from simulated trajectories. Two families of
//! estimators are provided:
//!
//! * covering-based estimators ([`cone`]) that take a grid of inputs with a
//!   known covering radius and compute worst-case sector bounds, optionally
//!   inflated by Lipschitz margins;
//! * a hard-margin one-class SVM ([`svm`]) that learns the tightest supply
//!   rate half-plane from trajectory Gram features, together with a PAC
//!   generalization bound.
//!
//! The [`experiment`] module wires signals, plants, input generators and
//! estimators into reproducible runs that write CSV records, JSON reports
//! and SVG figures.

// `!(x > 0.0)` also rejects NaN; index loops read better for small matrices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cone;
pub mod error;
pub mod experiment;
pub mod input_gen;
pub mod plant;
pub mod plot;
pub mod signal;
pub mod svm;

pub use cone::{
    empirical_cone, qsr_residual, robust_cone, robust_gain, ConeBounds, PerturbationMode, RobustMargins,
    TrajectoryRecord,
};
pub use error::{Error, Result};
pub use input_gen::{grid_cover, uniform_coeffs, wiener, GridCover, GridCoverSpec, WienerSpec};
pub use plant::{lti_circle_response, InputHold, PlantKind, PlantModel};
pub use signal::{
    inner_product, inner_product_t, make_basis, norm_t, synthesize, BasisKind, BasisSet, InputSpaceConfig,
    Signal,
};
pub use svm::{
    empirical_loss, feature_map, generalization_bound, ocsvm_hard, FeaturePoint, GeneralizationBound,
    GeneralizationBoundInput, SupplyRate,
};

/// Default simulation and sampling step in seconds.
pub const DEFAULT_DT: f64 = 0.01;
