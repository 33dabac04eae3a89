//! Composite binary losses: proper losses built from weight functions,
//! composed with link functions, and certified for properness, convexity,
//! calibration and label-noise robustness.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the `*64`
//! aliases at the crate root fix it to `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod composite;
pub mod document;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod links;
pub mod loss;
pub mod numerics;
pub mod proper;
pub mod robustness;
pub mod scalar;
pub mod weights;

pub use analysis::{
    allowable_region, calibration_cc, calibration_cc_partials, calibration_composite, certification_grid, check_proper,
    convexity_characterization, convexity_oracle, weight_in_region, BoundSide, Calibration, ConvexityReport, Method,
    ProperCheck, RegionCurve, Violation,
};
pub use composite::{
    catalog_margin, make_composite, margin_composite, margin_to_link, CompositeLoss, DualPair, MarginLoss,
};
pub use document::LossSpec;
pub use error::{Error, Result};
pub use experiments::{
    constrained_bayes, full_risk, minimal_loss, regret_bound_invert, regret_bound_rhs, surrogate_experiment,
    surrogate_penalty, Experiment, LinearHypothesisClass, ZeroOneLoss,
};
pub use links::{canonical_link, catalog_link, resolve_link, rho_of, Link, Rho};
pub use loss::{Label, Loss, PartialLosses};
pub use proper::{
    cost_partial, from_weight, from_weight_numeric, reconstruct_symmetric, weight_from_loss, CostLoss, HalfSide,
    MixtureValue, ProperLoss,
};
pub use robustness::{
    corrupt, cost_robust_interval, minimizer_set, noisy_loss, proper_nonrobust_region, NoiseLevel, NoisyLoss,
    RobustInterval,
};
pub use scalar::{interior_grid, linspace, real_fn, Real, RealFn};
pub use weights::{catalog_weight, minimal_weight, normalize_weight, parse_weight_name, Atom, WeightFunction};

pub type Weight64 = WeightFunction<f64>;
pub type Weight32 = WeightFunction<f32>;
pub type Link64 = Link<f64>;
pub type Link32 = Link<f32>;
pub type ProperLoss64 = ProperLoss<f64>;
pub type ProperLoss32 = ProperLoss<f32>;
pub type CompositeLoss64 = CompositeLoss<f64>;
pub type CompositeLoss32 = CompositeLoss<f32>;
pub type Experiment64 = Experiment<f64>;
