//! Deterministic scalar numerics: adaptive quadrature, bracketed minimization,
//! the principal branch of Lambert W and central finite differences.

mod diff;
mod lambert;
mod minimize;
mod quadrature;

pub use diff::{default_step, finite_diff, one_sided_derivative, Side};
pub use lambert::lambert_w0;
pub use minimize::{minimize_scalar, MinimizeResult, DEFAULT_MINIMIZE_TOL};
pub use quadrature::{integrate, integrate_default, QuadratureSpec};
