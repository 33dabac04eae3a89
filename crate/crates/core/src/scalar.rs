//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::sync::Arc;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Shared, thread-safe real function of one real argument.
pub type RealFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Wraps a closure into a [`RealFn`].
pub fn real_fn<T: Real, F>(f: F) -> RealFn<T>
where
    F: Fn(T) -> T + Send + Sync + 'static,
{
    Arc::new(f)
}

/// `weight * value` with the measure-theoretic convention `0 * inf = 0`.
#[inline]
pub(crate) fn weighted<T: Real>(weight: T, value: T) -> T {
    if weight == T::zero() {
        T::zero()
    } else {
        weight * value
    }
}

/// `n` evenly spaced interior points `i / (n + 1)`, `i = 1..=n`.
pub fn interior_grid<T: Real>(n: usize) -> Vec<T> {
    let denom = T::from_usize(n + 1).unwrap();
    (1..=n).map(|i| T::from_usize(i).unwrap() / denom).collect()
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive (`n >= 2`).
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "linspace needs at least two points");
    let last = T::from_usize(n - 1).unwrap();
    (0..n)
        .map(|i| lo + (hi - lo) * T::from_usize(i).unwrap() / last)
        .collect()
}
