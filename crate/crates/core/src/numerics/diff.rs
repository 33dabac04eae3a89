use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Default finite-difference step `1e-5 * max(1, |x|)`.
pub fn default_step<T: Real>(x: T) -> T {
    lit::<T>(1e-5) * x.abs().max(T::one())
}

/// Five-point central difference estimate of `f'(x)` (`order = 1`) or
/// `f''(x)` (`order = 2`). Evaluates `f` on `[x - 2h, x + 2h]`.
pub fn finite_diff<T: Real, F: Fn(T) -> T>(f: F, x: T, order: u8, h: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::Argument("finite difference step must be positive".into()));
    }
    let eval = |t: T| {
        let y = f(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NotANumber { at: t.as_f64() })
        }
    };
    let two = lit::<T>(2.0);
    let fm2 = eval(x - two * h)?;
    let fm1 = eval(x - h)?;
    let fp1 = eval(x + h)?;
    let fp2 = eval(x + two * h)?;
    match order {
        1 => Ok((fm2 - lit::<T>(8.0) * fm1 + lit::<T>(8.0) * fp1 - fp2) / (lit::<T>(12.0) * h)),
        2 => {
            let f0 = eval(x)?;
            Ok(
                (-fm2 + lit::<T>(16.0) * fm1 - lit::<T>(30.0) * f0 + lit::<T>(16.0) * fp1 - fp2)
                    / (lit::<T>(12.0) * h * h),
            )
        }
        _ => Err(Error::Argument(format!(
            "finite difference order must be 1 or 2, got {order}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Second-order one-sided first derivative, for points next to a domain edge.
pub fn one_sided_derivative<T: Real, F: Fn(T) -> T>(f: F, x: T, h: T, side: Side) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::Argument("finite difference step must be positive".into()));
    }
    let s = match side {
        Side::Right => h,
        Side::Left => -h,
    };
    let (f0, f1, f2) = (f(x), f(x + s), f(x + lit::<T>(2.0) * s));
    for (y, t) in [(f0, x), (f1, x + s), (f2, x + lit::<T>(2.0) * s)] {
        if !y.is_finite() {
            return Err(Error::NotANumber { at: t.as_f64() });
        }
    }
    Ok((lit::<T>(-3.0) * f0 + lit::<T>(4.0) * f1 - f2) / (lit::<T>(2.0) * s))
}
