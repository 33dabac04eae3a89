use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Principal branch `W0` of the Lambert W function (`w e^w = z`, `w >= -1`).
pub fn lambert_w0<T: Real>(z: T) -> Result<T> {
    if z.is_nan() {
        return Err(Error::Domain("lambert_w0 of NaN".into()));
    }
    let e = T::E();
    let branch = -T::one() / e;
    let slack = T::epsilon() * lit(8.0);
    if z < branch - slack {
        return Err(Error::Domain(format!("lambert_w0 requires z >= -1/e, got {z}")));
    }
    if z <= branch + slack {
        return Ok(-T::one());
    }
    if z == T::zero() {
        return Ok(T::zero());
    }
    if z == T::infinity() {
        return Ok(T::infinity());
    }

    let mut w = if z < lit(-0.25) {
        // series about the branch point
        let p = (lit::<T>(2.0) * (e * z + T::one())).max(T::zero()).sqrt();
        -T::one() + p - p * p / lit(3.0) + lit::<T>(11.0 / 72.0) * p * p * p
    } else if z < lit(3.0) {
        let l = z.ln_1p();
        l * (T::one() - l / (lit::<T>(2.0) + l))
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    let tol = lit::<T>(1e-14).max(T::epsilon() * lit(4.0));
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + T::one();
        if wp1 == T::zero() {
            break;
        }
        let denom = ew * wp1 - (w + lit(2.0)) * f / (lit::<T>(2.0) * wp1);
        if denom == T::zero() || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = (w - step).max(-T::one());
        let done = (next - w).abs() <= tol * (T::one() + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}
