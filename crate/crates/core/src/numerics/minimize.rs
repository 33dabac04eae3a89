use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

pub const DEFAULT_MINIMIZE_TOL: f64 = 1e-9;

const MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeResult<T> {
    pub argmin: T,
    pub min_value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Brent's bracketed minimizer: golden-section steps with parabolic
/// acceleration. After convergence the bracket endpoints are compared against
/// the interior candidate so boundary minima are returned exactly.
///
/// NaN objective values are treated as `+inf`. The effective tolerance is
/// `tol + sqrt(eps) * |x|`.
pub fn minimize_scalar<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, tol: T) -> Result<MinimizeResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Argument("minimization tolerance must be positive".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Argument("minimization bracket must satisfy lo < hi".into()));
    }
    let g = |x: T| {
        let y = f(x);
        if y.is_nan() {
            T::infinity()
        } else {
            y
        }
    };

    let golden: T = lit(0.381_966_011_250_105_1);
    let rel = T::epsilon().sqrt();
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);

    let (mut a, mut b) = (lo, hi);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d = T::zero();
    let mut e = T::zero();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITER {
        let xm = half * (a + b);
        let tol1 = rel * x.abs() + tol / lit(3.0);
        let tol2 = two * tol1;
        if (x - xm).abs() <= tol2 - half * (b - a) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut use_golden = true;
        if e.abs() > tol1 {
            let mut r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (half * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = g(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let (flo, fhi) = (g(lo), g(hi));
    let (mut argmin, mut min_value) = (x, fx);
    if flo <= min_value {
        argmin = lo;
        min_value = flo;
    }
    if fhi <= min_value {
        argmin = hi;
        min_value = fhi;
    }
    Ok(MinimizeResult {
        argmin,
        min_value,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_parabola() {
        let r = minimize_scalar(|x: f64| x * x, -1.0, 1.0, 1e-8).unwrap();
        assert!(r.converged);
        assert!(r.argmin.abs() < 1e-8);
        assert!(r.min_value < 1e-15);
    }

    #[test]
    fn boundary_minimum_is_returned_exactly() {
        let r = minimize_scalar(|x: f64| (x - 2.0).powi(2), 0.0, 1.0, 1e-9).unwrap();
        assert_eq!(r.argmin, 1.0);
        let r = minimize_scalar(|x: f64| x, 0.0, 1.0, 1e-9).unwrap();
        assert_eq!(r.argmin, 0.0);
    }

    #[test]
    fn nan_region_is_avoided() {
        let r = minimize_scalar(
            |x: f64| if x < 0.2 { f64::NAN } else { (x - 0.5).powi(2) },
            0.0,
            1.0,
            1e-9,
        )
        .unwrap();
        assert!((r.argmin - 0.5).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(minimize_scalar(|x: f64| x, 0.0, 1.0, 0.0).is_err());
        assert!(minimize_scalar(|x: f64| x, 1.0, 1.0, 1e-9).is_err());
        assert!(minimize_scalar(|x: f64| x, 2.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn single_precision() {
        let r = minimize_scalar(|x: f32| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-5).unwrap();
        assert!((r.argmin - 0.3).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn unimodal_closed_forms(m in -0.9f64..0.9, s in 0.1f64..10.0) {
            let r = minimize_scalar(|x| s * (x - m).powi(2) + (x - m).powi(4), -1.0, 1.0, 1e-9).unwrap();
            prop_assert!(r.converged);
            // sqrt(eps)-limited for smooth minima: |x - m| <= tol + sqrt(eps)|x| + rounding
            prop_assert!((r.argmin - m).abs() < 1e-7, "{} vs {}", r.argmin, m);
            prop_assert!(r.argmin >= -1.0 && r.argmin <= 1.0);
        }

        #[test]
        fn cosh_family(m in 0.05f64..0.95) {
            let r = minimize_scalar(|x: f64| (3.0 * (x - m)).cosh(), 0.0, 1.0, 1e-10).unwrap();
            prop_assert!((r.argmin - m).abs() < 1e-7);
        }
    }
}
