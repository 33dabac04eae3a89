//! Link functions `psi: (0,1) -> V` with inverse `q`, the built-in catalog,
//! canonical links and `rho = w / psi'`.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{finite_diff, integrate, QuadratureSpec};
use crate::scalar::{lit, real_fn, Real, RealFn};
use crate::weights::{interior_step, WeightFunction};

/// Strictly increasing link with inverse `q` and range `[range.0, range.1]`
/// (endpoints may be infinite).
#[derive(Clone)]
pub struct Link<T: Real> {
    name: String,
    psi: RealFn<T>,
    psi_prime: RealFn<T>,
    psi_second: Option<RealFn<T>>,
    q: RealFn<T>,
    q_prime: Option<RealFn<T>>,
    range: (T, T),
}

impl<T: Real> fmt::Debug for Link<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Link")
            .field("name", &self.name)
            .field("range", &self.range)
            .finish()
    }
}

impl<T: Real> Link<T> {
    pub fn new(name: &str, psi: RealFn<T>, psi_prime: RealFn<T>, q: RealFn<T>, range: (T, T)) -> Self {
        Link {
            name: name.to_string(),
            psi,
            psi_prime,
            psi_second: None,
            q,
            q_prime: None,
            range,
        }
    }

    pub fn with_psi_second(mut self, f: RealFn<T>) -> Self {
        self.psi_second = Some(f);
        self
    }

    pub fn with_q_prime(mut self, f: RealFn<T>) -> Self {
        self.q_prime = Some(f);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn psi(&self, x: T) -> T {
        (self.psi)(x)
    }

    pub fn psi_prime(&self, x: T) -> T {
        (self.psi_prime)(x)
    }

    /// The derivative function itself (shared, not copied).
    pub fn psi_prime_fn(&self) -> RealFn<T> {
        self.psi_prime.clone()
    }

    pub fn has_psi_second(&self) -> bool {
        self.psi_second.is_some()
    }

    /// `psi''(x)`: closed form when available, else a central difference of `psi'`.
    pub fn psi_second(&self, x: T) -> Result<T> {
        match &self.psi_second {
            Some(f) => Ok(f(x)),
            None => finite_diff(|t| self.psi_prime(t), x, 1, interior_step(x)),
        }
    }

    /// `psi''(x) / psi'(x)`; without a closed form, the difference of `ln psi'`.
    pub fn log_psi_prime_derivative(&self, x: T) -> Result<T> {
        let d = self.psi_prime(x);
        if !(d > T::zero()) {
            return Err(Error::Domain(format!("psi'({x}) = {d} is not positive")));
        }
        match &self.psi_second {
            Some(f) => Ok(f(x) / d),
            None => finite_diff(|t| self.psi_prime(t).ln(), x, 1, interior_step(x)),
        }
    }

    pub fn q(&self, v: T) -> T {
        (self.q)(v)
    }

    /// `q'(v)`: closed form when available, else `1 / psi'(q(v))`.
    pub fn q_prime(&self, v: T) -> T {
        match &self.q_prime {
            Some(f) => f(v),
            None => T::one() / self.psi_prime(self.q(v)),
        }
    }

    pub fn range(&self) -> (T, T) {
        self.range
    }

    pub fn contains(&self, v: T) -> bool {
        v >= self.range.0 && v <= self.range.1
    }

    pub fn check_range(&self, v: T) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                value: v.as_f64(),
                lo: self.range.0.as_f64(),
                hi: self.range.1.as_f64(),
            })
        }
    }

    /// Largest `|q(psi(x)) - x|` over `grid`.
    pub fn round_trip_error(&self, grid: &[T]) -> T {
        grid.iter()
            .map(|&x| (self.q(self.psi(x)) - x).abs())
            .fold(T::zero(), T::max)
    }
}

/// Names accepted by [`catalog_link`].
pub const CATALOG_LINKS: &[&str] = &["identity", "logit", "cll", "square-link", "cosine"];

pub fn link_formula(name: &str) -> Option<&'static str> {
    Some(match name {
        "identity" => "psi(x) = x",
        "logit" => "psi(x) = log(x/(1-x))",
        "cll" => "psi(x) = log(-log(1-x))",
        "square-link" => "psi(x) = x^2",
        "cosine" => "psi(x) = 1 - cos(pi x)",
        "canonical" => "psi'(x) = w(x), psi(1/2) = 0",
        _ => return None,
    })
}

pub fn catalog_link<T: Real>(name: &str) -> Result<Link<T>> {
    let link = match name {
        "identity" => Link::new(
            "identity",
            real_fn(|x: T| x),
            real_fn(|_x: T| T::one()),
            real_fn(|v: T| v),
            (T::zero(), T::one()),
        )
        .with_psi_second(real_fn(|_x: T| T::zero()))
        .with_q_prime(real_fn(|_v: T| T::one())),
        "logit" => Link::new(
            "logit",
            real_fn(|x: T| (x / (T::one() - x)).ln()),
            real_fn(|x: T| T::one() / (x * (T::one() - x))),
            real_fn(sigmoid),
            (T::neg_infinity(), T::infinity()),
        )
        .with_psi_second(real_fn(|x: T| {
            let s = x * (T::one() - x);
            (lit::<T>(2.0) * x - T::one()) / (s * s)
        }))
        .with_q_prime(real_fn(|v: T| {
            let q = sigmoid(v);
            q * (T::one() - q)
        })),
        "cll" => Link::new(
            "cll",
            real_fn(|x: T| (-(-x).ln_1p()).ln()),
            real_fn(|x: T| {
                let l = -(-x).ln_1p();
                T::one() / ((T::one() - x) * l)
            }),
            real_fn(|v: T| -(-v.exp()).exp_m1()),
            (T::neg_infinity(), T::infinity()),
        )
        .with_psi_second(real_fn(|x: T| {
            let l = -(-x).ln_1p();
            let d = T::one() / ((T::one() - x) * l);
            d * (T::one() - T::one() / l) / (T::one() - x)
        }))
        .with_q_prime(real_fn(|v: T| {
            let ev = v.exp();
            ev * (-ev).exp()
        })),
        "square-link" => Link::new(
            "square-link",
            real_fn(|x: T| x * x),
            real_fn(|x: T| lit::<T>(2.0) * x),
            real_fn(|v: T| v.max(T::zero()).sqrt()),
            (T::zero(), T::one()),
        )
        .with_psi_second(real_fn(|_x: T| lit(2.0)))
        .with_q_prime(real_fn(|v: T| T::one() / (lit::<T>(2.0) * v.sqrt()))),
        "cosine" => Link::new(
            "cosine",
            real_fn(|x: T| T::one() - (T::PI() * x).cos()),
            real_fn(|x: T| T::PI() * (T::PI() * x).sin()),
            real_fn(|v: T| {
                let arg = (T::one() - v).max(-T::one()).min(T::one());
                arg.acos() / T::PI()
            }),
            (T::zero(), lit(2.0)),
        )
        .with_psi_second(real_fn(|x: T| T::PI() * T::PI() * (T::PI() * x).cos()))
        .with_q_prime(real_fn(|v: T| T::one() / (T::PI() * (v * (lit::<T>(2.0) - v)).sqrt()))),
        other => {
            return Err(Error::UnknownName {
                kind: "link",
                name: other.to_string(),
            })
        }
    };
    Ok(link)
}

fn sigmoid<T: Real>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Solves `psi(x) = v` for `x` in `[0,1]` with `psi` increasing: Newton steps
/// safeguarded by a shrinking bisection bracket.
pub(crate) fn invert_on_unit<T: Real>(psi: &dyn Fn(T) -> T, psi_prime: &dyn Fn(T) -> T, v: T) -> T {
    let (mut a, mut b) = (T::zero(), T::one());
    if v.is_nan() {
        return T::nan();
    }
    if v <= psi(a) {
        return a;
    }
    if v >= psi(b) {
        return b;
    }
    let mut x: T = lit(0.5);
    for _ in 0..400 {
        let fx = psi(x) - v;
        if fx == T::zero() {
            return x;
        }
        if fx < T::zero() {
            a = x;
        } else {
            b = x;
        }
        let d = psi_prime(x);
        let newton = x - fx / d;
        let next = if d > T::zero() && newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            lit::<T>(0.5) * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= T::epsilon() * lit::<T>(2.0) * x.abs().max(T::min_positive_value())
            || b - a <= T::epsilon() * lit::<T>(2.0) * x.abs()
        {
            break;
        }
    }
    x
}

/// Solves `q(v) = x` for `v` in `[lo, hi]` with `q` nondecreasing. Infinite
/// bounds are replaced by an expanding bracket.
pub(crate) fn invert_increasing<T: Real>(q: &dyn Fn(T) -> T, x: T, lo: T, hi: T) -> T {
    let mut a = if lo.is_finite() { lo } else { -T::one() };
    let mut b = if hi.is_finite() { hi } else { T::one() };
    if !lo.is_finite() {
        while q(a) > x && a > lit(-1e300) {
            a = a * lit(2.0);
        }
    }
    if !hi.is_finite() {
        while q(b) < x && b < lit(1e300) {
            b = b * lit(2.0);
        }
    }
    if q(a) >= x {
        return a;
    }
    if q(b) <= x {
        return b;
    }
    for _ in 0..2000 {
        let m = lit::<T>(0.5) * (a + b);
        if m <= a || m >= b {
            break;
        }
        if q(m) < x {
            a = m;
        } else {
            b = m;
        }
        if b - a <= T::epsilon() * lit::<T>(2.0) * a.abs().max(b.abs()).max(T::one()) {
            break;
        }
    }
    lit::<T>(0.5) * (a + b)
}

/// Canonical link of an atom-free weight: `psi = W - W(1/2)` and `psi' = w`
/// (the same function object, so `rho = w / psi'` is identically 1).
pub fn canonical_link<T: Real>(wf: &WeightFunction<T>) -> Result<Link<T>> {
    if wf.has_atoms() {
        return Err(Error::AtomsUnsupported("canonical link of a weight with atoms".into()));
    }
    let density = wf
        .density_fn()
        .ok_or_else(|| Error::AtomsUnsupported("canonical link needs a weight density".into()))?;
    let half: T = lit(0.5);

    let (psi, range): (RealFn<T>, (T, T)) = match (wf.big_w_fn(), wf.limits()) {
        (Some(bw), Some(lim)) => {
            let offset = bw(half);
            let bw2 = bw.clone();
            (
                real_fn(move |x| bw2(x) - offset),
                (lim.big_w_at_0 - offset, lim.big_w_at_1 - offset),
            )
        }
        _ => {
            let d = density.clone();
            let spec = QuadratureSpec::with_tolerance(lit(1e-12), lit(1e-12));
            let psi: RealFn<T> = real_fn(move |x| match integrate(|c| d(c), half, x, &spec) {
                Ok(v) => v,
                Err(Error::Divergent { .. }) => {
                    if x < half {
                        T::neg_infinity()
                    } else {
                        T::infinity()
                    }
                }
                Err(_) => T::nan(),
            });
            let range = (psi(T::zero()), psi(T::one()));
            (psi, range)
        }
    };

    let (p, d) = (psi.clone(), density.clone());
    let q: RealFn<T> = real_fn(move |v| invert_on_unit(&*p, &*d, v));
    let mut link = Link::new(&format!("canonical({})", wf.name()), psi, density, q, range);
    if wf.has_closed_derivative() {
        let w2 = wf.clone();
        link = link.with_psi_second(real_fn(move |x| w2.w_prime(x).unwrap_or(T::nan())));
    }
    Ok(link)
}

/// Looks up a catalog link, or `canonical` for the canonical link of `wf`.
pub fn resolve_link<T: Real>(name: &str, wf: Option<&WeightFunction<T>>) -> Result<Link<T>> {
    if name == "canonical" {
        let wf = wf.ok_or_else(|| Error::Argument("canonical link needs a weight".into()))?;
        return canonical_link(wf);
    }
    catalog_link(name)
}

/// `rho(x) = w(x) / psi'(x)`, the link-adjusted weight.
#[derive(Clone)]
pub struct Rho<T: Real> {
    f: RealFn<T>,
}

impl<T: Real> fmt::Debug for Rho<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Rho")
    }
}

impl<T: Real> Rho<T> {
    pub fn from_fn(f: RealFn<T>) -> Self {
        Rho { f }
    }

    pub fn eval(&self, x: T) -> T {
        (self.f)(x)
    }
}

/// `rho = w / psi'` for an atom-free weight.
pub fn rho_of<T: Real>(wf: &WeightFunction<T>, link: &Link<T>) -> Result<Rho<T>> {
    if wf.has_atoms() {
        return Err(Error::AtomsUnsupported("rho of a weight with atoms".into()));
    }
    let w = wf
        .density_fn()
        .ok_or_else(|| Error::AtomsUnsupported("rho needs a weight density".into()))?;
    let dp = link.psi_prime_fn();
    if std::sync::Arc::ptr_eq(&w, &dp) {
        return Ok(Rho::from_fn(real_fn(|_x: T| T::one())));
    }
    Ok(Rho::from_fn(real_fn(move |x| w(x) / dp(x))))
}
