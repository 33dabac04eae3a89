//! Composite losses `ℓ^ψ(y, v) = ℓ(y, ψ⁻¹(v))`, margin losses, reference
//! links and the Bregman duality identity for canonical links.

use std::fmt;

use crate::error::{Error, Result};
use crate::links::{invert_increasing, invert_on_unit, rho_of, Link, Rho};
use crate::loss::{check_unit, Label, Loss};
use crate::numerics::{finite_diff, integrate, QuadratureSpec};
use crate::proper::ProperLoss;
use crate::scalar::{linspace, lit, real_fn, Real, RealFn};
use crate::weights::WeightFunction;

/// Proper loss composed with a link.
#[derive(Clone)]
pub struct CompositeLoss<T: Real> {
    name: String,
    base: ProperLoss<T>,
    link: Link<T>,
    rho: Option<Rho<T>>,
    direct: Option<(RealFn<T>, RealFn<T>)>,
}

impl<T: Real> fmt::Debug for CompositeLoss<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeLoss")
            .field("name", &self.name)
            .field("base", &self.base)
            .field("link", &self.link)
            .finish()
    }
}

/// `ℓ^ψ = ℓ ∘ ψ⁻¹`. `rho = w / ψ'` is attached when the base weight is
/// atom-free; operations that need it fail otherwise.
pub fn make_composite<T: Real>(base: &ProperLoss<T>, link: &Link<T>) -> Result<CompositeLoss<T>> {
    let rho = rho_of(base.weight(), link).ok();
    Ok(CompositeLoss {
        name: format!("{}+{}", base.name(), link.name()),
        base: base.clone(),
        link: link.clone(),
        rho,
        direct: None,
    })
}

impl<T: Real> CompositeLoss<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base(&self) -> &ProperLoss<T> {
        &self.base
    }

    pub fn link(&self) -> &Link<T> {
        &self.link
    }

    /// `ℓ^ψ(y, v)` with a range check on `v`.
    pub fn eval(&self, y: Label, v: T) -> Result<T> {
        self.link.check_range(v)?;
        Ok(self.partial(y, v))
    }

    /// `ρ(x) = w(x) / ψ'(x)`.
    pub fn rho(&self, x: T) -> Result<T> {
        match &self.rho {
            Some(r) => Ok(r.eval(x)),
            None => Err(Error::AtomsUnsupported(format!(
                "rho is undefined for {} (weight has point masses)",
                self.name
            ))),
        }
    }

    pub fn has_rho(&self) -> bool {
        self.rho.is_some()
    }

    /// `L^ψ(η, v) = L(η, q(v))`.
    pub fn conditional_risk(&self, eta: T, v: T) -> Result<T> {
        check_unit("eta", eta)?;
        self.link.check_range(v)?;
        Ok(Loss::conditional_risk(self, eta, v))
    }

    /// `∂L^ψ(η, v)/∂v = (q(v) - η) ρ(q(v))`.
    pub fn risk_derivative(&self, eta: T, v: T) -> Result<T> {
        check_unit("eta", eta)?;
        self.link.check_range(v)?;
        let q = self.link.q(v);
        Ok((q - eta) * self.rho(q)?)
    }

    /// `(∂ℓ₁^ψ/∂v, ∂ℓ₋₁^ψ/∂v) = ((q - 1) ρ(q), q ρ(q))` with `q = q(v)`.
    pub fn score_gradients(&self, v: T) -> Result<(T, T)> {
        self.link.check_range(v)?;
        let q = self.link.q(v);
        let r = self.rho(q)?;
        Ok(((q - T::one()) * r, q * r))
    }

    /// `ΔL^ψ(η, v) = ΔL(η, q(v))`.
    pub fn regret(&self, eta: T, v: T) -> Result<T> {
        self.link.check_range(v)?;
        self.base.regret(eta, self.link.q(v))
    }
}

impl<T: Real> Loss<T> for CompositeLoss<T> {
    fn partial(&self, y: Label, v: T) -> T {
        if let Some((pos, neg)) = &self.direct {
            return match y {
                Label::Pos => pos(v),
                Label::Neg => neg(v),
            };
        }
        self.base.ell(y, self.link.q(v))
    }
}

/// Margin loss `ℓ(y, v) = φ(y v)`.
#[derive(Clone)]
pub struct MarginLoss<T: Real> {
    name: String,
    phi: RealFn<T>,
    phi_prime: RealFn<T>,
    phi_second: Option<RealFn<T>>,
}

impl<T: Real> fmt::Debug for MarginLoss<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MarginLoss({})", self.name)
    }
}

impl<T: Real> MarginLoss<T> {
    pub fn new(name: &str, phi: RealFn<T>, phi_prime: RealFn<T>) -> Self {
        MarginLoss {
            name: name.to_string(),
            phi,
            phi_prime,
            phi_second: None,
        }
    }

    pub fn with_phi_second(mut self, f: RealFn<T>) -> Self {
        self.phi_second = Some(f);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phi(&self, v: T) -> T {
        (self.phi)(v)
    }

    pub fn phi_prime(&self, v: T) -> T {
        (self.phi_prime)(v)
    }
}

/// Names accepted by [`catalog_margin`]; `zhang` takes `:alpha`.
pub const CATALOG_MARGINS: &[&str] = &["exponential", "logistic", "zhang", "hinge"];

pub fn margin_formula(name: &str) -> Option<&'static str> {
    Some(match name {
        "exponential" => "phi(v) = exp(-v)",
        "logistic" => "phi(v) = log(1 + exp(-v))",
        "zhang" => "phi(v) = log(exp(alpha (1 - v)) + 1) / alpha",
        "hinge" => "phi(v) = max(0, 1 - v)",
        _ => return None,
    })
}

fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Built-in margin losses: `exponential`, `logistic`, `zhang:alpha`
/// (`φ_α(v) = log(exp(α(1 - v)) + 1) / α`) and `hinge`.
pub fn catalog_margin<T: Real>(spec: &str) -> Result<MarginLoss<T>> {
    let (name, param) = match spec.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p.trim())),
        None => (spec.trim(), None),
    };
    let margin = match name {
        "exponential" => MarginLoss::new("exponential", real_fn(|v: T| (-v).exp()), real_fn(|v: T| -(-v).exp()))
            .with_phi_second(real_fn(|v: T| (-v).exp())),
        "logistic" => MarginLoss::new("logistic", real_fn(|v: T| softplus(-v)), real_fn(|v: T| -sigmoid(-v)))
            .with_phi_second(real_fn(|v: T| sigmoid(v) * sigmoid(-v))),
        "zhang" => {
            let alpha: f64 = param
                .ok_or_else(|| Error::Argument("zhang margin needs a parameter, e.g. zhang:2".into()))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad zhang parameter in {spec:?}")))?;
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::Argument(format!("zhang parameter {alpha} must be positive")));
            }
            let a: T = lit(alpha);
            MarginLoss::new(
                &format!("zhang:{alpha}"),
                real_fn(move |v: T| softplus(a * (T::one() - v)) / a),
                real_fn(move |v: T| -sigmoid(a * (T::one() - v))),
            )
            .with_phi_second(real_fn(move |v: T| {
                let s = sigmoid(a * (T::one() - v));
                a * s * (T::one() - s)
            }))
        }
        "hinge" => MarginLoss::new(
            "hinge",
            real_fn(|v: T| (T::one() - v).max(T::zero())),
            real_fn(|v: T| if v < T::one() { -T::one() } else { T::zero() }),
        ),
        other => {
            return Err(Error::UnknownName {
                kind: "margin loss",
                name: other.to_string(),
            })
        }
    };
    if param.is_some() && name != "zhang" {
        return Err(Error::Argument(format!("margin loss {name} takes no parameter")));
    }
    Ok(margin)
}

fn probe_scores<T: Real>(range: (T, T)) -> Vec<T> {
    let lo = if range.0.is_finite() { range.0 } else { lit(-20.0) };
    let hi = if range.1.is_finite() { range.1 } else { lit(20.0) };
    linspace(lo, hi, 2001)
}

/// Link with inverse `q(v) = λ'₋₁(v) / (λ'₋₁(v) - λ'₁(v))`, the link that
/// makes a pair of score-space partial losses proper. `range` is the score
/// domain; `q` is probed on it for monotonicity and values in `[0,1]`.
pub fn reference_link<T: Real>(lam_pos_prime: RealFn<T>, lam_neg_prime: RealFn<T>, range: (T, T)) -> Result<Link<T>> {
    if !(range.0 < range.1) {
        return Err(Error::Argument("reference link range must satisfy lo < hi".into()));
    }
    let (lp, ln) = (lam_pos_prime.clone(), lam_neg_prime.clone());
    let q: RealFn<T> = real_fn(move |v: T| {
        let a = ln(v);
        a / (a - lp(v))
    });
    check_monotone(&*q, range)?;
    Ok(link_from_inverse("reference", q, None, range))
}

fn check_monotone<T: Real>(q: &dyn Fn(T) -> T, range: (T, T)) -> Result<()> {
    let slack: T = lit(1e-12);
    let mut prev: Option<T> = None;
    for v in probe_scores(range) {
        let x = q(v);
        if !x.is_finite() {
            return Err(Error::NotProperComposite(format!("q({v}) = {x}: denominator vanishes")));
        }
        if x < -slack || x > T::one() + slack {
            return Err(Error::NotProperComposite(format!("q({v}) = {x} lies outside [0,1]")));
        }
        if let Some(p) = prev {
            if x < p - slack {
                return Err(Error::NotProperComposite(format!("q decreases near v = {v}")));
            }
        }
        prev = Some(x);
    }
    Ok(())
}

/// Link given by its inverse `q`; `ψ` is recovered by bisection.
fn link_from_inverse<T: Real>(name: &str, q: RealFn<T>, q_prime: Option<RealFn<T>>, range: (T, T)) -> Link<T> {
    let qq = q.clone();
    let psi: RealFn<T> = real_fn(move |x: T| invert_increasing(&*qq, x, range.0, range.1));
    let dq: RealFn<T> = match &q_prime {
        Some(f) => f.clone(),
        None => {
            let qd = q.clone();
            real_fn(move |v: T| {
                let h = lit::<T>(1e-5) * v.abs().max(T::one());
                finite_diff(|t| qd(t), v, 1, h).unwrap_or(T::nan())
            })
        }
    };
    let (p2, d2) = (psi.clone(), dq.clone());
    let psi_prime: RealFn<T> = real_fn(move |x: T| T::one() / d2(p2(x)));
    let mut link = Link::new(name, psi, psi_prime, q, range);
    if let Some(f) = q_prime {
        link = link.with_q_prime(f);
    }
    link
}

/// The proper composite link of a margin loss,
/// `q(v) = φ'(-v) / (φ'(-v) + φ'(v))`. Refuses margin losses with flat spots
/// (`φ' = 0`), where the link is not unique.
pub fn margin_to_link<T: Real>(m: &MarginLoss<T>) -> Result<Link<T>> {
    let range = (T::neg_infinity(), T::infinity());
    for v in probe_scores(range) {
        if m.phi_prime(v) == T::zero() {
            return Err(Error::FlatSpot { at: v.as_f64() });
        }
    }
    let dp = m.phi_prime.clone();
    let q: RealFn<T> = real_fn(move |v: T| {
        let a = -dp(-v);
        a / (a - dp(v))
    });
    check_monotone(&*q, range)?;
    let q_prime = m.phi_second.clone().map(|d2| {
        let d1 = m.phi_prime.clone();
        real_fn(move |v: T| {
            let (a, b) = (d1(-v), d1(v));
            let (da, db) = (-d2(-v), d2(v));
            (da * b - a * db) / ((a + b) * (a + b))
        })
    });
    let name = format!("margin({})", m.name());
    let mut link = link_from_inverse(&name, q, q_prime, range);
    // closed forms where the inverse is elementary
    match m.name() {
        "exponential" => {
            link = Link::new(
                &name,
                real_fn(|x: T| lit::<T>(0.5) * (x / (T::one() - x)).ln()),
                real_fn(|x: T| lit::<T>(0.5) / (x * (T::one() - x))),
                real_fn(|v: T| sigmoid(lit::<T>(2.0) * v)),
                range,
            )
            .with_psi_second(real_fn(|x: T| {
                let s = x * (T::one() - x);
                lit::<T>(0.5) * (lit::<T>(2.0) * x - T::one()) / (s * s)
            }))
            .with_q_prime(real_fn(|v: T| {
                let s = sigmoid(lit::<T>(2.0) * v);
                lit::<T>(2.0) * s * (T::one() - s)
            }));
        }
        "logistic" => {
            link = Link::new(
                &name,
                real_fn(|x: T| (x / (T::one() - x)).ln()),
                real_fn(|x: T| T::one() / (x * (T::one() - x))),
                real_fn(sigmoid),
                range,
            )
            .with_psi_second(real_fn(|x: T| {
                let s = x * (T::one() - x);
                (lit::<T>(2.0) * x - T::one()) / (s * s)
            }))
            .with_q_prime(real_fn(|v: T| {
                let s = sigmoid(v);
                s * (T::one() - s)
            }));
        }
        _ => {}
    }
    Ok(link)
}

/// Margin loss as a proper composite loss: link from [`margin_to_link`],
/// base partials `ℓ₁(η̂) = φ(ψ(η̂))`, `ℓ₋₁(η̂) = φ(-ψ(η̂))`, and
/// `ρ(x) = -φ'(-ψ(x)) / x`.
pub fn margin_composite<T: Real>(m: &MarginLoss<T>) -> Result<CompositeLoss<T>> {
    let link = margin_to_link(m)?;
    let (phi1, psi1) = (m.phi.clone(), link.clone());
    let ell_pos: RealFn<T> = real_fn(move |e: T| phi1(psi1.psi(e)));
    let (phi2, psi2) = (m.phi.clone(), link.clone());
    let ell_neg: RealFn<T> = real_fn(move |e: T| phi2(-psi2.psi(e)));
    let (dp, l3) = (m.phi_prime.clone(), link.clone());
    let rho_fn: RealFn<T> = real_fn(move |x: T| -dp(-l3.psi(x)) / x);
    let (r2, l4) = (rho_fn.clone(), link.clone());
    let weight = WeightFunction::from_fn(&format!("margin({})", m.name()), move |x: T| r2(x) * l4.psi_prime(x));
    let base = ProperLoss::from_partials(m.name(), ell_pos, ell_neg, weight);
    let (f1, f2) = (m.phi.clone(), m.phi.clone());
    Ok(CompositeLoss {
        name: m.name().to_string(),
        base,
        link,
        rho: Some(Rho::from_fn(rho_fn)),
        direct: Some((real_fn(move |v: T| f1(v)), real_fn(move |v: T| f2(-v)))),
    })
}

/// An increasing `W` with its inverse and the antiderivatives `W̄ = ∫W` and
/// `W̄* = ∫W⁻¹` (the Legendre dual of `W̄` up to a constant).
#[derive(Clone)]
pub struct DualPair<T: Real> {
    big_w: RealFn<T>,
    big_w_inv: RealFn<T>,
    wbar: RealFn<T>,
    wbar_star: RealFn<T>,
}

impl<T: Real> DualPair<T> {
    /// Antiderivatives by quadrature, anchored at `1/2` and `W(1/2)`.
    pub fn new(big_w: RealFn<T>, big_w_inv: RealFn<T>) -> Self {
        let spec = QuadratureSpec::with_tolerance(lit(1e-13), lit(1e-13));
        let half: T = lit(0.5);
        let anchor = big_w(half);
        let bw = big_w.clone();
        let wbar = real_fn(move |x: T| integrate(|t| bw(t), half, x, &spec).unwrap_or(T::nan()));
        let bwi = big_w_inv.clone();
        let wbar_star = real_fn(move |s: T| integrate(|t| bwi(t), anchor, s, &spec).unwrap_or(T::nan()));
        DualPair {
            big_w,
            big_w_inv,
            wbar,
            wbar_star,
        }
    }

    pub fn with_closed_forms(big_w: RealFn<T>, big_w_inv: RealFn<T>, wbar: RealFn<T>, wbar_star: RealFn<T>) -> Self {
        DualPair {
            big_w,
            big_w_inv,
            wbar,
            wbar_star,
        }
    }

    /// `W(t) = t`, the self-dual square-loss case.
    pub fn identity() -> Self {
        DualPair::new(real_fn(|t: T| t), real_fn(|t: T| t))
    }

    /// `W = logit`, `W⁻¹ = sigmoid` (log loss).
    pub fn logit() -> Self {
        DualPair::new(real_fn(|t: T| (t / (T::one() - t)).ln()), real_fn(sigmoid))
    }

    /// `W = ψ` and `W⁻¹ = q` of the canonical link of `wf`.
    pub fn from_link(link: &Link<T>) -> Self {
        let (l1, l2) = (link.clone(), link.clone());
        DualPair::new(real_fn(move |t| l1.psi(t)), real_fn(move |s| l2.q(s)))
    }

    /// `D_W(x, y) = W̄(x) - W̄(y) - (x - y) W(y)`.
    pub fn divergence(&self, x: T, y: T) -> T {
        (self.wbar)(x) - (self.wbar)(y) - (x - y) * (self.big_w)(y)
    }

    /// `D_{W⁻¹}(s, t) = W̄*(s) - W̄*(t) - (s - t) W⁻¹(t)`.
    pub fn dual_divergence(&self, s: T, t: T) -> T {
        (self.wbar_star)(s) - (self.wbar_star)(t) - (s - t) * (self.big_w_inv)(t)
    }
}

/// `|D_W(x, y) - D_{W⁻¹}(W(y), W(x))|`.
pub fn duality_residual<T: Real>(pair: &DualPair<T>, x: T, y: T) -> Result<T> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    let lhs = pair.divergence(x, y);
    let rhs = pair.dual_divergence((pair.big_w)(y), (pair.big_w)(x));
    let r = (lhs - rhs).abs();
    if r.is_nan() {
        return Err(Error::NotANumber { at: x.as_f64() });
    }
    Ok(r)
}

/// Score grid `ψ(i/(n+1))` used for certification sweeps.
pub fn score_grid<T: Real>(link: &Link<T>, n: usize) -> Vec<T> {
    crate::scalar::interior_grid::<T>(n)
        .into_iter()
        .map(|x| link.psi(x))
        .collect()
}

/// Inverse of `ψ` on `[0,1]` for an increasing `ψ` without a closed-form
/// inverse.
pub fn invert_link<T: Real>(psi: &dyn Fn(T) -> T, psi_prime: &dyn Fn(T) -> T, v: T) -> T {
    invert_on_unit(psi, psi_prime, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::links::{canonical_link, catalog_link};
    use crate::proper::from_weight;
    use crate::scalar::interior_grid;
    use crate::weights::catalog_weight;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn composite(weight: &str, link: &str) -> CompositeLoss<f64> {
        let wf = catalog_weight(weight, &BTreeMap::new()).unwrap();
        let base = from_weight(&wf).unwrap();
        let link = if link == "canonical" {
            canonical_link(&wf).unwrap()
        } else {
            catalog_link(link).unwrap()
        };
        make_composite(&base, &link).unwrap()
    }

    fn exponential() -> CompositeLoss<f64> {
        margin_composite(&catalog_margin("exponential").unwrap()).unwrap()
    }

    fn catalog_composites() -> Vec<CompositeLoss<f64>> {
        let mut out = vec![
            composite("log", "logit"),
            composite("square", "identity"),
            composite("boosting", "canonical"),
            composite("log", "cll"),
            composite("minimal", "identity"),
            exponential(),
            margin_composite(&catalog_margin("logistic").unwrap()).unwrap(),
        ];
        out.push(composite("w1-over-c", "logit"));
        out
    }

    #[test]
    fn log_logit_is_logistic() {
        let cl = composite("log", "logit");
        for &v in &[-3.0f64, -0.5, 0.0, 1.0, 4.0] {
            let expect = (1.0 + (-v).exp()).ln();
            assert!((cl.eval(Label::Pos, v).unwrap() - expect).abs() < 1e-12);
        }
        assert!((cl.conditional_risk(0.5, 0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let canon = composite("log", "canonical");
        for &v in &[-2.0, 0.3, 1.5] {
            assert!((canon.eval(Label::Neg, v).unwrap() - cl.eval(Label::Neg, v).unwrap()).abs() < 1e-12);
            assert_eq!(canon.rho(canon.link().q(v)).unwrap(), 1.0);
        }
    }

    #[test]
    fn square_identity_is_square_loss() {
        let cl = composite("square", "identity");
        assert!((cl.eval(Label::Neg, 0.4).unwrap() - 0.08).abs() < 1e-15);
        assert!(cl.eval(Label::Neg, 1.5).is_err());
        let (dp, dn) = cl.score_gradients(0.3).unwrap();
        assert!((dp + 0.7).abs() < 1e-15 && (dn - 0.3).abs() < 1e-15);
        assert!((cl.regret(0.2, 0.7).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(cl.regret(0.2, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn exponential_margin_values() {
        let cl = exponential();
        assert!((cl.conditional_risk(0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for &v in &[-2.0f64, 0.0, 0.7] {
            assert!((cl.link().q(v) - 1.0 / (1.0 + (-2.0 * v).exp())).abs() < 1e-15);
        }
        // base proper loss is half the boosting loss
        let boost = from_weight(&catalog_weight::<f64>("boosting", &BTreeMap::new()).unwrap()).unwrap();
        for &e in &[0.1, 0.5, 0.8] {
            assert!((cl.base().ell_pos(e) - 0.5 * boost.ell_pos(e)).abs() < 1e-12);
            assert!((cl.base().weight().w(e) - 0.5 * boost.weight().w(e)).abs() < 1e-9 * boost.weight().w(e));
        }
    }

    #[test]
    fn log_logit_gradients_at_zero() {
        let (dp, dn) = composite("log", "logit").score_gradients(0.0).unwrap();
        assert!((dp + 0.5).abs() < 1e-15 && (dn - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regret_through_link() {
        let cl = composite("log", "logit");
        let v = cl.link().psi(0.25);
        let kl = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((cl.regret(0.5, v).unwrap() - kl).abs() < 1e-14);
        for cl in catalog_composites() {
            let v = cl.link().psi(0.37);
            assert!(cl.regret(0.37, v).unwrap().abs() < 1e-12, "{}", cl.name());
            assert!((cl.conditional_risk(0.37, v).unwrap() - cl.base().bayes_risk(0.37).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_links() {
        let exp: MarginLoss<f64> = catalog_margin("exponential").unwrap();
        let (d1, d2) = (exp.phi_prime.clone(), exp.phi_prime.clone());
        let r = reference_link(
            real_fn(move |v| d1(v)),
            real_fn(move |v: f64| -d2(-v)),
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .unwrap();
        let logistic: MarginLoss<f64> = catalog_margin("logistic").unwrap();
        let (l1, l2) = (logistic.phi_prime.clone(), logistic.phi_prime.clone());
        let rl = reference_link(
            real_fn(move |v| l1(v)),
            real_fn(move |v: f64| -l2(-v)),
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .unwrap();
        let sq = reference_link(real_fn(|v: f64| -(1.0 - v)), real_fn(|v: f64| v), (0.0, 1.0)).unwrap();
        for &v in &[-3.0f64, -0.4, 0.0, 0.9, 2.5] {
            assert!((r.q(v) - 1.0 / (1.0 + (-2.0 * v).exp())).abs() < 1e-15);
            assert!((rl.q(v) - 1.0 / (1.0 + (-v).exp())).abs() < 1e-15);
        }
        for &v in &[0.0, 0.25, 0.6, 1.0] {
            assert!((sq.q(v) - v).abs() < 1e-15);
            assert!((sq.psi(v) - v).abs() < 1e-12);
        }
        // decreasing q is rejected
        let bad = reference_link(real_fn(|v: f64| -v), real_fn(|v: f64| 1.0 - v), (0.0, 1.0));
        assert!(matches!(bad, Err(Error::NotProperComposite(_))));
    }

    #[test]
    fn margin_links() {
        for spec in ["exponential", "logistic", "zhang:0.5", "zhang:2", "zhang:10"] {
            let m: MarginLoss<f64> = catalog_margin(spec).unwrap();
            let link = margin_to_link(&m).unwrap();
            assert!((link.q(0.0) - 0.5).abs() < 1e-15, "{spec}");
            assert!(link.psi(0.5).abs() < 1e-12, "{spec}");
            for v in linspace(-6.0, 6.0, 121) {
                assert!((link.q(-v) + link.q(v) - 1.0).abs() < 1e-10, "{spec}");
            }
            for &x in &[0.05, 0.3, 0.7, 0.95] {
                assert!((link.q(link.psi(x)) - x).abs() < 1e-10, "{spec} at {x}");
            }
        }
        assert!(matches!(
            margin_to_link(&catalog_margin::<f64>("hinge").unwrap()),
            Err(Error::FlatSpot { .. })
        ));
        assert!(catalog_margin::<f64>("zhang").is_err());
        assert!(catalog_margin::<f64>("zhang:-1").is_err());
        assert!(catalog_margin::<f64>("exponential:2").is_err());
    }

    #[test]
    fn zhang_link_matches_closed_form() {
        for alpha in [0.5f64, 1.0, 3.0] {
            let link = margin_to_link(&catalog_margin::<f64>(&format!("zhang:{alpha}")).unwrap()).unwrap();
            for v in linspace(-4.0, 4.0, 41) {
                let e2a = (2.0 * alpha).exp();
                let expect = 1.0 / (1.0 + (e2a + (alpha * (1.0 - v)).exp()) / (e2a + (alpha * (1.0 + v)).exp()));
                assert!((link.q(v) - expect).abs() < 1e-12, "alpha={alpha} v={v}");
            }
        }
    }

    #[test]
    fn reference_link_specializes_to_margin_link() {
        for spec in ["exponential", "logistic", "zhang:2"] {
            let m: MarginLoss<f64> = catalog_margin(spec).unwrap();
            let link = margin_to_link(&m).unwrap();
            let (d1, d2) = (m.phi_prime.clone(), m.phi_prime.clone());
            let r = reference_link(real_fn(move |v| d1(v)), real_fn(move |v: f64| -d2(-v)), link.range()).unwrap();
            for v in score_grid(&link, 999) {
                assert!((r.q(v) - link.q(v)).abs() <= 1e-10, "{spec} at {v}");
            }
        }
    }

    #[test]
    fn gradient_consistency() {
        for cl in catalog_composites() {
            for v in score_grid(cl.link(), 99) {
                let (dp, dn) = cl.score_gradients(v).unwrap();
                let h = 1e-6 * v.abs().max(1.0);
                let fp = finite_diff(|t| cl.partial(Label::Pos, t), v, 1, h).unwrap();
                let fn_ = finite_diff(|t| cl.partial(Label::Neg, t), v, 1, h).unwrap();
                assert!(
                    (dp - fp).abs() <= 1e-6 * (1.0 + dp.abs()),
                    "{} d_pos at {v}: {dp} vs {fp}",
                    cl.name()
                );
                assert!(
                    (dn - fn_).abs() <= 1e-6 * (1.0 + dn.abs()),
                    "{} d_neg at {v}: {dn} vs {fn_}",
                    cl.name()
                );
                assert!(dn - dp >= 0.0);
            }
        }
    }

    #[test]
    fn risk_derivative_formula() {
        for cl in catalog_composites() {
            for &eta in &[0.1, 0.5, 0.8] {
                for v in score_grid(cl.link(), 19) {
                    let h = 1e-6 * v.abs().max(1.0);
                    let fd = finite_diff(|t| Loss::conditional_risk(&cl, eta, t), v, 1, h).unwrap();
                    let cf = cl.risk_derivative(eta, v).unwrap();
                    assert!(
                        (fd - cf).abs() <= 1e-6 * (1.0 + cf.abs()),
                        "{} eta={eta} v={v}",
                        cl.name()
                    );
                }
            }
        }
    }

    #[test]
    fn quasi_convex_and_proper_through_link() {
        for cl in catalog_composites() {
            let grid = score_grid(cl.link(), 999);
            for &eta in &[0.1, 0.33, 0.5, 0.72, 0.9] {
                let risks: Vec<f64> = grid.iter().map(|&v| Loss::conditional_risk(&cl, eta, v)).collect();
                let mut sign_changes = 0;
                let mut prev_sign = 0i8;
                for w in risks.windows(2) {
                    let d = w[1] - w[0];
                    let s = if d > 1e-15 {
                        1
                    } else if d < -1e-15 {
                        -1
                    } else {
                        0
                    };
                    if s != 0 {
                        if prev_sign == 1 && s == -1 {
                            panic!("{} has an interior maximum at eta={eta}", cl.name());
                        }
                        if prev_sign != 0 && s != prev_sign {
                            sign_changes += 1;
                        }
                        prev_sign = s;
                    }
                }
                assert!(sign_changes <= 1);
                let best = risks
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                let target = cl.link().psi(eta);
                let step = grid[(best + 1).min(grid.len() - 1)] - grid[best.saturating_sub(1)];
                assert!((grid[best] - target).abs() <= step, "{} eta={eta}", cl.name());
            }
        }
    }

    #[test]
    fn duality_identity() {
        let id = DualPair::<f64>::identity();
        let logit = DualPair::<f64>::logit();
        let grid: Vec<f64> = interior_grid(20);
        for &x in &grid {
            for &y in &grid {
                assert!(duality_residual(&id, x, y).unwrap() <= 1e-12);
                assert!(duality_residual(&logit, x, y).unwrap() <= 1e-8, "{x} {y}");
            }
        }
        let r = duality_residual(&logit, 0.3, 0.6).unwrap();
        assert!(r <= 1e-8);
        assert!(duality_residual(&logit, 0.4, 0.4).unwrap() <= 1e-15);
        assert!((id.divergence(0.2, 0.7) - 0.125).abs() < 1e-12);
    }

    #[test]
    fn duality_for_canonical_boosting_link() {
        let wf = catalog_weight::<f64>("boosting", &BTreeMap::new()).unwrap();
        let pair = DualPair::from_link(&canonical_link(&wf).unwrap());
        for &(x, y) in &[(0.2, 0.7), (0.5, 0.1), (0.9, 0.35)] {
            assert!(duality_residual(&pair, x, y).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn atoms_block_rho_only() {
        let wf = catalog_weight::<f64>("zero-one", &BTreeMap::new()).unwrap();
        let cl = make_composite(&from_weight(&wf).unwrap(), &catalog_link("identity").unwrap()).unwrap();
        assert_eq!(cl.eval(Label::Pos, 0.3).unwrap(), 1.0);
        assert!(cl.score_gradients(0.3).is_err());
    }

    proptest! {
        #[test]
        fn gradient_difference_is_rho(v in -5.0f64..5.0) {
            let cl = composite("log", "logit");
            let (dp, dn) = cl.score_gradients(v).unwrap();
            prop_assert!((dn - dp - cl.rho(cl.link().q(v)).unwrap()).abs() < 1e-14);
        }
    }
}
