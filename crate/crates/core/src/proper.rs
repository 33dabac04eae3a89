//! Proper CPE losses: construction from weights, risks, regret, the Savage
//! and Schervish representations, and symmetric reconstruction.

use std::fmt;

use crate::error::{Error, Result};
use crate::loss::{check_unit, Label, Loss};
use crate::numerics::{finite_diff, integrate, one_sided_derivative, QuadratureSpec, Side};
use crate::scalar::{lit, real_fn, weighted, Real, RealFn};
use crate::weights::{interior_step, WeightFunction};

/// Number of dyadic probes used to decide strict properness.
pub const STRICTNESS_PROBES: usize = 1024;

/// A proper CPE loss with partials `ℓ₁ = ℓ(1, ·)` and `ℓ₋₁ = ℓ(-1, ·)`.
#[derive(Clone)]
pub struct ProperLoss<T: Real> {
    name: String,
    ell_pos: RealFn<T>,
    ell_neg: RealFn<T>,
    bayes: Option<RealFn<T>>,
    bayes_prime: Option<RealFn<T>>,
    weight: WeightFunction<T>,
    fair: bool,
    strictly_proper: bool,
    warnings: Vec<String>,
}

impl<T: Real> fmt::Debug for ProperLoss<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProperLoss")
            .field("name", &self.name)
            .field("fair", &self.fair)
            .field("strictly_proper", &self.strictly_proper)
            .finish()
    }
}

/// Value of a Schervish mixture integral and whether it had to be truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureValue<T> {
    pub value: T,
    pub truncated: bool,
}

/// Which half of `[0,1]` a partial loss is supplied on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfSide {
    /// `[0, 1/2]`
    Lower,
    /// `[1/2, 1]`
    Upper,
}

impl std::str::FromStr for HalfSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<HalfSide> {
        match s {
            "lower" => Ok(HalfSide::Lower),
            "upper" => Ok(HalfSide::Upper),
            other => Err(Error::Parse(format!("side must be lower or upper, got {other:?}"))),
        }
    }
}

impl<T: Real> ProperLoss<T> {
    /// Wraps partial losses that are known to be proper for `weight`.
    /// Fairness is read off the endpoint values.
    pub fn from_partials(name: &str, ell_pos: RealFn<T>, ell_neg: RealFn<T>, weight: WeightFunction<T>) -> Self {
        let tiny: T = lit(1e-12);
        let fair = ell_neg(T::zero()).abs() <= tiny && ell_pos(T::one()).abs() <= tiny;
        let strictly_proper = probe_strictness(&weight);
        let mut loss = ProperLoss {
            name: name.to_string(),
            ell_pos,
            ell_neg,
            bayes: None,
            bayes_prime: None,
            weight,
            fair,
            strictly_proper,
            warnings: Vec::new(),
        };
        loss.note_definiteness();
        loss
    }

    fn note_definiteness(&mut self) {
        if !(self.ell_pos)(T::zero()).is_finite() {
            self.warnings
                .push("partial loss for y = +1 is infinite at 0 (loss is not definite)".into());
        }
        if !(self.ell_neg)(T::one()).is_finite() {
            self.warnings
                .push("partial loss for y = -1 is infinite at 1 (loss is not definite)".into());
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn weight(&self) -> &WeightFunction<T> {
        &self.weight
    }

    pub fn is_fair(&self) -> bool {
        self.fair
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.strictly_proper
    }

    /// Non-fatal diagnostics gathered at construction (e.g. non-definiteness).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn ell_pos(&self, etahat: T) -> T {
        (self.ell_pos)(etahat)
    }

    pub fn ell_neg(&self, etahat: T) -> T {
        (self.ell_neg)(etahat)
    }

    pub fn ell(&self, y: Label, etahat: T) -> T {
        match y {
            Label::Pos => self.ell_pos(etahat),
            Label::Neg => self.ell_neg(etahat),
        }
    }

    /// `L(η, η̂) = η ℓ₁(η̂) + (1 - η) ℓ₋₁(η̂)`.
    pub fn conditional_risk(&self, eta: T, etahat: T) -> Result<T> {
        check_unit("eta", eta)?;
        check_unit("etahat", etahat)?;
        Ok(Loss::conditional_risk(self, eta, etahat))
    }

    /// Conditional Bayes risk `L̲(η) = L(η, η)`.
    pub fn bayes_risk(&self, eta: T) -> Result<T> {
        check_unit("eta", eta)?;
        Ok(self.bayes_unchecked(eta))
    }

    fn bayes_unchecked(&self, eta: T) -> T {
        match &self.bayes {
            Some(f) => f(eta),
            None => Loss::conditional_risk(self, eta, eta),
        }
    }

    /// `L̲'(η)`: closed form when the weight provides one, else a central
    /// difference of the Bayes risk.
    pub fn bayes_derivative(&self, eta: T) -> Result<T> {
        check_unit("eta", eta)?;
        match &self.bayes_prime {
            Some(f) => Ok(f(eta)),
            None => finite_diff(|t| self.bayes_unchecked(t), eta, 1, interior_step(eta)),
        }
    }

    /// Regret `ΔL(η, η̂) = L(η, η̂) - L̲(η)`; rounding-level negatives are clamped to 0.
    pub fn regret(&self, eta: T, etahat: T) -> Result<T> {
        let risk = self.conditional_risk(eta, etahat)?;
        let bayes = self.bayes_risk(eta)?;
        let r = risk - bayes;
        let noise = T::epsilon() * lit::<T>(64.0) * (T::one() + risk.abs() + bayes.abs());
        Ok(if r < T::zero() && -r <= noise { T::zero() } else { r })
    }

    /// The Bregman form of the regret, `D_{-L̲}(η, η̂) = -L̲(η) + L̲(η̂) + (η - η̂) L̲'(η̂)`.
    pub fn bregman_regret(&self, eta: T, etahat: T) -> Result<T> {
        let d = self.bayes_derivative(etahat)?;
        Ok(-self.bayes_risk(eta)? + self.bayes_risk(etahat)? + weighted(eta - etahat, d))
    }

    /// Largest `|L(η, η̂) - L̲(η̂) - (η - η̂) L̲'(η̂)|` over the `(η, η̂)` pairs.
    pub fn savage_check(&self, grid: &[(T, T)]) -> Result<T> {
        let mut worst = T::zero();
        for &(eta, etahat) in grid {
            let lhs = self.conditional_risk(eta, etahat)?;
            let rhs = self.bayes_risk(etahat)? + weighted(eta - etahat, self.bayes_derivative(etahat)?);
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }

    /// `∫₀¹ ℓ_c(y, η̂) w(c) dc` plus the atom terms. A divergent integral is
    /// truncated at `1e-12` from the offending endpoint and flagged.
    pub fn schervish_check(&self, y: Label, etahat: T) -> Result<MixtureValue<T>> {
        check_unit("etahat", etahat)?;
        let mut value = T::zero();
        let mut truncated = false;
        if let Some(w) = self.weight.density_fn() {
            let spec = QuadratureSpec::with_tolerance(lit(1e-12), lit(1e-12));
            let (integrand, lo, hi): (Box<dyn Fn(T) -> T>, T, T) = match y {
                Label::Neg => (Box::new(move |c: T| c * w(c)), T::zero(), etahat),
                Label::Pos => (Box::new(move |c: T| (T::one() - c) * w(c)), etahat, T::one()),
            };
            value = match integrate(&integrand, lo, hi, &spec) {
                Ok(v) => v,
                Err(Error::Divergent { .. }) => {
                    truncated = true;
                    let cut: T = lit(1e-12);
                    integrate(&integrand, lo.max(cut), hi.min(T::one() - cut), &spec)?
                }
                Err(e) => return Err(e),
            };
        }
        for atom in self.weight.atoms() {
            value = value + atom.mass * cost_partial(atom.location, y, etahat);
        }
        Ok(MixtureValue { value, truncated })
    }

    /// `η ℓ₁(η) → 0` as `η → 0` and `(1 - η) ℓ₋₁(η) → 0` as `η → 1`, probed at
    /// `η ∈ {1e-4, 1e-6}`; returns the largest probed product.
    pub fn regularity_residual(&self) -> T {
        let mut worst = T::zero();
        for e in [1e-4, 1e-6] {
            let e: T = lit(e);
            worst = worst.max((e * self.ell_pos(e)).abs());
            worst = worst.max((e * self.ell_neg(T::one() - e)).abs());
        }
        worst
    }
}

impl<T: Real> Loss<T> for ProperLoss<T> {
    fn partial(&self, y: Label, p: T) -> T {
        self.ell(y, p)
    }
}

/// `ℓ_c(y, η̂)`: `c [η̂ ≥ c]` for `y = -1`, `(1 - c) [η̂ < c]` for `y = +1`.
pub fn cost_partial<T: Real>(c: T, y: Label, etahat: T) -> T {
    match y {
        Label::Neg => {
            if etahat >= c {
                c
            } else {
                T::zero()
            }
        }
        Label::Pos => {
            if etahat < c {
                T::one() - c
            } else {
                T::zero()
            }
        }
    }
}

/// Cost-weighted misclassification loss `ℓ_{c0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostLoss<T> {
    pub c0: T,
}

impl<T: Real> CostLoss<T> {
    pub fn new(c0: T) -> Result<Self> {
        if !(c0 > T::zero() && c0 < T::one()) {
            return Err(Error::Argument(format!("cost parameter c0 = {c0} must lie in (0,1)")));
        }
        Ok(CostLoss { c0 })
    }

    pub fn to_proper(&self) -> Result<ProperLoss<T>> {
        let wf = WeightFunction::point_mass(&format!("cost({})", self.c0), self.c0, T::one())?;
        from_weight(&wf)
    }
}

impl<T: Real> Loss<T> for CostLoss<T> {
    fn partial(&self, y: Label, p: T) -> T {
        cost_partial(self.c0, y, p)
    }
}

fn probe_strictness<T: Real>(wf: &WeightFunction<T>) -> bool {
    let n = STRICTNESS_PROBES;
    let denom = T::from_usize(n).unwrap();
    let mut run = 0usize;
    for k in 1..n {
        let c = T::from_usize(k).unwrap() / denom;
        let w = wf.w(c);
        let positive = w > T::zero() || wf.atom_mass_at(c) > T::zero();
        if positive {
            run = 0;
        } else {
            run += 1;
            if run > 2 {
                return false;
            }
        }
    }
    true
}

/// Fair proper loss with weight `wf`. Closed-form antiderivatives are used
/// when available, otherwise the partial losses are computed by quadrature
/// (see [`from_weight_numeric`]). Atoms add cost-loss step terms.
pub fn from_weight<T: Real>(wf: &WeightFunction<T>) -> Result<ProperLoss<T>> {
    match (wf.big_w_fn(), wf.wbar_fn(), wf.limits()) {
        (Some(bw), Some(wb), Some(lim)) if !wf.has_atoms() => {
            let (bw1, wb1) = (bw.clone(), wb.clone());
            let ell_pos = real_fn(move |e: T| {
                if e >= T::one() {
                    T::zero()
                } else if e <= T::zero() {
                    lim.wbar_at_1 - lim.wbar_at_0 - lim.big_w_at_0
                } else {
                    -wb1(e) - (T::one() - e) * bw1(e) + lim.wbar_at_1
                }
            });
            let (bw2, wb2) = (bw.clone(), wb.clone());
            let ell_neg = real_fn(move |e: T| {
                if e <= T::zero() {
                    T::zero()
                } else if e >= T::one() {
                    lim.wbar_at_0 - lim.wbar_at_1 + lim.big_w_at_1
                } else {
                    -wb2(e) + e * bw2(e) + lim.wbar_at_0
                }
            });
            let wb3 = wb.clone();
            let bayes = real_fn(move |e: T| {
                if e <= T::zero() || e >= T::one() {
                    T::zero()
                } else {
                    -wb3(e) + e * lim.wbar_at_1 + (T::one() - e) * lim.wbar_at_0
                }
            });
            let bw4 = bw.clone();
            let bayes_prime = real_fn(move |e: T| -bw4(e) + lim.wbar_at_1 - lim.wbar_at_0);
            let mut loss = ProperLoss::from_partials(wf.name(), ell_pos, ell_neg, wf.clone());
            loss.bayes = Some(bayes);
            loss.bayes_prime = Some(bayes_prime);
            Ok(loss)
        }
        _ => from_weight_numeric(wf),
    }
}

/// Fair proper loss from the integral representation
/// `ℓ₁(η̂) = ∫_η̂¹ (1 - c) w(c) dc`, `ℓ₋₁(η̂) = ∫₀^η̂ c w(c) dc`, evaluated by
/// adaptive quadrature. A divergent integral evaluates to `+inf`.
pub fn from_weight_numeric<T: Real>(wf: &WeightFunction<T>) -> Result<ProperLoss<T>> {
    let atoms = wf.atoms().to_vec();
    let density = wf.density_fn();
    let spec = QuadratureSpec::with_tolerance(lit(1e-13), lit(1e-13));
    let quad = move |f: &dyn Fn(T) -> T, a: T, b: T| -> T {
        match integrate(f, a, b, &spec) {
            Ok(v) => v,
            Err(Error::Divergent { .. }) => T::infinity(),
            Err(_) => T::nan(),
        }
    };

    let (d1, a1) = (density.clone(), atoms.clone());
    let ell_pos = real_fn(move |e: T| {
        let mut v = match &d1 {
            Some(w) if e < T::one() => quad(&|c: T| (T::one() - c) * w(c), e, T::one()),
            _ => T::zero(),
        };
        for a in &a1 {
            v = v + a.mass * cost_partial(a.location, Label::Pos, e);
        }
        v
    });
    let (d2, a2) = (density, atoms);
    let ell_neg = real_fn(move |e: T| {
        let mut v = match &d2 {
            Some(w) if e > T::zero() => quad(&|c: T| c * w(c), T::zero(), e),
            _ => T::zero(),
        };
        for a in &a2 {
            v = v + a.mass * cost_partial(a.location, Label::Neg, e);
        }
        v
    });
    Ok(ProperLoss::from_partials(wf.name(), ell_pos, ell_neg, wf.clone()))
}

/// Tabulated weight `w = -L̲''` estimated by second differences of the Bayes
/// risk at `i / 200`, `i = 1..199`, with step `min(1e-4, min(c, 1 - c) / 50)`.
pub fn weight_from_loss<T: Real>(loss: &ProperLoss<T>) -> Result<WeightFunction<T>> {
    let n = 200;
    let mut points = Vec::with_capacity(n - 1);
    for i in 1..n {
        let c = T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
        let h = lit::<T>(1e-4).min(c.min(T::one() - c) / lit(50.0));
        let d2 = finite_diff(|t| loss.bayes_unchecked(t), c, 2, h)?;
        let w = -d2;
        if w < lit(-1e-6) {
            return Err(Error::Improper(format!(
                "Bayes risk is not concave at {c} (curvature estimate {w})"
            )));
        }
        points.push((c, w.max(T::zero())));
    }
    Ok(WeightFunction::from_table(points)?.with_name(&format!("curvature({})", loss.name())))
}

/// Reconstructs a symmetric proper loss from `ℓ₋₁` known on one half of
/// `[0,1]`:
///
/// `ℓ₋₁(η̂) = ℓ₋₁(1/2) + ∫_{1/2}^{η̂} x/(1 - x) · ℓ₋₁'(1 - x) dx`
///
/// and `ℓ₁(η̂) = ℓ₋₁(1 - η̂)`. Derivatives of `half` are taken by finite
/// differences that stay inside the supplied half.
pub fn reconstruct_symmetric<T: Real>(half: RealFn<T>, side: HalfSide, ell_neg_at_half: T) -> Result<ProperLoss<T>> {
    let half_pt: T = lit(0.5);
    let (lo, hi) = match side {
        HalfSide::Lower => (T::zero(), half_pt),
        HalfSide::Upper => (half_pt, T::one()),
    };
    let known = move |e: T| e >= lo && e <= hi;

    let hd = half.clone();
    let derivative = move |u: T| -> T {
        let h = lit::<T>(1e-5);
        if u - lit::<T>(2.0) * h >= lo && u + lit::<T>(2.0) * h <= hi {
            finite_diff(|t| hd(t), u, 1, h).unwrap_or(T::nan())
        } else if u - lit::<T>(2.0) * h >= lo {
            one_sided_derivative(|t| hd(t), u, h, Side::Left).unwrap_or(T::nan())
        } else {
            one_sided_derivative(|t| hd(t), u, h, Side::Right).unwrap_or(T::nan())
        }
    };

    let spec = QuadratureSpec::with_tolerance(lit(1e-12), lit(1e-12));
    let hk = half.clone();
    let ell_neg: RealFn<T> = real_fn(move |e: T| {
        if known(e) {
            return hk(e);
        }
        let integrand = |x: T| weighted(x / (T::one() - x), derivative(T::one() - x));
        match integrate(integrand, half_pt, e, &spec) {
            Ok(v) => ell_neg_at_half + v,
            Err(Error::Divergent { .. }) => T::infinity(),
            Err(_) => T::nan(),
        }
    });
    let en = ell_neg.clone();
    let ell_pos: RealFn<T> = real_fn(move |e: T| en(T::one() - e));

    // implied weight w(c) = ℓ₋₁'(c) / c
    let en2 = ell_neg.clone();
    let weight = WeightFunction::from_fn("reconstructed", move |c: T| {
        let h = interior_step(c).min(lit(1e-5));
        let d = finite_diff(|t| en2(t), c, 1, h).unwrap_or(T::nan());
        d / c
    });

    let probe: Vec<T> = (1..50).map(|i| T::from_usize(i).unwrap() / lit(50.0)).collect();
    for &c in &probe {
        let w = weight.w(c);
        if w.is_nan() {
            return Err(Error::NotANumber { at: c.as_f64() });
        }
        if w < lit(-1e-6) {
            return Err(Error::Improper(format!(
                "reconstructed weight is negative ({w}) at {c}"
            )));
        }
    }
    Ok(ProperLoss::from_partials("reconstructed", ell_pos, ell_neg, weight))
}
