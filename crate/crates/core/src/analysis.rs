//! Certifiers: properness of supplied partials, convexity of composite
//! losses, allowable weight regions and classification calibration.
//!
//! All verdicts are grid certificates: a condition is checked at the points
//! of a grid with a stated tolerance, not proven on all of (0,1).

use serde::Serialize;

use crate::composite::CompositeLoss;
use crate::error::{Error, Result};
use crate::links::Link;
use crate::loss::{Label, Loss};
use crate::numerics::finite_diff;
use crate::proper::ProperLoss;
use crate::scalar::{interior_grid, lit, Real};
use crate::weights::{interior_step, normalize_weight, WeightFunction};

/// Tolerance of the weight/link convexity characterization.
pub const CHARACTERIZATION_TOL: f64 = 1e-9;
/// Tolerance of the second-difference convexity oracle.
pub const ORACLE_TOL: f64 = 1e-8;
/// Relative tolerance of the Shuford ratio comparison in [`check_proper`].
pub const PROPER_TOL: f64 = 1e-6;
/// Relative tolerance of the stationarity condition in [`calibration_cc_partials`].
pub const STATIONARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Characterization,
    Oracle,
}

/// A grid point where a convexity condition fails. For the characterization
/// `lhs = w'/w - ψ''/ψ'` and `rhs` is the violated bound (`-1/x` or
/// `1/(1-x)`); for the oracle `lhs` is the partial loss value and `rhs` the
/// chord through the neighbouring points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub side: BoundSide,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub convex: bool,
    pub violations: Vec<Violation>,
    pub method: Method,
    pub grid_size: usize,
    pub tolerance: f64,
}

impl ConvexityReport {
    fn new(violations: Vec<Violation>, method: Method, grid_size: usize, tolerance: f64) -> Self {
        ConvexityReport {
            convex: violations.is_empty(),
            violations,
            method,
            grid_size,
            tolerance,
        }
    }
}

/// `n` interior points `i/(n+1)` plus the boundary probes `1e-3`, `1e-4`
/// and their mirrors, sorted.
pub fn certification_grid<T: Real>(n: usize) -> Vec<T> {
    let mut g: Vec<T> = interior_grid(n);
    for p in [1e-4, 1e-3] {
        g.push(lit(p));
        g.push(T::one() - lit::<T>(p));
    }
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

/// Result of [`check_proper`].
#[derive(Debug, Clone)]
pub struct ProperCheck<T: Real> {
    pub proper: bool,
    pub weight_estimate: WeightFunction<T>,
    pub max_residual: T,
}

/// Shuford test: the partials are proper iff
/// `-ℓ₁'(η̂)/(1 - η̂) = ℓ₋₁'(η̂)/η̂ ≥ 0` on `grid` (relative tolerance
/// [`PROPER_TOL`]). Derivatives are central differences.
pub fn check_proper<T: Real>(ell_pos: &dyn Fn(T) -> T, ell_neg: &dyn Fn(T) -> T, grid: &[T]) -> Result<ProperCheck<T>> {
    check_proper_with_tol(ell_pos, ell_neg, grid, lit(PROPER_TOL))
}

pub fn check_proper_with_tol<T: Real>(
    ell_pos: &dyn Fn(T) -> T,
    ell_neg: &dyn Fn(T) -> T,
    grid: &[T],
    tol: T,
) -> Result<ProperCheck<T>> {
    if grid.len() < 2 {
        return Err(Error::Argument("check_proper needs at least two grid points".into()));
    }
    let mut acc = ShufordAccumulator::new(tol);
    let mut last = T::neg_infinity();
    for &e in grid {
        if !(e > T::zero() && e < T::one()) || e <= last {
            return Err(Error::Argument("grid must be increasing and inside (0,1)".into()));
        }
        last = e;
        let h = interior_step(e);
        let d_pos = finite_diff(ell_pos, e, 1, h)?;
        let d_neg = finite_diff(ell_neg, e, 1, h)?;
        acc.push(e, d_pos, d_neg);
    }
    acc.finish()
}

/// Default relative tolerance for [`check_proper_table`]: three-point
/// differences of tabulated values are only second-order accurate.
pub const TABLE_PROPER_TOL: f64 = 1e-3;

/// Shuford test on tabulated rows `(η̂, ℓ₁(η̂), ℓ₋₁(η̂))`, sorted by `η̂`.
///
/// Derivatives are three-point differences on the (possibly uneven) table,
/// extrapolated against the same formula on every second row. The gap
/// between the two is the discretization uncertainty, which is added to
/// `tol` when the two Shuford ratios are compared, so coarse tables near a
/// singular endpoint are judged only as far as their resolution allows.
/// Rows within two of either end, and rows whose stencil contains a
/// non-finite value, only serve as neighbours.
pub fn check_proper_table<T: Real>(rows: &[(T, T, T)], tol: T) -> Result<ProperCheck<T>> {
    if rows.len() < 5 {
        return Err(Error::Argument("a partial-loss table needs at least five rows".into()));
    }
    for pair in rows.windows(2) {
        if !(pair[1].0 > pair[0].0) || pair[0].0 < T::zero() || pair[1].0 > T::one() {
            return Err(Error::Argument(
                "table rows must have increasing etahat in [0,1]".into(),
            ));
        }
    }
    let slope = |i: usize, k: usize, f: &dyn Fn(usize) -> T| -> T {
        let (hm, hp) = (rows[i].0 - rows[i - k].0, rows[i + k].0 - rows[i].0);
        (hm * hm * f(i + k) - hp * hp * f(i - k) + (hp * hp - hm * hm) * f(i)) / (hm * hp * (hm + hp))
    };
    // derivative and its uncertainty
    let derivative = |i: usize, f: &dyn Fn(usize) -> T| -> (T, T) {
        let narrow = slope(i, 1, f);
        let wide = slope(i, 2, f);
        let h = rows[i + 1].0 - rows[i - 1].0;
        let big = rows[i + 2].0 - rows[i - 2].0;
        let ratio = (big / h) * (big / h) - T::one();
        let correction = (narrow - wide) / ratio;
        (narrow + correction, correction.abs())
    };
    let mut acc = ShufordAccumulator::new(tol);
    for i in 2..rows.len() - 2 {
        let e = rows[i].0;
        let stencil = &rows[i - 2..=i + 2];
        if stencil.iter().any(|r| !(r.1.is_finite() && r.2.is_finite())) || e <= T::zero() || e >= T::one() {
            continue;
        }
        let (d_pos, u_pos) = derivative(i, &|k| rows[k].1);
        let (d_neg, u_neg) = derivative(i, &|k| rows[k].2);
        acc.push_uncertain(e, d_pos, d_neg, u_pos / (T::one() - e) + u_neg / e);
    }
    if acc.table.len() < 2 {
        return Err(Error::Argument("fewer than two usable interior rows".into()));
    }
    acc.finish()
}

struct ShufordAccumulator<T> {
    tol: T,
    proper: bool,
    max_residual: T,
    table: Vec<(T, T)>,
}

impl<T: Real> ShufordAccumulator<T> {
    fn new(tol: T) -> Self {
        ShufordAccumulator {
            tol,
            proper: true,
            max_residual: T::zero(),
            table: Vec::new(),
        }
    }

    fn push(&mut self, e: T, d_pos: T, d_neg: T) {
        self.push_uncertain(e, d_pos, d_neg, T::zero());
    }

    /// `slack` is an absolute uncertainty on the ratio difference.
    fn push_uncertain(&mut self, e: T, d_pos: T, d_neg: T, slack: T) {
        let r_pos = -d_pos / (T::one() - e);
        let r_neg = d_neg / e;
        let scale = T::one() + r_pos.abs().max(r_neg.abs());
        let residual = (r_pos - r_neg).abs() / scale;
        self.max_residual = self.max_residual.max(residual);
        let allowed = self.tol + slack / scale;
        if !(residual <= allowed) || r_pos < -allowed * scale || r_neg < -allowed * scale {
            self.proper = false;
        }
        let avg = lit::<T>(0.5) * (r_pos + r_neg);
        self.table.push((e, avg.max(T::zero())));
    }

    fn finish(self) -> Result<ProperCheck<T>> {
        Ok(ProperCheck {
            proper: self.proper,
            weight_estimate: WeightFunction::from_table(self.table)?.with_name("estimated"),
            max_residual: self.max_residual,
        })
    }
}

/// Convexity of `ℓ^ψ` from the weight and link alone:
/// `-1/x ≤ w'(x)/w(x) - ψ''(x)/ψ'(x) ≤ 1/(1-x)` at every grid point. The
/// lower bound governs `ℓ₋₁^ψ`, the upper bound `ℓ₁^ψ`.
pub fn convexity_characterization<T: Real>(
    wf: &WeightFunction<T>,
    link: &Link<T>,
    grid: &[T],
) -> Result<ConvexityReport> {
    convexity_characterization_with_tol(wf, link, grid, CHARACTERIZATION_TOL)
}

pub fn convexity_characterization_with_tol<T: Real>(
    wf: &WeightFunction<T>,
    link: &Link<T>,
    grid: &[T],
    tolerance: f64,
) -> Result<ConvexityReport> {
    if wf.has_atoms() || !wf.has_density() {
        return Err(Error::AtomsUnsupported(
            "convexity characterization needs an atom-free weight".into(),
        ));
    }
    let tol: T = lit(tolerance);
    let mut violations = Vec::new();
    for &x in grid {
        let w = wf.w(x);
        if !(w > T::zero()) {
            return Err(Error::NotStrictlyProper { at: x.as_f64() });
        }
        let g = wf.log_derivative(x)? - link.log_psi_prime_derivative(x)?;
        let lower = -T::one() / x;
        let upper = T::one() / (T::one() - x);
        if g < lower - tol * (T::one() + lower.abs()) {
            violations.push(Violation {
                x: x.as_f64(),
                side: BoundSide::Lower,
                lhs: g.as_f64(),
                rhs: lower.as_f64(),
            });
        }
        if g > upper + tol * (T::one() + upper.abs()) {
            violations.push(Violation {
                x: x.as_f64(),
                side: BoundSide::Upper,
                lhs: g.as_f64(),
                rhs: upper.as_f64(),
            });
        }
    }
    Ok(ConvexityReport::new(
        violations,
        Method::Characterization,
        grid.len(),
        tolerance,
    ))
}

/// Brute-force convexity check of `v ↦ ℓ^ψ(y, v)` for both labels: each
/// interior score must lie on or below the chord through its neighbours,
/// up to `1e-8 (1 + |ℓ|)`.
pub fn convexity_oracle<T: Real>(cl: &CompositeLoss<T>, score_grid: &[T]) -> ConvexityReport {
    convexity_oracle_with_tol(cl, score_grid, ORACLE_TOL)
}

pub fn convexity_oracle_with_tol<T: Real>(cl: &CompositeLoss<T>, score_grid: &[T], tolerance: f64) -> ConvexityReport {
    let tol: T = lit(tolerance);
    let mut violations = Vec::new();
    for (y, side) in [(Label::Neg, BoundSide::Lower), (Label::Pos, BoundSide::Upper)] {
        let values: Vec<T> = score_grid.iter().map(|&v| cl.partial(y, v)).collect();
        for i in 1..score_grid.len().saturating_sub(1) {
            let (v0, v1, v2) = (score_grid[i - 1], score_grid[i], score_grid[i + 1]);
            let (f0, f1, f2) = (values[i - 1], values[i], values[i + 1]);
            if !(f0.is_finite() && f1.is_finite() && f2.is_finite()) || !(v0 < v1 && v1 < v2) {
                continue;
            }
            let chord = f0 + (f2 - f0) * (v1 - v0) / (v2 - v0);
            if f1 - chord > tol * (T::one() + f1.abs()) {
                violations.push(Violation {
                    x: cl.link().q(v1).as_f64(),
                    side,
                    lhs: f1.as_f64(),
                    rhs: chord.as_f64(),
                });
            }
        }
    }
    ConvexityReport::new(violations, Method::Oracle, score_grid.len(), tolerance)
}

/// Bounds on the normalized weight `w / w(1/2)` for convexity under `link`:
/// `ψ'(x)/(2ψ'(1/2) x)` and `ψ'(x)/(2ψ'(1/2)(1 - x))`. The weight must lie
/// between the two curves (below the first for x ≤ 1/2, above it for x ≥ 1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCurve<T> {
    pub xs: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> RegionCurve<T> {
    /// Whether `value` lies between the two bounds at index `i`.
    pub fn contains(&self, i: usize, value: T, tol: T) -> bool {
        let (a, b) = (self.lower[i], self.upper[i]);
        let (lo, hi) = (a.min(b), a.max(b));
        value >= lo - tol * (T::one() + lo.abs()) && value <= hi + tol * (T::one() + hi.abs())
    }
}

pub fn allowable_region<T: Real>(link: &Link<T>, grid: &[T]) -> Result<RegionCurve<T>> {
    let at_half = link.psi_prime(lit(0.5));
    if !(at_half > T::zero()) || !at_half.is_finite() {
        return Err(Error::Domain(format!(
            "psi'(1/2) = {at_half}; the region needs 0 < psi'(1/2) < inf"
        )));
    }
    let two: T = lit(2.0);
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for &x in grid {
        let d = link.psi_prime(x);
        lower.push(d / (two * at_half * x));
        upper.push(d / (two * at_half * (T::one() - x)));
    }
    Ok(RegionCurve {
        xs: grid.to_vec(),
        lower,
        upper,
    })
}

/// Whether the normalized weight lies inside the allowable region at every
/// grid point.
pub fn weight_in_region<T: Real>(wf: &WeightFunction<T>, link: &Link<T>, grid: &[T]) -> Result<bool> {
    let normalized = normalize_weight(wf)?;
    let region = allowable_region(link, grid)?;
    let tol: T = lit(CHARACTERIZATION_TOL);
    Ok(grid
        .iter()
        .enumerate()
        .all(|(i, &x)| region.contains(i, normalized.w(x), tol)))
}

/// Classification-calibration verdict at a threshold `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    Calibrated,
    NotCalibrated,
    /// A derivative is numerically zero, so the strict sign conditions
    /// cannot be decided.
    Indeterminate,
}

impl Calibration {
    pub fn is_calibrated(self) -> bool {
        self == Calibration::Calibrated
    }
}

fn check_threshold<T: Real>(c: T) -> Result<()> {
    if c > T::zero() && c < T::one() {
        Ok(())
    } else {
        Err(Error::Argument(format!("threshold c = {c} must lie in (0,1)")))
    }
}

/// CC_c for a proper loss: calibrated iff the weight has mass at `c`
/// (a positive density value or an atom located at `c`).
pub fn calibration_cc<T: Real>(loss: &ProperLoss<T>, c: T) -> Result<Calibration> {
    check_threshold(c)?;
    let wf = loss.weight();
    if wf.atom_mass_at(c) > T::zero() {
        return Ok(Calibration::Calibrated);
    }
    let w = wf.w(c);
    if w.is_nan() {
        return Ok(Calibration::Indeterminate);
    }
    Ok(if w > T::zero() {
        Calibration::Calibrated
    } else {
        Calibration::NotCalibrated
    })
}

/// CC_c from differentiable partial losses: `ℓ₋₁'(c) > 0`, `ℓ₁'(c) < 0` and
/// `c ℓ₁'(c) + (1 - c) ℓ₋₁'(c) = 0` (relative to `|ℓ₋₁'(c)|`).
pub fn calibration_cc_partials<T: Real>(
    ell_pos: &dyn Fn(T) -> T,
    ell_neg: &dyn Fn(T) -> T,
    c: T,
) -> Result<Calibration> {
    check_threshold(c)?;
    let h = interior_step(c);
    let d_pos = finite_diff(ell_pos, c, 1, h)?;
    let d_neg = finite_diff(ell_neg, c, 1, h)?;
    // derivative noise floor of the difference quotient
    let noise = lit::<T>(1e3) * T::epsilon() * (T::one() + ell_pos(c).abs() + ell_neg(c).abs()) / h;
    if d_neg.abs() <= noise || d_pos.abs() <= noise {
        return Ok(Calibration::Indeterminate);
    }
    if !(d_neg > T::zero() && d_pos < T::zero()) {
        return Ok(Calibration::NotCalibrated);
    }
    let stationarity = (c * d_pos + (T::one() - c) * d_neg).abs() / d_neg.abs();
    Ok(if stationarity <= lit(STATIONARITY_TOL.max(1e-6)) {
        Calibration::Calibrated
    } else {
        Calibration::NotCalibrated
    })
}

/// CC_c for a composite loss, decided on its base proper loss.
pub fn calibration_composite<T: Real>(cl: &CompositeLoss<T>, c: T) -> Result<Calibration> {
    calibration_cc(cl.base(), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{catalog_margin, make_composite, margin_composite, score_grid};
    use crate::links::{canonical_link, catalog_link, resolve_link, CATALOG_LINKS};
    use crate::proper::{from_weight, CostLoss};
    use crate::scalar::real_fn;
    use crate::weights::{catalog_weight, parse_weight_name};
    use std::collections::BTreeMap;

    const WEIGHTS: [&str; 6] = ["square", "log", "boosting", "minimal", "w1-over-c", "w1-over-1mc"];

    fn weight(name: &str) -> WeightFunction<f64> {
        catalog_weight(name, &BTreeMap::new()).unwrap()
    }

    fn all_links() -> Vec<&'static str> {
        let mut v = CATALOG_LINKS.to_vec();
        v.push("canonical");
        v
    }

    #[test]
    fn shuford_test() {
        let grid: Vec<f64> = interior_grid(99);
        let sq = check_proper(&|e: f64| (1.0 - e).powi(2) / 2.0, &|e: f64| e * e / 2.0, &grid).unwrap();
        assert!(sq.proper);
        assert!((sq.weight_estimate.w(0.5) - 1.0).abs() < 1e-8);
        let bad = check_proper(&|e: f64| (1.0 - e).powi(2), &|e: f64| e, &grid).unwrap();
        assert!(!bad.proper);
        let log = check_proper(&|e: f64| -e.ln(), &|e: f64| -(1.0 - e).ln(), &grid).unwrap();
        assert!(log.proper);
        assert!((log.weight_estimate.w(0.5) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn tabulated_shuford_test() {
        let rows: Vec<(f64, f64, f64)> = crate::scalar::linspace(0.0f64, 1.0, 101)
            .into_iter()
            .map(|e: f64| (e, -e.ln(), -(-e).ln_1p()))
            .collect();
        let r = check_proper_table(&rows, TABLE_PROPER_TOL).unwrap();
        assert!(r.proper, "{}", r.max_residual);
        assert!((r.weight_estimate.w(0.5) - 4.0).abs() < 1e-2);
        let bad: Vec<(f64, f64, f64)> = rows.iter().map(|&(e, _, n)| (e, (1.0 - e).powi(2), n)).collect();
        assert!(!check_proper_table(&bad, TABLE_PROPER_TOL).unwrap().proper);
        assert!(check_proper_table(&rows[..4], 1e-3).is_err());
    }

    #[test]
    fn mismatched_partials_agree_only_at_half() {
        let grid = vec![0.25, 0.5, 0.75];
        let r = check_proper(&|e: f64| (1.0 - e).powi(2), &|e: f64| e, &grid).unwrap();
        assert!(!r.proper);
        let only_half = check_proper(&|e: f64| (1.0 - e).powi(2), &|e: f64| e, &[0.49999, 0.5]).unwrap();
        assert!(only_half.max_residual < 1e-4);
    }

    #[test]
    fn square_identity_convex() {
        let grid = certification_grid::<f64>(999);
        let r = convexity_characterization(&weight("square"), &catalog_link("identity").unwrap(), &grid).unwrap();
        assert!(r.convex && r.method == Method::Characterization);
    }

    #[test]
    fn boosting_identity_violation_set() {
        let grid: Vec<f64> = interior_grid(999);
        let r = convexity_characterization(&weight("boosting"), &catalog_link("identity").unwrap(), &grid).unwrap();
        assert!(!r.convex);
        let step = 1e-3;
        for v in &r.violations {
            match v.side {
                BoundSide::Lower => assert!(v.x < 0.25 + step, "{v:?}"),
                BoundSide::Upper => assert!(v.x > 0.75 - step, "{v:?}"),
            }
        }
        for &x in &grid {
            let flagged = r.violations.iter().any(|v| (v.x - x).abs() < 1e-12);
            let expected = x < 0.25 - step || x > 0.75 + step;
            if expected {
                assert!(flagged, "{x} should be flagged");
            }
        }
    }

    #[test]
    fn canonical_links_always_convex() {
        let grid = certification_grid::<f64>(999);
        for name in WEIGHTS {
            let wf = weight(name);
            let link = canonical_link(&wf).unwrap();
            let r = convexity_characterization(&wf, &link, &grid).unwrap();
            assert!(r.convex, "{name}: {:?}", r.violations.first());
        }
    }

    #[test]
    fn characterization_agrees_with_oracle_on_catalog() {
        let grid = certification_grid::<f64>(999);
        for wname in WEIGHTS {
            let wf = weight(wname);
            let base = from_weight(&wf).unwrap();
            for lname in all_links() {
                let link = resolve_link(lname, Some(&wf)).unwrap();
                let cl = make_composite(&base, &link).unwrap();
                let ch = convexity_characterization(&wf, &link, &grid).unwrap();
                let scores: Vec<f64> = grid.iter().map(|&x| link.psi(x)).collect();
                let or = convexity_oracle(&cl, &scores);
                assert_eq!(ch.convex, or.convex, "{wname} + {lname}");
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let logistic = margin_composite(&catalog_margin::<f64>("logistic").unwrap()).unwrap();
        assert!(convexity_oracle(&logistic, &score_grid(logistic.link(), 999)).convex);
        let id = catalog_link::<f64>("identity").unwrap();
        let boost = make_composite(&from_weight(&weight("boosting")).unwrap(), &id).unwrap();
        let r = convexity_oracle(&boost, &interior_grid(999));
        assert!(!r.convex);
        assert!(r
            .violations
            .iter()
            .all(|v| (v.side == BoundSide::Lower && v.x < 0.25) || (v.side == BoundSide::Upper && v.x > 0.75)));
        let sq = make_composite(&from_weight(&weight("square")).unwrap(), &id).unwrap();
        assert!(convexity_oracle(&sq, &interior_grid(999)).convex);
    }

    #[test]
    fn convex_identity_weights_bounded_away_from_zero() {
        let grid = certification_grid::<f64>(999);
        let id = catalog_link::<f64>("identity").unwrap();
        for name in WEIGHTS {
            let wf = weight(name);
            if convexity_characterization(&wf, &id, &grid).unwrap().convex {
                let min = grid.iter().map(|&x| wf.w(x)).fold(f64::INFINITY, f64::min);
                assert!(min > 0.0, "{name}");
            }
        }
    }

    #[test]
    fn region_examples() {
        let id = catalog_link::<f64>("identity").unwrap();
        let r = allowable_region(&id, &[0.25]).unwrap();
        assert_eq!(r.lower[0], 2.0);
        assert!((r.upper[0] - 2.0 / 3.0).abs() < 1e-15);
        let logit = catalog_link::<f64>("logit").unwrap();
        let r = allowable_region(&logit, &[0.5, 0.2]).unwrap();
        assert_eq!((r.lower[0], r.upper[0]), (1.0, 1.0));
        // logit region: 1/(8x^2(1-x)) and 1/(8x(1-x)^2)
        assert!((r.lower[1] - 1.0 / (8.0 * 0.04 * 0.8)).abs() < 1e-12);
        assert!((r.upper[1] - 1.0 / (8.0 * 0.2 * 0.64)).abs() < 1e-12);
        let cos = catalog_link::<f64>("cosine").unwrap();
        let r = allowable_region(&cos, &[1e-6, 1.0 - 1e-6]).unwrap();
        // psi' ~ pi^2 x near 0, so one bound tends to pi/2 and the other to 0
        assert!((r.lower[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
        assert!((r.upper[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
        assert!(r.upper[0] < 1e-5 && r.lower[1] < 1e-5);
    }

    #[test]
    fn region_verdict_matches_characterization() {
        let grid = certification_grid::<f64>(999);
        for wname in WEIGHTS {
            let wf = weight(wname);
            for lname in CATALOG_LINKS {
                let link = catalog_link(lname).unwrap();
                let inside = weight_in_region(&wf, &link, &grid).unwrap();
                let convex = convexity_characterization(&wf, &link, &grid).unwrap().convex;
                assert_eq!(inside, convex, "{wname} + {lname}");
            }
        }
    }

    #[test]
    fn minimal_weight_is_lower_envelope_of_identity_region() {
        let grid: Vec<f64> = interior_grid(999);
        let r = allowable_region(&catalog_link::<f64>("identity").unwrap(), &grid).unwrap();
        let m = weight("minimal");
        for (i, &x) in grid.iter().enumerate() {
            assert!((m.w(x) - r.lower[i].min(r.upper[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_of_cost_losses() {
        for i in 1..=9 {
            let c0 = i as f64 / 10.0;
            let loss = CostLoss::new(c0).unwrap().to_proper().unwrap();
            for j in 1..=9 {
                let c = j as f64 / 10.0;
                let verdict = calibration_cc(&loss, c).unwrap();
                assert_eq!(verdict.is_calibrated(), i == j, "c0={c0} c={c}");
            }
        }
    }

    #[test]
    fn strictly_proper_losses_calibrated_everywhere() {
        let grid: Vec<f64> = interior_grid(99);
        for name in WEIGHTS {
            let loss = from_weight(&weight(name)).unwrap();
            for &c in &grid {
                assert!(calibration_cc(&loss, c).unwrap().is_calibrated());
                let (p, n) = (loss.clone(), loss.clone());
                let v = calibration_cc_partials(&move |t| p.ell_pos(t), &move |t| n.ell_neg(t), c).unwrap();
                assert_eq!(v, Calibration::Calibrated, "{name} at {c}");
            }
        }
    }

    #[test]
    fn gap_weight_not_calibrated_inside_gap() {
        let gap = WeightFunction::from_fn("gap", |c: f64| if (c - 0.5).abs() < 0.1 { 0.0 } else { 1.0 });
        let loss = from_weight(&gap).unwrap();
        assert_eq!(calibration_cc(&loss, 0.5).unwrap(), Calibration::NotCalibrated);
        assert!(calibration_cc(&loss, 0.3).unwrap().is_calibrated());
        let (p, n) = (loss.clone(), loss.clone());
        let v = calibration_cc_partials(&move |t| p.ell_pos(t), &move |t| n.ell_neg(t), 0.5).unwrap();
        assert_eq!(v, Calibration::Indeterminate);
        let cl = make_composite(&loss, &catalog_link("identity").unwrap()).unwrap();
        assert!(!calibration_composite(&cl, 0.45).unwrap().is_calibrated());
    }

    #[test]
    fn composite_calibration() {
        let log = make_composite(&from_weight(&weight("log")).unwrap(), &catalog_link("logit").unwrap()).unwrap();
        for &c in &[0.01, 0.5, 0.99] {
            assert!(calibration_composite(&log, c).unwrap().is_calibrated());
        }
        let cost = make_composite(
            &from_weight(&parse_weight_name::<f64>("cost(0.3)").unwrap()).unwrap(),
            &catalog_link("identity").unwrap(),
        )
        .unwrap();
        assert!(calibration_composite(&cost, 0.3).unwrap().is_calibrated());
        assert!(!calibration_composite(&cost, 0.5).unwrap().is_calibrated());
        assert!(calibration_composite(&cost, 1.0).is_err());
    }

    #[test]
    fn stationarity_failure_detected() {
        // both signs right but not stationary at c = 0.5
        let v = calibration_cc_partials(&|e: f64| 1.0 - e, &|e: f64| 3.0 * e, 0.5).unwrap();
        assert_eq!(v, Calibration::NotCalibrated);
        let v = calibration_cc_partials(&|e: f64| 1.0 - e, &|e: f64| e, 0.5).unwrap();
        assert_eq!(v, Calibration::Calibrated);
        let _ = real_fn(|x: f64| x);
    }
}
