//! Label-noise robustness: symmetric label corruption, the induced noisy
//! loss, minimizer sets of conditional risks and the non-robust intervals of
//! cost-weighted and general proper losses.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::loss::{Label, Loss};
use crate::scalar::{lit, Real};
use crate::weights::WeightFunction;

/// Minimizer-set slack for piecewise-constant (cost) losses.
pub const PLATEAU_SLACK: f64 = 1e-12;
/// Relative minimizer-set slack for smooth losses.
pub const SMOOTH_SLACK: f64 = 1e-9;

/// Symmetric label-flip probability `α ∈ [0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct NoiseLevel<T>(T);

impl<T: Real> NoiseLevel<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if alpha >= T::zero() && alpha < lit(0.5) {
            Ok(NoiseLevel(alpha))
        } else {
            Err(Error::Argument(format!(
                "noise level alpha = {alpha} must lie in [0, 1/2)"
            )))
        }
    }

    pub fn alpha(self) -> T {
        self.0
    }
}

/// `η_α = α(1 - η) + (1 - α)η`.
pub fn corrupt<T: Real>(eta: T, alpha: NoiseLevel<T>) -> T {
    let a = alpha.0;
    a * (T::one() - eta) + (T::one() - a) * eta
}

/// `ℓ_α(y, v) = (1 - α) ℓ(y, v) + α ℓ(-y, v)`. Its conditional risk at `η`
/// equals the clean conditional risk at `η_α`.
#[derive(Clone)]
pub struct NoisyLoss<L> {
    inner: L,
    alpha: f64,
}

pub fn noisy_loss<T: Real, L: Loss<T>>(inner: L, alpha: NoiseLevel<T>) -> NoisyLoss<L> {
    NoisyLoss {
        inner,
        alpha: alpha.0.as_f64(),
    }
}

impl<L> NoisyLoss<L> {
    pub fn inner(&self) -> &L {
        &self.inner
    }
}

impl<T: Real, L: Loss<T>> Loss<T> for NoisyLoss<L> {
    fn partial(&self, y: Label, p: T) -> T {
        let a: T = lit(self.alpha);
        let same = self.inner.partial(y, p);
        let other = self.inner.partial(y.flip(), p);
        if a == T::zero() {
            return same;
        }
        (T::one() - a) * same + a * other
    }
}

/// Grid points whose conditional risk lies within `slack` of the smallest
/// value on the grid.
pub fn minimizer_set<T: Real, L: Loss<T> + ?Sized>(loss: &L, eta: T, grid: &[T], slack: T) -> Vec<T> {
    let risks: Vec<T> = grid.iter().map(|&v| loss.conditional_risk(eta, v)).collect();
    let best = risks
        .iter()
        .copied()
        .filter(|r| !r.is_nan())
        .fold(T::infinity(), |a, b| a.min(b));
    grid.iter()
        .zip(&risks)
        .filter(|(_, &r)| r <= best + slack)
        .map(|(&v, _)| v)
        .collect()
}

/// Whether two sorted minimizer sets share a grid point.
pub fn sets_intersect<T: Real>(a: &[T], b: &[T]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return true;
        }
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    false
}

/// Brute-force α-robustness at `eta`: the minimizer sets at `η` and `η_α`
/// intersect.
pub fn is_robust_at<T: Real, L: Loss<T> + ?Sized>(
    loss: &L,
    eta: T,
    alpha: NoiseLevel<T>,
    grid: &[T],
    slack: T,
) -> bool {
    let clean = minimizer_set(loss, eta, grid, slack);
    let noisy = minimizer_set(loss, corrupt(eta, alpha), grid, slack);
    sets_intersect(&clean, &noisy)
}

/// Half-open interval `[lo, hi)`; empty when `lo >= hi`.
///
/// Probabilities live in `[0, 1]`, so an interval clipped at the top end
/// keeps `1` itself: a piece with `hi == 1` contains `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfOpen<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> HalfOpen<T> {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && (x < self.hi || (x == T::one() && self.hi == T::one() && !self.is_empty()))
    }
}

impl<T: Real> Serialize for HalfOpen<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo.as_f64(), self.hi.as_f64()].serialize(s)
    }
}

/// Non-robust region of the cost loss `ℓ_{c0}` at noise level `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustInterval<T> {
    pub c0: T,
    pub alpha: T,
    pub interval: HalfOpen<T>,
}

impl<T: Real> RobustInterval<T> {
    /// `η` is non-robust iff it lies in the interval.
    pub fn is_robust(&self, eta: T) -> bool {
        !self.interval.contains(eta)
    }
}

#[derive(Serialize)]
struct RobustIntervalJson {
    c0: f64,
    alpha: f64,
    interval: Option<[f64; 2]>,
}

impl<T: Real> Serialize for RobustInterval<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RobustIntervalJson {
            c0: self.c0.as_f64(),
            alpha: self.alpha.as_f64(),
            interval: (!self.interval.is_empty()).then(|| [self.interval.lo.as_f64(), self.interval.hi.as_f64()]),
        }
        .serialize(s)
    }
}

/// `[(c0 - α)/(1 - 2α), c0)` below 1/2 and `[c0, (c0 - α)/(1 - 2α))` from
/// 1/2 upward, clipped to `[0, 1]`.
pub fn cost_robust_interval<T: Real>(c0: T, alpha: NoiseLevel<T>) -> Result<RobustInterval<T>> {
    if !(c0 > T::zero() && c0 < T::one()) {
        return Err(Error::Argument(format!("c0 = {c0} must lie in (0,1)")));
    }
    let a = alpha.0;
    let moved = (c0 - a) / (T::one() - lit::<T>(2.0) * a);
    let interval = if c0 < lit(0.5) {
        HalfOpen {
            lo: moved.max(T::zero()),
            hi: c0,
        }
    } else {
        HalfOpen {
            lo: c0,
            hi: moved.min(T::one()),
        }
    };
    Ok(RobustInterval { c0, alpha: a, interval })
}

/// Union of non-robust intervals of a proper loss, as disjoint sorted
/// half-open pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct NonRobustRegion<T> {
    pub weight: String,
    pub alpha: T,
    pub pieces: Vec<HalfOpen<T>>,
}

impl<T: Real> NonRobustRegion<T> {
    pub fn contains(&self, eta: T) -> bool {
        self.pieces.iter().any(|p| p.contains(eta))
    }
}

#[derive(Serialize)]
struct NonRobustJson {
    weight: String,
    alpha: f64,
    nonrobust_union: Vec<[f64; 2]>,
}

impl<T: Real> Serialize for NonRobustRegion<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NonRobustJson {
            weight: self.weight.clone(),
            alpha: self.alpha.as_f64(),
            nonrobust_union: self.pieces.iter().map(|p| [p.lo.as_f64(), p.hi.as_f64()]).collect(),
        }
        .serialize(s)
    }
}

/// Merge half-open intervals, joining neighbours separated by at most `gap`.
pub fn merge_intervals<T: Real>(mut pieces: Vec<HalfOpen<T>>, gap: T) -> Vec<HalfOpen<T>> {
    pieces.retain(|p| !p.is_empty());
    pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut out: Vec<HalfOpen<T>> = Vec::new();
    for p in pieces {
        match out.last_mut() {
            Some(last) if p.lo <= last.hi + gap => last.hi = last.hi.max(p.hi),
            _ => out.push(p),
        }
    }
    out
}

/// Union of the cost-loss intervals over the support of `w`.
///
/// The support is read off the grid (`w(c) > 0`) plus atom locations.
/// Consecutive positive grid points are taken to bound a piece of
/// continuous support, so the intervals of every `c` between them are
/// included too. Pieces are merged only where they touch: the point 1/2
/// is robust for every loss and is kept out of the union.
pub fn proper_nonrobust_region<T: Real>(
    wf: &WeightFunction<T>,
    alpha: NoiseLevel<T>,
    grid: &[T],
) -> Result<NonRobustRegion<T>> {
    let half: T = lit(0.5);
    // c = 1/2 contributes nothing, so pieces from there start just above it
    let just_above = half + half * T::epsilon();
    let positive: Vec<bool> = grid
        .iter()
        .map(|&c| c > T::zero() && c < T::one() && wf.has_density() && wf.w(c) > T::zero())
        .collect();
    let mut pieces = Vec::new();
    if alpha.0 > T::zero() {
        for (i, &c) in grid.iter().enumerate() {
            if !positive[i] {
                continue;
            }
            pieces.push(cost_robust_interval(c, alpha)?.interval);
            if i + 1 < grid.len() && positive[i + 1] && grid[i + 1] > c {
                let next = grid[i + 1];
                let lo = cost_robust_interval(c, alpha)?.interval.lo;
                let hi = cost_robust_interval(next, alpha)?.interval.hi;
                if next < half {
                    pieces.push(HalfOpen { lo, hi: next });
                } else if c >= half {
                    let lo = if c == half { just_above } else { c };
                    pieces.push(HalfOpen { lo, hi });
                } else {
                    pieces.push(HalfOpen { lo, hi: half });
                    if next > half {
                        pieces.push(HalfOpen { lo: just_above, hi });
                    }
                }
            }
        }
        for a in wf.atoms().iter().filter(|a| a.mass > T::zero()) {
            pieces.push(cost_robust_interval(a.location, alpha)?.interval);
        }
    }
    Ok(NonRobustRegion {
        weight: wf.name().to_string(),
        alpha: alpha.0,
        pieces: merge_intervals(pieces, T::zero()),
    })
}
