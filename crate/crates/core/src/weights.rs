//! Weight functions `w` on (0,1), with optional point masses, and the
//! built-in catalog.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::numerics::{finite_diff, integrate, QuadratureSpec};
use crate::scalar::{interior_grid, lit, real_fn, Real, RealFn};

/// A point mass `mass * delta(c - location)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub location: T,
    pub mass: T,
}

/// Endpoint limits of the antiderivatives `W` and `Wbar`. `W` may be infinite
/// at an endpoint; `Wbar` is finite for every catalog entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointLimits<T> {
    pub big_w_at_0: T,
    pub big_w_at_1: T,
    pub wbar_at_0: T,
    pub wbar_at_1: T,
}

impl<T: Real> EndpointLimits<T> {
    fn scaled(self, k: T) -> Self {
        EndpointLimits {
            big_w_at_0: self.big_w_at_0 * k,
            big_w_at_1: self.big_w_at_1 * k,
            wbar_at_0: self.wbar_at_0 * k,
            wbar_at_1: self.wbar_at_1 * k,
        }
    }
}

#[derive(Clone)]
struct ClosedForms<T> {
    big_w: RealFn<T>,
    wbar: RealFn<T>,
    limits: EndpointLimits<T>,
}

#[derive(Clone)]
enum Source<T> {
    Catalog,
    Function,
    Table(Arc<Vec<(T, T)>>),
    Expression(Expr),
}

/// Weight function of a proper loss: a density on (0,1) plus optional atoms.
#[derive(Clone)]
pub struct WeightFunction<T: Real> {
    name: String,
    density: Option<RealFn<T>>,
    derivative: Option<RealFn<T>>,
    closed: Option<ClosedForms<T>>,
    atoms: Vec<Atom<T>>,
    source: Source<T>,
}

impl<T: Real> fmt::Debug for WeightFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("name", &self.name)
            .field("has_density", &self.density.is_some())
            .field("closed_form", &self.closed.is_some())
            .field("atoms", &self.atoms)
            .finish()
    }
}

impl<T: Real> WeightFunction<T> {
    /// Weight given by an arbitrary density.
    pub fn from_fn<F>(name: &str, w: F) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        WeightFunction {
            name: name.to_string(),
            density: Some(real_fn(w)),
            derivative: None,
            closed: None,
            atoms: Vec::new(),
            source: Source::Function,
        }
    }

    /// Weight interpolated linearly through `(c, w(c))` pairs. Outside the
    /// table the end values are held constant.
    pub fn from_table(points: Vec<(T, T)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument("a weight table needs at least two points".into()));
        }
        for pair in points.windows(2) {
            if !(pair[0].0 < pair[1].0) {
                return Err(Error::Argument(
                    "weight table abscissae must be strictly increasing".into(),
                ));
            }
        }
        for &(c, w) in &points {
            if !c.is_finite() || !w.is_finite() || c < T::zero() || c > T::one() {
                return Err(Error::Argument(format!("bad weight table entry ({c}, {w})")));
            }
            if w < T::zero() {
                return Err(Error::Improper(format!("negative tabulated weight {w} at {c}")));
            }
        }
        let table = Arc::new(points);
        let lookup = table.clone();
        let mut wf = WeightFunction::from_fn("custom-tabulated", move |c| interpolate(&lookup, c));
        wf.source = Source::Table(table);
        Ok(wf)
    }

    /// Weight given by an expression in the variable `c`.
    pub fn from_expr(source: &str) -> Result<Self> {
        let expr = Expr::parse(source, "c")?;
        let eval = expr.clone();
        let mut wf = WeightFunction::from_fn("custom", move |c| eval.eval(c));
        wf.source = Source::Expression(expr);
        Ok(wf)
    }

    /// Pure point mass at `location` (no density).
    pub fn point_mass(name: &str, location: T, mass: T) -> Result<Self> {
        if !(location > T::zero() && location < T::one()) {
            return Err(Error::Argument(format!("atom location {location} must lie in (0,1)")));
        }
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::Argument(format!("atom mass {mass} must be positive")));
        }
        Ok(WeightFunction {
            name: name.to_string(),
            density: None,
            derivative: None,
            closed: None,
            atoms: vec![Atom { location, mass }],
            source: Source::Catalog,
        })
    }

    /// Attaches a closed-form derivative `w'`.
    pub fn with_derivative<F>(mut self, w_prime: F) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        self.derivative = Some(real_fn(w_prime));
        self
    }

    /// Attaches closed-form antiderivatives `W` and `Wbar` with their endpoint limits.
    pub fn with_antiderivatives<F, G>(mut self, big_w: F, wbar: G, limits: EndpointLimits<T>) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        G: Fn(T) -> T + Send + Sync + 'static,
    {
        self.closed = Some(ClosedForms {
            big_w: real_fn(big_w),
            wbar: real_fn(wbar),
            limits,
        });
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Density part of the weight at `c` (zero for pure point masses).
    pub fn w(&self, c: T) -> T {
        match &self.density {
            Some(f) => f(c),
            None => T::zero(),
        }
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    /// The density as a shareable function, if any.
    pub fn density_fn(&self) -> Option<RealFn<T>> {
        self.density.clone()
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    pub fn table(&self) -> Option<&[(T, T)]> {
        match &self.source {
            Source::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn expression(&self) -> Option<&str> {
        match &self.source {
            Source::Expression(e) => Some(e.source()),
            _ => None,
        }
    }

    pub fn is_catalog(&self) -> bool {
        matches!(self.source, Source::Catalog)
    }

    pub fn has_closed_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `w'(c)`: closed form when available, else a central difference.
    pub fn w_prime(&self, c: T) -> Result<T> {
        if let Some(d) = &self.derivative {
            return Ok(d(c));
        }
        let h = interior_step(c);
        finite_diff(|t| self.w(t), c, 1, h)
    }

    /// `w'(c) / w(c)`. Without a closed-form derivative this is the central
    /// difference of `ln w`, which behaves better where `w` is small.
    pub fn log_derivative(&self, c: T) -> Result<T> {
        let wc = self.w(c);
        if !(wc > T::zero()) {
            return Err(Error::NotStrictlyProper { at: c.as_f64() });
        }
        if let Some(d) = &self.derivative {
            return Ok(d(c) / wc);
        }
        let h = interior_step(c);
        finite_diff(|t| self.w(t).ln(), c, 1, h)
    }

    /// Closed-form `W` (antiderivative of `w`), if the weight has one.
    pub fn big_w(&self, c: T) -> Option<T> {
        self.closed.as_ref().map(|cf| (cf.big_w)(c))
    }

    /// Closed-form `Wbar` (antiderivative of `W`), if the weight has one.
    pub fn wbar(&self, c: T) -> Option<T> {
        self.closed.as_ref().map(|cf| (cf.wbar)(c))
    }

    pub fn limits(&self) -> Option<EndpointLimits<T>> {
        self.closed.as_ref().map(|cf| cf.limits)
    }

    pub fn has_closed_forms(&self) -> bool {
        self.closed.is_some()
    }

    pub(crate) fn big_w_fn(&self) -> Option<RealFn<T>> {
        self.closed.as_ref().map(|cf| cf.big_w.clone())
    }

    pub(crate) fn wbar_fn(&self) -> Option<RealFn<T>> {
        self.closed.as_ref().map(|cf| cf.wbar.clone())
    }

    /// Total mass of the atoms located exactly at `c`.
    pub fn atom_mass_at(&self, c: T) -> T {
        self.atoms
            .iter()
            .filter(|a| a.location == c)
            .fold(T::zero(), |acc, a| acc + a.mass)
    }

    /// Multiplies the density, its derivative, the antiderivatives and all
    /// atom masses by `k > 0`.
    pub fn scaled(&self, k: T) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::Argument(format!("weight scale {k} must be positive and finite")));
        }
        let mut out = self.clone();
        out.density = self.density.clone().map(|f| real_fn(move |c| k * f(c)));
        out.derivative = self.derivative.clone().map(|f| real_fn(move |c| k * f(c)));
        out.closed = self.closed.clone().map(|cf| {
            let (bw, wb) = (cf.big_w.clone(), cf.wbar.clone());
            ClosedForms {
                big_w: real_fn(move |c| k * bw(c)),
                wbar: real_fn(move |c| k * wb(c)),
                limits: cf.limits.scaled(k),
            }
        });
        out.atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location,
                mass: a.mass * k,
            })
            .collect();
        if let Source::Table(t) = &self.source {
            out.source = Source::Table(Arc::new(t.iter().map(|&(c, w)| (c, w * k)).collect()));
        } else if matches!(self.source, Source::Expression(_)) {
            out.source = Source::Function;
        }
        Ok(out)
    }

    /// Adds point masses to the weight.
    pub fn with_atoms(mut self, atoms: &[Atom<T>]) -> Result<Self> {
        for a in atoms {
            if !(a.location > T::zero() && a.location < T::one()) || !(a.mass > T::zero()) {
                return Err(Error::Argument(format!("invalid atom {a:?}")));
            }
        }
        self.atoms.extend_from_slice(atoms);
        Ok(self)
    }

    /// `w(c) = w(1 - c)` within `tol` on `grid`, with a mirrored atom set.
    pub fn is_symmetric(&self, grid: &[T], tol: T) -> bool {
        let density_ok = grid.iter().all(|&c| {
            let (a, b) = (self.w(c), self.w(T::one() - c));
            if a.is_infinite() || b.is_infinite() {
                return a == b;
            }
            (a - b).abs() <= tol * (T::one() + a.abs().max(b.abs()))
        });
        let atoms_ok = self.atoms.iter().all(|a| {
            let mirror = T::one() - a.location;
            self.atoms
                .iter()
                .any(|b| (b.location - mirror).abs() <= tol && (b.mass - a.mass).abs() <= tol * (T::one() + a.mass))
        });
        density_ok && atoms_ok
    }

    /// Checks the structural invariants: nonnegative density on an interior
    /// grid, finite mass on `[1e-3, 1 - 1e-3]`, and closed-form `W`, `Wbar`
    /// consistent with `w` by differentiation.
    pub fn validate(&self) -> Result<()> {
        let grid: Vec<T> = interior_grid(99);
        if let Some(density) = &self.density {
            for &c in &grid {
                let v = density(c);
                if v.is_nan() {
                    return Err(Error::NotANumber { at: c.as_f64() });
                }
                if v < T::zero() {
                    return Err(Error::Improper(format!("weight is negative ({v}) at c = {c}")));
                }
            }
            let eps: T = lit(1e-3);
            let mass = integrate(
                |c| density(c),
                eps,
                T::one() - eps,
                &QuadratureSpec::with_tolerance(lit(1e-8), lit(1e-8)),
            )?;
            if !mass.is_finite() {
                return Err(Error::Improper("weight is not locally integrable".into()));
            }
        }
        if let (Some(cf), Some(density)) = (&self.closed, &self.density) {
            let tol: T = lit(1e-6);
            for i in 1..=19 {
                let c: T = lit(0.05 * i as f64);
                let h: T = lit(1e-6);
                let dw = finite_diff(|t| (cf.big_w)(t), c, 1, h)?;
                let dwbar = finite_diff(|t| (cf.wbar)(t), c, 1, h)?;
                let (wc, bwc) = (density(c), (cf.big_w)(c));
                if (dw - wc).abs() > tol * (T::one() + wc.abs()) {
                    return Err(Error::Argument(format!("W' does not match w at {c}: {dw} vs {wc}")));
                }
                if (dwbar - bwc).abs() > tol * (T::one() + bwc.abs()) {
                    return Err(Error::Argument(format!(
                        "Wbar' does not match W at {c}: {dwbar} vs {bwc}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Step for differences at interior points: the numerics default, shrunk so
/// the five-point stencil stays inside (0,1).
pub(crate) fn interior_step<T: Real>(c: T) -> T {
    let base: T = lit(1e-5);
    let room = c.min(T::one() - c) / lit(4.0);
    if room > T::zero() {
        base.min(room)
    } else {
        base
    }
}

fn interpolate<T: Real>(table: &[(T, T)], c: T) -> T {
    if c <= table[0].0 {
        return table[0].1;
    }
    let last = table[table.len() - 1];
    if c >= last.0 {
        return last.1;
    }
    let idx = table.partition_point(|p| p.0 <= c);
    let (c0, w0) = table[idx - 1];
    let (c1, w1) = table[idx];
    w0 + (w1 - w0) * (c - c0) / (c1 - c0)
}

/// Names accepted by [`catalog_weight`].
pub const CATALOG_WEIGHTS: &[&str] = &[
    "zero-one",
    "cost",
    "square",
    "log",
    "boosting",
    "w1-over-c",
    "w1-over-1mc",
    "minimal",
];

/// One-line formula for each catalog weight, for listings.
pub fn weight_formula(name: &str) -> Option<&'static str> {
    Some(match name {
        "zero-one" => "w(c) = 2 delta(c - 1/2)",
        "cost" => "w(c) = delta(c - c0)",
        "square" => "w(c) = 1",
        "log" => "w(c) = 1/(c(1-c))",
        "boosting" => "w(c) = 1/(c(1-c))^(3/2)",
        "w1-over-c" => "w(c) = 1/c",
        "w1-over-1mc" => "w(c) = 1/(1-c)",
        "minimal" => "w(c) = min(1/c, 1/(1-c)) / 2",
        _ => return None,
    })
}

/// Looks up a built-in weight. `cost` takes the parameter `c0`.
///
/// Closed-form `W` and `Wbar` follow the convention `W(1/2) = 0` except for
/// `square`, which uses `W(c) = c`, `Wbar(c) = c^2/2`.
pub fn catalog_weight<T: Real>(name: &str, params: &BTreeMap<String, f64>) -> Result<WeightFunction<T>> {
    let half: T = lit(0.5);
    let ln2: T = T::LN_2();
    let one = T::one();
    let two: T = lit(2.0);
    let wf = match name {
        "zero-one" => WeightFunction::point_mass("zero-one", half, two)?,
        "cost" => {
            let c0 = *params
                .get("c0")
                .ok_or_else(|| Error::Argument("cost weight requires parameter c0".into()))?;
            if !(c0 > 0.0 && c0 < 1.0) {
                return Err(Error::Argument(format!("cost parameter c0 = {c0} must lie in (0,1)")));
            }
            WeightFunction::point_mass(&format!("cost({c0})"), lit(c0), one)?
        }
        "square" => WeightFunction::from_fn("square", |_c: T| T::one())
            .with_derivative(|_c: T| T::zero())
            .with_antiderivatives(
                |c: T| c,
                |c: T| c * c / lit(2.0),
                EndpointLimits {
                    big_w_at_0: T::zero(),
                    big_w_at_1: one,
                    wbar_at_0: T::zero(),
                    wbar_at_1: half,
                },
            ),
        "log" => WeightFunction::from_fn("log", |c: T| T::one() / (c * (T::one() - c)))
            .with_derivative(|c: T| {
                let s = c * (T::one() - c);
                -(T::one() - lit::<T>(2.0) * c) / (s * s)
            })
            .with_antiderivatives(
                |c: T| (c / (T::one() - c)).ln(),
                |c: T| xlogx(c) + xlogx(T::one() - c) + T::LN_2(),
                EndpointLimits {
                    big_w_at_0: T::neg_infinity(),
                    big_w_at_1: T::infinity(),
                    wbar_at_0: ln2,
                    wbar_at_1: ln2,
                },
            ),
        "boosting" => WeightFunction::from_fn("boosting", |c: T| (c * (T::one() - c)).powf(lit(-1.5)))
            .with_derivative(|c: T| {
                let s = c * (T::one() - c);
                lit::<T>(-1.5) * (T::one() - lit::<T>(2.0) * c) * s.powf(lit(-2.5))
            })
            .with_antiderivatives(
                |c: T| lit::<T>(2.0) * (lit::<T>(2.0) * c - T::one()) / (c * (T::one() - c)).sqrt(),
                |c: T| lit::<T>(2.0) - lit::<T>(4.0) * (c * (T::one() - c)).sqrt(),
                EndpointLimits {
                    big_w_at_0: T::neg_infinity(),
                    big_w_at_1: T::infinity(),
                    wbar_at_0: two,
                    wbar_at_1: two,
                },
            ),
        "w1-over-c" => WeightFunction::from_fn("w1-over-c", |c: T| T::one() / c)
            .with_derivative(|c: T| -T::one() / (c * c))
            .with_antiderivatives(
                |c: T| (lit::<T>(2.0) * c).ln(),
                |c: T| xlogx_scaled(c) - c + lit(0.5),
                EndpointLimits {
                    big_w_at_0: T::neg_infinity(),
                    big_w_at_1: ln2,
                    wbar_at_0: half,
                    wbar_at_1: ln2 - half,
                },
            ),
        "w1-over-1mc" => WeightFunction::from_fn("w1-over-1mc", |c: T| T::one() / (T::one() - c))
            .with_derivative(|c: T| {
                let d = T::one() - c;
                T::one() / (d * d)
            })
            .with_antiderivatives(
                |c: T| -(lit::<T>(2.0) * (T::one() - c)).ln(),
                |c: T| xlogx_scaled(T::one() - c) + c - lit(0.5),
                EndpointLimits {
                    big_w_at_0: -ln2,
                    big_w_at_1: T::infinity(),
                    wbar_at_0: ln2 - half,
                    wbar_at_1: half,
                },
            ),
        "minimal" => minimal_weight(),
        other => {
            return Err(Error::UnknownName {
                kind: "weight",
                name: other.to_string(),
            })
        }
    };
    Ok(wf)
}

/// `w(c) = min(1/c, 1/(1-c)) / 2`, the smallest weight normalized at 1/2
/// whose loss is convex under the identity link.
pub fn minimal_weight<T: Real>() -> WeightFunction<T> {
    let half: T = lit(0.5);
    let edge = half * (T::LN_2() - half);
    WeightFunction::from_fn("minimal", |c: T| {
        let half: T = lit(0.5);
        if c < half {
            half / (T::one() - c)
        } else {
            half / c
        }
    })
    .with_derivative(|c: T| {
        let half: T = lit(0.5);
        if c < half {
            let d = T::one() - c;
            half / (d * d)
        } else {
            -half / (c * c)
        }
    })
    .with_antiderivatives(
        |c: T| {
            let half: T = lit(0.5);
            if c < half {
                -half * (lit::<T>(2.0) * (T::one() - c)).ln()
            } else {
                half * (lit::<T>(2.0) * c).ln()
            }
        },
        |c: T| {
            let half: T = lit(0.5);
            if c < half {
                half * (xlogx_scaled(T::one() - c) + c - half)
            } else {
                half * (xlogx_scaled(c) - c + half)
            }
        },
        EndpointLimits {
            big_w_at_0: -half * T::LN_2(),
            big_w_at_1: half * T::LN_2(),
            wbar_at_0: edge,
            wbar_at_1: edge,
        },
    )
}

/// Parses the compact names used on the command line: `cost(0.3)`,
/// `cost:0.3` or a plain catalog name.
pub fn parse_weight_name<T: Real>(spec: &str) -> Result<WeightFunction<T>> {
    let spec = spec.trim();
    let (name, arg) = if let Some(inner) = spec.strip_suffix(')') {
        match inner.split_once('(') {
            Some((n, a)) => (n, Some(a)),
            None => return Err(Error::Parse(format!("bad weight name {spec:?}"))),
        }
    } else if let Some((n, a)) = spec.split_once(':') {
        (n, Some(a))
    } else {
        (spec, None)
    };
    let mut params = BTreeMap::new();
    if let Some(a) = arg {
        let value: f64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad weight parameter {a:?}")))?;
        params.insert("c0".to_string(), value);
    }
    catalog_weight(name.trim(), &params)
}

/// Scales `wf` so that `w(1/2) = 1`.
pub fn normalize_weight<T: Real>(wf: &WeightFunction<T>) -> Result<WeightFunction<T>> {
    let half: T = lit(0.5);
    if wf.atoms().iter().any(|a| a.location == half) {
        return Err(Error::AtomsUnsupported(
            "cannot normalize a weight with an atom at 1/2".into(),
        ));
    }
    let at_half = wf.w(half);
    if !(at_half > T::zero()) || !at_half.is_finite() {
        return Err(Error::Domain(format!(
            "w(1/2) = {at_half}; normalization needs 0 < w(1/2) < inf"
        )));
    }
    Ok(wf.scaled(T::one() / at_half)?.with_name(wf.name()))
}

// c ln c with the limit 0 at c = 0
fn xlogx<T: Real>(c: T) -> T {
    if c == T::zero() {
        T::zero()
    } else {
        c * c.ln()
    }
}

// c ln(2c) with the limit 0 at c = 0
fn xlogx_scaled<T: Real>(c: T) -> T {
    if c == T::zero() {
        T::zero()
    } else {
        c * (lit::<T>(2.0) * c).ln()
    }
}
