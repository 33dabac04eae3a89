use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Tolerance contract for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Maximum number of bisections applied to any single subinterval.
    pub max_depth: usize,
    /// Offset applied at an endpoint where the integrand is not finite.
    pub endpoint_shrink: T,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        let floor = T::epsilon() * lit(1e3);
        QuadratureSpec {
            abs_tol: lit::<T>(1e-10).max(floor),
            rel_tol: lit::<T>(1e-10).max(floor),
            max_depth: 60,
            endpoint_shrink: lit::<T>(1e-12).max(T::epsilon() * lit(8.0)),
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn with_tolerance(abs_tol: T, rel_tol: T) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > T::zero()) || !(self.rel_tol > T::zero()) {
            return Err(Error::Argument("quadrature tolerances must be positive".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::Argument("max_depth must be at least 1".into()));
        }
        if !(self.endpoint_shrink > T::zero()) || self.endpoint_shrink > lit(1e-6) {
            return Err(Error::Argument("endpoint_shrink must lie in (0, 1e-6]".into()));
        }
        Ok(())
    }
}

// 21-point Gauss-Kronrod abscissae and weights (QUADPACK qk21). Odd entries of
// XGK are the 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const MAX_SUBDIVISIONS: usize = 4000;

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    depth: usize,
}

fn eval_checked<T: Real, F: Fn(T) -> T>(f: &F, x: T) -> Result<T> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NotANumber { at: x.as_f64() })
    }
}

/// One Gauss-Kronrod 21 panel; returns (kronrod estimate, error estimate).
fn gk21<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Result<(T, T)> {
    let half = lit::<T>(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let f_center = eval_checked(f, center)?;

    let mut res_k = f_center * lit(WGK[10]);
    let mut res_g = T::zero();
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half_len * lit(XGK[j]);
        let f1 = eval_checked(f, center - dx)?;
        let f2 = eval_checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        let wk: T = lit(WGK[j]);
        res_k = res_k + wk * (f1 + f2);
        res_abs = res_abs + wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + lit::<T>(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = lit::<T>(WGK[10]) * (f_center - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + lit::<T>(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half_len.abs();
    let value = res_k * half_len;
    res_abs = res_abs * scale;
    res_asc = res_asc * scale;

    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && err != T::zero() {
        let ratio = (lit::<T>(200.0) * err / res_asc).powf(lit(1.5));
        err = if ratio < T::one() { res_asc * ratio } else { res_asc };
    }
    let min_err = lit::<T>(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (lit::<T>(50.0) * T::epsilon()) && min_err > err {
        err = min_err;
    }
    Ok((value, err))
}

/// Integral over a vanishing neighbourhood `[end, end + delta]` (or its mirror)
/// of an integrand that is not finite at `end`, from a local power-law fit
/// `f ~ C t^p` with `t` the distance to the endpoint.
fn endpoint_tail<T: Real, F: Fn(T) -> T>(f: &F, end: T, delta: T, inward: T) -> Result<T> {
    let f1 = f(end + inward * delta);
    let f2 = f(end + inward * delta * lit(2.0));
    if !f1.is_finite() || !f2.is_finite() {
        return Err(Error::Divergent { partial: f64::NAN });
    }
    if f1 == T::zero() || f2 == T::zero() || f1.signum() != f2.signum() {
        return Ok(f1 * delta);
    }
    let p = -(f1 / f2).log2();
    if p <= lit(-0.999) {
        return Err(Error::Divergent { partial: f64::NAN });
    }
    Ok(f1 * delta / (p + T::one()))
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// Integrable singularities are permitted at `a` and `b`: when the integrand
/// is not finite at an endpoint the interval is shrunk by
/// `spec.endpoint_shrink` and the removed sliver is added back from a local
/// power-law fit. `a > b` is accepted and returns `-∫_b^a f`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    spec.validate()?;
    if a.is_nan() || b.is_nan() {
        return Err(Error::Argument("NaN integration limit".into()));
    }
    if a == b {
        return Ok(T::zero());
    }
    if a > b {
        return integrate(f, b, a, spec).map(|v| -v);
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Argument("integration limits must be finite".into()));
    }

    let width = b - a;
    let shrink = |end: T| {
        let scale = end.abs().max(T::one());
        (spec.endpoint_shrink * scale)
            .max(T::epsilon() * scale * lit(8.0))
            .min(width / lit(8.0))
    };
    let (mut lo, mut hi) = (a, b);
    let mut tail = T::zero();
    let mut divergent = false;
    if !f(a).is_finite() {
        let delta = shrink(a);
        match endpoint_tail(&f, a, delta, T::one()) {
            Ok(t) => tail = tail + t,
            Err(_) => divergent = true,
        }
        lo = a + delta;
    }
    if !f(b).is_finite() {
        let delta = shrink(b);
        match endpoint_tail(&f, b, delta, -T::one()) {
            Ok(t) => tail = tail + t,
            Err(_) => divergent = true,
        }
        hi = b - delta;
    }

    let body = adaptive(&f, lo, hi, spec);
    if divergent {
        let partial = body.map(|v| v.as_f64()).unwrap_or(f64::NAN);
        return Err(Error::Divergent { partial });
    }
    Ok(body? + tail)
}

fn adaptive<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    let (value, error) = gk21(f, a, b)?;
    let mut segments = vec![Segment {
        a,
        b,
        value,
        error,
        depth: 0,
    }];
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 0usize;

    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            return Ok(total);
        }
        // largest-error segment that can still be bisected
        let candidate = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let scale = s.a.abs().max(s.b.abs()).max(T::min_positive_value());
                s.depth < spec.max_depth && (s.b - s.a) > T::epsilon() * scale * lit(16.0)
            })
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i);
        let idx = match candidate {
            Some(i) if subdivisions < MAX_SUBDIVISIONS => i,
            _ => {
                return Err(Error::NonConvergence {
                    estimate: total.as_f64(),
                    error_estimate: total_err.as_f64(),
                })
            }
        };
        subdivisions += 1;
        let seg = segments.swap_remove(idx);
        let mid = lit::<T>(0.5) * (seg.a + seg.b);
        let (v1, e1) = gk21(f, seg.a, mid)?;
        let (v2, e2) = gk21(f, mid, seg.b)?;
        total = total - seg.value + v1 + v2;
        total_err = total_err - seg.error + e1 + e2;
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
            depth: seg.depth + 1,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
            depth: seg.depth + 1,
        });
        if subdivisions.is_multiple_of(64) {
            // refresh the running sums against accumulated cancellation
            total = segments.iter().fold(T::zero(), |acc, s| acc + s.value);
            total_err = segments.iter().fold(T::zero(), |acc, s| acc + s.error);
        }
    }
}

/// [`integrate`] with default tolerances.
pub fn integrate_default<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> Result<T> {
    integrate(f, a, b, &QuadratureSpec::default())
}
