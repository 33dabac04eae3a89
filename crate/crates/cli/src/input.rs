//! Reading loss specs, partial-loss files and half-loss files.

use std::fs;
use std::path::Path;

use cploss::expr::Expr;
use cploss::{real_fn, LossSpec, RealFn};
use serde::Deserialize;

use crate::commands::CliError;

/// Inline JSON, a path to a JSON file, or a bare catalog weight name such as
/// `log` or `cost(0.3)`.
pub fn loss_spec(arg: &str) -> Result<LossSpec, CliError> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') {
        return Ok(LossSpec::parse(trimmed)?);
    }
    if Path::new(trimmed).is_file() {
        let text = read(trimmed)?;
        return Ok(LossSpec::parse(&text)?);
    }
    Ok(LossSpec::named(trimmed, None))
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))
}

fn is_json(path: &str, text: &str) -> bool {
    path.ends_with(".json") || text.trim_start().starts_with('{')
}

/// Variable name of expressions in partial-loss and half-loss files.
pub const EXPR_VAR: &str = "p";

pub enum Partials {
    Table(Vec<(f64, f64, f64)>),
    Functions(RealFn<f64>, RealFn<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialsDoc {
    ell_pos: String,
    ell_neg: String,
}

#[derive(Deserialize)]
struct PartialRow {
    etahat: f64,
    ell_pos: f64,
    ell_neg: f64,
}

/// CSV with columns `etahat,ell_pos,ell_neg`, or JSON
/// `{"ell_pos": "-log(p)", "ell_neg": "-log(1-p)"}`.
pub fn partials(path: &str) -> Result<Partials, CliError> {
    let text = read(path)?;
    if is_json(path, &text) {
        let doc: PartialsDoc = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
        return Ok(Partials::Functions(expr_fn(&doc.ell_pos)?, expr_fn(&doc.ell_neg)?));
    }
    let mut rows: Vec<(f64, f64, f64)> = csv_rows::<PartialRow>(path, &text)?
        .into_iter()
        .map(|r| (r.etahat, r.ell_pos, r.ell_neg))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Partials::Table(rows))
}

fn expr_fn(src: &str) -> Result<RealFn<f64>, CliError> {
    let e = Expr::parse(src, EXPR_VAR)?;
    Ok(real_fn(move |x: f64| e.eval(x)))
}

fn csv_rows<R: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<Vec<R>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::Usage(format!("{path}: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HalfDoc {
    ell_neg: String,
}

#[derive(Deserialize)]
struct HalfRow {
    etahat: f64,
    ell_neg: f64,
}

/// A half partial loss: JSON `{"ell_neg": "1/(1-p)"}` or CSV
/// `etahat,ell_neg` (interpolated by a cubic Hermite spline).
pub fn half_loss(path: &str) -> Result<RealFn<f64>, CliError> {
    let text = read(path)?;
    if is_json(path, &text) {
        let doc: HalfDoc = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
        return expr_fn(&doc.ell_neg);
    }
    let mut pts: Vec<(f64, f64)> = csv_rows::<HalfRow>(path, &text)?
        .into_iter()
        .map(|r| (r.etahat, r.ell_neg))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spline = Hermite::new(pts)?;
    Ok(real_fn(move |x: f64| spline.eval(x)))
}

/// Piecewise cubic Hermite interpolant with three-point slopes.
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Hermite {
    pub fn new(pts: Vec<(f64, f64)>) -> Result<Self, CliError> {
        let n = pts.len();
        if n < 3 {
            return Err(CliError::Usage(
                "a tabulated half loss needs at least three rows".into(),
            ));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if xs.windows(2).any(|w| !(w[1] > w[0])) || ys.iter().any(|y| !y.is_finite()) {
            return Err(CliError::Usage(
                "half-loss rows need distinct etahat and finite values".into(),
            ));
        }
        let three_point = |a: usize, b: usize, c: usize, at: usize| {
            // derivative at xs[at] of the parabola through rows a, b, c
            let (x0, x1, x2) = (xs[a], xs[b], xs[c]);
            let (y0, y1, y2) = (ys[a], ys[b], ys[c]);
            let x = xs[at];
            y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
        };
        let mut slopes = Vec::with_capacity(n);
        slopes.push(three_point(0, 1, 2, 0));
        for i in 1..n - 1 {
            slopes.push(three_point(i - 1, i, i + 1, i));
        }
        slopes.push(three_point(n - 3, n - 2, n - 1, n - 1));
        Ok(Hermite { xs, ys, slopes })
    }

    /// NaN outside the tabulated range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return f64::NAN;
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }
}
