use std::fmt;
use std::process::ExitCode;
use std::result::Result;

use cploss::analysis::{
    calibration_cc, certification_grid, check_proper_table, check_proper_with_tol, convexity_characterization_with_tol,
    convexity_oracle_with_tol, CHARACTERIZATION_TOL, ORACLE_TOL, PROPER_TOL, TABLE_PROPER_TOL,
};
use cploss::composite::{margin_formula, margin_to_link, CATALOG_MARGINS};
use cploss::experiments::{regret_bound_invert, regret_curve, surrogate_experiment};
use cploss::links::{link_formula, CATALOG_LINKS};
use cploss::weights::{weight_formula, CATALOG_WEIGHTS};
use cploss::*;
use serde_json::{json, Value};

use crate::input::{self, Partials};
use crate::output::{print_json, report, write_csv};
use crate::{Cli, Command, Format, Global, SideArg};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        let numeric = match self {
            CliError::Usage(_) => false,
            CliError::Numeric(_) => true,
            CliError::Core(e) => matches!(
                e,
                Error::NonConvergence { .. }
                    | Error::Divergent { .. }
                    | Error::NotANumber { .. }
                    | Error::FlatSpot { .. }
                    | Error::Improper(_)
                    | Error::NotStrictlyProper { .. }
            ),
        };
        ExitCode::from(if numeric { 3 } else { 2 })
    }
}

/// Outcome of a successful run.
pub enum Status {
    Ok,
    /// A certificate came out negative and `--strict` was given.
    Negative,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::Negative => ExitCode::from(1),
        }
    }
}

fn verdict(strict: bool, positive: bool) -> Status {
    if strict && !positive {
        Status::Negative
    } else {
        Status::Ok
    }
}

fn unit(name: &str, x: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("--{name} {x} must lie in [0,1]")))
    }
}

fn emit(command: &str, payload: Value) -> Result<Status, CliError> {
    print_json(&report(command, payload)?)?;
    Ok(Status::Ok)
}

/// Curve output: CSV to `out` plus a JSON summary, or the whole table on
/// stdout in the selected format.
fn emit_curve(
    command: &str,
    g: &Global,
    out: Option<&str>,
    header: &[&str],
    rows: Vec<Vec<f64>>,
    mut summary: Value,
) -> Result<Status, CliError> {
    summary["columns"] = json!(header);
    summary["row_count"] = json!(rows.len());
    match (out, g.format) {
        (Some(path), _) => {
            write_csv(Some(path), header, &rows)?;
            summary["out"] = json!(path);
            emit(command, summary)
        }
        (None, Format::Csv) => {
            write_csv(None, header, &rows)?;
            Ok(Status::Ok)
        }
        (None, Format::Json) => {
            summary["rows"] = json!(rows);
            emit(command, summary)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Status, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Catalog => catalog(),
        Command::Eval {
            loss,
            y,
            etahat,
            link,
            v,
        } => eval(loss, y, *etahat, link.as_deref(), *v),
        Command::Risk {
            loss,
            eta,
            etahat,
            bayes,
            regret,
        } => risk(loss, *eta, *etahat, *bayes, *regret),
        Command::CheckProper { partials, strict } => check_proper(g, partials, *strict),
        Command::CheckConvexity { loss, oracle, strict } => check_convexity(g, loss, *oracle, *strict),
        Command::Region { link, out } => region(g, link, out.as_deref()),
        Command::CheckCalibration { loss, c, strict } => check_calibration(loss, *c, *strict),
        Command::ReconstructSymmetric {
            half,
            side,
            at_half,
            out,
        } => reconstruct(g, half, *side, *at_half, out.as_deref()),
        Command::MarginLink { phi, vmax, out } => margin_link(g, phi, *vmax, out.as_deref()),
        Command::Robustness { c0, weight, alpha } => robustness(g, *c0, weight.as_deref(), *alpha),
        Command::SurrogateExperiment => surrogate(),
        Command::RegretBound {
            x,
            curve: _,
            xmax,
            points,
            out,
        } => regret(g, *x, *xmax, *points, out.as_deref()),
    }
}

fn catalog() -> Result<Status, CliError> {
    let list = |names: &[&str], formula: fn(&str) -> Option<&'static str>| -> Vec<Value> {
        names
            .iter()
            .map(|n| json!({"name": n, "formula": formula(n).unwrap_or("")}))
            .collect()
    };
    let mut links = list(CATALOG_LINKS, link_formula);
    links.extend(list(&["canonical"], link_formula));
    emit(
        "catalog",
        json!({
            "weights": list(CATALOG_WEIGHTS, weight_formula),
            "links": links,
            "margins": list(CATALOG_MARGINS, margin_formula),
        }),
    )
}

fn eval(loss: &str, y: &str, etahat: Option<f64>, link: Option<&str>, v: Option<f64>) -> Result<Status, CliError> {
    let spec = input::loss_spec(loss)?;
    let label: Label = y.parse()?;
    if let Some(v) = v {
        let cl = match link {
            Some(name) => {
                let wf = spec.weight_function::<f64>()?;
                make_composite(&from_weight(&wf)?, &resolve_link(name, Some(&wf))?)?
            }
            None => spec.composite::<f64>()?,
        };
        let value = cl.eval(label, v)?;
        return emit(
            "eval",
            json!({"loss": cl.name(), "link": cl.link().name(), "y": label.sign(), "v": v, "value": value}),
        );
    }
    let etahat = unit("etahat", etahat.expect("clap requires etahat or v"))?;
    let proper = spec.proper_loss::<f64>()?;
    emit(
        "eval",
        json!({"loss": proper.name(), "y": label.sign(), "etahat": etahat, "value": proper.ell(label, etahat)}),
    )
}

fn risk(loss: &str, eta: f64, etahat: Option<f64>, bayes: bool, regret: bool) -> Result<Status, CliError> {
    let proper = input::loss_spec(loss)?.proper_loss::<f64>()?;
    let eta = unit("eta", eta)?;
    let etahat = etahat.map(|e| unit("etahat", e)).transpose()?;
    if etahat.is_none() && !bayes {
        return Err(CliError::Usage("give --etahat, --bayes, or both".into()));
    }
    let mut body = json!({"loss": proper.name(), "eta": eta});
    if let Some(e) = etahat {
        body["etahat"] = json!(e);
        body["conditional_risk"] = json!(proper.conditional_risk(eta, e)?);
        if regret {
            body["regret"] = json!(proper.regret(eta, e)?);
        }
    } else if regret {
        return Err(CliError::Usage("--regret needs --etahat".into()));
    }
    if bayes {
        body["bayes_risk"] = json!(proper.bayes_risk(eta)?);
    }
    emit("risk", body)
}

fn check_proper(g: &Global, path: &str, strict: bool) -> Result<Status, CliError> {
    let (result, tol, source) = match input::partials(path)? {
        Partials::Table(rows) => {
            let tol = g.tol.unwrap_or(TABLE_PROPER_TOL);
            (check_proper_table(&rows, tol)?, tol, "table")
        }
        Partials::Functions(pos, neg) => {
            let tol = g.tol.unwrap_or(PROPER_TOL);
            let grid: Vec<f64> = interior_grid(g.grid);
            (check_proper_with_tol(&*pos, &*neg, &grid, tol)?, tol, "expressions")
        }
    };
    let weight: Vec<[f64; 2]> = result
        .weight_estimate
        .table()
        .unwrap_or_default()
        .iter()
        .map(|&(c, w)| [c, w])
        .collect();
    emit(
        "check-proper",
        json!({
            "source": source,
            "proper": result.proper,
            "max_residual": result.max_residual,
            "tolerance": tol,
            "weight_estimate": weight,
        }),
    )?;
    Ok(verdict(strict, result.proper))
}

fn check_convexity(g: &Global, loss: &str, oracle: bool, strict: bool) -> Result<Status, CliError> {
    let cl = input::loss_spec(loss)?.composite::<f64>()?;
    let grid = certification_grid::<f64>(g.grid);
    let report = if oracle {
        let scores: Vec<f64> = grid
            .iter()
            .map(|&x| cl.link().psi(x))
            .filter(|v| v.is_finite())
            .collect();
        convexity_oracle_with_tol(&cl, &scores, g.tol.unwrap_or(ORACLE_TOL))
    } else {
        convexity_characterization_with_tol(
            cl.base().weight(),
            cl.link(),
            &grid,
            g.tol.unwrap_or(CHARACTERIZATION_TOL),
        )?
    };
    let mut body = serde_json::to_value(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    body["loss"] = json!(cl.name());
    emit("check-convexity", body)?;
    Ok(verdict(strict, report.convex))
}

fn region(g: &Global, link: &str, out: Option<&str>) -> Result<Status, CliError> {
    let l = resolve_link::<f64>(link, None)?;
    let grid: Vec<f64> = interior_grid(g.grid);
    let r = allowable_region(&l, &grid)?;
    let rows = (0..grid.len()).map(|i| vec![r.xs[i], r.lower[i], r.upper[i]]).collect();
    emit_curve(
        "region",
        g,
        out,
        &["x", "lower", "upper"],
        rows,
        json!({"link": l.name()}),
    )
}

fn check_calibration(loss: &str, c: f64, strict: bool) -> Result<Status, CliError> {
    let proper = input::loss_spec(loss)?.proper_loss::<f64>()?;
    let v = calibration_cc(&proper, c)?;
    emit(
        "check-calibration",
        json!({"loss": proper.name(), "c": c, "verdict": v}),
    )?;
    Ok(verdict(strict, v.is_calibrated()))
}

fn reconstruct(
    g: &Global,
    half: &str,
    side: SideArg,
    at_half: Option<f64>,
    out: Option<&str>,
) -> Result<Status, CliError> {
    let f = input::half_loss(half)?;
    let at = at_half.unwrap_or_else(|| f(0.5));
    if !at.is_finite() {
        return Err(CliError::Usage("value at 1/2 is not finite; pass --at-half".into()));
    }
    let side = match side {
        SideArg::Lower => HalfSide::Lower,
        SideArg::Upper => HalfSide::Upper,
    };
    let loss = reconstruct_symmetric(f, side, at)?;
    let rows: Vec<Vec<f64>> = linspace(0.0, 1.0, g.grid + 2)
        .into_iter()
        .map(|e| vec![e, loss.ell_neg(e), loss.ell_pos(e)])
        .collect();
    let side_name = match side {
        HalfSide::Lower => "lower",
        HalfSide::Upper => "upper",
    };
    emit_curve(
        "reconstruct-symmetric",
        g,
        out,
        &["etahat", "ell_neg", "ell_pos"],
        rows,
        json!({"side": side_name, "ell_neg_at_half": at, "proper": true}),
    )
}

fn margin_link(g: &Global, phi: &str, vmax: f64, out: Option<&str>) -> Result<Status, CliError> {
    if !(vmax > 0.0) || !vmax.is_finite() {
        return Err(CliError::Usage("--vmax must be positive".into()));
    }
    let m = catalog_margin::<f64>(phi)?;
    let link = margin_to_link(&m)?;
    let rows = linspace(-vmax, vmax, g.grid)
        .into_iter()
        .map(|v| vec![v, link.q(v)])
        .collect();
    emit_curve("margin-link", g, out, &["v", "q"], rows, json!({"margin": m.name()}))
}

fn robustness(g: &Global, c0: Option<f64>, weight: Option<&str>, alpha: f64) -> Result<Status, CliError> {
    let a = NoiseLevel::new(alpha)?;
    match (c0, weight) {
        (Some(c0), _) => emit(
            "robustness",
            serde_json::to_value(cost_robust_interval(c0, a)?).unwrap_or_default(),
        ),
        (None, Some(w)) => {
            let wf = input::loss_spec(w)?.weight_function::<f64>()?;
            let grid: Vec<f64> = interior_grid(g.grid);
            let region = proper_nonrobust_region(&wf, a, &grid)?;
            emit("robustness", serde_json::to_value(region).unwrap_or_default())
        }
        (None, None) => Err(CliError::Usage("give --c0 or --weight".into())),
    }
}

fn surrogate() -> Result<Status, CliError> {
    let r = surrogate_experiment()?;
    let mut body = serde_json::to_value(&r).map_err(|e| CliError::Numeric(e.to_string()))?;
    if let Some(cells) = body["cells"].as_array_mut() {
        for cell in cells {
            let a = cell["alpha_star"].as_f64().unwrap_or(f64::NAN);
            cell["alpha_star_8dp"] = json!(format!("{a:.8}"));
            let a = cell["alpha_reference"].as_f64().unwrap_or(f64::NAN);
            cell["alpha_reference_8dp"] = json!(format!("{a:.8}"));
        }
    }
    body["incommensurable"] = json!(r.incommensurable());
    emit("surrogate-experiment", body)
}

fn regret(g: &Global, x: Option<f64>, xmax: f64, points: usize, out: Option<&str>) -> Result<Status, CliError> {
    if let Some(x) = x {
        return emit("regret-bound", json!({"x": x, "bound": regret_bound_invert(x)?}));
    }
    let rows = regret_curve(xmax, points)?
        .into_iter()
        .map(|(x, b)| vec![x, b])
        .collect();
    emit_curve("regret-bound", g, out, &["x", "bound"], rows, json!({"xmax": xmax}))
}
