//! `cploss`: command-line front end for the composite-loss library.
//!
//! Exit codes: 0 success, 1 negative certification under `--strict`,
//! 2 usage or input error, 3 numeric failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "cploss",
    version,
    about = "Construct, evaluate and certify composite binary losses"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Number of interior grid points used by certification sweeps.
    #[arg(long, global = true, default_value_t = 999, value_parser = parse_grid)]
    pub grid: usize,
    /// Override the relative tolerance of the selected check.
    #[arg(long, global = true, value_parser = parse_positive)]
    pub tol: Option<f64>,
    /// Output format for curve data written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List catalog weights, links and margin losses with their formulas.
    Catalog,
    /// Evaluate a partial loss at a probability estimate, or a composite
    /// loss at a score.
    Eval {
        #[arg(long)]
        loss: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, conflicts_with = "v", required_unless_present = "v")]
        etahat: Option<f64>,
        /// Link overriding the one in the loss spec.
        #[arg(long, requires = "v")]
        link: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<f64>,
    },
    /// Conditional risk, Bayes risk or regret.
    Risk {
        #[arg(long)]
        loss: String,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        etahat: Option<f64>,
        #[arg(long)]
        bayes: bool,
        #[arg(long)]
        regret: bool,
    },
    /// Shuford properness test on tabulated (CSV) or expression (JSON) partials.
    CheckProper {
        #[arg(long)]
        partials: String,
        #[arg(long)]
        strict: bool,
    },
    /// Convexity certificate of a composite loss.
    CheckConvexity {
        #[arg(long)]
        loss: String,
        /// Use the second-difference oracle instead of the weight/link test.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        strict: bool,
    },
    /// Allowable weight region of a link as CSV `x,lower,upper`.
    Region {
        #[arg(long)]
        link: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Classification calibration at threshold c.
    CheckCalibration {
        #[arg(long)]
        loss: String,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        strict: bool,
    },
    /// Rebuild a symmetric proper loss from half of its negative partial.
    ReconstructSymmetric {
        #[arg(long)]
        half: String,
        #[arg(long, value_enum)]
        side: SideArg,
        /// Value of the partial at 1/2 (defaults to the supplied half at 1/2).
        #[arg(long)]
        at_half: Option<f64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Link implied by a margin loss, tabulated as CSV `v,q`.
    MarginLink {
        #[arg(long)]
        phi: String,
        /// Scores span [-vmax, vmax].
        #[arg(long, default_value_t = 5.0)]
        vmax: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Label-noise robustness of a cost loss or a weight.
    Robustness {
        #[arg(long, conflicts_with = "weight", required_unless_present = "weight")]
        c0: Option<f64>,
        #[arg(long)]
        weight: Option<String>,
        #[arg(long)]
        alpha: f64,
    },
    /// The two-experiment, two-surrogate incommensurability report.
    SurrogateExperiment,
    /// Regret bound of the minimal convex proper loss.
    RegretBound {
        #[arg(long, conflicts_with = "curve", required_unless_present = "curve")]
        x: Option<f64>,
        #[arg(long)]
        curve: bool,
        #[arg(long, default_value_t = 1.0)]
        xmax: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideArg {
    Lower,
    Upper,
}

fn parse_grid(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if n < 3 {
        return Err("grid size must be at least 3".into());
    }
    Ok(n)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(x > 0.0) || !x.is_finite() {
        return Err("tolerance must be positive".into());
    }
    Ok(x)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("cploss: {e}");
            e.exit_code()
        }
    }
}
