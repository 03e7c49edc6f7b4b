//! `siegel`: command-line front end.
//!
//! Reports go to stdout (or `--out`) as JSON, tabular data as CSV. Failures
//! are a JSON object on stderr; exit codes are 0 ok, 1 usage, 2 precondition,
//! 3 numerical.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use siegel_core::{Error, ErrorClass, RunConfig};

#[derive(Parser)]
#[command(name = "siegel", version, about = "Linearization, Yoccoz functions and Siegel-disc radii")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Family catalog.
    #[command(subcommand)]
    Families(FamiliesCommand),
    /// Yoccoz function at one parameter.
    Yoccoz(YoccozArgs),
    /// `u` on a polar grid of parameters.
    Grid(GridArgs),
    /// Conformal radius estimate at a rotation number.
    Radius(RadiusArgs),
    /// Poisson-integral upper bound near a rotation number.
    PoissonCheck(PoissonArgs),
    /// Quasi-analytic norm of a series stored as JSON.
    Norm(NormArgs),
    /// Finite-depth recursive construction.
    Construct(ConstructArgs),
    /// Boundary curve of a Siegel disc.
    Boundary(BoundaryArgs),
}

#[derive(Subcommand)]
pub enum FamiliesCommand {
    List,
}

#[derive(Args)]
pub struct YoccozArgs {
    #[arg(long)]
    pub family: String,
    /// `RE,IM`
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Args)]
pub struct GridArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub rmin: f64,
    #[arg(long)]
    pub rmax: f64,
    /// Radii and angles per axis.
    #[arg(long)]
    pub res: usize,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RadiusArgs {
    #[arg(long)]
    pub family: String,
    /// `golden`, `silver`, `float:X`, `cf:A1,A2,...` or `rat:P/Q`
    #[arg(long)]
    pub alpha: String,
    /// `radial` or `coeff`
    #[arg(long, default_value = "radial")]
    pub method: String,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args)]
pub struct PoissonArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub delta: f64,
    /// Boundary value on the left flank; scanned when omitted.
    #[arg(long = "L", allow_hyphen_values = true)]
    pub left: Option<f64>,
    /// Boundary value on the right flank; scanned when omitted.
    #[arg(long = "R", allow_hyphen_values = true)]
    pub right: Option<f64>,
    /// Points on the ray towards the boundary.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
}

#[derive(Args)]
pub struct NormArgs {
    /// JSON array of `[re, im]` coefficients.
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub r: f64,
    /// Highest derivative order.
    #[arg(long = "K")]
    pub order: Option<usize>,
    #[arg(long, default_value_t = siegel_core::qanorm::DEFAULT_CIRCLE_SAMPLES)]
    pub samples: usize,
}

#[derive(Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub alpha0: String,
    #[arg(long)]
    pub eps0: f64,
    #[arg(long = "rho-inf", allow_hyphen_values = true)]
    pub rho_inf: f64,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = siegel_core::construction::DEFAULT_DELTA)]
    pub delta: f64,
    /// `auto` or a comma-separated decreasing list.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub schedule: String,
    /// `coeff` or `radial`
    #[arg(long, default_value = "coeff")]
    pub method: String,
    #[arg(long = "tol-rho")]
    pub tol_rho: Option<f64>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub alpha: String,
    /// Log of the curve radius in the linearizing coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = siegel_core::construction::BOUNDARY_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const EXIT_USAGE: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn report_error(err: &Error) -> ExitCode {
    let (class, code) = match err.class() {
        ErrorClass::Precondition => ("precondition", EXIT_PRECONDITION),
        ErrorClass::Numerical => ("numerical", EXIT_NUMERICAL),
    };
    let mut body = json!({ "kind": err.kind(), "class": class, "message": err.to_string() });
    match err {
        Error::DivisorBreakdown { k, divisor } | Error::SmallDivisorBreakdown { k, divisor } => {
            body["k"] = json!(k);
            body["divisor"] = json!(divisor);
        }
        Error::ConstructionStalled { step, .. } => body["step"] = json!(step),
        Error::UnreliableRadius { r, tail } => {
            body["r"] = json!(r);
            body["tail"] = json!(tail);
        }
        _ => {}
    }
    eprintln!("{}", json!({ "error": body }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = RunConfig::load(cli.config.as_deref()).and_then(|cfg| {
        let pool = cfg.thread_pool()?;
        pool.install(|| commands::dispatch(&cfg, cli.command))
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}
