use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use siegel_core::construction::{auto_schedule, boundary_report, ConstructionConfig};
use siegel_core::linearize::{yoccoz_grid, DEFAULT_BUDGET};
use siegel_core::qanorm::{default_order, qa_norm};
use siegel_core::radius::{
    flank_caps, poisson_bound_check, EstimatorOptions, Method, RhoEstimator, RotationNumber, BOUND_SLACK,
};
use siegel_core::{
    family_catalog, run_construction, Error, FamilySpec, LinearizeOptions, OutputFormat, Result, RunConfig,
    TruncatedSeries, YoccozEvaluator,
};

use crate::{
    BoundaryArgs, Command, ConstructArgs, FamiliesCommand, GridArgs, NormArgs, PoissonArgs, RadiusArgs, YoccozArgs,
};

/// Samples per flank when the Poisson caps are scanned rather than given.
const FLANK_SAMPLES: usize = 16;

pub fn dispatch(cfg: &RunConfig, command: Command) -> Result<()> {
    match command {
        Command::Families(FamiliesCommand::List) => emit_json(&family_catalog(), None),
        Command::Yoccoz(a) => yoccoz(cfg, a),
        Command::Grid(a) => grid(cfg, a),
        Command::Radius(a) => radius(cfg, a),
        Command::PoissonCheck(a) => poisson(cfg, a),
        Command::Norm(a) => norm(a),
        Command::Construct(a) => construct(cfg, a),
        Command::Boundary(a) => boundary(cfg, a),
    }
}

/// A closed stdout (`| head`) ends the output quietly.
fn finish(r: std::result::Result<(), io::Error>, out: Option<&Path>) -> Result<()> {
    match r {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|e| io_error(out, e)),
    }
}

fn io_error(path: Option<&Path>, e: impl std::fmt::Display) -> Error {
    match path {
        Some(p) => Error::Precondition(format!("cannot write {}: {e}", p.display())),
        None => Error::Precondition(format!("cannot write output: {e}")),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| io_error(Some(p), e))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    let r = serde_json::to_writer(&mut w, value).map_err(io::Error::from).and_then(|()| writeln!(w));
    finish(r, out)
}

fn emit_table<T: Serialize>(rows: &[T], format: OutputFormat, out: Option<&Path>) -> Result<()> {
    match format {
        OutputFormat::Json => emit_json(rows, out),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink(out)?);
            let r = rows.iter().try_for_each(|row| w.serialize(row)).map_err(io::Error::from).and_then(|()| w.flush());
            finish(r, out)
        }
    }
}

fn family(name: &str) -> Result<FamilySpec> {
    name.parse()
}

fn rotation(text: &str) -> Result<RotationNumber> {
    text.parse()
}

/// `RE,IM`
fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::Precondition(format!("expected RE,IM, got {text:?}"));
    let (re, im) = text.split_once(',').ok_or_else(bad)?;
    Ok(Complex64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?))
}

fn linearize_options(cfg: &RunConfig, degree: Option<usize>, budget: Option<u64>) -> LinearizeOptions {
    LinearizeOptions {
        degree: degree.unwrap_or(cfg.default_degree),
        budget: budget.unwrap_or(DEFAULT_BUDGET),
        precision: cfg.precision_mode,
    }
}

#[derive(Serialize)]
struct YoccozOutput {
    family: String,
    lambda: [f64; 2],
    w: [f64; 2],
    u: f64,
    iterations: u64,
    entry_radius: f64,
    koebe_ok: bool,
}

fn yoccoz(cfg: &RunConfig, a: YoccozArgs) -> Result<()> {
    let fam = family(&a.family)?;
    let lambda = parse_complex(&a.lambda)?;
    let y = YoccozEvaluator::new(&fam, linearize_options(cfg, a.degree, a.budget))?.eval(lambda)?;
    emit_json(
        &YoccozOutput {
            family: fam.to_string(),
            lambda: [y.lambda.re, y.lambda.im],
            w: [y.w.re, y.w.im],
            u: y.u,
            iterations: y.iterations_used,
            entry_radius: y.entry_radius,
            koebe_ok: y.koebe_ok,
        },
        None,
    )
}

fn grid(cfg: &RunConfig, a: GridArgs) -> Result<()> {
    let ev = YoccozEvaluator::new(&family(&a.family)?, linearize_options(cfg, a.degree, None))?;
    let rows = yoccoz_grid(&ev, a.rmin, a.rmax, a.res)?;
    emit_table(&rows, cfg.output_format, a.out.as_deref())
}

fn estimator(
    cfg: &RunConfig,
    fam: &FamilySpec,
    method: Method,
    depth: Option<u32>,
    degree: Option<usize>,
) -> Result<RhoEstimator> {
    let options = EstimatorOptions {
        method,
        depth: depth.unwrap_or(cfg.default_depth),
        degree: degree.unwrap_or(cfg.default_degree),
        precision: cfg.precision_mode,
        ..Default::default()
    };
    RhoEstimator::new(fam, options)
}

fn radius(cfg: &RunConfig, a: RadiusArgs) -> Result<()> {
    let fam = family(&a.family)?;
    let alpha = rotation(&a.alpha)?;
    let est = estimator(cfg, &fam, a.method.parse()?, a.depth, a.degree)?.estimate(&alpha)?;
    emit_json(&est, None)
}

#[derive(Serialize)]
struct PoissonOutput<'a> {
    family: String,
    rotation: RotationNumber,
    caps_scanned: bool,
    #[serde(flatten)]
    report: &'a siegel_core::radius::PoissonReport,
}

fn poisson(cfg: &RunConfig, a: PoissonArgs) -> Result<()> {
    let fam = family(&a.family)?;
    let alpha = rotation(&a.alpha)?;
    let (left, right) = match (a.left, a.right) {
        (Some(l), Some(r)) => (l, r),
        (l, r) => {
            let est = estimator(cfg, &fam, Method::Radial, None, None)?;
            let caps = flank_caps(&est, &alpha, a.delta, FLANK_SAMPLES, BOUND_SLACK)?;
            (l.unwrap_or(caps.left), r.unwrap_or(caps.right))
        }
    };
    let ev = YoccozEvaluator::new(&fam, linearize_options(cfg, None, None))?;
    let report = poisson_bound_check(&ev, alpha.value, a.delta, left, right, a.samples)?;
    let caps_scanned = a.left.is_none() || a.right.is_none();
    emit_json(&PoissonOutput { family: fam.to_string(), rotation: alpha, caps_scanned, report: &report }, None)
}

fn norm(a: NormArgs) -> Result<()> {
    let path = a.series.as_path();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))?;
    let g: TruncatedSeries = serde_json::from_str(&text)
        .map_err(|e| Error::Precondition(format!("bad series in {}: {e}", path.display())))?;
    let order = a.order.unwrap_or_else(|| default_order(g.degree()));
    emit_json(&qa_norm(&g, a.r, order, a.samples)?, None)
}

fn parse_schedule(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Precondition(format!("bad schedule entry {x:?}"))))
        .collect()
}

fn construct(cfg: &RunConfig, a: ConstructArgs) -> Result<()> {
    let fam = family(&a.family)?;
    let mut c = ConstructionConfig::new(fam, rotation(&a.alpha0)?, a.eps0, a.rho_inf, a.depth);
    c.delta = a.delta;
    c.estimator = a.method.parse()?;
    c.degree = a.degree.unwrap_or(cfg.default_degree);
    c.radial_depth = cfg.default_depth;
    if let Some(t) = a.tol_rho {
        c.tol_rho = t;
    }
    c.rho_schedule = match a.schedule.as_str() {
        "auto" => auto_schedule(c.start_rho()?, c.rho_inf, c.depth),
        list => parse_schedule(list)?,
    };
    let out = a.out.as_deref();
    match run_construction(&c) {
        Ok(report) => emit_json(&report, out),
        Err(Error::ConstructionStalled { step, reason, partial }) => {
            // keep the trace of a stalled run
            emit_json(&partial, out)?;
            Err(Error::ConstructionStalled { step, reason, partial })
        }
        Err(e) => Err(e),
    }
}

#[derive(Serialize)]
struct CurveRow {
    theta: f64,
    re: f64,
    im: f64,
    abs_gprime: f64,
}

#[derive(Serialize)]
struct BoundarySummary {
    family: String,
    alpha: RotationNumber,
    rho: f64,
    r: f64,
    samples: usize,
    gprime_min_circle: f64,
    gprime_max_circle: f64,
    gprime_min_disc: f64,
    gprime_max_disc: f64,
    self_intersections: usize,
    closure_gap: f64,
}

fn boundary(cfg: &RunConfig, a: BoundaryArgs) -> Result<()> {
    let fam = family(&a.family)?;
    let alpha = rotation(&a.alpha)?;
    let b = boundary_report(&fam, &alpha, a.rho, a.samples)?;
    let rows: Vec<CurveRow> = b
        .curve
        .iter()
        .map(|p| CurveRow { theta: p.theta, re: p.value.re, im: p.value.im, abs_gprime: p.abs_gprime })
        .collect();
    match a.out.as_deref() {
        Some(path) => {
            emit_table(&rows, cfg.output_format, Some(path))?;
            emit_json(
                &BoundarySummary {
                    family: fam.to_string(),
                    alpha,
                    rho: a.rho,
                    r: b.r,
                    samples: a.samples,
                    gprime_min_circle: b.gprime_min_circle,
                    gprime_max_circle: b.gprime_max_circle,
                    gprime_min_disc: b.gprime_min_disc,
                    gprime_max_disc: b.gprime_max_disc,
                    self_intersections: b.self_intersections,
                    closure_gap: b.closure_gap,
                },
                None,
            )
        }
        None => emit_table(&rows, cfg.output_format, None),
    }
}
