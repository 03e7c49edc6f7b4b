//! Finite-depth version of the recursive choice of rotation numbers
//! `alpha_n -> alpha_inf` whose Siegel discs have conformal radii
//! `rho_n -> rho_inf` and whose linearizations form a Cauchy sequence in the
//! quasi-analytic norm at `r_inf = e^{rho_inf}`.
//!
//! Every report is a certificate about the finitely many steps it records;
//! nothing here says anything about the limit.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::qanorm::{self, qa_distance};
use crate::radius::{flank_caps, EstimatorOptions, Method, RadiusEstimate, RhoEstimator, RhoValue, RotationNumber};
use crate::series::{TruncatedSeries, DEFAULT_DEGREE};

pub const DEFAULT_TOL_RHO: f64 = 0.02;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_RETRIES: usize = 8;
pub const FLANK_SAMPLES: usize = 16;
pub const MAX_BISECTIONS: usize = 80;
pub const BOUNDARY_SAMPLES: usize = 256;
/// Series degree for stand-alone boundary reports, which sample closer to
/// the edge of the disc than the construction does.
pub const BOUNDARY_DEGREE: usize = 256;

#[derive(Debug, Clone, Serialize)]
pub struct ConstructionConfig {
    pub family: FamilySpec,
    pub alpha0: RotationNumber,
    pub eps0: f64,
    pub rho_inf: f64,
    pub depth: usize,
    pub delta: f64,
    /// `rho_1 > ... > rho_D > rho_inf`.
    pub rho_schedule: Vec<f64>,
    pub estimator: Method,
    pub tol_rho: f64,
    pub degree: usize,
    /// Depth of the radial estimator (cross-checks, or the main estimator).
    pub radial_depth: u32,
    /// Derivative order of the norm.
    pub norm_order: usize,
    pub circle_samples: usize,
    /// Candidate brackets tried per step.
    pub retries: usize,
    pub boundary_samples: usize,
}

impl ConstructionConfig {
    /// Defaults around `alpha0`; the schedule is filled in by [`auto_schedule`].
    pub fn new(family: FamilySpec, alpha0: RotationNumber, eps0: f64, rho_inf: f64, depth: usize) -> Self {
        ConstructionConfig {
            family,
            alpha0,
            eps0,
            rho_inf,
            depth,
            delta: DEFAULT_DELTA,
            rho_schedule: Vec::new(),
            estimator: Method::Coefficient,
            tol_rho: DEFAULT_TOL_RHO,
            degree: DEFAULT_DEGREE,
            radial_depth: crate::radius::DEFAULT_DEPTH,
            norm_order: qanorm::DEFAULT_ORDER,
            circle_samples: qanorm::DEFAULT_CIRCLE_SAMPLES,
            retries: DEFAULT_RETRIES,
            boundary_samples: BOUNDARY_SAMPLES,
        }
    }

    pub fn r_inf(&self) -> f64 {
        self.rho_inf.exp()
    }

    fn estimator(&self) -> Result<RhoEstimator> {
        let opts = EstimatorOptions {
            method: self.estimator,
            depth: self.radial_depth,
            degree: self.degree,
            ..Default::default()
        };
        RhoEstimator::new(&self.family, opts)
    }

    /// `rho(alpha0)` with the configured estimator.
    pub fn start_rho(&self) -> Result<f64> {
        self.estimator()?
            .estimate(&self.alpha0)?
            .rho()
            .ok_or_else(|| Error::Precondition("rho estimate at alpha0 is -inf".into()))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if !(self.eps0 > 0.0) || !(self.delta > 0.0) || !(self.tol_rho > 0.0) || !self.rho_inf.is_finite() {
            return bad("eps0, delta and tol_rho must be positive, rho_inf finite".into());
        }
        if self.rho_schedule.len() != self.depth {
            return bad(format!("schedule has {} entries for depth {}", self.rho_schedule.len(), self.depth));
        }
        if self.rho_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("rho schedule must be strictly decreasing".into());
        }
        if self.rho_schedule.iter().any(|&r| r <= self.rho_inf) {
            return bad("rho schedule must stay above rho_inf".into());
        }
        if self.norm_order > self.degree {
            return bad("norm order exceeds series degree".into());
        }
        Ok(())
    }
}

/// `rho_n = rho_inf + (rho_0 - rho_inf) 2^{-n}`, `n = 1..=depth`.
pub fn auto_schedule(rho0: f64, rho_inf: f64, depth: usize) -> Vec<f64> {
    (1..=depth).map(|n| rho_inf + (rho0 - rho_inf) * 0.5f64.powi(n as i32)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Step {
    /// Step index; this step produces `alpha_{n+1}` from `alpha_n`.
    pub n: usize,
    pub alpha: f64,
    pub eps: f64,
    pub rho_target: f64,
    pub rho_achieved: f64,
    /// Radial estimate at the accepted candidate.
    pub rho_radial: RhoValue,
    /// `||g_{alpha_n} - g_{alpha_{n+1}}||_{r_inf}`
    pub norm_delta: f64,
    /// `2^{-n} delta`
    pub norm_bound: f64,
    pub interval: [f64; 2],
    /// Convergent of `alpha_n` used as the lower bracket.
    pub bracket: (u64, u64),
}

/// A failed candidate, kept for diagnosis.
#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub n: usize,
    pub bracket: (u64, u64),
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub norm_delta: Option<f64>,
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstructionReport {
    pub family: String,
    pub alpha0: f64,
    pub rho0: f64,
    pub rho_inf: f64,
    pub r_inf: f64,
    pub delta: f64,
    pub depth: usize,
    pub schedule: Vec<f64>,
    pub steps: Vec<Step>,
    pub attempts: Vec<Attempt>,
    pub alpha_final: f64,
    pub rho_final: f64,
    pub nested: bool,
    pub cauchy_ok: bool,
    /// `||g_{alpha_D} - g_{alpha_0}||_{r_inf}`
    pub distance_to_start: Option<f64>,
    /// `(theta, g(r_inf e^{i theta}))`
    pub boundary: Vec<(f64, Complex64)>,
    /// Sampled minimum of `|g'|` on `|w| <= r_inf`.
    pub gprime_min: Option<f64>,
    pub complete: bool,
    pub label: String,
}

impl ConstructionReport {
    fn new(cfg: &ConstructionConfig, rho0: f64) -> Self {
        ConstructionReport {
            family: cfg.family.to_string(),
            alpha0: cfg.alpha0.value,
            rho0,
            rho_inf: cfg.rho_inf,
            r_inf: cfg.r_inf(),
            delta: cfg.delta,
            depth: cfg.depth,
            schedule: cfg.rho_schedule.clone(),
            steps: Vec::new(),
            attempts: Vec::new(),
            alpha_final: cfg.alpha0.value,
            rho_final: rho0,
            nested: true,
            cauchy_ok: false,
            distance_to_start: None,
            boundary: Vec::new(),
            gprime_min: None,
            complete: false,
            label: format!("finite-depth certificate, {} of {} steps; not a statement about the limit", 0, cfg.depth),
        }
    }
}

/// Located rotation number with the estimate that accepted it.
#[derive(Debug, Clone, Serialize)]
pub struct FoundAlpha {
    pub alpha: RotationNumber,
    pub estimate: RadiusEstimate,
    pub evaluations: usize,
}

/// `rho_hat`, reading a small-divisor breakdown at an exact rational as
/// `-inf`.
fn rho_key(estimator: &RhoEstimator, alpha: &RotationNumber) -> Result<(RhoValue, Option<RadiusEstimate>)> {
    match estimator.estimate(alpha) {
        Ok(e) => Ok((e.rho_hat, Some(e))),
        Err(Error::SmallDivisorBreakdown { .. }) if alpha.is_rational() => Ok((RhoValue::MinusInfinity, None)),
        Err(e) => Err(e),
    }
}

/// Bisection in `alpha` between `lo` (`rho_hat < target`) and `hi`
/// (`rho_hat > target`) until `|rho_hat - target| <= tol`.
pub fn find_alpha_with_rho(
    estimator: &RhoEstimator,
    target: f64,
    lo: &RotationNumber,
    hi: &RotationNumber,
    tol: f64,
) -> Result<FoundAlpha> {
    if !(tol > 0.0) || !target.is_finite() {
        return Err(Error::Precondition("target must be finite and tol positive".into()));
    }
    let (rho_hi, est_hi) = rho_key(estimator, hi)?;
    if let Some(est) = est_hi.filter(|_| (rho_hi.key() - target).abs() <= tol) {
        return Ok(FoundAlpha { alpha: hi.clone(), estimate: est, evaluations: 1 });
    }
    let (rho_lo, est_lo) = rho_key(estimator, lo)?;
    if let Some(est) = est_lo.filter(|_| (rho_lo.key() - target).abs() <= tol) {
        return Ok(FoundAlpha { alpha: lo.clone(), estimate: est, evaluations: 2 });
    }
    if !(rho_lo.key() < target && target < rho_hi.key()) {
        return Err(Error::Precondition(format!(
            "bracket does not straddle the target: rho(lo) = {}, target = {target}, rho(hi) = {}",
            rho_lo.key(),
            rho_hi.key()
        )));
    }
    let (mut a, mut b) = (lo.value, hi.value);
    let mut evaluations = 2;
    for _ in 0..MAX_BISECTIONS {
        let width = b - a;
        let mut located = None;
        for retry in 0..=DEFAULT_RETRIES {
            // perturbed midpoints alternate around the centre
            let shift = if retry == 0 { 0.0 } else { 0.03 * retry as f64 * if retry % 2 == 1 { 1.0 } else { -1.0 } };
            let mid = RotationNumber::with_value(a + (0.5 + shift) * width);
            evaluations += 1;
            if let Ok(est) = estimator.estimate(&mid) {
                located = Some((mid, est));
                break;
            }
        }
        let (mid, est) = located
            .ok_or_else(|| Error::BracketFailure(format!("estimator unavailable near alpha = {}", a + 0.5 * width)))?;
        let rho = est.rho_hat.key();
        if (rho - target).abs() <= tol {
            return Ok(FoundAlpha { alpha: mid, estimate: est, evaluations });
        }
        if rho < target {
            a = mid.value;
        } else {
            b = mid.value;
        }
        if a == b || (b - a).abs() <= f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    Err(Error::BracketFailure(format!(
        "no alpha with rho within {tol} of {target} between {} and {}",
        lo.value, hi.value
    )))
}

struct Context {
    cfg: ConstructionConfig,
    estimator: RhoEstimator,
    radial: RhoEstimator,
}

impl Context {
    fn siegel(&self, alpha: f64) -> Result<TruncatedSeries> {
        Ok(self.estimator.evaluator().expansion().siegel(alpha)?.g)
    }
}

pub fn run_construction(cfg: &ConstructionConfig) -> Result<ConstructionReport> {
    cfg.validate()?;
    let estimator = cfg.estimator()?;
    let radial = estimator.with_method(Method::Radial);
    let rho0 = estimator
        .estimate(&cfg.alpha0)?
        .rho()
        .ok_or_else(|| Error::Precondition("rho estimate at alpha0 is -inf".into()))?;
    if cfg.rho_inf >= rho0 || cfg.rho_schedule.first().is_some_and(|&r| r >= rho0) {
        return Err(Error::Precondition(format!("schedule must start below rho(alpha0) = {rho0}")));
    }
    let ctx = Context { cfg: cfg.clone(), estimator, radial };
    let r_inf = cfg.r_inf();
    let mut report = ConstructionReport::new(cfg, rho0);
    let mut series = vec![ctx.siegel(cfg.alpha0.value)?];
    qanorm::check_reliable(&series[0], r_inf)?;

    let (mut alpha_n, mut eps_n, mut rho_prev) = (cfg.alpha0.clone(), cfg.eps0, rho0);
    for n in 0..cfg.depth {
        let target = cfg.rho_schedule[n];
        let bound = cfg.delta * 0.5f64.powi(n as i32);
        let accepted = search_step(&ctx, n, &alpha_n, eps_n, target, bound, &series[n], &mut report)?;
        let Some((found, g_next, norm_delta, bracket)) = accepted else {
            let reason = format!(
                "no candidate within retry budget met |rho - {target:.4}| <= {} and norm <= {bound:e}",
                cfg.tol_rho
            );
            return Err(stall(report, n, reason, cfg));
        };
        let alpha = found.alpha.value;
        // closed subinterval of the open parent interval, then flank scan
        let room = (eps_n - (alpha - alpha_n.value).abs()).max(0.0);
        let mut eps = 0.5 * room;
        let mut flank_ok = false;
        for _ in 0..cfg.retries {
            if eps <= 0.0 {
                break;
            }
            let caps = flank_caps(&ctx.estimator, &found.alpha, eps, FLANK_SAMPLES, 0.0)?;
            let top = caps
                .left_samples
                .iter()
                .chain(&caps.right_samples)
                .map(|s| s.1.key())
                .fold(f64::NEG_INFINITY, f64::max);
            if top < rho_prev {
                flank_ok = true;
                break;
            }
            eps *= 0.5;
        }
        if !flank_ok {
            let reason = format!("flank scan around alpha = {alpha} never fell below rho = {rho_prev:.4}");
            return Err(stall(report, n, reason, cfg));
        }
        let rho_radial = ctx.radial.estimate(&found.alpha).map(|e| e.rho_hat).unwrap_or(RhoValue::MinusInfinity);
        let interval = [alpha - eps, alpha + eps];
        let parent = [alpha_n.value - eps_n, alpha_n.value + eps_n];
        report.nested &= interval[0] > parent[0] && interval[1] < parent[1];
        report.steps.push(Step {
            n,
            alpha,
            eps,
            rho_target: target,
            rho_achieved: found.estimate.rho_hat.key(),
            rho_radial,
            norm_delta,
            norm_bound: bound,
            interval,
            bracket,
        });
        series.push(g_next);
        alpha_n = found.alpha;
        eps_n = eps;
        rho_prev = target;
        report.alpha_final = alpha;
        report.rho_final = found.estimate.rho_hat.key();
    }

    report.cauchy_ok = cauchy_check(&ctx, &series, &mut report)?;
    let boundary = boundary_of_series(series.last().expect("alpha0 recorded"), r_inf, cfg.boundary_samples)?;
    report.boundary = boundary.curve.iter().map(|p| (p.theta, p.value)).collect();
    report.gprime_min = Some(boundary.gprime_min_disc);
    report.complete = true;
    report.label =
        format!("finite-depth certificate, {} of {} steps; not a statement about the limit", cfg.depth, cfg.depth);
    Ok(report)
}

type Accepted = (FoundAlpha, TruncatedSeries, f64, (u64, u64));

/// Tries convergents of `alpha_n` inside the interval, closest last, as
/// lower brackets.
#[allow(clippy::too_many_arguments)]
fn search_step(
    ctx: &Context,
    n: usize,
    alpha_n: &RotationNumber,
    eps_n: f64,
    target: f64,
    bound: f64,
    g_n: &TruncatedSeries,
    report: &mut ConstructionReport,
) -> Result<Option<Accepted>> {
    let cfg = &ctx.cfg;
    let max_q = u32::MAX as u64;
    let brackets: Vec<(u64, u64)> = alpha_n
        .convergents(max_q)
        .into_iter()
        .filter(|&(p, q)| {
            ((p as f64 / q as f64) - alpha_n.value).abs() < eps_n && (p as f64 / q as f64) != alpha_n.value
        })
        .take(cfg.retries)
        .collect();
    if brackets.is_empty() {
        report.attempts.push(Attempt {
            n,
            bracket: (0, 0),
            alpha: None,
            rho: None,
            norm_delta: None,
            outcome: "no convergent inside the interval".into(),
        });
    }
    for (p, q) in brackets {
        let lo = RotationNumber::rational(p, q)?;
        let mut attempt =
            Attempt { n, bracket: (p, q), alpha: None, rho: None, norm_delta: None, outcome: String::new() };
        match find_alpha_with_rho(&ctx.estimator, target, &lo, alpha_n, cfg.tol_rho) {
            Ok(found) => {
                attempt.alpha = Some(found.alpha.value);
                attempt.rho = found.estimate.rho();
                if found.alpha.is_rational() {
                    attempt.outcome = "bracket endpoint is rational".into();
                } else if (found.alpha.value - alpha_n.value).abs() >= eps_n {
                    attempt.outcome = "outside interval".into();
                } else {
                    match ctx.siegel(found.alpha.value).and_then(|g| {
                        let d = qa_distance(g_n, &g, cfg.r_inf(), cfg.norm_order, cfg.circle_samples)?;
                        Ok((g, d))
                    }) {
                        Ok((g, d)) if d <= bound => {
                            attempt.norm_delta = Some(d);
                            attempt.outcome = "accepted".into();
                            report.attempts.push(attempt);
                            return Ok(Some((found, g, d, (p, q))));
                        }
                        Ok((_, d)) => {
                            attempt.norm_delta = Some(d);
                            attempt.outcome = format!("norm delta above {bound:e}");
                        }
                        Err(e) => attempt.outcome = e.to_string(),
                    }
                }
            }
            Err(e) => attempt.outcome = e.to_string(),
        }
        report.attempts.push(attempt);
    }
    Ok(None)
}

fn stall(mut report: ConstructionReport, step: usize, reason: String, cfg: &ConstructionConfig) -> Error {
    report.label = format!(
        "finite-depth certificate, {} of {} steps; not a statement about the limit",
        report.steps.len(),
        cfg.depth
    );
    Error::ConstructionStalled { step, reason, partial: Box::new(report) }
}

/// Pairwise bound `2^{-min(n,m)+1} delta` and the `2 delta` ball around
/// `g_{alpha_0}`.
fn cauchy_check(ctx: &Context, series: &[TruncatedSeries], report: &mut ConstructionReport) -> Result<bool> {
    let cfg = &ctx.cfg;
    let r = cfg.r_inf();
    let mut ok = report.steps.iter().all(|s| s.norm_delta <= s.norm_bound);
    for n in 0..series.len() {
        for m in n + 1..series.len() {
            let d = qa_distance(&series[n], &series[m], r, cfg.norm_order, cfg.circle_samples)?;
            ok &= d <= cfg.delta * 2f64.powi(1 - n as i32);
            if n == 0 && m + 1 == series.len() {
                report.distance_to_start = Some(d);
            }
        }
    }
    if series.len() == 1 {
        report.distance_to_start = Some(0.0);
    }
    Ok(ok && report.distance_to_start.is_some_and(|d| d <= 2.0 * cfg.delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub value: Complex64,
    pub abs_gprime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub r: f64,
    /// `samples + 1` points; the last repeats the first angle.
    pub curve: Vec<BoundaryPoint>,
    pub gprime_min_circle: f64,
    pub gprime_max_circle: f64,
    pub gprime_min_disc: f64,
    pub gprime_max_disc: f64,
    pub self_intersections: usize,
    pub closure_gap: f64,
}

/// Image of `|w| = r` under the Siegel linearization at `alpha`, `r = e^rho`.
pub fn boundary_report(
    family: &FamilySpec,
    alpha: &RotationNumber,
    rho: f64,
    samples: usize,
) -> Result<BoundaryReport> {
    let g = crate::linearize::siegel_series(family, alpha.value, BOUNDARY_DEGREE)?.g;
    boundary_of_series(&g, rho.exp(), samples)
}

pub fn boundary_of_series(g: &TruncatedSeries, r: f64, samples: usize) -> Result<BoundaryReport> {
    if samples < 3 || !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition("boundary needs r > 0 and at least 3 samples".into()));
    }
    qanorm::check_reliable(g, r)?;
    let dg = g.derivative(1).unwrap_or_else(|| TruncatedSeries::zero(0));
    let curve: Vec<BoundaryPoint> = (0..=samples)
        .map(|j| {
            let theta = TAU * j as f64 / samples as f64;
            let w = if j == samples { Complex64::new(r, 0.0) } else { Complex64::from_polar(r, theta) };
            BoundaryPoint { theta, value: g.value_at(w), abs_gprime: dg.value_at(w).norm() }
        })
        .collect();
    let circle = curve.iter().map(|p| p.abs_gprime);
    let gprime_min_circle = circle.clone().fold(f64::INFINITY, f64::min);
    let gprime_max_circle = circle.fold(0.0, f64::max);
    // interior mesh of the closed disc
    let rings = 16;
    let spokes = 64;
    let (mut lo, mut hi) = (gprime_min_circle, gprime_max_circle);
    for i in 0..rings {
        let rad = r * i as f64 / rings as f64;
        for j in 0..spokes {
            let v = dg.value_at(Complex64::from_polar(rad, TAU * j as f64 / spokes as f64)).norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let points: Vec<Complex64> = curve.iter().map(|p| p.value).collect();
    Ok(BoundaryReport {
        r,
        closure_gap: (points[0] - points[samples]).norm(),
        self_intersections: count_crossings(&points),
        curve,
        gprime_min_circle,
        gprime_max_circle,
        gprime_min_disc: lo,
        gprime_max_disc: hi,
    })
}

/// Proper crossings between non-adjacent segments of a closed polyline
/// (`points` ends where it starts).
fn count_crossings(points: &[Complex64]) -> usize {
    let m = points.len() - 1;
    let cross = |a: Complex64, b: Complex64, c: Complex64| (b - a).re * (c - a).im - (b - a).im * (c - a).re;
    let mut count = 0;
    for i in 0..m {
        let (a, b) = (points[i], points[i + 1]);
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let (c, d) = (points[j], points[j + 1]);
            let d1 = cross(a, b, c);
            let d2 = cross(a, b, d);
            let d3 = cross(c, d, a);
            let d4 = cross(c, d, b);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                count += 1;
            }
        }
    }
    count
}
