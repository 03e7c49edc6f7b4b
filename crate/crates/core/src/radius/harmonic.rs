use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{RhoEstimator, RhoValue, RotationNumber};
use crate::error::{Error, Result};
use crate::linearize::YoccozEvaluator;

/// Nodes `r_i e^{i theta_j}` with `r_i` equispaced on `[rmin, rmax]`
/// (`n_r` values) and `theta_j = 2 pi j / n_theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarGrid {
    pub rmin: f64,
    pub rmax: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl PolarGrid {
    pub fn new(rmin: f64, rmax: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(rmin > 0.0 && rmin < rmax && rmax.is_finite()) || n_r < 3 || n_theta < 4 {
            return Err(Error::Precondition(format!(
                "polar grid needs 0 < rmin < rmax, n_r >= 3, n_theta >= 4 (got {rmin}, {rmax}, {n_r}, {n_theta})"
            )));
        }
        Ok(PolarGrid { rmin, rmax, n_r, n_theta })
    }

    /// Radial spacing, also the radius of the mean-value circles.
    pub fn step(&self) -> f64 {
        (self.rmax - self.rmin) / (self.n_r - 1) as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.rmin + i as f64 * self.step()
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_theta as f64
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::from_polar(self.radius(i), self.angle(j))
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Points of the discrete mean-value circle around a node, at distance `h`.
const CIRCLE: [Complex64; 4] =
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];

/// Field values on a polar grid. Interior nodes also carry the values on
/// their discrete mean-value circle; `None` marks a failed evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: PolarGrid,
    /// Radius-major: index `i * n_theta + j`.
    pub nodes: Vec<Option<f64>>,
    pub circles: Vec<Option<[f64; 4]>>,
}

impl SampledField {
    pub fn is_interior(&self, i: usize) -> bool {
        i > 0 && i + 1 < self.grid.n_r
    }
}

/// Samples `field` on the grid. Evaluations run in parallel; results are
/// stored by index so the output is independent of scheduling.
pub fn sample_field<F>(grid: PolarGrid, field: F) -> SampledField
where
    F: Fn(Complex64) -> Option<f64> + Sync,
{
    let h = grid.step();
    let entries: Vec<(Option<f64>, Option<[f64; 4]>)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid.n_theta, idx % grid.n_theta);
            let c = grid.node(i, j);
            let center = field(c).filter(|x| x.is_finite());
            let circle = if i > 0 && i + 1 < grid.n_r {
                let mut vals = [0.0; 4];
                let mut ok = true;
                for (v, d) in vals.iter_mut().zip(CIRCLE) {
                    match field(c + d * h).filter(|x| x.is_finite()) {
                        Some(x) => *v = x,
                        None => ok = false,
                    }
                }
                ok.then_some(vals)
            } else {
                None
            };
            (center, circle)
        })
        .collect();
    let (nodes, circles) = entries.into_iter().unzip();
    SampledField { grid, nodes, circles }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicReport {
    pub max_deviation: f64,
    pub h: f64,
    pub checked: usize,
    pub masked: usize,
    /// Node with the largest deviation.
    pub worst: Option<(usize, usize)>,
}

/// Mean-value check at interior nodes: `|u(c) - mean of u on the circle|`.
pub fn harmonic_check(field: &SampledField) -> HarmonicReport {
    let n_theta = field.grid.n_theta;
    let mut report = HarmonicReport { max_deviation: 0.0, h: field.grid.step(), checked: 0, masked: 0, worst: None };
    for i in 1..field.grid.n_r - 1 {
        for j in 0..n_theta {
            let idx = i * n_theta + j;
            match (field.nodes[idx], field.circles[idx]) {
                (Some(c), Some(circle)) => {
                    let mean = circle.iter().sum::<f64>() / circle.len() as f64;
                    let dev = (mean - c).abs();
                    report.checked += 1;
                    if dev > report.max_deviation {
                        report.max_deviation = dev;
                        report.worst = Some((i, j));
                    }
                }
                _ => report.masked += 1,
            }
        }
    }
    report
}

/// Harmonic measure at `z` (`|z| < 1`) of the counter-clockwise arc from
/// `e^{i theta1}` to `e^{i theta2}`.
pub fn arc_harmonic_measure(z: Complex64, theta1: f64, theta2: f64) -> f64 {
    let length = (theta2 - theta1).rem_euclid(TAU);
    let a = Complex64::from_polar(1.0, theta1);
    let b = Complex64::from_polar(1.0, theta2);
    let angle = ((b - z) / (a - z)).arg().rem_euclid(TAU);
    angle / PI - length / TAU
}

/// Poisson integral at `z` of the boundary data `left` on the arc
/// `(alpha - delta, alpha)`, `right` on `(alpha, alpha + delta)` and `m`
/// elsewhere, angles in turns.
pub fn step_poisson_integral(z: Complex64, alpha: f64, delta: f64, left: f64, right: f64, m: f64) -> f64 {
    let t = TAU * alpha;
    let d = TAU * delta;
    let wl = arc_harmonic_measure(z, t - d, t);
    let wr = arc_harmonic_measure(z, t, t + d);
    left * wl + right * wr + m * (1.0 - wl - wr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    Violation,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonSample {
    pub r: f64,
    /// NaN when the evaluation failed.
    pub u: f64,
    pub u_eps: f64,
    pub margin: f64,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonReport {
    pub alpha: f64,
    pub delta: f64,
    #[serde(rename = "L")]
    pub left: f64,
    #[serde(rename = "R")]
    pub right: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// Boundary value of `u_eps` at `e^{2 pi i alpha}`.
    pub limit_value: f64,
    pub samples: Vec<PoissonSample>,
    pub violations: usize,
    pub failed: usize,
    /// Smallest `u_eps - u` over successful samples.
    pub min_margin: f64,
}

/// Radii `1 - 2^{-t}` with `t` equispaced on `[1, 12]`.
fn ray_radii(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|j| 1.0 - (-(1.0 + 11.0 * j as f64 / (count - 1) as f64)).exp2()).collect(),
    }
}

/// Compares `u` with the step Poisson integral along the ray at `alpha`.
pub fn poisson_bound_check(
    evaluator: &YoccozEvaluator,
    alpha: f64,
    delta: f64,
    left: f64,
    right: f64,
    ray_samples: usize,
) -> Result<PoissonReport> {
    if !(delta > 0.0 && delta < 0.5) || !left.is_finite() || !right.is_finite() || !alpha.is_finite() {
        return Err(Error::Precondition("poisson check needs 0 < delta < 1/2 and finite caps".into()));
    }
    let m = evaluator.family().log_bound();
    let samples: Vec<PoissonSample> = ray_radii(ray_samples)
        .into_par_iter()
        .map(|r| {
            let z = Complex64::from_polar(r, TAU * alpha);
            let u_eps = step_poisson_integral(z, alpha, delta, left, right, m);
            match evaluator.eval(z) {
                Ok(y) => {
                    let margin = u_eps - y.u;
                    let status = if margin < 0.0 { SampleStatus::Violation } else { SampleStatus::Ok };
                    PoissonSample { r, u: y.u, u_eps, margin, status }
                }
                Err(_) => PoissonSample { r, u: f64::NAN, u_eps, margin: f64::NAN, status: SampleStatus::Failed },
            }
        })
        .collect();
    let violations = samples.iter().filter(|s| s.status == SampleStatus::Violation).count();
    let failed = samples.iter().filter(|s| s.status == SampleStatus::Failed).count();
    let min_margin =
        samples.iter().filter(|s| s.status != SampleStatus::Failed).map(|s| s.margin).fold(f64::INFINITY, f64::min);
    Ok(PoissonReport {
        alpha,
        delta,
        left,
        right,
        m,
        limit_value: 0.5 * (left + right),
        samples,
        violations,
        failed,
        min_margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlankCaps {
    pub left: f64,
    pub right: f64,
    /// `(alpha, rho_hat)` samples on each flank.
    pub left_samples: Vec<(f64, RhoValue)>,
    pub right_samples: Vec<(f64, RhoValue)>,
}

/// Caps for `rho` on `(alpha - delta, alpha)` and `(alpha, alpha + delta)`:
/// the largest estimate among `per_flank` equispaced samples (including
/// `alpha` itself) plus `slack`, never above the global bound `M`.
pub fn flank_caps(
    estimator: &RhoEstimator,
    alpha: &RotationNumber,
    delta: f64,
    per_flank: usize,
    slack: f64,
) -> Result<FlankCaps> {
    if per_flank == 0 || !(delta > 0.0) {
        return Err(Error::Precondition("flank scan needs delta > 0 and at least one sample".into()));
    }
    let m = estimator.family().log_bound();
    let offsets: Vec<f64> = (0..=per_flank).map(|j| delta * j as f64 / per_flank as f64).collect();
    let scan = |sign: f64| -> Vec<(f64, RhoValue)> {
        offsets
            .par_iter()
            .map(|&d| {
                let a = alpha.value + sign * d;
                let rot = if d == 0.0 { alpha.clone() } else { RotationNumber::with_value(a) };
                let rho = estimator.estimate(&rot).map(|e| e.rho_hat).unwrap_or(RhoValue::MinusInfinity);
                (a, rho)
            })
            .collect()
    };
    let left_samples = scan(-1.0);
    let right_samples = scan(1.0);
    let cap = |s: &[(f64, RhoValue)]| {
        let top = s.iter().map(|x| x.1.key()).fold(f64::NEG_INFINITY, f64::max);
        if top.is_finite() {
            (top + slack).min(m)
        } else {
            m
        }
    };
    Ok(FlankCaps { left: cap(&left_samples), right: cap(&right_samples), left_samples, right_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use crate::linearize::LinearizeOptions;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn arc_measures_partition_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.999), rng.gen_range(0.0..TAU));
            let alpha: f64 = rng.gen();
            let delta = rng.gen_range(1e-4..0.3);
            let t = TAU * alpha;
            let d = TAU * delta;
            let sum = arc_harmonic_measure(z, t - d, t)
                + arc_harmonic_measure(z, t, t + d)
                + arc_harmonic_measure(z, t + d, t - d);
            assert!((sum - 1.0).abs() < 1e-12, "{sum}");
        }
    }

    #[test]
    fn arc_measure_at_origin_is_length() {
        let w = arc_harmonic_measure(Complex64::new(0.0, 0.0), 0.3, 1.3);
        assert!((w - 1.0 / TAU).abs() < 1e-15);
        // near the arc the measure approaches 1
        let z = Complex64::from_polar(0.9999, 0.8);
        assert!(arc_harmonic_measure(z, 0.3, 1.3) > 0.99);
    }

    #[test]
    fn constant_data_gives_constant() {
        let z = Complex64::new(0.3, -0.4);
        assert!((step_poisson_integral(z, 0.2, 0.05, 1.5, 1.5, 1.5) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn oracle_fields() {
        let grid = PolarGrid::new(0.1, 0.8, 64, 64).unwrap();
        let re = harmonic_check(&sample_field(grid, |z| Some(z.re)));
        assert!(re.max_deviation < 1e-12);
        assert_eq!(re.checked, 62 * 64);
        let sq = harmonic_check(&sample_field(grid, |z| Some(z.norm_sqr())));
        let h = grid.step();
        assert!((sq.max_deviation - h * h).abs() < 1e-12);
        let log = harmonic_check(&sample_field(grid, |z| Some(z.norm().ln())));
        assert!(log.max_deviation < 1e-4 && log.max_deviation > 1e-8);
    }

    #[test]
    fn masked_samples_are_counted() {
        let grid = PolarGrid::new(0.1, 0.8, 8, 8).unwrap();
        let field = sample_field(grid, |z| (z.re > 0.0).then_some(z.re));
        let report = harmonic_check(&field);
        assert!(report.masked > 0);
        assert_eq!(report.masked + report.checked, 6 * 8);
    }

    #[test]
    fn flat_caps_reduce_to_koebe() {
        let family = FamilySpec::quadratic();
        let evaluator = YoccozEvaluator::new(&family, LinearizeOptions::default()).unwrap();
        let m = family.log_bound();
        let report = poisson_bound_check(&evaluator, RotationNumber::golden().value, 0.01, m, m, 8).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.samples.len(), 8);
        for s in &report.samples {
            assert!((s.u_eps - m).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(PolarGrid::new(0.0, 0.8, 64, 64).is_err());
        assert!(PolarGrid::new(0.5, 0.4, 64, 64).is_err());
        assert!(PolarGrid::new(0.1, 0.8, 2, 64).is_err());
    }
}
