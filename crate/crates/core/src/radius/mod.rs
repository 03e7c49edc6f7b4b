//! Estimators of `rho(alpha) = log R(alpha)`, the log conformal radius of the
//! Siegel disc at rotation number `alpha`.
//!
//! * radial: `u(r e^{2 pi i alpha})` along `r_k = 1 - 2^{-k}`; `u` is the
//!   harmonic function `log |w(lambda) / lambda|` whose radial limits are `rho`.
//! * coefficient: the exponential growth rate of the Siegel series
//!   coefficients, whose radius of convergence is the conformal radius.

mod harmonic;
mod rotation;

pub use harmonic::{
    arc_harmonic_measure, flank_caps, harmonic_check, poisson_bound_check, sample_field, step_poisson_integral,
    FlankCaps, HarmonicReport, PoissonReport, PoissonSample, PolarGrid, SampledField,
};
pub use rotation::{rotation_from_cf, RotationNumber, RotationTag};

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::linearize::{LinearizeOptions, YoccozEvaluator};
use crate::series::{Precision, DEFAULT_DEGREE};

pub const DEFAULT_DEPTH: u32 = 12;
pub const MIN_DEPTH: u32 = 4;
pub const MIN_COEFF_DEGREE: usize = 32;
/// Radial estimate is converged when the last step moves less than this.
pub const PLATEAU_TOLERANCE: f64 = 0.02;
/// Each of the final three radial steps must drop at least this much to flag
/// divergence to `-inf`.
pub const DIVERGENCE_DROP: f64 = 0.1;
/// Root-test window: max and median of `-log|g_k|/k` within this.
pub const COEFF_SPREAD_TOLERANCE: f64 = 0.1;
pub const COEFF_BLOCK: usize = 8;
/// Slack on the upper bound `rho <= M`.
pub const BOUND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Radial,
    Coefficient,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(Method::Radial),
            "coeff" | "coefficient" => Ok(Method::Coefficient),
            _ => Err(Error::Precondition(format!("unknown method {s:?}"))),
        }
    }
}

/// `rho` estimate; `-inf` is a distinct state, never a float sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoValue {
    Finite(f64),
    MinusInfinity,
}

impl RhoValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            RhoValue::Finite(x) => Some(x),
            RhoValue::MinusInfinity => None,
        }
    }

    /// Ordering key: `-inf` below every finite value.
    pub fn key(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }
}

impl Serialize for RhoValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RhoValue::Finite(x) => s.serialize_f64(*x),
            RhoValue::MinusInfinity => s.serialize_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub alpha: RotationNumber,
    pub method: Method,
    pub rho_hat: RhoValue,
    /// Radial: `(r_k, u)`. Coefficient: `(k, log |g_k|)`.
    pub samples: Vec<(f64, f64)>,
    pub converged: bool,
    pub diverging_to_minus_infinity: bool,
    /// Radial samples lost to the iteration budget.
    pub failed_samples: usize,
}

impl RadiusEstimate {
    pub fn rho(&self) -> Option<f64> {
        self.rho_hat.finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorOptions {
    pub method: Method,
    pub depth: u32,
    pub degree: usize,
    pub budget: u64,
    pub precision: Precision,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            method: Method::Radial,
            depth: DEFAULT_DEPTH,
            degree: DEFAULT_DEGREE,
            budget: crate::linearize::DEFAULT_BUDGET,
            precision: Precision::Double,
        }
    }
}

/// Reusable estimator for one family; holds the family expansion.
#[derive(Debug, Clone)]
pub struct RhoEstimator {
    evaluator: YoccozEvaluator,
    options: EstimatorOptions,
}

impl RhoEstimator {
    pub fn new(family: &FamilySpec, options: EstimatorOptions) -> Result<Self> {
        if options.method == Method::Radial && options.depth < MIN_DEPTH {
            return Err(Error::Precondition(format!("radial depth must be >= {MIN_DEPTH}")));
        }
        if options.method == Method::Coefficient && options.degree < MIN_COEFF_DEGREE {
            return Err(Error::Precondition(format!("coefficient degree must be >= {MIN_COEFF_DEGREE}")));
        }
        let lin = LinearizeOptions { degree: options.degree, budget: options.budget, precision: options.precision };
        Ok(RhoEstimator { evaluator: YoccozEvaluator::new(family, lin)?, options })
    }

    pub fn family(&self) -> &FamilySpec {
        self.evaluator.family()
    }

    pub fn options(&self) -> &EstimatorOptions {
        &self.options
    }

    pub fn evaluator(&self) -> &YoccozEvaluator {
        &self.evaluator
    }

    /// Same family expansion, different method.
    pub fn with_method(&self, method: Method) -> Self {
        RhoEstimator { evaluator: self.evaluator.clone(), options: EstimatorOptions { method, ..self.options } }
    }

    pub fn estimate(&self, alpha: &RotationNumber) -> Result<RadiusEstimate> {
        match self.options.method {
            Method::Radial => self.radial(alpha),
            Method::Coefficient => self.coefficient(alpha),
        }
    }

    fn radial(&self, alpha: &RotationNumber) -> Result<RadiusEstimate> {
        let mut samples = Vec::new();
        let mut failed = 0;
        let mut last_error = None;
        for k in 2..=self.options.depth {
            let r = 1.0 - (-(k as f64)).exp2();
            let lambda = Complex64::from_polar(r, TAU * alpha.value);
            match self.evaluator.eval(lambda) {
                Ok(y) => samples.push((r, y.u)),
                Err(e) => {
                    failed += 1;
                    last_error = Some(e);
                }
            }
        }
        if samples.is_empty() {
            let why = last_error.map(|e| e.to_string()).unwrap_or_default();
            return Err(Error::EstimateUnavailable(why));
        }
        let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let n = values.len();
        let diverging = n >= 4 && (n - 3..n).all(|i| values[i - 1] - values[i] >= DIVERGENCE_DROP);
        let converged = !diverging && n >= 2 && (values[n - 1] - values[n - 2]).abs() <= PLATEAU_TOLERANCE;
        let rho_hat = if diverging { RhoValue::MinusInfinity } else { RhoValue::Finite(values[n - 1]) };
        Ok(RadiusEstimate {
            alpha: alpha.clone(),
            method: Method::Radial,
            rho_hat,
            samples,
            converged,
            diverging_to_minus_infinity: diverging,
            failed_samples: failed,
        })
    }

    fn coefficient(&self, alpha: &RotationNumber) -> Result<RadiusEstimate> {
        let siegel = self.evaluator.expansion().siegel(alpha.value)?;
        let n = siegel.g.degree();
        let logs: Vec<(usize, f64)> = (1..=n).map(|k| (k, siegel.g.coeff(k).norm().ln())).collect();
        let rho = envelope_slope_rho(&logs, n / 4, n, COEFF_BLOCK)
            .ok_or_else(|| Error::EstimateUnavailable("coefficient envelope is degenerate".into()))?;
        let mut roots: Vec<f64> =
            logs.iter().filter(|(k, l)| *k >= n / 2 && l.is_finite()).map(|(k, l)| -l / *k as f64).collect();
        roots.sort_by(f64::total_cmp);
        let converged = match (roots.first(), roots.get(roots.len() / 2)) {
            // max of log|g_k|/k is the min of the roots
            (Some(lo), Some(median)) => (median - lo) <= COEFF_SPREAD_TOLERANCE,
            _ => false,
        };
        Ok(RadiusEstimate {
            alpha: alpha.clone(),
            method: Method::Coefficient,
            rho_hat: RhoValue::Finite(rho),
            samples: logs.iter().map(|&(k, l)| (k as f64, l)).collect(),
            converged,
            diverging_to_minus_infinity: false,
            failed_samples: 0,
        })
    }
}

/// `-slope` of the least-squares line through the block maxima of
/// `log |g_k|` for `k` in `[lo, hi]`. A power-law prefactor `k^{-beta}` only
/// shifts the maxima by a slowly varying amount, so the slope tracks the
/// exponential rate `-rho`.
fn envelope_slope_rho(logs: &[(usize, f64)], lo: usize, hi: usize, block: usize) -> Option<f64> {
    let mut points = Vec::new();
    let mut start = lo.max(1);
    while start + block <= hi + 1 {
        let best = logs
            .iter()
            .filter(|(k, l)| *k >= start && *k < start + block && l.is_finite())
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some(&(k, l)) = best {
            points.push((k as f64, l));
        }
        start += block;
    }
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Radial estimate with default budget and degree.
pub fn rho_radial(family: &FamilySpec, alpha: &RotationNumber, depth: u32) -> Result<RadiusEstimate> {
    RhoEstimator::new(family, EstimatorOptions { method: Method::Radial, depth, ..Default::default() })?.estimate(alpha)
}

pub fn rho_coefficient(family: &FamilySpec, alpha: &RotationNumber, degree: usize) -> Result<RadiusEstimate> {
    RhoEstimator::new(family, EstimatorOptions { method: Method::Coefficient, degree, ..Default::default() })?
        .estimate(alpha)
}
