//! Koenigs linearization at an attracting fixed point, the Siegel conjugacy
//! at an indifferent one, and the Yoccoz function `w(lambda) = h_lambda(lambda v)`.
//!
//! For `f_lambda = lambda f` with `f(z) = z + a_2 z^2 + ...`:
//!
//! * the Koenigs map `h = z + h_2 z^2 + ...` solves `h(f_lambda(z)) = lambda h(z)`,
//!   coefficientwise `h_k (lambda^k - lambda) = -sum_{j<k} h_j [z^k] f_lambda^j`;
//! * the Siegel map `g = w + g_2 w^2 + ...` solves `f_lambda(g(w)) = g(lambda w)`,
//!   coefficientwise `g_k (lambda^k - lambda) = lambda sum_{j>=2} a_j [w^k] g^j`.
//!
//! Since `f_lambda^j = lambda^j f^j`, the table `[z^k] f^j` is computed once
//! per family in [`FamilyExpansion`] and reused for every parameter.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::series::{Accumulator, Precision, TruncatedSeries, DEFAULT_DEGREE};

pub const KOENIGS_DIVISOR_GUARD: f64 = 1e-14;
pub const SIEGEL_DIVISOR_GUARD: f64 = 1e-13;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Candidate entry radii, largest first.
pub const ENTRY_RADII: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
/// Two-truncation consistency required at the entry radius.
pub const ENTRY_TOLERANCE: f64 = 1e-13;
/// Halving continues below the fixed grid down to this radius.
pub const ENTRY_RADIUS_FLOOR: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizeOptions {
    pub degree: usize,
    pub budget: u64,
    pub precision: Precision,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        LinearizeOptions { degree: DEFAULT_DEGREE, budget: DEFAULT_BUDGET, precision: Precision::Double }
    }
}

#[derive(Debug, Clone)]
pub struct KoenigsSeries {
    pub lambda: Complex64,
    pub h: TruncatedSeries,
    pub family: FamilySpec,
}

#[derive(Debug, Clone)]
pub struct SiegelSeries {
    pub alpha: f64,
    pub lambda: Complex64,
    pub g: TruncatedSeries,
    pub family: FamilySpec,
    /// Smallest `|lambda^k - lambda|` met in the recurrence.
    pub divisor_floor: f64,
    pub divisor_floor_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YoccozValue {
    pub lambda: Complex64,
    pub w: Complex64,
    /// `log |w / lambda|`
    pub u: f64,
    pub iterations_used: u64,
    pub entry_radius: f64,
    /// `|w| < 4 |v|`
    pub koebe_ok: bool,
}

/// Value of the extended Koenigs map at a basin point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinValue {
    pub value: Complex64,
    /// `log h(z)`, accumulated as `log h(z_m) - m log lambda` so that large
    /// `m` cannot overflow. `re` is `-inf` when the value is zero.
    pub log_value: Complex64,
    pub iterations: u64,
}

/// `lambda^k - lambda` for `lambda = exp(log_lambda)`, free of cancellation
/// when `lambda^{k-1}` is close to 1.
fn divisor(lambda: Complex64, log_lambda: Complex64, k: usize) -> Complex64 {
    let t = log_lambda * (k - 1) as f64;
    // exp(t) - 1
    let (s, c) = t.im.sin_cos();
    let half = (0.5 * t.im).sin();
    let em1 = Complex64::new(t.re.exp_m1() * c - 2.0 * half * half, t.re.exp() * s);
    lambda * em1
}

/// Same as [`divisor`] on the unit circle, with the angle reduced mod 1
/// before scaling by `pi`.
fn unit_divisor(lambda: Complex64, alpha: f64, k: usize) -> Complex64 {
    let x = ((k - 1) as f64 * alpha).rem_euclid(1.0);
    // exp(2 pi i x) - 1 = 2i sin(pi x) exp(i pi x)
    let s = (PI * x).sin();
    lambda * Complex64::new(0.0, 2.0 * s) * Complex64::from_polar(1.0, PI * x)
}

/// Precomputed expansion of one family: the base map and the table
/// `[z^k] f^j` for `1 <= j < k <= N`.
#[derive(Debug, Clone)]
pub struct FamilyExpansion {
    family: FamilySpec,
    base: TruncatedSeries,
    /// `powers[j][k - j] = [z^k] f^j`
    powers: Vec<Vec<Complex64>>,
    precision: Precision,
}

impl FamilyExpansion {
    pub fn new(family: &FamilySpec, degree: usize, precision: Precision) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Precondition(format!("degree must be at least 2, got {degree}")));
        }
        let base = family.base_series(degree);
        let mut powers = Vec::with_capacity(degree);
        powers.push(Vec::new());
        let mut p = base.clone();
        for j in 1..degree {
            powers.push(p.coeffs()[j..].to_vec());
            if j + 1 < degree {
                p = p.mul_with(&base, precision);
            }
        }
        Ok(FamilyExpansion { family: family.clone(), base, powers, precision })
    }

    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    pub fn degree(&self) -> usize {
        self.base.degree()
    }

    pub fn base(&self) -> &TruncatedSeries {
        &self.base
    }

    #[inline]
    fn power_coeff(&self, j: usize, k: usize) -> Complex64 {
        self.powers[j][k - j]
    }

    /// Koenigs series at `lambda`; `0 < |lambda|`, `|lambda| != 1`.
    pub fn koenigs(&self, lambda: Complex64) -> Result<KoenigsSeries> {
        let modulus = lambda.norm();
        if !(modulus > 0.0) || !modulus.is_finite() {
            return Err(Error::Precondition(format!("lambda must be non-zero and finite, got {lambda}")));
        }
        if (modulus - 1.0).abs() < f64::EPSILON {
            return Err(Error::Precondition("|lambda| = 1: use the Siegel series".into()));
        }
        let n = self.degree();
        let log_lambda = lambda.ln();
        let mut lam_pow = vec![ONE; n + 1];
        for j in 1..=n {
            lam_pow[j] = lam_pow[j - 1] * lambda;
        }
        let mut h = vec![ZERO; n + 1];
        h[1] = ONE;
        // weighted[j] = h_j lambda^j
        let mut weighted = vec![ZERO; n + 1];
        weighted[1] = lambda;
        for k in 2..=n {
            let d = divisor(lambda, log_lambda, k);
            if d.norm() < KOENIGS_DIVISOR_GUARD {
                return Err(Error::DivisorBreakdown { k, divisor: d.norm() });
            }
            let mut acc = Accumulator::new(self.precision);
            for j in 1..k {
                acc.add_prod(weighted[j], self.power_coeff(j, k));
            }
            h[k] = -acc.value() / d;
            weighted[k] = h[k] * lam_pow[k];
        }
        let h = TruncatedSeries::new(h)?;
        Ok(KoenigsSeries { lambda, h, family: self.family.clone() })
    }

    /// Siegel series at rotation number `alpha` (`lambda = e^{2 pi i alpha}`).
    pub fn siegel(&self, alpha: f64) -> Result<SiegelSeries> {
        if !alpha.is_finite() {
            return Err(Error::Precondition("alpha must be finite".into()));
        }
        let n = self.degree();
        let lambda = Complex64::from_polar(1.0, TAU * alpha.rem_euclid(1.0));
        let a = self.base.coeffs();
        let mut g = vec![ZERO; n + 1];
        g[1] = ONE;
        // q[j][m] = [w^m] g^j for j >= 2, m >= j
        let mut q: Vec<Vec<Complex64>> = vec![Vec::new(); n + 1];
        let mut floor = f64::INFINITY;
        let mut floor_k = 0;
        for k in 2..=n {
            for j in (2..=k).rev() {
                // [w^k] g^j = sum_{i=1}^{k-j+1} g_i [w^{k-i}] g^{j-1}
                let mut acc = Accumulator::new(self.precision);
                for i in 1..=(k - j + 1) {
                    let prev = if j - 1 == 1 { g[k - i] } else { q[j - 1][k - i - (j - 1)] };
                    acc.add_prod(g[i], prev);
                }
                q[j].push(acc.value());
            }
            let mut rhs = Accumulator::new(self.precision);
            for j in 2..=k {
                if a[j] != ZERO {
                    rhs.add_prod(a[j], q[j][k - j]);
                }
            }
            let d = unit_divisor(lambda, alpha, k);
            let dn = d.norm();
            if dn < floor {
                floor = dn;
                floor_k = k;
            }
            if dn < SIEGEL_DIVISOR_GUARD {
                return Err(Error::SmallDivisorBreakdown { k, divisor: dn });
            }
            g[k] = lambda * rhs.value() / d;
        }
        let g = TruncatedSeries::new(g)?;
        Ok(SiegelSeries {
            alpha,
            lambda,
            g,
            family: self.family.clone(),
            divisor_floor: floor,
            divisor_floor_k: floor_k,
        })
    }
}

impl KoenigsSeries {
    /// Coefficientwise `h(f_lambda(z)) - lambda h(z)`, each coefficient scaled
    /// by `max(1, |h_k|)`.
    pub fn residual(&self) -> Result<f64> {
        let n = self.h.degree();
        let f = self.family.base_series(n).scale(self.lambda);
        let lhs = self.h.compose(&f)?;
        let rhs = self.h.scale(self.lambda);
        Ok(scaled_residual(&lhs, &rhs, &self.h))
    }

    /// Largest entry radius in the candidate grid at which the degree-`N` and
    /// degree-`N/2` truncations agree within [`ENTRY_TOLERANCE`]; halving
    /// continues below the grid when needed.
    pub fn entry_radius(&self) -> Result<f64> {
        entry_radius_for(&self.h)
    }
}

fn tail_at(h: &TruncatedSeries, r: f64) -> f64 {
    let n = h.degree();
    h.abs_sum(r, (n / 2 + 1)..=n)
}

fn entry_radius_for(h: &TruncatedSeries) -> Result<f64> {
    for &r in ENTRY_RADII.iter() {
        if tail_at(h, r) <= ENTRY_TOLERANCE {
            return Ok(r);
        }
    }
    let mut r = ENTRY_RADII[ENTRY_RADII.len() - 1];
    while r > ENTRY_RADIUS_FLOOR {
        r *= 0.5;
        if tail_at(h, r) <= ENTRY_TOLERANCE {
            return Ok(r);
        }
    }
    Err(Error::UnreliableRadius { r, tail: tail_at(h, r) })
}

impl SiegelSeries {
    /// Coefficientwise `f_lambda(g(w)) - g(lambda w)`, each coefficient scaled
    /// by `max(1, |g_k|)`.
    pub fn residual(&self) -> Result<f64> {
        let n = self.g.degree();
        let f = self.family.base_series(n).scale(self.lambda);
        let lhs = f.compose(&self.g)?;
        let mut rot = self.g.clone().into_coeffs();
        let mut p = ONE;
        for c in rot.iter_mut() {
            *c *= p;
            p *= self.lambda;
        }
        let rhs = TruncatedSeries::new(rot)?;
        Ok(scaled_residual(&lhs, &rhs, &self.g))
    }
}

fn scaled_residual(lhs: &TruncatedSeries, rhs: &TruncatedSeries, scale: &TruncatedSeries) -> f64 {
    (0..=lhs.degree())
        .map(|k| (lhs.coeff(k) - rhs.coeff(k)).norm() / scale.coeff(k).norm().max(1.0))
        .fold(0.0, f64::max)
}

/// Koenigs series with its entry radius, ready for basin evaluation.
#[derive(Debug, Clone)]
pub struct KoenigsMap {
    pub series: KoenigsSeries,
    pub entry_radius: f64,
    pub precision: Precision,
}

impl KoenigsMap {
    pub fn new(expansion: &FamilyExpansion, lambda: Complex64) -> Result<Self> {
        let series = expansion.koenigs(lambda)?;
        let entry_radius = series.entry_radius()?;
        Ok(KoenigsMap { series, entry_radius, precision: expansion.precision })
    }

    /// Extends `h` to the basin through `h(z) = lambda^{-m} h(f_lambda^m(z))`.
    pub fn eval(&self, z: Complex64, budget: u64) -> Result<BasinValue> {
        let lambda = self.series.lambda;
        if lambda.norm() >= 1.0 {
            return Err(Error::Precondition("basin extension needs |lambda| < 1".into()));
        }
        let family = &self.series.family;
        let mut z = z;
        let mut m: u64 = 0;
        while z.norm() > self.entry_radius {
            if m >= budget {
                return Err(Error::NoConvergence { budget });
            }
            z = lambda * family.eval_base(z)?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NoConvergence { budget: m });
            }
            m += 1;
        }
        let local = self.series.h.eval_with(z, self.precision).value;
        if local == ZERO {
            return Ok(BasinValue { value: ZERO, log_value: Complex64::new(f64::NEG_INFINITY, 0.0), iterations: m });
        }
        let log_value = local.ln() - lambda.ln() * m as f64;
        Ok(BasinValue { value: log_value.exp(), log_value, iterations: m })
    }
}

pub fn koenigs_series(family: &FamilySpec, lambda: Complex64, degree: usize) -> Result<KoenigsSeries> {
    FamilyExpansion::new(family, degree, Precision::Double)?.koenigs(lambda)
}

pub fn siegel_series(family: &FamilySpec, alpha: f64, degree: usize) -> Result<SiegelSeries> {
    FamilyExpansion::new(family, degree, Precision::Double)?.siegel(alpha)
}

/// `h_lambda(z)` in the basin of 0, returning the value and iteration count.
pub fn koenigs_eval(family: &FamilySpec, lambda: Complex64, z: Complex64, budget: u64) -> Result<(Complex64, u64)> {
    check_attracting(lambda)?;
    let expansion = FamilyExpansion::new(family, DEFAULT_DEGREE, Precision::Double)?;
    let map = KoenigsMap::new(&expansion, lambda)?;
    let v = map.eval(z, budget)?;
    Ok((v.value, v.iterations))
}

fn check_attracting(lambda: Complex64) -> Result<()> {
    let r = lambda.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Precondition(format!("need 0 < |lambda| < 1, got |lambda| = {r}")));
    }
    Ok(())
}

/// Evaluates the Yoccoz function of one family at many parameters, sharing
/// the family expansion.
#[derive(Debug, Clone)]
pub struct YoccozEvaluator {
    expansion: FamilyExpansion,
    budget: u64,
}

impl YoccozEvaluator {
    pub fn new(family: &FamilySpec, options: LinearizeOptions) -> Result<Self> {
        Ok(YoccozEvaluator {
            expansion: FamilyExpansion::new(family, options.degree, options.precision)?,
            budget: options.budget,
        })
    }

    pub fn family(&self) -> &FamilySpec {
        self.expansion.family()
    }

    pub fn expansion(&self) -> &FamilyExpansion {
        &self.expansion
    }

    pub fn eval(&self, lambda: Complex64) -> Result<YoccozValue> {
        check_attracting(lambda)?;
        let map = KoenigsMap::new(&self.expansion, lambda)?;
        let v = self.expansion.family().v;
        let b = map.eval(lambda * v, self.budget)?;
        if b.value == ZERO {
            // h is injective near 0 and lambda v != 0, so this is numerical underflow
            return Err(Error::NoConvergence { budget: b.iterations });
        }
        let u = b.log_value.re - lambda.norm().ln();
        Ok(YoccozValue {
            lambda,
            w: b.value,
            u,
            iterations_used: b.iterations,
            entry_radius: map.entry_radius,
            koebe_ok: b.value.norm() < 4.0 * v.norm(),
        })
    }
}

/// `w(lambda) = h_lambda(lambda v)` with default options.
pub fn yoccoz_w(family: &FamilySpec, lambda: Complex64) -> Result<YoccozValue> {
    YoccozEvaluator::new(family, LinearizeOptions::default())?.eval(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub r: f64,
    pub theta: f64,
    /// `NaN` when the evaluation failed.
    pub u: f64,
    pub iterations: u64,
    pub status: &'static str,
}

/// Samples `u` on a polar grid of `res` radii in `[rmin, rmax]` and `res`
/// angles in `[0, 2 pi)`. Rows are ordered radius-major.
pub fn yoccoz_grid(evaluator: &YoccozEvaluator, rmin: f64, rmax: f64, res: usize) -> Result<Vec<GridRow>> {
    if !(0.0 < rmin && rmin <= rmax && rmax < 1.0) || res == 0 {
        return Err(Error::Precondition(format!("bad grid: rmin={rmin}, rmax={rmax}, res={res}")));
    }
    let nodes: Vec<(f64, f64)> = (0..res)
        .flat_map(|i| {
            let r = if res == 1 { rmin } else { rmin + (rmax - rmin) * i as f64 / (res - 1) as f64 };
            (0..res).map(move |j| (r, TAU * j as f64 / res as f64))
        })
        .collect();
    Ok(nodes
        .par_iter()
        .map(|&(r, theta)| match evaluator.eval(Complex64::from_polar(r, theta)) {
            Ok(y) => GridRow { r, theta, u: y.u, iterations: y.iterations_used, status: "ok" },
            Err(e) => GridRow { r, theta, u: f64::NAN, iterations: 0, status: e.kind() },
        })
        .collect())
}
