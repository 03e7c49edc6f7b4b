//! Quasi-analytic norms
//! `||g||_r = sup_{k >= 0, |w| <= r} |g^(k)(w)| / [(k+2) ln(k+2)]^k`,
//! with the order truncated at `K` and the disc reduced to sampled points of
//! its boundary circle.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

pub const DEFAULT_ORDER: usize = 40;
pub const DEFAULT_CIRCLE_SAMPLES: usize = 512;
pub const MIN_CIRCLE_SAMPLES: usize = 64;
/// `sum_{j > N/2} |c_j| r^j` may be at most this fraction of
/// `max(1, sum_{j <= N/2} |c_j| r^j)`.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormResult {
    pub r: f64,
    #[serde(rename = "K")]
    pub order: usize,
    pub value: f64,
    pub argmax_k: usize,
    pub argmax_point: Complex64,
}

/// `[(k+2) ln(k+2)]^k`
pub fn order_weight(k: usize) -> f64 {
    let x = (k + 2) as f64;
    (x * x.ln()).powi(k as i32)
}

/// Default derivative order for a series of degree `n`.
pub fn default_order(n: usize) -> usize {
    n.min(DEFAULT_ORDER)
}

/// Two-truncation check: the upper half of the series must be negligible on
/// `|w| = r`.
pub fn check_reliable(g: &TruncatedSeries, r: f64) -> Result<()> {
    let n = g.degree();
    let head = g.abs_sum(r, 0..=n / 2);
    let tail = g.abs_sum(r, n / 2 + 1..=n);
    if tail.is_finite() && tail <= TAIL_TOLERANCE * head.max(1.0) {
        Ok(())
    } else {
        Err(Error::UnreliableRadius { r, tail })
    }
}

fn check_args(g: &TruncatedSeries, r: f64, order: usize, samples: usize) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("norm radius must be positive and finite, got {r}")));
    }
    if order > g.degree() {
        return Err(Error::Precondition(format!("K = {order} exceeds the series degree {}", g.degree())));
    }
    if samples < MIN_CIRCLE_SAMPLES {
        return Err(Error::Precondition(format!("need at least {MIN_CIRCLE_SAMPLES} circle samples, got {samples}")));
    }
    Ok(())
}

pub fn qa_norm(g: &TruncatedSeries, r: f64, order: usize, samples: usize) -> Result<NormResult> {
    check_args(g, r, order, samples)?;
    check_reliable(g, r)?;
    Ok(norm_unchecked(g, r, order, samples))
}

/// `qa_norm(g1 - g2)`. Reliability is checked on the inputs, since the
/// low-order coefficients of a difference of close series nearly cancel.
pub fn qa_distance(g1: &TruncatedSeries, g2: &TruncatedSeries, r: f64, order: usize, samples: usize) -> Result<f64> {
    let diff = g1 - g2;
    check_args(&diff, r, order, samples)?;
    check_reliable(g1, r)?;
    check_reliable(g2, r)?;
    Ok(norm_unchecked(&diff, r, order, samples).value)
}

fn norm_unchecked(g: &TruncatedSeries, r: f64, order: usize, samples: usize) -> NormResult {
    let points: Vec<Complex64> =
        (0..samples).map(|j| Complex64::from_polar(r, TAU * j as f64 / samples as f64)).collect();
    // per order: (value, sample index), first index wins ties
    let per_order: Vec<(f64, usize)> = (0..=order)
        .into_par_iter()
        .map(|k| {
            let d = g.derivative(k).expect("order checked against degree");
            let weight = order_weight(k);
            let mut best = (f64::NEG_INFINITY, 0);
            for (j, &w) in points.iter().enumerate() {
                let v = d.value_at(w).norm() / weight;
                if v > best.0 {
                    best = (v, j);
                }
            }
            best
        })
        .collect();
    let mut result = NormResult { r, order, value: f64::NEG_INFINITY, argmax_k: 0, argmax_point: points[0] };
    for (k, &(v, j)) in per_order.iter().enumerate() {
        if v > result.value {
            result.value = v;
            result.argmax_k = k;
            result.argmax_point = points[j];
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series_from(parts: &[(f64, f64)]) -> TruncatedSeries {
        // decaying coefficients keep the truncation reliable on |w| <= 0.7
        let c = parts.iter().enumerate().map(|(k, &(a, b))| Complex64::new(a, b) * 0.5f64.powi(k as i32));
        TruncatedSeries::new(c.collect()).unwrap()
    }

    #[test]
    fn hand_values() {
        let w = TruncatedSeries::identity(8);
        let n = qa_norm(&w, 0.5, 8, 512).unwrap();
        assert!((n.value - 0.5).abs() < 1e-9);
        assert_eq!(n.argmax_k, 0);
        let mut c = vec![Complex64::new(0.0, 0.0); 9];
        c[2] = Complex64::new(1.0, 0.0);
        let w2 = TruncatedSeries::new(c).unwrap();
        let n = qa_norm(&w2, 1.0, 8, 512).unwrap();
        assert!((n.value - 1.0).abs() < 1e-9);
        assert!((1.0 / order_weight(1) - 1.0 / (3.0 * 3f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn zero_series() {
        let z = TruncatedSeries::zero(16);
        let n = qa_norm(&z, 0.7, 16, 64).unwrap();
        assert_eq!(n.value, 0.0);
        assert_eq!(n.argmax_k, 0);
        assert_eq!(n.argmax_point, Complex64::new(0.7, 0.0));
    }

    #[test]
    fn derivative_term_can_dominate() {
        // g = w^2 on |w| = 0.1: terms 0.01, 0.2 / (3 ln 3), 2 / (4 ln 4)^2
        let mut c = vec![Complex64::new(0.0, 0.0); 5];
        c[2] = Complex64::new(1.0, 0.0);
        let n = qa_norm(&TruncatedSeries::new(c).unwrap(), 0.1, 4, 64).unwrap();
        assert_eq!(n.argmax_k, 2);
        assert!((n.value - 2.0 / (4.0 * 4f64.ln()).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let w = TruncatedSeries::identity(4);
        assert!(matches!(qa_norm(&w, 0.5, 5, 64), Err(Error::Precondition(_))));
        assert!(matches!(qa_norm(&w, 0.5, 4, 63), Err(Error::Precondition(_))));
        assert!(matches!(qa_norm(&w, -1.0, 4, 64), Err(Error::Precondition(_))));
        // geometric series beyond its radius
        let geo = TruncatedSeries::from_real(&[1.0; 65]).unwrap();
        assert!(matches!(qa_norm(&geo, 0.99, 10, 64), Err(Error::UnreliableRadius { .. })));
        assert!(qa_norm(&geo, 0.5, 10, 64).is_ok());
    }

    #[test]
    fn sampling_stability() {
        let g = TruncatedSeries::from_real(&[0.0, 1.0, 0.5, -0.25, 0.125, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let a = qa_norm(&g, 0.8, 5, 512).unwrap().value;
        let b = qa_norm(&g, 0.8, 5, 1024).unwrap().value;
        assert!((a - b).abs() <= 1e-3 * a);
    }

    #[test]
    fn inclusion_plateau() {
        // |c_k| <= 1, reliable on r = 0.5; norm at s = 0.3 stops growing in K
        let g = TruncatedSeries::from_real(&[1.0; 65]).unwrap();
        let values: Vec<f64> = [8, 16, 24, 32].iter().map(|&k| qa_norm(&g, 0.3, k, 64).unwrap().value).collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
        assert!((values[3] - values[2]).abs() <= 1e-9 * values[3]);
    }

    fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 33)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn homogeneity(c in coeffs(), s in -3.0..3.0f64) {
            let g = series_from(&c);
            let a = qa_norm(&g.scale(Complex64::new(s, 0.0)), 0.6, 8, 64).unwrap().value;
            let b = s.abs() * qa_norm(&g, 0.6, 8, 64).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }

        #[test]
        fn triangle(a in coeffs(), b in coeffs(), c in coeffs()) {
            let (a, b, c) = (series_from(&a), series_from(&b), series_from(&c));
            let d = |x: &TruncatedSeries, y: &TruncatedSeries| qa_distance(x, y, 0.6, 8, 64).unwrap();
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }

        #[test]
        fn monotone_in_radius(c in coeffs(), r1 in 0.05..0.6f64, dr in 0.0..0.1f64) {
            let g = series_from(&c);
            let a = qa_norm(&g, r1, 8, 512).unwrap().value;
            let b = qa_norm(&g, r1 + dr, 8, 512).unwrap().value;
            prop_assert!(a <= b * (1.0 + 1e-3) + 1e-12);
        }
    }
}
