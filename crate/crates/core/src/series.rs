//! Truncated complex power series centred at the origin.
//!
//! A [`TruncatedSeries`] of degree `N` stores `c_0..=c_N`; every product is
//! truncated back to the degree of the result. Two arithmetic backends are
//! available through [`Precision`]: plain binary64, and a compensated mode
//! that carries the rounding error of every product and sum (Ogita-Rump-Oishi
//! style dot products), which roughly doubles the working precision of
//! accumulations without changing the storage format.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_DEGREE: usize = 128;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Arithmetic backend for accumulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    /// Compensated (error-free transformation) accumulation.
    Extended,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Running sum of complex products.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Accumulator {
    precision: Precision,
    re: f64,
    im: f64,
    re_err: f64,
    im_err: f64,
}

impl Accumulator {
    pub(crate) fn new(precision: Precision) -> Self {
        Accumulator { precision, re: 0.0, im: 0.0, re_err: 0.0, im_err: 0.0 }
    }

    #[inline]
    fn add_real(sum: &mut f64, err: &mut f64, x: f64) {
        let (s, e) = two_sum(*sum, x);
        *sum = s;
        *err += e;
    }

    #[inline]
    pub(crate) fn add(&mut self, x: Complex64) {
        match self.precision {
            Precision::Double => {
                self.re += x.re;
                self.im += x.im;
            }
            Precision::Extended => {
                Self::add_real(&mut self.re, &mut self.re_err, x.re);
                Self::add_real(&mut self.im, &mut self.im_err, x.im);
            }
        }
    }

    #[inline]
    pub(crate) fn add_prod(&mut self, a: Complex64, b: Complex64) {
        match self.precision {
            Precision::Double => {
                self.re += a.re * b.re - a.im * b.im;
                self.im += a.re * b.im + a.im * b.re;
            }
            Precision::Extended => {
                let (p1, e1) = two_prod(a.re, b.re);
                let (p2, e2) = two_prod(-a.im, b.im);
                let (p3, e3) = two_prod(a.re, b.im);
                let (p4, e4) = two_prod(a.im, b.re);
                Self::add_real(&mut self.re, &mut self.re_err, p1);
                Self::add_real(&mut self.re, &mut self.re_err, p2);
                self.re_err += e1 + e2;
                Self::add_real(&mut self.im, &mut self.im_err, p3);
                Self::add_real(&mut self.im, &mut self.im_err, p4);
                self.im_err += e3 + e4;
            }
        }
    }

    #[inline]
    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_err, self.im + self.im_err)
    }
}

/// Degree-`N` truncated power series `c_0 + c_1 z + ... + c_N z^N`.
#[derive(Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

/// Result of evaluating a series at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: Complex64,
    /// Geometric estimate of the omitted tail; advisory only.
    pub tail_bound: f64,
    /// `false` when the ratio estimate gives `q >= 1`.
    pub reliable: bool,
}

impl TruncatedSeries {
    /// Builds a series from `c_0..=c_N`. Rejects empty input and non-finite entries.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("a series needs at least one coefficient".into()));
        }
        if let Some(index) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(TruncatedSeries { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Internal constructor for coefficients already known to be finite.
    pub(crate) fn from_vec_unchecked(coeffs: Vec<Complex64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        TruncatedSeries { coeffs }
    }

    pub fn zero(degree: usize) -> Self {
        TruncatedSeries { coeffs: vec![ZERO; degree + 1] }
    }

    /// The series `z` at the given degree.
    pub fn identity(degree: usize) -> Self {
        let mut s = Self::zero(degree.max(1));
        s.coeffs[1] = ONE;
        s
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `z^k`; zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// `c_0 = 0` and `c_1 = 1` exactly.
    pub fn is_normalized(&self) -> bool {
        self.degree() >= 1 && self.coeffs[0] == ZERO && self.coeffs[1] == ONE
    }

    /// Drops or zero-pads coefficients to reach `degree`.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree + 1, ZERO);
        TruncatedSeries { coeffs }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    /// `sum |c_k| r^k` over `k` in `range`.
    pub fn abs_sum(&self, r: f64, range: std::ops::RangeInclusive<usize>) -> f64 {
        let hi = (*range.end()).min(self.degree());
        let lo = *range.start();
        if lo > hi {
            return 0.0;
        }
        (lo..=hi).map(|k| self.coeffs[k].norm() * r.powi(k as i32)).sum()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let n = self.degree().max(other.degree());
        let coeffs = (0..=n).map(|k| op(self.coeff(k), other.coeff(k))).collect();
        TruncatedSeries { coeffs }
    }

    /// Cauchy product truncated at the larger of the two degrees.
    pub fn mul(&self, other: &Self) -> Self {
        self.mul_with(other, Precision::Double)
    }

    pub fn mul_with(&self, other: &Self, precision: Precision) -> Self {
        let n = self.degree().max(other.degree());
        mul_truncated(&self.coeffs, &other.coeffs, n, precision)
    }

    /// Formal composition `self(inner(z))` through the common degree.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        self.compose_with(inner, Precision::Double)
    }

    pub fn compose_with(&self, inner: &Self, precision: Precision) -> Result<Self> {
        if inner.coeffs[0] != ZERO {
            return Err(Error::NonZeroConstant { c0: inner.coeffs[0] });
        }
        let n = self.degree().max(inner.degree());
        let inner = inner.with_degree(n);
        let mut acc: Vec<Accumulator> = vec![Accumulator::new(precision); n + 1];
        acc[0].add(self.coeff(0));
        // power = inner^j, whose valuation is at least j
        let mut power = inner.clone();
        for j in 1..=self.degree().min(n) {
            let cj = self.coeffs[j];
            if cj != ZERO {
                for (k, a) in acc.iter_mut().enumerate().skip(j) {
                    a.add_prod(cj, power.coeffs[k]);
                }
            }
            if j < n {
                power = mul_truncated(&power.coeffs, &inner.coeffs, n, precision);
            }
        }
        Ok(TruncatedSeries { coeffs: acc.iter().map(Accumulator::value).collect() })
    }

    /// Compositional inverse of a normalized series, via Lagrange inversion:
    /// if `a(z) = z / phi(z)` then `[z^k] a^{-1} = [z^{k-1}] phi^k / k`.
    pub fn revert(&self) -> Result<Self> {
        if !self.is_normalized() {
            return Err(Error::NotNormalized);
        }
        let n = self.degree();
        // a(z)/z, degree n-1
        let shifted = TruncatedSeries { coeffs: self.coeffs[1..].to_vec() };
        let phi = shifted.reciprocal()?;
        let mut out = vec![ZERO; n + 1];
        let mut power = phi.clone();
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = power.coeffs[k - 1] / k as f64;
            if k < n {
                power = mul_truncated(&power.coeffs, &phi.coeffs, n - 1, Precision::Double);
            }
        }
        Ok(TruncatedSeries { coeffs: out })
    }

    /// Multiplicative inverse; requires `c_0 != 0`.
    pub fn reciprocal(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == ZERO {
            return Err(Error::Precondition("reciprocal needs a non-zero constant term".into()));
        }
        let n = self.degree();
        let mut out = vec![ZERO; n + 1];
        out[0] = c0.inv();
        for k in 1..=n {
            let mut s = ZERO;
            for j in 1..=k {
                s += self.coeffs[j] * out[k - j];
            }
            out[k] = -s / c0;
        }
        TruncatedSeries::new(out)
    }

    /// Horner evaluation with a geometric tail estimate.
    pub fn eval(&self, z: Complex64) -> Evaluation {
        self.eval_with(z, Precision::Double)
    }

    pub fn eval_with(&self, z: Complex64, precision: Precision) -> Evaluation {
        let value = horner(&self.coeffs, z, precision);
        let (tail_bound, reliable) = self.tail_estimate(z.norm());
        Evaluation { value, tail_bound, reliable }
    }

    /// Value only.
    pub fn value_at(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z, Precision::Double)
    }

    /// Continues the last coefficient geometrically with ratio `q = |z| * s`,
    /// where `s` is the largest per-step growth between consecutive non-zero
    /// coefficients in the upper half of the series. Gives
    /// `|c_N| |z|^N q / (1 - q)`, zero when there is no growth information.
    fn tail_estimate(&self, abs_z: f64) -> (f64, bool) {
        let n = self.degree();
        let mut growth = 0.0_f64;
        let mut prev: Option<(usize, f64)> = None;
        for k in (n / 2)..=n {
            let m = self.coeffs[k].norm();
            if m == 0.0 {
                continue;
            }
            if let Some((j, mj)) = prev {
                growth = growth.max((m / mj).powf(1.0 / (k - j) as f64));
            }
            prev = Some((k, m));
        }
        let q = abs_z * growth;
        if q >= 1.0 {
            return (f64::INFINITY, false);
        }
        let cn = self.coeffs[n].norm();
        (cn * abs_z.powi(n as i32) * q / (1.0 - q), true)
    }

    /// `k`-th formal derivative, of degree `N - k`. `None` when `k > N`
    /// (the derivative of the truncation is identically zero).
    pub fn derivative(&self, k: usize) -> Option<Self> {
        let n = self.degree();
        if k > n {
            return None;
        }
        let coeffs = (k..=n)
            .map(|j| {
                let falling: f64 = ((j - k + 1)..=j).map(|t| t as f64).product();
                self.coeffs[j] * falling
            })
            .collect();
        Some(TruncatedSeries { coeffs })
    }

    /// Largest coefficientwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.degree().max(other.degree());
        (0..=n).map(|k| (self.coeff(k) - other.coeff(k)).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64, precision: Precision) -> Complex64 {
    match precision {
        Precision::Double => coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c),
        Precision::Extended => {
            let mut acc = ZERO;
            for c in coeffs.iter().rev() {
                let mut a = Accumulator::new(Precision::Extended);
                a.add_prod(acc, z);
                a.add(*c);
                acc = a.value();
            }
            acc
        }
    }
}

/// Cauchy product of `a` and `b`, truncated at degree `n`.
pub(crate) fn mul_truncated(a: &[Complex64], b: &[Complex64], n: usize, precision: Precision) -> TruncatedSeries {
    let a_lo = a.iter().position(|c| *c != ZERO).unwrap_or(a.len());
    let b_lo = b.iter().position(|c| *c != ZERO).unwrap_or(b.len());
    let mut out = vec![ZERO; n + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        if k < a_lo + b_lo {
            continue;
        }
        let lo = a_lo.max(k.saturating_sub(b.len() - 1));
        let hi = k.min(a.len() - 1).min(k - b_lo);
        if lo > hi {
            continue;
        }
        let mut acc = Accumulator::new(precision);
        for i in lo..=hi {
            acc.add_prod(a[i], b[k - i]);
        }
        *slot = acc.value();
    }
    TruncatedSeries { coeffs: out }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries(N={}, {:?})", self.degree(), self.coeffs)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

// JSON form: array of [re, im] pairs, index = power.
impl Serialize for TruncatedSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(deserializer)?;
        TruncatedSeries::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .map_err(D::Error::custom)
    }
}
