use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RotationTag {
    Golden,
    Silver,
    Rational {
        p: u64,
        q: u64,
    },
    Float,
    /// Finite prefix of the expansion of an irrational number.
    Cf,
}

/// Rotation number `alpha`; the multiplier is `e^{2 pi i alpha}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationNumber {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cf: Option<Vec<u64>>,
    pub tag: RotationTag,
}

impl RotationNumber {
    pub fn golden() -> Self {
        RotationNumber { value: (5f64.sqrt() - 1.0) / 2.0, cf: None, tag: RotationTag::Golden }
    }

    /// `sqrt(2) - 1 = [0; 2, 2, 2, ...]`
    pub fn silver() -> Self {
        RotationNumber { value: 2f64.sqrt() - 1.0, cf: None, tag: RotationTag::Silver }
    }

    pub fn float(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Precondition(format!("rotation number must be finite, got {value}")));
        }
        Ok(RotationNumber { value, cf: None, tag: RotationTag::Float })
    }

    /// `p/q` in lowest terms.
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Precondition("denominator must be positive".into()));
        }
        let g = gcd(p, q);
        let (p, q) = (p / g, q / g);
        Ok(RotationNumber { value: p as f64 / q as f64, cf: None, tag: RotationTag::Rational { p, q } })
    }

    /// A truncated expansion `[0; a_1, ..., a_n]` standing for an irrational
    /// number; the value is the evaluation of the prefix.
    pub fn cf_prefix(coeffs: &[u64]) -> Result<Self> {
        check_cf(coeffs)?;
        Ok(RotationNumber { value: eval_cf(coeffs), cf: Some(coeffs.to_vec()), tag: RotationTag::Cf })
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.tag, RotationTag::Rational { .. })
    }

    /// Same tag family, different value (used when perturbing during searches).
    pub fn with_value(value: f64) -> Self {
        RotationNumber { value, cf: None, tag: RotationTag::Float }
    }

    /// Convergents `p_n/q_n` of the continued-fraction expansion of `value`
    /// in `(0, 1)`, stopping when the denominator exceeds `max_q` or the
    /// convergent equals the value in binary64.
    pub fn convergents(&self, max_q: u64) -> Vec<(u64, u64)> {
        if let RotationTag::Rational { p, q } = self.tag {
            return convergents_of_cf(&cf_of_rational(p, q), max_q);
        }
        if let Some(cf) = &self.cf {
            return convergents_of_cf(cf, max_q);
        }
        let mut x = self.value.rem_euclid(1.0);
        let mut cf = Vec::new();
        for _ in 0..64 {
            if x == 0.0 {
                break;
            }
            let inv = 1.0 / x;
            let a = inv.floor();
            if a > u32::MAX as f64 {
                break;
            }
            cf.push(a as u64);
            x = inv - a;
            let conv = convergents_of_cf(&cf, u64::MAX);
            if let Some(&(p, q)) = conv.last() {
                if q > max_q || (p as f64 / q as f64) == self.value.rem_euclid(1.0) {
                    break;
                }
            }
        }
        convergents_of_cf(&cf, max_q)
    }
}

impl fmt::Display for RotationNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            RotationTag::Golden => write!(f, "golden"),
            RotationTag::Silver => write!(f, "silver"),
            RotationTag::Rational { p, q } => write!(f, "rat:{p}/{q}"),
            RotationTag::Float => write!(f, "float:{}", self.value),
            RotationTag::Cf => {
                let parts: Vec<String> = self.cf.iter().flatten().map(|a| a.to_string()).collect();
                write!(f, "cf:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for RotationNumber {
    type Err = Error;

    /// `golden`, `silver`, `float:X`, `rat:P/Q`, `cf:a1,a2,...`, or a bare float.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("cannot parse rotation number {s:?}"));
        match s {
            "golden" => return Ok(RotationNumber::golden()),
            "silver" => return Ok(RotationNumber::silver()),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("rat:") {
            let (p, q) = rest.split_once('/').ok_or_else(bad)?;
            return RotationNumber::rational(
                p.trim().parse().map_err(|_| bad())?,
                q.trim().parse().map_err(|_| bad())?,
            );
        }
        if let Some(rest) = s.strip_prefix("cf:") {
            let coeffs =
                rest.split(',').map(|a| a.trim().parse::<i64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
            if coeffs.iter().any(|&a| a < 1) {
                return Err(Error::Precondition("continued-fraction entries must be >= 1".into()));
            }
            return rotation_from_cf(&coeffs.iter().map(|&a| a as u64).collect::<Vec<_>>());
        }
        let x = s.strip_prefix("float:").unwrap_or(s);
        RotationNumber::float(x.parse().map_err(|_| bad())?)
    }
}

fn check_cf(coeffs: &[u64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::Precondition("continued fraction needs at least one entry".into()));
    }
    if coeffs.contains(&0) {
        return Err(Error::Precondition("continued-fraction entries must be >= 1".into()));
    }
    Ok(())
}

fn eval_cf(coeffs: &[u64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| 1.0 / (a as f64 + acc))
}

/// Evaluates `[0; a_1, ..., a_n]` exactly as a reduced fraction.
pub fn rotation_from_cf(coeffs: &[u64]) -> Result<RotationNumber> {
    check_cf(coeffs)?;
    let (p, q) = *convergents_of_cf(coeffs, u64::MAX)
        .last()
        .filter(|_| exact_convergent_fits(coeffs))
        .ok_or_else(|| Error::Precondition("continued fraction overflows 64-bit numerator/denominator".into()))?;
    Ok(RotationNumber { value: p as f64 / q as f64, cf: Some(coeffs.to_vec()), tag: RotationTag::Rational { p, q } })
}

fn exact_convergent_fits(coeffs: &[u64]) -> bool {
    let (mut p0, mut q0, mut p1, mut q1): (u128, u128, u128, u128) = (1, 0, 0, 1);
    for &a in coeffs {
        let a = a as u128;
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        if p > u64::MAX as u128 || q > u64::MAX as u128 {
            return false;
        }
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    true
}

/// Convergents of `[0; a_1, a_2, ...]` with denominators up to `max_q`.
fn convergents_of_cf(coeffs: &[u64], max_q: u64) -> Vec<(u64, u64)> {
    // p_{-1}/q_{-1} = 1/0, p_0/q_0 = 0/1
    let (mut p0, mut q0, mut p1, mut q1): (u128, u128, u128, u128) = (1, 0, 0, 1);
    let mut out = Vec::new();
    for &a in coeffs {
        let a = a as u128;
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        if q > max_q as u128 || p > u64::MAX as u128 {
            break;
        }
        out.push((p as u64, q as u64));
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    out
}

fn cf_of_rational(mut p: u64, mut q: u64) -> Vec<u64> {
    p %= q;
    let mut out = Vec::new();
    while p != 0 {
        out.push(q / p);
        (p, q) = (q % p, p);
    }
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_and_silver_from_cf() {
        let g = rotation_from_cf(&[1; 30]).unwrap();
        assert!((g.value - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert_eq!(g.tag, RotationTag::Rational { p: 832040, q: 1346269 });
        let s = rotation_from_cf(&[2; 30]).unwrap();
        assert!((s.value - (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn half() {
        let h = rotation_from_cf(&[2]).unwrap();
        assert_eq!(h.value, 0.5);
        assert_eq!(h.tag, RotationTag::Rational { p: 1, q: 2 });
        assert!(h.is_rational());
    }

    #[test]
    fn rejects_zero_entries() {
        assert!(rotation_from_cf(&[1, 0, 2]).is_err());
        assert!(rotation_from_cf(&[]).is_err());
        assert!("cf:1,-2".parse::<RotationNumber>().is_err());
    }

    #[test]
    fn cf_value_matches_evaluation() {
        let r = RotationNumber::cf_prefix(&[3, 7, 15, 1, 292]).unwrap();
        assert!((r.value - eval_cf(&[3, 7, 15, 1, 292])).abs() < 1e-15);
        let q = rotation_from_cf(&[3, 7, 15, 1, 292]).unwrap();
        assert!((q.value - r.value).abs() < 1e-15);
    }

    #[test]
    fn parse_forms() {
        assert_eq!("golden".parse::<RotationNumber>().unwrap(), RotationNumber::golden());
        let r: RotationNumber = "rat:2/4".parse().unwrap();
        assert_eq!(r.tag, RotationTag::Rational { p: 1, q: 2 });
        let f: RotationNumber = "float:0.3".parse().unwrap();
        assert_eq!(f.tag, RotationTag::Float);
        assert_eq!(f.value, 0.3);
        let c: RotationNumber = "cf:2,3".parse().unwrap();
        assert_eq!(c.tag, RotationTag::Rational { p: 3, q: 7 });
        assert!("rat:1/0".parse::<RotationNumber>().is_err());
        assert!("nonsense".parse::<RotationNumber>().is_err());
        for r in
            [RotationNumber::golden(), RotationNumber::rational(2, 5).unwrap(), RotationNumber::float(0.25).unwrap()]
        {
            assert_eq!(r.to_string().parse::<RotationNumber>().unwrap(), r);
        }
    }

    #[test]
    fn golden_convergents_are_fibonacci_ratios() {
        let conv = RotationNumber::golden().convergents(100);
        assert_eq!(conv, vec![(1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13), (13, 21), (21, 34), (34, 55), (55, 89)]);
        let conv = RotationNumber::rational(2, 5).unwrap().convergents(100);
        assert_eq!(conv.last(), Some(&(2, 5)));
    }

    #[test]
    fn overflowing_cf_is_rejected() {
        assert!(rotation_from_cf(&[1; 200]).is_err());
    }
}
