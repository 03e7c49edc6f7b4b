//! One-parameter families `f_lambda = lambda * f` with `f(0) = 0`, `f'(0) = 1`
//! and a single distinguished non-zero singular value `v`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// `|cos z|` below this is treated as a pole of `tan`.
pub const POLE_THRESHOLD: f64 = 1e-12;

pub const DEFAULT_POLY_DEGREE: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyId {
    /// `z (1 - z)`
    Quadratic,
    /// `(1 + z/d)^d - 1`
    PolyD(u32),
    /// `e^z - 1`
    Exp,
    /// `z e^z`
    ZExp,
    Sin,
    Tan,
    /// `F(w) = f(w^{1/n})^n` for an `n`-symmetric inner family.
    Reduced {
        inner: Box<FamilyId>,
        n: u32,
    },
    /// User-supplied polynomial map. The single-singular-value hypothesis is
    /// not checked for these.
    Custom {
        name: String,
        coeffs: Vec<Complex64>,
    },
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyId::Quadratic => write!(f, "quadratic"),
            FamilyId::PolyD(d) => write!(f, "poly_d:{d}"),
            FamilyId::Exp => write!(f, "exp"),
            FamilyId::ZExp => write!(f, "zexp"),
            FamilyId::Sin => write!(f, "sin"),
            FamilyId::Tan => write!(f, "tan"),
            FamilyId::Reduced { inner, .. } => write!(f, "reduced:{inner}"),
            FamilyId::Custom { name, .. } => write!(f, "custom:{name}"),
        }
    }
}

/// A family in the catalog together with its singular value and symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub id: FamilyId,
    /// The non-zero critical or asymptotic value of `f`.
    pub v: Complex64,
    /// `n` with `f(omega z) = omega f(z)` for `omega^n = 1`.
    pub symmetry_order: u32,
    /// `false` for user-defined families.
    pub hypothesis_verified: bool,
    /// Multiplier map from the original family to this one (`lambda -> lambda^n`
    /// for reduced families, identity otherwise).
    pub parameter_power: u32,
}

impl FamilySpec {
    fn builtin(id: FamilyId, v: Complex64, symmetry_order: u32) -> Self {
        FamilySpec { id, v, symmetry_order, hypothesis_verified: true, parameter_power: 1 }
    }

    pub fn quadratic() -> Self {
        Self::builtin(FamilyId::Quadratic, Complex64::new(0.25, 0.0), 1)
    }

    /// `(1 + z/d)^d - 1`; critical point `-d` maps to `-1`.
    pub fn poly_d(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::Precondition(format!("poly_d needs d >= 2, got {d}")));
        }
        Ok(Self::builtin(FamilyId::PolyD(d), Complex64::new(-1.0, 0.0), 1))
    }

    pub fn exp() -> Self {
        Self::builtin(FamilyId::Exp, Complex64::new(-1.0, 0.0), 1)
    }

    pub fn zexp() -> Self {
        Self::builtin(FamilyId::ZExp, Complex64::new(-(-1.0f64).exp(), 0.0), 1)
    }

    pub fn sin() -> Self {
        Self::builtin(FamilyId::Sin, Complex64::new(1.0, 0.0), 2)
    }

    /// Asymptotic values of `tan` are `+i` and `-i`; `+i` is recorded.
    pub fn tan() -> Self {
        Self::builtin(FamilyId::Tan, Complex64::new(0.0, 1.0), 2)
    }

    /// A polynomial map given by its coefficients (`c_0 = 0`, `c_1 = 1`).
    pub fn custom(name: &str, base: &TruncatedSeries, v: Complex64, symmetry_order: u32) -> Result<Self> {
        if !base.is_normalized() {
            return Err(Error::NotNormalized);
        }
        if v == Complex64::new(0.0, 0.0) {
            return Err(Error::Precondition("singular value must be non-zero".into()));
        }
        if symmetry_order == 0 {
            return Err(Error::Precondition("symmetry order must be at least 1".into()));
        }
        Ok(FamilySpec {
            id: FamilyId::Custom { name: name.to_string(), coeffs: base.coeffs().to_vec() },
            v,
            symmetry_order,
            hypothesis_verified: false,
            parameter_power: 1,
        })
    }

    /// Bound `M = log 4 + log |v|` on `u = log |w / lambda|`.
    pub fn log_bound(&self) -> f64 {
        4.0f64.ln() + self.v.norm().ln()
    }

    /// Degree-`degree` expansion of the base map `f`.
    pub fn base_series(&self, degree: usize) -> TruncatedSeries {
        let coeffs = base_coeffs(&self.id, degree);
        TruncatedSeries::from_vec_unchecked(coeffs)
    }

    /// Closed-form evaluation of the base map `f`.
    pub fn eval_base(&self, z: Complex64) -> Result<Complex64> {
        eval_base(&self.id, z)
    }

    /// Rotationally reduced family `F(w) = f(w^{1/n})^n` with `v_F = v^n`.
    pub fn symmetry_reduce(&self) -> Result<Self> {
        let n = self.symmetry_order;
        if n <= 1 {
            return Err(Error::Precondition(format!("{} has no rotational symmetry to reduce", self.id)));
        }
        Ok(FamilySpec {
            id: FamilyId::Reduced { inner: Box::new(self.id.clone()), n },
            v: self.v.powu(n),
            symmetry_order: 1,
            hypothesis_verified: self.hypothesis_verified,
            parameter_power: self.parameter_power * n,
        })
    }

    /// Maps a multiplier of the unreduced family to this family's multiplier
    /// (`lambda^n` after a reduction of order `n`).
    pub fn lift_parameter(&self, lambda: Complex64) -> Complex64 {
        lambda.powu(self.parameter_power)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id.fmt(f)
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    /// `quadratic`, `poly_d`, `poly_d:D`, `exp`, `zexp`, `sin`, `tan`,
    /// `reduced:sin`, `reduced:tan`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(inner) = s.strip_prefix("reduced:") {
            return inner.parse::<FamilySpec>()?.symmetry_reduce();
        }
        if let Some(d) = s.strip_prefix("poly_d:") {
            let d = d.parse::<u32>().map_err(|_| Error::Precondition(format!("bad degree in {s:?}")))?;
            return FamilySpec::poly_d(d);
        }
        match s {
            "quadratic" => Ok(FamilySpec::quadratic()),
            "poly_d" => FamilySpec::poly_d(DEFAULT_POLY_DEGREE),
            "exp" => Ok(FamilySpec::exp()),
            "zexp" => Ok(FamilySpec::zexp()),
            "sin" => Ok(FamilySpec::sin()),
            "tan" => Ok(FamilySpec::tan()),
            _ => Err(Error::Precondition(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Serialize)]
struct FamilyInfo {
    id: String,
    v: [f64; 2],
    symmetry_order: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parameter_power: Option<u32>,
    hypothesis_verified: bool,
}

impl Serialize for FamilySpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = match &self.id {
            FamilyId::PolyD(d) => Some(*d),
            _ => None,
        };
        FamilyInfo {
            id: self.id.to_string(),
            v: [self.v.re, self.v.im],
            symmetry_order: self.symmetry_order,
            d,
            parameter_power: (self.parameter_power != 1).then_some(self.parameter_power),
            hypothesis_verified: self.hypothesis_verified,
        }
        .serialize(serializer)
    }
}

/// The six families of the catalog, `poly_d` at its default degree.
pub fn family_catalog() -> Vec<FamilySpec> {
    vec![
        FamilySpec::quadratic(),
        FamilySpec::poly_d(DEFAULT_POLY_DEGREE).expect("default degree is valid"),
        FamilySpec::exp(),
        FamilySpec::zexp(),
        FamilySpec::sin(),
        FamilySpec::tan(),
    ]
}

/// Expansion of `lambda * f` through `degree`.
pub fn family_series(spec: &FamilySpec, lambda: Complex64, degree: usize) -> Result<TruncatedSeries> {
    if degree < 2 {
        return Err(Error::Precondition(format!("family series needs degree >= 2, got {degree}")));
    }
    Ok(spec.base_series(degree).scale(lambda))
}

/// `lambda * f(z)` in closed form.
pub fn family_eval(spec: &FamilySpec, lambda: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(lambda * spec.eval_base(z)?)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn base_coeffs(id: &FamilyId, n: usize) -> Vec<Complex64> {
    let mut c = vec![real(0.0); n + 1];
    match id {
        FamilyId::Quadratic => {
            c[1] = real(1.0);
            if n >= 2 {
                c[2] = real(-1.0);
            }
        }
        FamilyId::PolyD(d) => {
            // binomial(d, k) d^{-k}
            let d = *d as usize;
            let mut term = 1.0;
            for k in 1..=d.min(n) {
                term *= (d - k + 1) as f64 / (k as f64 * d as f64);
                c[k] = real(term);
            }
        }
        FamilyId::Exp => {
            let mut term = 1.0;
            for (k, ck) in c.iter_mut().enumerate().skip(1) {
                term /= k as f64;
                *ck = real(term);
            }
        }
        FamilyId::ZExp => {
            let mut term = 1.0;
            for (k, ck) in c.iter_mut().enumerate().skip(1) {
                if k > 1 {
                    term /= (k - 1) as f64;
                }
                *ck = real(term);
            }
        }
        FamilyId::Sin => {
            let mut term = 1.0;
            for k in 1..=n {
                if k > 1 {
                    term /= k as f64;
                }
                if k % 2 == 1 {
                    c[k] = real(if (k / 2) % 2 == 0 { term } else { -term });
                }
            }
        }
        FamilyId::Tan => {
            let sin = TruncatedSeries::from_vec_unchecked(base_coeffs(&FamilyId::Sin, n));
            let mut cos = vec![real(0.0); n + 1];
            let mut term = 1.0;
            for (k, ck) in cos.iter_mut().enumerate() {
                if k > 0 {
                    term /= k as f64;
                }
                if k % 2 == 0 {
                    *ck = real(if (k / 2) % 2 == 0 { term } else { -term });
                }
            }
            let inv_cos = TruncatedSeries::from_vec_unchecked(cos).reciprocal().expect("cos(0) = 1");
            let mut t = sin.mul(&inv_cos).into_coeffs();
            // tan is odd; clear rounding residue at even powers
            for (k, tk) in t.iter_mut().enumerate() {
                if k % 2 == 0 {
                    *tk = real(0.0);
                }
            }
            c = t;
        }
        FamilyId::Reduced { inner, n: order } => {
            let order = *order as usize;
            let inner_coeffs = base_coeffs(inner, order * n + 1);
            // f(z) = z * phi(z^order); F(w) = w * phi(w)^order
            let phi: Vec<Complex64> = (0..n).map(|j| inner_coeffs[1 + order * j]).collect();
            let phi = TruncatedSeries::from_vec_unchecked(phi);
            let mut power = phi.clone();
            for _ in 1..order {
                power = power.mul(&phi);
            }
            for k in 1..=n {
                c[k] = power.coeff(k - 1);
            }
        }
        FamilyId::Custom { coeffs, .. } => {
            for (k, ck) in c.iter_mut().enumerate() {
                *ck = coeffs.get(k).copied().unwrap_or(real(0.0));
            }
        }
    }
    c
}

fn eval_base(id: &FamilyId, z: Complex64) -> Result<Complex64> {
    let one = real(1.0);
    let value = match id {
        FamilyId::Quadratic => z * (one - z),
        FamilyId::PolyD(d) => (one + z / *d as f64).powu(*d) - one,
        FamilyId::Exp => {
            // expm1 near 0 to avoid cancellation
            if z.norm() < 1e-5 {
                z * (one + z * (0.5 + z / 6.0))
            } else {
                z.exp() - one
            }
        }
        FamilyId::ZExp => z * z.exp(),
        FamilyId::Sin => z.sin(),
        FamilyId::Tan => {
            let cos = z.cos();
            if cos.norm() < POLE_THRESHOLD {
                return Err(Error::Pole { z });
            }
            z.sin() / cos
        }
        FamilyId::Reduced { inner, n } => {
            if z == real(0.0) {
                return Ok(z);
            }
            let root = z.powf(1.0 / *n as f64);
            eval_base(inner, root)?.powu(*n)
        }
        FamilyId::Custom { coeffs, .. } => coeffs.iter().rev().fold(real(0.0), |acc, c| acc * z + c),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_values() {
        let cat = family_catalog();
        assert_eq!(cat.len(), 6);
        assert_eq!(cat[0].v, real(0.25));
        assert!((cat[3].v.re + 0.36787944117144233).abs() < 1e-15);
        assert_eq!(cat[2].v, real(-1.0));
        assert_eq!(cat[1].v, real(-1.0));
        assert_eq!(cat[4].symmetry_order, 2);
        assert_eq!(cat[5].v, Complex64::new(0.0, 1.0));
        for spec in &cat {
            let s = spec.base_series(40);
            assert!(s.is_normalized(), "{spec}");
            assert!(spec.v.norm() > 0.0);
        }
    }

    #[test]
    fn singular_values_are_values_of_f() {
        // quadratic critical point 1/2, zexp critical point -1, poly_d critical point -d
        assert_eq!(FamilySpec::quadratic().eval_base(real(0.5)).unwrap(), real(0.25));
        let z = FamilySpec::zexp();
        assert!((z.eval_base(real(-1.0)).unwrap() - z.v).norm() < 1e-15);
        let p = FamilySpec::poly_d(4).unwrap();
        assert!((p.eval_base(real(-4.0)).unwrap() - p.v).norm() < 1e-15);
        assert!((FamilySpec::sin().eval_base(real(std::f64::consts::FRAC_PI_2)).unwrap() - real(1.0)).norm() < 1e-15);
    }

    #[test]
    fn series_examples() {
        let q = family_series(&FamilySpec::quadratic(), real(1.0), 4).unwrap();
        assert_eq!(q.coeff(1), real(1.0));
        assert_eq!(q.coeff(2), real(-1.0));
        assert_eq!(q.coeff(3), real(0.0));

        let s = family_series(&FamilySpec::sin(), real(1.0), 5).unwrap();
        let want = [0.0, 1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0];
        for (k, w) in want.iter().enumerate() {
            assert!((s.coeff(k) - real(*w)).norm() < 1e-16);
        }

        let t = family_series(&FamilySpec::tan(), real(1.0), 5).unwrap();
        let want = [0.0, 1.0, 0.0, 1.0 / 3.0, 0.0, 2.0 / 15.0];
        for (k, w) in want.iter().enumerate() {
            assert!((t.coeff(k) - real(*w)).norm() < 1e-15, "k={k}");
        }

        let lam = Complex64::new(0.3, 0.4);
        let e = family_series(&FamilySpec::exp(), lam, 6).unwrap();
        assert_eq!(e.coeff(1), lam);
        assert!(family_series(&FamilySpec::exp(), lam, 1).is_err());
    }

    #[test]
    fn tan_series_times_cos_is_sin() {
        // independent check of the series division
        let n = 25;
        let t = FamilySpec::tan().base_series(n);
        let cos: Vec<Complex64> = (0..=n)
            .map(|k| {
                if k % 2 == 1 {
                    return real(0.0);
                }
                let f: f64 = (1..=k).map(|j| j as f64).product();
                real(if (k / 2) % 2 == 0 { 1.0 / f } else { -1.0 / f })
            })
            .collect();
        let prod = t.mul(&TruncatedSeries::new(cos).unwrap());
        let sin = FamilySpec::sin().base_series(n);
        assert!(prod.max_abs_diff(&sin) < 1e-15);
    }

    #[test]
    fn eval_examples() {
        let q = FamilySpec::quadratic();
        assert_eq!(family_eval(&q, real(0.5), real(0.5)).unwrap(), real(0.125));
        assert_eq!(family_eval(&FamilySpec::exp(), real(1.0), real(0.0)).unwrap(), real(0.0));
        let err = family_eval(&FamilySpec::tan(), real(1.0), real(std::f64::consts::FRAC_PI_2));
        assert!(matches!(err, Err(Error::Pole { .. })));
    }

    #[test]
    fn poly_two_is_rescaled_quadratic() {
        // same map up to z -> k z with k = v_poly / v_quad
        let q = FamilySpec::quadratic();
        let p = FamilySpec::poly_d(2).unwrap();
        let k = p.v / q.v;
        for z in [real(0.1), Complex64::new(-0.2, 0.3), Complex64::new(0.05, -0.4)] {
            let lhs = p.eval_base(z).unwrap();
            let rhs = q.eval_base(z / k).unwrap() * k;
            assert!((lhs - rhs).norm() < 1e-15, "{z}");
        }
    }

    #[test]
    fn series_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut specs = family_catalog();
        specs.push(FamilySpec::poly_d(2).unwrap());
        specs.push(FamilySpec::sin().symmetry_reduce().unwrap());
        specs.push(FamilySpec::tan().symmetry_reduce().unwrap());
        for spec in &specs {
            let s = spec.base_series(40);
            for _ in 0..20 {
                let r = 0.1 * rng.gen::<f64>().sqrt();
                let th = rng.gen::<f64>() * std::f64::consts::TAU;
                let z = Complex64::from_polar(r, th);
                let closed = spec.eval_base(z).unwrap();
                assert!((s.value_at(z) - closed).norm() < 1e-10, "{spec} at {z}");
            }
        }
    }

    #[test]
    fn odd_families_have_zero_even_coefficients() {
        for spec in [FamilySpec::sin(), FamilySpec::tan()] {
            let s = spec.base_series(64);
            for k in (0..=64).step_by(2) {
                assert_eq!(s.coeff(k), real(0.0), "{spec} k={k}");
            }
        }
    }

    #[test]
    fn reduced_sin_expansion() {
        let r = FamilySpec::sin().symmetry_reduce().unwrap();
        assert_eq!(r.v, real(1.0));
        assert_eq!(r.symmetry_order, 1);
        assert_eq!(r.parameter_power, 2);
        let s = r.base_series(8);
        assert!((s.coeff(1) - real(1.0)).norm() < 1e-16);
        assert!((s.coeff(2) - real(-1.0 / 3.0)).norm() < 1e-16);
        assert!((s.coeff(3) - real(2.0 / 45.0)).norm() < 1e-16);

        // square the sine series and substitute w = z^2
        let n = 32;
        let sin = FamilySpec::sin().base_series(2 * n + 1);
        let sq = sin.mul(&sin);
        let full = r.base_series(n);
        for k in 0..=n {
            assert!((full.coeff(k) - sq.coeff(2 * k)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn reduced_tan_value() {
        let r = FamilySpec::tan().symmetry_reduce().unwrap();
        assert_eq!(r.v, real(-1.0));
        assert_eq!(r.lift_parameter(Complex64::new(0.0, 0.5)), real(-0.25));
    }

    #[test]
    fn reduce_requires_symmetry() {
        assert!(FamilySpec::quadratic().symmetry_reduce().is_err());
    }

    #[test]
    fn parse_names() {
        for spec in family_catalog() {
            let back: FamilySpec = spec.id.to_string().parse().unwrap();
            assert_eq!(back, spec);
        }
        let r: FamilySpec = "reduced:tan".parse().unwrap();
        assert_eq!(r.v, real(-1.0));
        assert!("poly_d:1".parse::<FamilySpec>().is_err());
        assert!("cosh".parse::<FamilySpec>().is_err());
    }

    #[test]
    fn custom_family_is_flagged() {
        let base = TruncatedSeries::from_real(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        let spec = FamilySpec::custom("cubic", &base, real(0.5), 2).unwrap();
        assert!(!spec.hypothesis_verified);
        assert_eq!(spec.eval_base(real(0.5)).unwrap(), real(0.625));
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["hypothesis_verified"], false);
    }
}
