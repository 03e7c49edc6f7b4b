//! Python bindings: module `siegel`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use siegel_core::construction::{auto_schedule, boundary_report, ConstructionConfig, BOUNDARY_SAMPLES, DEFAULT_DELTA};
use siegel_core::linearize::DEFAULT_BUDGET;
use siegel_core::qanorm::{default_order, DEFAULT_CIRCLE_SAMPLES};
use siegel_core::radius::{EstimatorOptions, Method, DEFAULT_DEPTH};
use siegel_core::series::DEFAULT_DEGREE;
use siegel_core::{Error, ErrorClass, FamilySpec, LinearizeOptions, RotationNumber, TruncatedSeries};

create_exception!(siegel, SiegelError, PyException, "Base class of all library errors.");
create_exception!(siegel, PreconditionError, SiegelError, "A documented precondition was violated.");
create_exception!(siegel, NumericalError, SiegelError, "The computation could not produce a trustworthy value.");

fn to_py(err: Error) -> PyErr {
    let msg = format!("{}: {err}", err.kind());
    match err.class() {
        ErrorClass::Precondition => PreconditionError::new_err(msg),
        ErrorClass::Numerical => NumericalError::new_err(msg),
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for siegel_core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Serializable value as plain Python data (dicts, lists, floats).
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| SiegelError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Rotation number from a float or a string such as `golden`, `rat:1/2`,
/// `cf:1,2,3`.
fn rotation(alpha: &Bound<'_, PyAny>) -> PyResult<RotationNumber> {
    if let Ok(text) = alpha.extract::<String>() {
        return text.parse().or_raise();
    }
    RotationNumber::float(alpha.extract::<f64>()?).or_raise()
}

/// One of the catalog families, by name (`quadratic`, `poly_d:3`, `exp`,
/// `zexp`, `sin`, `tan`, `reduced:sin`, `reduced:tan`).
#[pyclass(name = "Family", module = "siegel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: FamilySpec,
}

#[pymethods]
impl PyFamily {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(PyFamily { inner: name.parse().or_raise()? })
    }

    #[staticmethod]
    fn catalog() -> Vec<PyFamily> {
        siegel_core::family_catalog().into_iter().map(|inner| PyFamily { inner }).collect()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.to_string()
    }

    /// The distinguished singular value.
    #[getter]
    fn v(&self) -> Complex64 {
        self.inner.v
    }

    #[getter]
    fn symmetry_order(&self) -> u32 {
        self.inner.symmetry_order
    }

    /// Upper bound `log 4 + log|v|` for `u` and `rho`.
    #[getter]
    fn log_bound(&self) -> f64 {
        self.inner.log_bound()
    }

    /// `lambda * f(z)`
    fn eval(&self, lam: Complex64, z: Complex64) -> PyResult<Complex64> {
        siegel_core::family_eval(&self.inner, lam, z).or_raise()
    }

    fn symmetry_reduce(&self) -> PyResult<PyFamily> {
        Ok(PyFamily { inner: self.inner.symmetry_reduce().or_raise()? })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Family('{}')", self.inner)
    }
}

/// Truncated power series `c_0 + c_1 z + ... + c_N z^N`.
#[pyclass(name = "Series", module = "siegel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySeries {
    inner: TruncatedSeries,
}

impl From<TruncatedSeries> for PySeries {
    fn from(inner: TruncatedSeries) -> Self {
        PySeries { inner }
    }
}

#[pymethods]
impl PySeries {
    #[new]
    fn new(coeffs: Vec<Complex64>) -> PyResult<Self> {
        Ok(TruncatedSeries::new(coeffs).or_raise()?.into())
    }

    #[staticmethod]
    fn identity(degree: usize) -> Self {
        TruncatedSeries::identity(degree).into()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn coeffs(&self) -> Vec<Complex64> {
        (0..=self.inner.degree()).map(|k| self.inner.coeff(k)).collect()
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.value_at(z)
    }

    fn __add__(&self, other: &PySeries) -> PySeries {
        (&self.inner + &other.inner).into()
    }

    fn __sub__(&self, other: &PySeries) -> PySeries {
        (&self.inner - &other.inner).into()
    }

    fn __mul__(&self, other: &PySeries) -> PySeries {
        self.inner.mul(&other.inner).into()
    }

    fn __eq__(&self, other: &PySeries) -> bool {
        self.inner == other.inner
    }

    fn __len__(&self) -> usize {
        self.inner.degree() + 1
    }

    /// `self(inner(z))`; `inner` must vanish at 0.
    fn compose(&self, inner: &PySeries) -> PyResult<PySeries> {
        Ok(self.inner.compose(&inner.inner).or_raise()?.into())
    }

    /// Compositional inverse of a series `z + ...`.
    fn revert(&self) -> PyResult<PySeries> {
        Ok(self.inner.revert().or_raise()?.into())
    }

    fn derivative(&self, k: usize) -> PyResult<PySeries> {
        self.inner
            .derivative(k)
            .map(PySeries::from)
            .ok_or_else(|| PreconditionError::new_err(format!("derivative order {k} exceeds the degree")))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| SiegelError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PySeries> {
        serde_json::from_str::<TruncatedSeries>(text)
            .map(PySeries::from)
            .map_err(|e| PreconditionError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Series(degree={})", self.inner.degree())
    }
}

/// Value of the Yoccoz function at one parameter.
#[pyclass(name = "YoccozValue", module = "siegel", frozen, get_all)]
struct PyYoccozValue {
    lam: Complex64,
    w: Complex64,
    /// `log|w / lambda|`
    u: f64,
    iterations: u64,
    entry_radius: f64,
}

#[pymethods]
impl PyYoccozValue {
    fn __repr__(&self) -> String {
        format!("YoccozValue(w={}, u={})", self.w, self.u)
    }
}

/// Conformal radius estimate; `rho` is `-inf` for a collapsing disc.
#[pyclass(name = "RadiusEstimate", module = "siegel", frozen)]
struct PyRadiusEstimate {
    inner: siegel_core::RadiusEstimate,
}

#[pymethods]
impl PyRadiusEstimate {
    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho_hat.key()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha.value
    }

    #[getter]
    fn method(&self) -> &'static str {
        match self.inner.method {
            Method::Radial => "radial",
            Method::Coefficient => "coefficient",
        }
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn diverging(&self) -> bool {
        self.inner.diverging_to_minus_infinity
    }

    #[getter]
    fn samples(&self) -> Vec<(f64, f64)> {
        self.inner.samples.clone()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("RadiusEstimate(alpha={}, rho={}, method={})", self.inner.alpha, self.rho(), self.method())
    }
}

/// Estimator of `rho(alpha)` for one family.
#[pyclass(name = "RhoEstimator", module = "siegel", frozen)]
struct PyRhoEstimator {
    inner: siegel_core::RhoEstimator,
}

#[pymethods]
impl PyRhoEstimator {
    #[new]
    #[pyo3(signature = (family, method = "radial", depth = DEFAULT_DEPTH, degree = DEFAULT_DEGREE))]
    fn new(family: &PyFamily, method: &str, depth: u32, degree: usize) -> PyResult<Self> {
        let options = EstimatorOptions { method: method.parse().or_raise()?, depth, degree, ..Default::default() };
        Ok(PyRhoEstimator { inner: siegel_core::RhoEstimator::new(&family.inner, options).or_raise()? })
    }

    /// `alpha` is a float or a string such as `golden` or `rat:1/3`.
    fn estimate(&self, py: Python<'_>, alpha: &Bound<'_, PyAny>) -> PyResult<PyRadiusEstimate> {
        let alpha = rotation(alpha)?;
        let inner = py.detach(|| self.inner.estimate(&alpha)).or_raise()?;
        Ok(PyRadiusEstimate { inner })
    }
}

/// Quasi-analytic norm of a series on `|w| <= r`.
#[pyclass(name = "NormResult", module = "siegel", frozen, get_all)]
struct PyNormResult {
    r: f64,
    order: usize,
    value: f64,
    argmax_k: usize,
    argmax_point: Complex64,
}

#[pymethods]
impl PyNormResult {
    fn __repr__(&self) -> String {
        format!("NormResult(value={}, argmax_k={})", self.value, self.argmax_k)
    }
}

#[pyfunction]
#[pyo3(signature = (family, lam, degree = DEFAULT_DEGREE))]
fn koenigs_series(family: &PyFamily, lam: Complex64, degree: usize) -> PyResult<PySeries> {
    Ok(siegel_core::koenigs_series(&family.inner, lam, degree).or_raise()?.h.into())
}

/// Returns the series and the smallest divisor met.
#[pyfunction]
#[pyo3(signature = (family, alpha, degree = DEFAULT_DEGREE))]
fn siegel_series(family: &PyFamily, alpha: &Bound<'_, PyAny>, degree: usize) -> PyResult<(PySeries, f64)> {
    let s = siegel_core::siegel_series(&family.inner, rotation(alpha)?.value, degree).or_raise()?;
    Ok((s.g.into(), s.divisor_floor))
}

#[pyfunction]
#[pyo3(signature = (family, lam, degree = DEFAULT_DEGREE, budget = DEFAULT_BUDGET))]
fn yoccoz_w(py: Python<'_>, family: &PyFamily, lam: Complex64, degree: usize, budget: u64) -> PyResult<PyYoccozValue> {
    let options = LinearizeOptions { degree, budget, ..Default::default() };
    let y = py
        .detach(|| siegel_core::YoccozEvaluator::new(&family.inner, options).and_then(|ev| ev.eval(lam)))
        .or_raise()?;
    Ok(PyYoccozValue { lam: y.lambda, w: y.w, u: y.u, iterations: y.iterations_used, entry_radius: y.entry_radius })
}

#[pyfunction]
#[pyo3(signature = (series, r, order = None, samples = DEFAULT_CIRCLE_SAMPLES))]
fn qa_norm(series: &PySeries, r: f64, order: Option<usize>, samples: usize) -> PyResult<PyNormResult> {
    let order = order.unwrap_or_else(|| default_order(series.inner.degree()));
    let n = siegel_core::qa_norm(&series.inner, r, order, samples).or_raise()?;
    Ok(PyNormResult { r: n.r, order: n.order, value: n.value, argmax_k: n.argmax_k, argmax_point: n.argmax_point })
}

#[pyfunction]
#[pyo3(signature = (a, b, r, order = None, samples = DEFAULT_CIRCLE_SAMPLES))]
fn qa_distance(a: &PySeries, b: &PySeries, r: f64, order: Option<usize>, samples: usize) -> PyResult<f64> {
    let order = order.unwrap_or_else(|| default_order(a.inner.degree().max(b.inner.degree())));
    siegel_core::qa_distance(&a.inner, &b.inner, r, order, samples).or_raise()
}

/// Rotation number `[0; a_1, a_2, ...]` as a float.
#[pyfunction]
fn rotation_from_cf(coeffs: Vec<u64>) -> PyResult<f64> {
    Ok(siegel_core::rotation_from_cf(&coeffs).or_raise()?.value)
}

/// Finite-depth construction; returns the report as a dict. A stalled run
/// raises `NumericalError`.
#[pyfunction]
#[pyo3(signature = (family, alpha0, eps0, rho_inf, depth, delta = DEFAULT_DELTA, schedule = None, method = "coeff"))]
#[allow(clippy::too_many_arguments)]
fn construct<'py>(
    py: Python<'py>,
    family: &PyFamily,
    alpha0: &Bound<'_, PyAny>,
    eps0: f64,
    rho_inf: f64,
    depth: usize,
    delta: f64,
    schedule: Option<Vec<f64>>,
    method: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = ConstructionConfig::new(family.inner.clone(), rotation(alpha0)?, eps0, rho_inf, depth);
    cfg.delta = delta;
    cfg.estimator = method.parse().or_raise()?;
    let report = py
        .detach(|| {
            cfg.rho_schedule = match schedule {
                Some(s) => s,
                None => auto_schedule(cfg.start_rho()?, cfg.rho_inf, cfg.depth),
            };
            siegel_core::run_construction(&cfg)
        })
        .or_raise()?;
    to_python(py, &report)
}

/// Image of `|w| = e^rho` under the Siegel linearization, as a dict.
#[pyfunction]
#[pyo3(signature = (family, alpha, rho, samples = BOUNDARY_SAMPLES))]
fn boundary<'py>(
    py: Python<'py>,
    family: &PyFamily,
    alpha: &Bound<'_, PyAny>,
    rho: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let alpha = rotation(alpha)?;
    let report = py.detach(|| boundary_report(&family.inner, &alpha, rho, samples)).or_raise()?;
    to_python(py, &report)
}

#[pymodule]
fn siegel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("SiegelError", py.get_type::<SiegelError>())?;
    m.add("PreconditionError", py.get_type::<PreconditionError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyYoccozValue>()?;
    m.add_class::<PyRadiusEstimate>()?;
    m.add_class::<PyRhoEstimator>()?;
    m.add_class::<PyNormResult>()?;
    m.add_function(wrap_pyfunction!(koenigs_series, m)?)?;
    m.add_function(wrap_pyfunction!(siegel_series, m)?)?;
    m.add_function(wrap_pyfunction!(yoccoz_w, m)?)?;
    m.add_function(wrap_pyfunction!(qa_norm, m)?)?;
    m.add_function(wrap_pyfunction!(qa_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_from_cf, m)?)?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    m.add_function(wrap_pyfunction!(boundary, m)?)?;
    Ok(())
}
