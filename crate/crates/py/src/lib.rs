//! Python bindings: closed-form laws, compound Poisson laws, second-order
//! predictions, diagnostics and Lévy measure inversion.

use std::sync::Arc;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use subexp::asym::{self, RegVaryingTail, SecondOrderPrediction};
use subexp::conv::{tail_convolve, CompoundWeights};
use subexp::diag::{self, DiagnosticReport, PowerSource};
use subexp::infdiv::{self, CompoundOptions, CompoundPoissonLaw, GridSpec, LevySpec};
use subexp::laws::{parse_law, parse_slowly_varying, Law as CoreLaw, TailFunction};

pub fn to_py(e: subexp::Error) -> PyErr {
    if e.is_precondition() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

/// A closed-form law such as `pareto:alpha=3`, `weibull:beta=0.5`, `lognormal`, `exp:rate=1`.
#[pyclass(frozen, module = "subexp_py")]
pub struct Law {
    spec: String,
    inner: Arc<dyn CoreLaw>,
}

#[pymethods]
impl Law {
    #[new]
    pub fn new(spec: &str) -> PyResult<Self> {
        let inner = parse_law(spec).map_err(to_py)?;
        Ok(Self { spec: spec.to_string(), inner: Arc::new(inner) })
    }

    pub fn tail(&self, x: f64) -> f64 {
        self.inner.tail(x)
    }

    /// Mass of `(x, x + c]`.
    pub fn interval_mass(&self, x: f64, c: f64) -> f64 {
        self.inner.interval_mass(x, c)
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        self.inner.pdf(x)
    }

    /// `None` when the mean is infinite.
    pub fn mean(&self) -> Option<f64> {
        self.inner.mean().finite()
    }

    /// Tail of the sum of an independent copy of this law and `other`.
    pub fn convolved_tail(&self, other: &Law, x: f64) -> PyResult<f64> {
        let a = TailFunction::from_law(self.inner.clone());
        Ok(tail_convolve(&a, other.inner.as_ref(), x).map_err(to_py)?.value)
    }

    fn __repr__(&self) -> String {
        format!("Law('{}')", self.spec)
    }
}

/// Compound Poisson law with Lévy measure `delta * jump` restricted to `(cutoff, inf)`.
#[pyclass(frozen, module = "subexp_py")]
pub struct CompoundPoisson {
    inner: CompoundPoissonLaw,
}

#[pymethods]
impl CompoundPoisson {
    #[new]
    #[pyo3(signature = (jump, delta = 0.5, cutoff = 1.0, x_max = 1000.0, max_t = 1.0))]
    pub fn new(jump: &str, delta: f64, cutoff: f64, x_max: f64, max_t: f64) -> PyResult<Self> {
        let spec = LevySpec::parse(cutoff, delta, jump).map_err(to_py)?;
        let opts = CompoundOptions::default().with_x_max(x_max).with_max_t(max_t);
        Ok(Self { inner: CompoundPoissonLaw::new(&spec, opts).map_err(to_py)? })
    }

    pub fn tail(&self, x: f64) -> PyResult<f64> {
        Ok(self.inner.try_tail(x).map_err(to_py)?.value)
    }

    /// Tail of the t-th convolution power.
    pub fn power_tail(&self, t: f64, x: f64) -> PyResult<f64> {
        let p = self.inner.power(t).map_err(to_py)?;
        Ok(p.try_tail(x).map_err(to_py)?.value)
    }

    pub fn levy_tail(&self, x: f64) -> f64 {
        self.inner.levy_tail(x)
    }

    /// `tail(x) - levy_tail(x)` without cancellation.
    pub fn excess_over_levy(&self, x: f64) -> PyResult<f64> {
        Ok(self.inner.excess_over_levy(x).map_err(to_py)?.value)
    }

    pub fn laplace(&self, s: f64) -> PyResult<f64> {
        Ok(self.inner.laplace(s).map_err(to_py)?.value)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// `prediction(x) = leading(x) + coefficient * normalizer(x)`.
#[pyclass(frozen, module = "subexp_py")]
pub struct Prediction {
    inner: SecondOrderPrediction,
}

#[pymethods]
impl Prediction {
    pub fn leading(&self, x: f64) -> f64 {
        self.inner.leading(x)
    }

    pub fn normalizer(&self, x: f64) -> f64 {
        self.inner.normalizer(x)
    }

    pub fn correction(&self, x: f64) -> f64 {
        self.inner.correction(x)
    }

    pub fn prediction(&self, x: f64) -> f64 {
        self.inner.prediction(x)
    }

    pub fn relative_correction(&self, x: f64) -> f64 {
        self.inner.relative_correction(x)
    }

    #[getter]
    pub fn coefficient(&self) -> f64 {
        self.inner.coefficient()
    }

    #[getter]
    pub fn description(&self) -> String {
        self.inner.description().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Prediction('{}', coefficient={})", self.inner.description(), self.inner.coefficient())
    }
}

fn wrap(p: subexp::Result<SecondOrderPrediction>) -> PyResult<Prediction> {
    p.map(|inner| Prediction { inner }).map_err(to_py)
}

#[pyfunction]
pub fn predict_nu_from_mu(law: &Law) -> PyResult<Prediction> {
    wrap(asym::predict_nu_from_mu(law.inner.clone()))
}

/// `law` is the Lévy measure normalised to a probability law, `mean` the mean of mu.
#[pyfunction]
pub fn predict_mu_from_nu(law: &Law, mean: f64) -> PyResult<Prediction> {
    wrap(asym::predict_mu_from_nu(TailFunction::from_law(law.inner.clone()), mean))
}

#[pyfunction]
pub fn predict_power(law: &Law, t: f64) -> PyResult<Prediction> {
    wrap(asym::predict_power(law.inner.clone(), t))
}

/// Poisson(delta) compound sum of `law`.
#[pyfunction]
pub fn predict_compound(delta: f64, law: &Law) -> PyResult<Prediction> {
    let w = CompoundWeights::poisson(delta).map_err(to_py)?;
    wrap(asym::predict_compound(&w, law.inner.clone()))
}

/// Regular-variation predictions; returns `(regime, nu_from_mu, power)`.
#[pyfunction]
#[pyo3(signature = (alpha, l = "one", mean = None, t = 1.0))]
pub fn predict_rv(alpha: f64, l: &str, mean: Option<f64>, t: f64) -> PyResult<(String, Prediction, Prediction)> {
    let l = parse_slowly_varying(l).map_err(to_py)?;
    let rv = RegVaryingTail::new(alpha, l).map_err(to_py)?;
    let p = asym::predict_rv(&rv, mean, t).map_err(to_py)?;
    Ok((p.regime.name().to_string(), Prediction { inner: p.nu_from_mu }, Prediction { inner: p.power }))
}

#[pyfunction]
pub fn c_alpha(alpha: f64) -> PyResult<f64> {
    asym::c_alpha(alpha).map_err(to_py)
}

#[pyfunction]
pub fn k_alpha(alpha: f64) -> PyResult<f64> {
    asym::k_alpha(alpha).map_err(to_py)
}

#[pyfunction]
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    diag::log_grid(lo, hi, n)
}

/// Sampled ratio or residual series with a verdict.
#[pyclass(frozen, get_all, module = "subexp_py")]
pub struct Report {
    pub name: String,
    pub xs: Vec<f64>,
    pub observed: Vec<f64>,
    pub target: f64,
    pub verdict: String,
    pub trend: f64,
    pub tolerance: f64,
}

impl From<DiagnosticReport> for Report {
    fn from(r: DiagnosticReport) -> Self {
        Self {
            name: r.name,
            xs: r.xs,
            observed: r.observed,
            target: r.target,
            verdict: r.verdict.to_string(),
            trend: r.trend,
            tolerance: r.tolerance,
        }
    }
}

#[pymethods]
impl Report {
    fn __repr__(&self) -> String {
        format!("Report('{}', {}, target={})", self.name, self.verdict, self.target)
    }
}

/// Run a class diagnostic on a closed-form law: lloc, sloc, s2loc,
/// s2loc-hypotheses, sd, s2d, power-ratio or power-pair.
#[pyfunction]
#[pyo3(signature = (law, class_name, xs, c = 1.0, t = 2.0))]
pub fn diagnose(law: &Law, class_name: &str, xs: Vec<f64>, c: f64, t: f64) -> PyResult<Vec<Report>> {
    let l = law.inner.as_ref();
    let reports = match class_name {
        "lloc" => diag::check_lloc(l, c, &xs).map(|r| vec![r]),
        "sloc" => diag::check_sloc(l, c, &xs).map(|r| vec![r]),
        "s2loc" => diag::check_s2loc(l, &xs).map(|r| vec![r]),
        "s2loc-hypotheses" => diag::check_s2loc_hypotheses(l, &xs).map(|r| vec![r]),
        "sd" => diag::check_sd(l, &xs).map(|r| vec![r]),
        "s2d" => diag::check_s2d(l, &xs).map(|r| vec![r]),
        "power-ratio" => diag::check_power_ratio(PowerSource::Folds(&law.inner), t, &xs).map(|r| vec![r]),
        "power-pair" => diag::check_power_pair(PowerSource::Folds(&law.inner), t, &xs),
        other => return Err(PyValueError::new_err(format!("unknown class '{other}'"))),
    };
    Ok(reports.map_err(to_py)?.into_iter().map(Report::from).collect())
}

/// Every diagnostic of a named example (`lognormal`, `weibull:0.5`, `pareto:3`, ...).
#[pyfunction]
pub fn validate(example: &str, xs: Vec<f64>) -> PyResult<Vec<Report>> {
    let ex: diag::Example = example.parse().map_err(to_py)?;
    let bundle = diag::validate_example(ex, &xs).map_err(to_py)?;
    if let Some((claim, e)) = bundle.errors.into_iter().next() {
        return Err(PyArithmeticError::new_err(format!("{claim}: {e}")));
    }
    Ok(bundle.reports.into_iter().map(Report::from).collect())
}

/// Recover the jump measure from the compound Poisson law and compare Laplace
/// transforms against the discretised jump measure.
#[pyfunction]
#[pyo3(signature = (jump, delta = 0.5, cutoff = 1.0, step = 1.0 / 64.0, cells = 4096, ts = vec![0.1, 0.3, 1.0, 3.0, 10.0]))]
pub fn invert<'py>(
    py: Python<'py>,
    jump: &str,
    delta: f64,
    cutoff: f64,
    step: f64,
    cells: usize,
    ts: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = LevySpec::parse(cutoff, delta, jump).map_err(to_py)?;
    let grid = GridSpec { step, cells };
    let nu = infdiv::jump_grid(&spec, grid).map_err(to_py)?;
    let sigma = infdiv::sigma_from_spec(&spec, grid).map_err(to_py)?;
    let inv = infdiv::invert_levy(&sigma, delta).map_err(to_py)?;
    let mut recovered = Vec::with_capacity(ts.len());
    let mut expected = Vec::with_capacity(ts.len());
    for &t in &ts {
        recovered.push(infdiv::laplace(&inv.measure, t).map_err(to_py)?.value);
        expected.push(infdiv::laplace(&nu, t).map_err(to_py)?.value);
    }
    let d = PyDict::new(py);
    d.set_item("t", ts)?;
    d.set_item("recovered", recovered)?;
    d.set_item("jump_grid", expected)?;
    d.set_item("masses", inv.measure.masses().to_vec())?;
    d.set_item("origin", inv.measure.origin())?;
    d.set_item("step", inv.measure.step())?;
    d.set_item("terms", inv.terms)?;
    d.set_item("clamped_mass", inv.clamped_mass)?;
    d.set_item("truncation_bound", inv.truncation_bound)?;
    Ok(d)
}

#[pymodule(name = "subexp_py")]
pub fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Law>()?;
    m.add_class::<CompoundPoisson>()?;
    m.add_class::<Prediction>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(predict_nu_from_mu, m)?)?;
    m.add_function(wrap_pyfunction!(predict_mu_from_nu, m)?)?;
    m.add_function(wrap_pyfunction!(predict_power, m)?)?;
    m.add_function(wrap_pyfunction!(predict_compound, m)?)?;
    m.add_function(wrap_pyfunction!(predict_rv, m)?)?;
    m.add_function(wrap_pyfunction!(c_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(k_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(log_grid, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    Ok(())
}
