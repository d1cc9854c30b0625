//! Python bindings: `import svir`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use svir_core::scenario::{self, ConfigBuilder, ScenarioConfig};
use svir_core::{equilibria, model, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        e if e.is_config_error() => PyValueError::new_err(e.to_string()),
        Error::Domain { .. } => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Parameters", module = "svir")]
struct PyParameters {
    inner: model::Parameters,
}

#[pymethods]
impl PyParameters {
    #[new]
    #[pyo3(signature = (lambda_, mu, alpha, gamma1, gamma, c, d_s, d_v, d_i, d_r, k = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        lambda_: f64,
        mu: f64,
        alpha: f64,
        gamma1: f64,
        gamma: f64,
        c: f64,
        d_s: f64,
        d_v: f64,
        d_i: f64,
        d_r: f64,
        k: f64,
    ) -> PyResult<Self> {
        let inner = model::Parameters { lambda: lambda_, mu, alpha, gamma1, gamma, c, d_s, d_v, d_i, d_r, k };
        inner.validate().map_err(to_py)?;
        Ok(PyParameters { inner })
    }

    #[staticmethod]
    fn table1() -> Self {
        PyParameters { inner: model::Parameters::table1() }
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn gamma1(&self) -> f64 {
        self.inner.gamma1
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }
    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }
    #[getter]
    fn diffusion(&self) -> (f64, f64, f64, f64) {
        let p = &self.inner;
        (p.d_s, p.d_v, p.d_i, p.d_r)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "IncidenceFunction", module = "svir")]
struct PyIncidence {
    inner: model::IncidenceFunction,
}

#[pymethods]
impl PyIncidence {
    #[staticmethod]
    fn bilinear(beta: f64) -> PyResult<Self> {
        Ok(PyIncidence { inner: model::IncidenceFunction::bilinear(beta).map_err(to_py)? })
    }

    #[staticmethod]
    fn exponential_damped(beta: f64, m: f64) -> PyResult<Self> {
        Ok(PyIncidence { inner: model::IncidenceFunction::exponential_damped(beta, m).map_err(to_py)? })
    }

    #[staticmethod]
    fn saturated(beta: f64, a1: f64) -> PyResult<Self> {
        Ok(PyIncidence { inner: model::IncidenceFunction::saturated(beta, a1).map_err(to_py)? })
    }

    #[staticmethod]
    fn rational_quadratic(beta: f64, omega1: f64, omega2: f64) -> PyResult<Self> {
        Ok(PyIncidence { inner: model::IncidenceFunction::rational_quadratic(beta, omega1, omega2).map_err(to_py)? })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family_name()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn value(&self, i: f64) -> PyResult<f64> {
        self.inner.value(i).map_err(to_py)
    }

    /// (first, second) derivative at `i`.
    fn derivatives(&self, i: f64) -> PyResult<(f64, f64)> {
        self.inner.derivatives(i).map_err(to_py)
    }

    fn __call__(&self, i: f64) -> PyResult<f64> {
        self.value(i)
    }

    fn __repr__(&self) -> String {
        format!("IncidenceFunction({})", self.inner)
    }
}

#[pyclass(name = "DelayKernel", module = "svir")]
struct PyKernel {
    inner: model::DelayKernel,
}

#[pymethods]
impl PyKernel {
    #[staticmethod]
    fn dirac(tau0: f64, k: f64) -> PyResult<Self> {
        Ok(PyKernel { inner: model::DelayKernel::dirac(tau0, k).map_err(to_py)? })
    }

    #[staticmethod]
    fn uniform(k: f64) -> PyResult<Self> {
        Ok(PyKernel { inner: model::DelayKernel::uniform(k).map_err(to_py)? })
    }

    #[staticmethod]
    fn table(nodes: Vec<f64>, densities: Vec<f64>) -> PyResult<Self> {
        Ok(PyKernel { inner: model::DelayKernel::table(nodes, densities).map_err(to_py)? })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family_name()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn mass(&self) -> f64 {
        self.inner.kernel_mass()
    }

    fn density(&self, tau: f64) -> Option<f64> {
        self.inner.density(tau)
    }
}

#[pyfunction]
fn basic_reproduction_number(p: PyRef<'_, PyParameters>, f: PyRef<'_, PyIncidence>, h: PyRef<'_, PyIncidence>) -> PyResult<f64> {
    equilibria::basic_reproduction_number(&p.inner, &f.inner, &h.inner).map_err(to_py)
}

/// (S0, V0).
#[pyfunction]
fn disease_free(p: PyRef<'_, PyParameters>) -> PyResult<(f64, f64)> {
    let e = equilibria::disease_free(&p.inner).map_err(to_py)?;
    Ok((e.s, e.v))
}

/// (S*, V*, I*, R*), or None when R0 <= 1.
#[pyfunction]
fn endemic_equilibrium(
    p: PyRef<'_, PyParameters>,
    f: PyRef<'_, PyIncidence>,
    h: PyRef<'_, PyIncidence>,
) -> PyResult<Option<(f64, f64, f64, f64)>> {
    match equilibria::endemic_equilibrium(&p.inner, &f.inner, &h.inner) {
        Ok(e) => Ok(Some((e.s, e.v, e.i, e.recovered(&p.inner)))),
        Err(Error::NoEndemicEquilibrium { .. }) => Ok(None),
        Err(e) => Err(to_py(e)),
    }
}

#[pyfunction]
fn hprime_zero_identity(
    p: PyRef<'_, PyParameters>,
    f: PyRef<'_, PyIncidence>,
    h: PyRef<'_, PyIncidence>,
) -> PyResult<(f64, f64)> {
    equilibria::hprime_zero_identity(&p.inner, &f.inner, &h.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (f, h, i_max = model::DEFAULT_I_MAX, n_samples = model::DEFAULT_SAMPLES))]
fn check_hypotheses<'py>(
    py: Python<'py>,
    f: PyRef<'_, PyIncidence>,
    h: PyRef<'_, PyIncidence>,
    i_max: f64,
    n_samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if !(i_max > 0.0 && i_max.is_finite()) || n_samples < 2 {
        return Err(PyValueError::new_err("need i_max > 0 and n_samples >= 2"));
    }
    let r = model::check_hypotheses(&f.inner, &h.inner, i_max, n_samples);
    let d = PyDict::new(py);
    d.set_item("h1_holds", r.h1_holds)?;
    d.set_item("h2_holds", r.h2_holds)?;
    d.set_item("first_violation", r.first_violation.as_ref().map(|v| v.to_string()))?;
    d.set_item("violation_at", r.first_violation.as_ref().map(|v| v.at))?;
    d.set_item("i_max", r.i_max)?;
    d.set_item("n_samples", r.n_samples)?;
    Ok(d)
}

fn scenario_from(
    preset: Option<&str>,
    config: Option<PathBuf>,
    overrides: Option<std::collections::BTreeMap<String, String>>,
) -> PyResult<ScenarioConfig> {
    let mut b = match preset {
        Some(name) => ConfigBuilder::preset(name).map_err(to_py)?,
        None => ConfigBuilder::new(),
    };
    if let Some(path) = config {
        b.merge_file(&path).map_err(to_py)?;
    }
    for (k, v) in overrides.unwrap_or_default() {
        b.set(&k, &v).map_err(to_py)?;
    }
    b.build().map_err(to_py)
}

/// Analysis report as `key = value` text.
#[pyfunction]
#[pyo3(signature = (preset = None, config = None, overrides = None))]
fn analyze(preset: Option<&str>, config: Option<PathBuf>, overrides: Option<std::collections::BTreeMap<String, String>>) -> PyResult<String> {
    let cfg = scenario_from(preset, config, overrides)?;
    Ok(scenario::analyze(&cfg).map_err(to_py)?.to_string())
}

/// Runs a scenario, writing its CSV outputs under `out`; returns a summary dict.
#[pyfunction]
#[pyo3(signature = (out, preset = None, config = None, overrides = None))]
fn simulate<'py>(
    py: Python<'py>,
    out: PathBuf,
    preset: Option<&str>,
    config: Option<PathBuf>,
    overrides: Option<std::collections::BTreeMap<String, String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = scenario_from(preset, config, overrides)?;
    let s = py.detach(|| scenario::cmd_simulate(&cfg, &out)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("R0", s.r0)?;
    d.set_item("I_star", s.i_star)?;
    d.set_item("stop", s.stop.to_string())?;
    d.set_item("final_I_sup", s.final_i_sup)?;
    d.set_item("certificate", s.certificate.label())?;
    d.set_item("clamps", s.clamp_count)?;
    d.set_item("dt", s.dt)?;
    d.set_item("t", s.records.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("I_mean", s.records.iter().map(|r| r.mean[2]).collect::<Vec<_>>())?;
    d.set_item("final_I", s.final_state.i.0.clone())?;
    Ok(d)
}

#[pymodule]
fn svir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParameters>()?;
    m.add_class::<PyIncidence>()?;
    m.add_class::<PyKernel>()?;
    m.add_function(wrap_pyfunction!(basic_reproduction_number, m)?)?;
    m.add_function(wrap_pyfunction!(disease_free, m)?)?;
    m.add_function(wrap_pyfunction!(endemic_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(hprime_zero_identity, m)?)?;
    m.add_function(wrap_pyfunction!(check_hypotheses, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("PRESETS", scenario::PRESETS.to_vec())?;
    Ok(())
}
