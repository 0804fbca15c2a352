//! Python bindings: `import ecoepi`.

use ecoepi_core::cli;
use ecoepi_core::model::{compute_thresholds, extinction_criterion, persistence_bound, vector_field};
use ecoepi_core::pullback::{pullback_state, s_star};
use ecoepi_core::scenario::Scenario;
use ecoepi_core::{
    check_hypotheses, hausdorff_semidist, integrate, sample_realization, Dynamics, Error, IntegratorConfig, ModelParams,
    NoiseRealization, NoiseSpec, ResponseSpec, State, Variant,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn to_py_err(e: Error) -> PyErr {
    if e.exit_code() == 2 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn state(x: [f64; 3]) -> State {
    State::from_array(x)
}

#[pyclass(name = "Params", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: ModelParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (mu=0.5, beta=0.2, eta=0.1, c=1.0, gamma=0.6, r=0.4, delta1=0.8, delta2=0.05))]
    #[allow(clippy::too_many_arguments)]
    fn new(mu: f64, beta: f64, eta: f64, c: f64, gamma: f64, r: f64, delta1: f64, delta2: f64) -> PyResult<Self> {
        let inner = ModelParams {
            mu,
            beta,
            eta,
            c,
            gamma,
            r,
            delta1,
            delta2,
        };
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Response", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyResponse {
    inner: ResponseSpec,
}

#[pymethods]
impl PyResponse {
    /// `Response("holling2", k=1.0, m=0.5)`; omitted coefficients are 1.
    #[new]
    #[pyo3(signature = (family, **coefficients))]
    fn new(family: &str, coefficients: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = ResponseSpec::default_for(family).map_err(to_py_err)?;
        if let Some(coefs) = coefficients {
            for (name, value) in coefs.iter() {
                let name: String = name.extract()?;
                inner.set_coefficient(&name, value.extract()?).map_err(to_py_err)?;
            }
        }
        inner.validate().map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family()
    }

    fn coefficients(&self) -> Vec<(&'static str, f64)> {
        self.inner.coefficients()
    }

    fn f(&self, s: f64, i: f64, p: f64) -> f64 {
        self.inner.eval_f(s, i, p)
    }

    fn g(&self, s: f64, i: f64, p: f64) -> f64 {
        self.inner.eval_g(s, i, p)
    }

    #[pyo3(signature = (box_max=100.0, grid_n=16))]
    fn check_hypotheses<'py>(&self, py: Python<'py>, box_max: f64, grid_n: usize) -> PyResult<Bound<'py, PyAny>> {
        let report = check_hypotheses(&self.inner, box_max, grid_n).map_err(to_py_err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Noise", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNoise {
    inner: NoiseRealization,
}

#[pymethods]
impl PyNoise {
    #[new]
    #[pyo3(signature = (kind="torus_rotation", q0=1.0, eps=0.1, seed=0, frequencies=None, rate=1.0, volatility=1.0, t_max=1e4, step=1e-2))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        q0: f64,
        eps: f64,
        seed: u64,
        frequencies: Option<Vec<f64>>,
        rate: f64,
        volatility: f64,
        t_max: f64,
        step: f64,
    ) -> PyResult<Self> {
        let spec = match kind {
            "constant" => NoiseSpec::constant(q0, eps),
            "torus_rotation" => match frequencies {
                Some(nu) => NoiseSpec::torus(q0, eps, nu),
                None => NoiseSpec::default_torus(q0, eps),
            },
            "squashed_ou" => NoiseSpec::squashed_ou(q0, eps, rate, volatility, t_max, step),
            other => return Err(PyValueError::new_err(format!("unknown noise kind `{other}`"))),
        };
        let inner = sample_realization(&spec, seed).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn lambda_at(&self, t: f64) -> PyResult<f64> {
        self.inner.lambda_at(t).map_err(to_py_err)
    }

    fn shift(&self, s: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.shift(s).map_err(to_py_err)?,
        })
    }

    /// `S*(ω)` at horizon `40/μ` unless given.
    #[pyo3(signature = (mu, horizon=None, quad_step=1e-3))]
    fn s_star(&self, mu: f64, horizon: Option<f64>, quad_step: f64) -> PyResult<f64> {
        s_star(&self.inner, mu, horizon.unwrap_or(40.0 / mu), quad_step).map_err(to_py_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn time_offset(&self) -> f64 {
        self.inner.time_offset()
    }
}

fn dynamics<'a>(variant: &str, params: &'a ModelParams, response: Option<&'a ResponseSpec>) -> PyResult<Dynamics<'a>> {
    let variant: Variant = variant.parse().map_err(to_py_err)?;
    Dynamics::new(variant, params, response.map(|r| r as _)).map_err(to_py_err)
}

fn integrator(method: &str, step: f64, tol: f64) -> PyResult<IntegratorConfig> {
    Ok(IntegratorConfig {
        method: method.parse().map_err(to_py_err)?,
        step,
        abs_tol: tol,
        rel_tol: tol,
        ..IntegratorConfig::default()
    })
}

/// `(dS, dI, dP)` of the full system.
#[pyfunction]
fn rates(params: PyRef<'_, PyParams>, response: PyRef<'_, PyResponse>, lam: f64, x: [f64; 3]) -> [f64; 3] {
    vector_field(&params.inner, &response.inner, lam, state(x))
}

/// Thresholds, persistence bound and extinction margins of the full system.
#[pyfunction]
fn thresholds<'py>(
    py: Python<'py>,
    params: PyRef<'_, PyParams>,
    response: PyRef<'_, PyResponse>,
    q0: f64,
    eps: f64,
    delta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct Out {
        thresholds: ecoepi_core::Thresholds,
        persistence_bound: f64,
        extinction: ecoepi_core::CriterionReport,
    }
    let th = compute_thresholds(&params.inner, &response.inner, q0, eps, delta).map_err(to_py_err)?;
    let out = Out {
        thresholds: th,
        persistence_bound: persistence_bound(&th),
        extinction: extinction_criterion(&params.inner, &response.inner, &th),
    };
    to_py(py, &out)
}

/// Returns `(times, states)` with states as `[S, I, P]` rows.
#[pyfunction]
#[pyo3(name = "integrate", signature = (params, noise, t0, t1, x0, response=None, variant="full", method="rk45_adaptive", step=0.1, tol=1e-8))]
#[allow(clippy::too_many_arguments)]
fn integrate_py(
    params: PyRef<'_, PyParams>,
    noise: PyRef<'_, PyNoise>,
    t0: f64,
    t1: f64,
    x0: [f64; 3],
    response: Option<PyRef<'_, PyResponse>>,
    variant: &str,
    method: &str,
    step: f64,
    tol: f64,
) -> PyResult<(Vec<f64>, Vec<[f64; 3]>)> {
    let d = dynamics(variant, &params.inner, response.as_ref().map(|r| &r.inner))?;
    let traj = integrate(&d, &noise.inner, t0, t1, state(x0), &integrator(method, step, tol)?).map_err(to_py_err)?;
    Ok((traj.times.clone(), traj.states.iter().map(|x| x.to_array()).collect()))
}

#[pyfunction]
#[pyo3(name = "pullback_state", signature = (params, noise, t, x0, response=None, variant="full", tol=1e-8))]
#[allow(clippy::too_many_arguments)]
fn pullback_state_py(
    params: PyRef<'_, PyParams>,
    noise: PyRef<'_, PyNoise>,
    t: f64,
    x0: [f64; 3],
    response: Option<PyRef<'_, PyResponse>>,
    variant: &str,
    tol: f64,
) -> PyResult<[f64; 3]> {
    let d = dynamics(variant, &params.inner, response.as_ref().map(|r| &r.inner))?;
    let cfg = IntegratorConfig::adaptive(tol);
    Ok(pullback_state(&d, &noise.inner, t, state(x0), &cfg).map_err(to_py_err)?.to_array())
}

#[pyfunction]
#[pyo3(name = "hausdorff_semidist")]
fn hausdorff_py(g: Vec<Vec<f64>>, h: Vec<Vec<f64>>) -> PyResult<f64> {
    hausdorff_semidist(&g, &h).map_err(to_py_err)
}

/// A parsed scenario file, with the command entry points as methods.
#[pyclass(name = "Scenario", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (text=""))]
    fn new(text: &str) -> PyResult<Self> {
        let inner = Scenario::parse_str(text, std::path::Path::new("<string>")).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = ecoepi_core::scenario::parse_scenario(&path).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.set_key(key, value).map_err(to_py_err)?;
        next.validate().map_err(to_py_err)?;
        self.inner = next;
        Ok(())
    }

    fn to_config(&self) -> String {
        self.inner.to_config_string()
    }

    fn thresholds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &cli::thresholds_report(&self.inner).map_err(to_py_err)?)
    }

    fn pullback<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let summary = py.detach(|| cli::pullback_summary(&self.inner)).map_err(to_py_err)?;
        to_py(py, &summary)
    }

    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &cli::cmd_check(&self.inner).map_err(to_py_err)?)
    }
}

/// Run the command-line interface in-process; returns the exit status.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    let argv = std::iter::once("ecoepi".to_string()).chain(args);
    cli::run(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

#[pymodule]
fn ecoepi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyResponse>()?;
    m.add_class::<PyNoise>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(rates, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_py, m)?)?;
    m.add_function(wrap_pyfunction!(pullback_state_py, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
