//! Python bindings: models, stability exponents, pricing and wealth-consumption solvers,
//! and the Table 1 / discretization / sweep drivers.

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sdfstab::markov::MarkovChain;
use sdfstab::models::{CrraCvParams, EzByParams, EzSsyParams, FiniteCrraParams, HabitParams, ModelSpec, RiskNeutralParams};
use sdfstab::montecarlo::{run_table1, TABLE1_M, TABLE1_N};
use sdfstab::pricing::{solve_markov_solution, PricingProblem, SolverOptions};
use sdfstab::recursive::{self, WcGridSpec, WcKind};
use sdfstab::spectral::{self, Method, ValuationMatrix};
use sdfstab::stability::{self, EvalOptions};
use sdfstab::sweep::{run_sweep, SweepAxis, SweepSpec};
use sdfstab::{io, Error};

create_exception!(pysdfstab, SdfstabError, PyException);
create_exception!(pysdfstab, InstabilityError, SdfstabError);
create_exception!(pysdfstab, IndeterminateError, SdfstabError);
create_exception!(pysdfstab, ConvergenceError, SdfstabError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Instability { .. } => InstabilityError::new_err(msg),
        Error::Indeterminate { .. } => IndeterminateError::new_err(msg),
        Error::Convergence { .. } => ConvergenceError::new_err(msg),
        _ => SdfstabError::new_err(msg),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for sdfstab::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A model family with its parameters.
#[pyclass(name = "Model", module = "pysdfstab", from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: ModelSpec,
}

fn apply_params(model: &mut ModelSpec, params: Option<&Bound<'_, PyDict>>) -> PyResult<()> {
    if let Some(d) = params {
        for (k, v) in d.iter() {
            let name: String = k.extract()?;
            model.set_param(&name, v.extract()?).py()?;
        }
    }
    model.validate().py()
}

#[pymethods]
impl PyModel {
    /// Reference calibration of `family` with keyword overrides. `risk_neutral` needs `beta`.
    #[new]
    #[pyo3(signature = (family, **params))]
    fn new(family: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = match family {
            "risk_neutral" => ModelSpec::RiskNeutral(RiskNeutralParams { beta: f64::NAN }),
            "crra_cv" => ModelSpec::CrraCv(CrraCvParams::benchmark()),
            "habit" => ModelSpec::Habit(HabitParams::figure_defaults()),
            "ez_by" => ModelSpec::EzBy(EzByParams::benchmark()),
            "ez_ssy" => ModelSpec::EzSsy(EzSsyParams::benchmark()),
            "finite_crra" => return Err(SdfstabError::new_err("use Model.finite_crra(states, transition, ...)")),
            other => return Err(SdfstabError::new_err(format!("unknown model family '{other}'"))),
        };
        apply_params(&mut inner, params)?;
        Ok(PyModel { inner })
    }

    /// Finite-state CRRA model on an explicit Markov chain.
    #[staticmethod]
    #[pyo3(signature = (states, transition, beta, gamma, **params))]
    fn finite_crra(
        states: Vec<f64>,
        transition: Vec<Vec<f64>>,
        beta: f64,
        gamma: f64,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let n = states.len();
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(SdfstabError::new_err(format!("transition must be {n}x{n}")));
        }
        let p = DMatrix::from_fn(n, n, |i, j| transition[i][j]);
        let chain = MarkovChain::new(states, p).py()?;
        let f = FiniteCrraParams { beta, gamma, mu_c: 0.0, mu_d: 0.0, sigma_c: 0.0, sigma_d: 0.0, varphi: 1.0, chain };
        let mut inner = ModelSpec::FiniteCrra(f);
        apply_params(&mut inner, params)?;
        Ok(PyModel { inner })
    }

    /// Model section of a TOML run configuration.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: sdfstab::config::RunConfig::from_toml(text).py()?.model })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family()
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        self.inner.param_names().iter().filter_map(|n| self.inner.get_param(n).map(|v| (*n, v))).collect()
    }

    fn get(&self, name: &str) -> PyResult<f64> {
        self.inner
            .get_param(name)
            .ok_or_else(|| SdfstabError::new_err(format!("no parameter '{name}' in {}", self.inner.family())))
    }

    /// Copy with some parameters replaced.
    #[pyo3(signature = (**params))]
    fn with_params(&self, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        apply_params(&mut inner, params)?;
        Ok(PyModel { inner })
    }

    fn has_closed_form(&self) -> bool {
        self.inner.has_closed_form()
    }

    fn __repr__(&self) -> String {
        let ps: Vec<String> = self.params().iter().map(|(n, v)| format!("{n}={v}")).collect();
        format!("Model('{}', {})", self.inner.family(), ps.join(", "))
    }
}

#[pyclass(name = "StabilityReport", module = "pysdfstab", frozen, skip_from_py_object)]
struct PyReport {
    #[pyo3(get)]
    method: String,
    #[pyo3(get)]
    lphi: f64,
    #[pyo3(get)]
    p: f64,
    #[pyo3(get)]
    std_error: Option<f64>,
    #[pyo3(get)]
    verdict: String,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!("StabilityReport(method='{}', lphi={:.7}, verdict='{}')", self.method, self.lphi, self.verdict)
    }
}

/// Solved wealth-consumption ratio on the Epstein-Zin state grid.
#[pyclass(name = "WcSolution", module = "pysdfstab", frozen, from_py_object)]
#[derive(Clone)]
struct PyWc {
    inner: recursive::WcSolution,
}

#[pymethods]
impl PyWc {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn log_w(&self) -> Vec<f64> {
        self.inner.log_w.clone()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| to_py(e.into()))?;
        io::write_wc(f, &self.inner).py()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| to_py(e.into()))?;
        Ok(PyWc { inner: io::read_wc(f).py()? })
    }

    fn matches(&self, model: &PyModel) -> bool {
        self.inner.matches(&model.inner)
    }
}

#[allow(clippy::too_many_arguments)]
fn eval_options(
    n: Option<usize>,
    m: Option<usize>,
    p: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    states: Option<usize>,
) -> EvalOptions {
    let mut o = EvalOptions::default();
    o.mc.n = n.unwrap_or(o.mc.n);
    o.mc.m = m.unwrap_or(o.mc.m);
    o.mc.p = p.unwrap_or(o.mc.p);
    o.mc.replications = reps.unwrap_or(o.mc.replications);
    o.mc.seed = seed.unwrap_or(o.mc.seed);
    o.mc.workers = threads.unwrap_or(o.mc.workers);
    o.n_states = states.unwrap_or(o.n_states);
    o
}

/// Stability exponent of `model` by `method` ("analytic", "spectral" or "mc").
#[pyfunction]
#[pyo3(signature = (model, method="analytic", *, n=None, m=None, p=None, reps=None, seed=None, threads=None, states=None, wc=None))]
#[allow(clippy::too_many_arguments)]
fn lphi(
    py: Python<'_>,
    model: &PyModel,
    method: &str,
    n: Option<usize>,
    m: Option<usize>,
    p: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    states: Option<usize>,
    wc: Option<&PyWc>,
) -> PyResult<PyReport> {
    let method: Method = method.parse().py()?;
    let opts = eval_options(n, m, p, reps, seed, threads, states);
    let spec = model.inner.clone();
    let wc = wc.map(|w| w.inner.clone());
    let r = py.detach(move || stability::evaluate(&spec, method, &opts, wc.as_ref())).py()?;
    Ok(PyReport {
        method: r.method.to_string(),
        lphi: r.lphi,
        p: r.p,
        std_error: r.std_error,
        verdict: r.verdict().to_string(),
    })
}

/// Spectral radius of a nonnegative square matrix.
#[pyfunction]
fn spectral_radius(matrix: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(SdfstabError::new_err("matrix must be square"));
    }
    spectral::spectral_radius(&DMatrix::from_fn(n, n, |i, j| matrix[i][j])).py()
}

/// Price-dividend ratio on an `states`-point discretization. Returns `(states, h_star)`.
#[pyfunction]
#[pyo3(signature = (model, states=25, scale=1.0, tol=1e-10, max_iter=100_000))]
fn solve_price_dividend(
    py: Python<'_>,
    model: &PyModel,
    states: usize,
    scale: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let spec = model.inner.clone();
    py.detach(move || {
        let d = spec.discretize(states)?;
        let v = ValuationMatrix::from_discrete(&d)?.scaled(scale)?;
        let sol = solve_markov_solution(&PricingProblem::price_dividend(v)?, SolverOptions { tol, max_iter })?;
        Ok((d.chain.states().to_vec(), sol.h_star))
    })
    .py()
}

/// Wealth-consumption ratio for an Epstein-Zin model.
#[pyfunction]
#[pyo3(signature = (model, counts=None, width_sd=None, tol=None))]
fn solve_wc(
    py: Python<'_>,
    model: &PyModel,
    counts: Option<Vec<usize>>,
    width_sd: Option<f64>,
    tol: Option<f64>,
) -> PyResult<PyWc> {
    let kind = match model.inner {
        ModelSpec::EzBy(_) => WcKind::By,
        ModelSpec::EzSsy(_) => WcKind::Ssy,
        _ => return Err(SdfstabError::new_err("solve_wc needs an ez_by or ez_ssy model")),
    };
    let mut grid = WcGridSpec::default_for(kind);
    if let Some(c) = counts {
        grid.counts = c;
    }
    if let Some(w) = width_sd {
        grid.width_sd = w;
    }
    let mut opts = recursive::WcOptions::default();
    if let Some(t) = tol {
        opts.tol = t;
    }
    let spec = model.inner.clone();
    let inner = py.detach(move || recursive::solve_wealth_consumption(&spec, &grid, &opts)).py()?;
    Ok(PyWc { inner })
}

/// Monte Carlo table for the CRRA benchmark: list of `(n, m, mean, sd)`.
#[pyfunction]
#[pyo3(signature = (n_list=None, m_list=None, reps=1000, seed=0, threads=0, model=None))]
fn table1(
    py: Python<'_>,
    n_list: Option<Vec<usize>>,
    m_list: Option<Vec<usize>>,
    reps: usize,
    seed: u64,
    threads: usize,
    model: Option<&PyModel>,
) -> PyResult<Vec<(usize, usize, f64, Option<f64>)>> {
    let params = match model.map(|m| &m.inner) {
        None => CrraCvParams::benchmark(),
        Some(ModelSpec::CrraCv(p)) => *p,
        Some(_) => return Err(SdfstabError::new_err("table1 needs a crra_cv model")),
    };
    let n_list = n_list.unwrap_or_else(|| TABLE1_N.to_vec());
    let m_list = m_list.unwrap_or_else(|| TABLE1_M.to_vec());
    let cells = py.detach(move || run_table1(&params, &n_list, &m_list, reps, seed, threads)).py()?;
    Ok(cells.into_iter().map(|c| (c.n, c.m, c.mean, c.sd)).collect())
}

/// Spectral exponent for 2..=n_max states: list of `(n_states, lphi, abs_error)`.
#[pyfunction]
#[pyo3(signature = (model=None, n_max=25))]
fn disc_curve(model: Option<&PyModel>, n_max: usize) -> PyResult<Vec<(usize, f64, f64)>> {
    let spec = model.map(|m| m.inner.clone()).unwrap_or(ModelSpec::CrraCv(CrraCvParams::benchmark()));
    let pts = stability::discretization_curve(&spec, n_max).py()?;
    Ok(pts.into_iter().map(|p| (p.n_states, p.lphi, p.abs_error)).collect())
}

/// Two-parameter sweep. Axes are `(name, min, max, count)`; returns rows
/// `(x, y, lphi, status)` with `y` varying fastest.
#[pyfunction]
#[pyo3(signature = (model, x, y, method="spectral", *, n=None, m=None, reps=None, seed=0, threads=0, states=None))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    model: &PyModel,
    x: (String, f64, f64, usize),
    y: (String, f64, f64, usize),
    method: &str,
    n: Option<usize>,
    m: Option<usize>,
    reps: Option<usize>,
    seed: u64,
    threads: usize,
    states: Option<usize>,
) -> PyResult<Vec<(f64, f64, f64, String)>> {
    let method: Method = method.parse().py()?;
    let mut spec = SweepSpec::new(
        model.inner.clone(),
        SweepAxis::new(x.0, x.1, x.2, x.3),
        SweepAxis::new(y.0, y.1, y.2, y.3),
        method,
    );
    spec.eval = eval_options(n, m, None, reps, Some(seed), Some(threads), states);
    spec.seed = seed;
    spec.workers = threads;
    let r = py.detach(move || run_sweep(&spec)).py()?;
    Ok(r.cells.into_iter().map(|c| (c.x, c.y, c.lphi, c.status.to_string())).collect())
}

#[pymodule]
fn pysdfstab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("SdfstabError", py.get_type::<SdfstabError>())?;
    m.add("InstabilityError", py.get_type::<InstabilityError>())?;
    m.add("IndeterminateError", py.get_type::<IndeterminateError>())?;
    m.add("ConvergenceError", py.get_type::<ConvergenceError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyWc>()?;
    m.add_function(wrap_pyfunction!(lphi, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(solve_price_dividend, m)?)?;
    m.add_function(wrap_pyfunction!(solve_wc, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(disc_curve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
