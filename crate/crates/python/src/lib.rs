//! Python bindings: problems, step rules, the solver and its certificates.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use ipiano_core::diagnostics::Certificate;
use ipiano_core::experiments::{certify, toy_basins as core_toy_basins, BasinConfig, RuleKind};
use ipiano_core::problems::{self, DataTerm, MrfModel, MrfPrior, NoiseSpec};
use ipiano_core::prox::L1Norm;
use ipiano_core::{ConvexTerm, Error, Image, Objective, SmoothTerm, Solver as CoreSolver, StepRule, StopCriterion};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// A step-size policy.
#[pyclass(name = "Rule", module = "ipiano", from_py_object)]
#[derive(Clone)]
struct PyRule {
    inner: StepRule,
}

#[pymethods]
impl PyRule {
    /// `kind` is constant, backtracking, lazy or general. The constant and
    /// general rules use `lipschitz` as a global bound; the backtracking rules
    /// start their estimate at `lipschitz_init` (defaults to `lipschitz`).
    #[new]
    #[pyo3(signature = (kind, beta, lipschitz, lipschitz_init=None))]
    fn new(kind: &str, beta: f64, lipschitz: f64, lipschitz_init: Option<f64>) -> PyResult<Self> {
        let kind: RuleKind = kind.parse().map_err(to_py)?;
        let inner = kind
            .build(beta, lipschitz, lipschitz_init.unwrap_or(lipschitz))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.inner.c1()
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Certificate", module = "ipiano", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCertificate {
    name: String,
    satisfied: bool,
    worst_slack: f64,
    location: usize,
    tolerance: f64,
}

impl From<Certificate> for PyCertificate {
    fn from(c: Certificate) -> Self {
        Self {
            name: c.name,
            satisfied: c.satisfied,
            worst_slack: c.worst_slack,
            location: c.location,
            tolerance: c.tolerance,
        }
    }
}

#[pymethods]
impl PyCertificate {
    fn __repr__(&self) -> String {
        format!(
            "Certificate({}, satisfied={}, worst_slack={:e}, location={})",
            self.name, self.satisfied, self.worst_slack, self.location
        )
    }
}

/// Result of a solver run.
#[pyclass(name = "Solution", module = "ipiano", frozen, skip_from_py_object)]
struct PySolution {
    inner: ipiano_core::Solution,
    certificates: Vec<PyCertificate>,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.x.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.trace.len()
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.inner.trace.terminal.h
    }

    #[getter]
    fn stop_reason(&self) -> String {
        format!("{:?}", self.inner.stop_reason)
    }

    /// `h(x^0), …, h(x^{N+1})`.
    fn energies(&self) -> Vec<f64> {
        self.inner.trace.energies()
    }

    fn step_norms(&self) -> Vec<f64> {
        self.inner.trace.step_norms()
    }

    /// Per-iteration step sizes `α_n`, inertia `β_n` and estimates `L_n`.
    fn parameters(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = &self.inner.trace.records;
        (
            r.iter().map(|r| r.alpha).collect(),
            r.iter().map(|r| r.beta).collect(),
            r.iter().map(|r| r.lipschitz).collect(),
        )
    }

    fn trace_csv(&self) -> String {
        self.inner.trace.to_csv()
    }

    #[getter]
    fn certificates(&self) -> Vec<PyCertificate> {
        self.certificates.clone()
    }

    fn certified(&self) -> bool {
        self.certificates.iter().all(|c| c.satisfied)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(iterations={}, energy={:e}, stop={:?}, certified={})",
            self.inner.trace.len(),
            self.inner.trace.terminal.h,
            self.inner.stop_reason,
            self.certified()
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn run<O: Objective + Sync + ?Sized>(
    py: Python<'_>,
    obj: &O,
    rule: &PyRule,
    x0: Vec<f64>,
    max_iters: usize,
    tol: Option<f64>,
    energy_tol: Option<f64>,
    keep_iterates: bool,
) -> PyResult<PySolution> {
    let mut stop = StopCriterion::iterations(max_iters);
    if let Some(t) = tol {
        stop = stop.with_residual(t);
    }
    if let Some(t) = energy_tol {
        stop = stop.with_energy(t);
    }
    let rule = rule.inner.clone();
    py.detach(|| {
        let sol = CoreSolver::new(rule.clone())
            .stop(stop)
            .keep_iterates(keep_iterates)
            .solve(obj, x0)?;
        let certs = certify(obj, &sol, &rule)?;
        Ok(PySolution {
            inner: sol,
            certificates: certs.into_iter().map(Into::into).collect(),
        })
    })
    .map_err(to_py)
}

/// `½ Σ log(1 + μ(x_i − u0_i)²) + λ‖x‖₁`.
#[pyclass(name = "ToyProblem", module = "ipiano", frozen, skip_from_py_object)]
struct PyToy {
    inner: problems::ToyProblem,
}

#[pymethods]
impl PyToy {
    #[new]
    #[pyo3(signature = (u0=vec![1.0, 1.0], mu=100.0, lam=1.0))]
    fn new(u0: Vec<f64>, mu: f64, lam: f64) -> PyResult<Self> {
        Ok(Self {
            inner: problems::ToyProblem::new(u0, mu, lam).map_err(to_py)?,
        })
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    fn energy(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.energy(&x).map_err(to_py)
    }

    fn f_grad(&self, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.inner.f_grad(&x).map_err(to_py)
    }

    /// Local minimizers.
    fn stationary_points(&self) -> Vec<Vec<f64>> {
        self.inner.stationary_points()
    }

    fn global_minimizer(&self) -> Vec<f64> {
        self.inner.global_minimizer()
    }

    #[pyo3(signature = (rule, x0, max_iters=20000, tol=Some(1e-10), keep_iterates=true))]
    fn solve(
        &self,
        py: Python<'_>,
        rule: &PyRule,
        x0: Vec<f64>,
        max_iters: usize,
        tol: Option<f64>,
        keep_iterates: bool,
    ) -> PyResult<PySolution> {
        run(py, &self.inner.objective(), rule, x0, max_iters, tol, None, keep_iterates)
    }
}

/// MRF denoising with the 48-filter DCT prior and an ℓ2 or ℓ1 data term.
#[pyclass(name = "MrfDenoiser", module = "ipiano", frozen, skip_from_py_object)]
struct PyMrf {
    model: MrfModel,
    height: usize,
    width: usize,
}

#[pymethods]
impl PyMrf {
    #[new]
    #[pyo3(signature = (noisy, height, width, lam=None, data_term="l2"))]
    fn new(noisy: Vec<f64>, height: usize, width: usize, lam: Option<f64>, data_term: &str) -> PyResult<Self> {
        let prior = MrfPrior::dct(height, width).map_err(to_py)?;
        let data = match data_term.to_ascii_lowercase().as_str() {
            "l2" => DataTerm::l2(noisy, lam.unwrap_or(problems::DEFAULT_LAMBDA_L2)),
            "l1" => DataTerm::l1(noisy, lam.unwrap_or(problems::DEFAULT_LAMBDA_L1)),
            other => return Err(PyValueError::new_err(format!("unknown data term {other:?}"))),
        };
        let model = problems::mrf_model(prior, data).map_err(to_py)?;
        Ok(Self { model, height, width })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Upper bound on the Lipschitz constant of the prior's gradient.
    fn lipschitz_bound(&self) -> PyResult<f64> {
        problems::mrf_lipschitz_bound(&self.model.smooth).map_err(to_py)
    }

    fn f_grad(&self, u: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.model.smooth.value_and_gradient(&u).map_err(to_py)
    }

    fn energy(&self, u: Vec<f64>) -> PyResult<f64> {
        Objective::value(&self.model, &u).map_err(to_py)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.model.convex.initial_point()
    }

    #[pyo3(signature = (rule, x0=None, max_iters=1000, tol=None, energy_tol=None))]
    fn solve(
        &self,
        py: Python<'_>,
        rule: &PyRule,
        x0: Option<Vec<f64>>,
        max_iters: usize,
        tol: Option<f64>,
        energy_tol: Option<f64>,
    ) -> PyResult<PySolution> {
        let x0 = x0.unwrap_or_else(|| self.model.convex.initial_point());
        run(py, &self.model, rule, x0, max_iters, tol, energy_tol, false)
    }
}

/// Inpainting mask optimization: sparse mask `c` whose homogeneous diffusion
/// reconstruction matches the image.
#[pyclass(name = "CompressionModel", module = "ipiano", frozen, skip_from_py_object)]
struct PyCompression {
    inner: problems::CompressionModel,
}

#[pymethods]
impl PyCompression {
    #[new]
    fn new(image: Vec<f64>, height: usize, width: usize, lam: f64) -> PyResult<Self> {
        Ok(Self {
            inner: problems::CompressionModel::new(image, height, width, lam).map_err(to_py)?,
        })
    }

    fn reconstruct(&self, py: Python<'_>, c: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| self.inner.reconstruct(&c)).map_err(to_py)
    }

    fn f_grad(&self, py: Python<'_>, c: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        py.detach(|| self.inner.f_grad(&c)).map_err(to_py)
    }

    fn energy(&self, c: Vec<f64>) -> PyResult<f64> {
        Objective::value(&self.inner.objective(), &c).map_err(to_py)
    }

    fn initial_mask(&self) -> Vec<f64> {
        self.inner.initial_mask()
    }

    #[pyo3(signature = (rule, c0=None, max_iters=1000, energy_tol=None))]
    fn solve(
        &self,
        py: Python<'_>,
        rule: &PyRule,
        c0: Option<Vec<f64>>,
        max_iters: usize,
        energy_tol: Option<f64>,
    ) -> PyResult<PySolution> {
        let c0 = c0.unwrap_or_else(|| self.inner.initial_mask());
        run(py, &self.inner.objective(), rule, c0, max_iters, None, energy_tol, true)
    }
}

/// `prox` of `lam·‖·‖₁` with step `alpha`.
#[pyfunction]
fn prox_l1(y: Vec<f64>, alpha: f64, lam: f64) -> PyResult<Vec<f64>> {
    L1Norm::new(lam).prox(&y, alpha).map_err(to_py)
}

/// Gaussian noise of level `sigma`, or salt and pepper when `sp_fraction` is set.
#[pyfunction]
#[pyo3(signature = (u, sigma=0.0, sp_fraction=None, seed=0))]
fn add_noise(u: Vec<f64>, sigma: f64, sp_fraction: Option<f64>, seed: u64) -> PyResult<Vec<f64>> {
    let spec = match sp_fraction {
        Some(fraction) => NoiseSpec::SaltPepper { fraction },
        None => NoiseSpec::Gaussian { sigma },
    };
    problems::add_noise(&u, spec, seed).map_err(to_py)
}

#[pyfunction]
fn mse(u: Vec<f64>, u0: Vec<f64>) -> PyResult<f64> {
    problems::mse(&u, &u0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (c, eps=problems::DEFAULT_DENSITY_EPS))]
fn mask_density(c: Vec<f64>, eps: f64) -> f64 {
    problems::mask_density(&c, eps)
}

/// Built-in test scene, row-major.
#[pyfunction]
fn synthetic_image(height: usize, width: usize) -> Vec<f64> {
    Image::synthetic(height, width).data
}

/// `(height, width, pixels)` of a PGM or PNG file.
#[pyfunction]
fn read_image(path: std::path::PathBuf) -> PyResult<(usize, usize, Vec<f64>)> {
    let img = Image::read(path).map_err(to_py)?;
    Ok((img.height, img.width, img.data))
}

#[pyfunction]
fn write_image(path: std::path::PathBuf, height: usize, width: usize, data: Vec<f64>) -> PyResult<()> {
    Image::new(height, width, data).and_then(|img| img.write(path)).map_err(to_py)
}

/// Fraction of grid starts reaching the global minimum of the default toy
/// problem, per β.
#[pyfunction]
#[pyo3(signature = (betas=vec![0.0, 0.75], grid=10, rule="constant"))]
fn toy_basins(py: Python<'_>, betas: Vec<f64>, grid: usize, rule: &str) -> PyResult<Vec<(f64, f64)>> {
    let cfg = BasinConfig {
        rule: rule.parse().map_err(to_py)?,
        betas: betas.clone(),
        grid,
        ..BasinConfig::default()
    };
    let rows = py
        .detach(|| core_toy_basins(&problems::ToyProblem::default(), &cfg))
        .map_err(to_py)?;
    Ok(betas
        .iter()
        .map(|&b| (b, ipiano_core::experiments::global_fraction(&rows, b)))
        .collect())
}

#[pymodule]
fn ipiano(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRule>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyToy>()?;
    m.add_class::<PyMrf>()?;
    m.add_class::<PyCompression>()?;
    m.add_function(wrap_pyfunction!(prox_l1, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(mask_density, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_image, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    m.add_function(wrap_pyfunction!(toy_basins, m)?)?;
    Ok(())
}
