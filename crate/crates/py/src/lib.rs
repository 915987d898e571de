//! Python bindings: radial functions and trajectories as classes, the main
//! operations as module functions returning plain lists and dicts.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tree_dispersion::analysis::{self, AdmissiblePair};
use tree_dispersion::cli::{exit_code, EXIT_CONFIG};
use tree_dispersion::nls::{self, EvolutionConfig, NonlinearityForm, NonlinearitySpec, PicardOptions, Scheme};
use tree_dispersion::selftest::{run_selftest, SelftestOptions};
use tree_dispersion::{bessel, kernel, propagator, spectral, tree, Error};

fn to_py(err: Error) -> PyErr {
    if exit_code(&err) == EXIT_CONFIG {
        PyValueError::new_err(err.to_string())
    } else {
        PyRuntimeError::new_err(err.to_string())
    }
}

fn spec_from(gamma: f64, lam: f64, form: &str) -> PyResult<NonlinearitySpec> {
    let form = match form {
        "power" => NonlinearityForm::Power,
        "non-gauge" => NonlinearityForm::NonGauge,
        other => return Err(PyValueError::new_err(format!("form must be 'power' or 'non-gauge', got {other:?}"))),
    };
    NonlinearitySpec::new(gamma, lam, form).map_err(to_py)
}

/// Radial function on the tree with branching `q`, given by its values on
/// the spheres `0..=N`.
#[pyclass(name = "RadialFunction", module = "tree_dispersion", from_py_object)]
#[derive(Clone)]
pub struct PyRadial {
    inner: tree::RadialFunction,
}

#[pymethods]
impl PyRadial {
    #[new]
    fn new(q: u32, values: Vec<Complex64>) -> PyResult<Self> {
        let inner = tree::RadialFunction::from_values(q, values).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// `amplitude · δ_0`.
    #[staticmethod]
    #[pyo3(signature = (q, amplitude = 1.0))]
    fn delta(q: u32, amplitude: f64) -> PyResult<Self> {
        let inner = tree::RadialFunction::from_real(q, &[amplitude, 0.0]).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q()
    }

    #[getter]
    fn radius(&self) -> usize {
        self.inner.radius()
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        self.inner.lp_norm(p).map_err(to_py)
    }

    fn sup(&self) -> f64 {
        self.inner.sup()
    }

    fn mean(&self) -> Self {
        Self {
            inner: tree::mean_apply(&self.inner),
        }
    }

    fn laplacian(&self) -> Self {
        Self {
            inner: tree::laplacian_apply(&self.inner),
        }
    }

    fn convolve(&self, other: &PyRadial) -> PyResult<Self> {
        let inner = tree::radial_convolve(&self.inner, &other.inner).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }

    fn __repr__(&self) -> String {
        format!("RadialFunction(q={}, radius={})", self.inner.q(), self.inner.radius())
    }
}

/// Recorded states of a linear or nonlinear evolution.
#[pyclass(name = "Trajectory", module = "tree_dispersion", from_py_object)]
#[derive(Clone)]
pub struct PyTrajectory {
    inner: nls::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn mass(&self) -> Vec<f64> {
        self.inner.mass.clone()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.inner.energy.clone()
    }

    #[getter]
    fn l4(&self) -> Vec<f64> {
        self.inner.l4.clone()
    }

    fn state(&self, index: usize) -> PyResult<PyRadial> {
        self.inner
            .states
            .get(index)
            .map(|s| PyRadial { inner: s.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("no state {index}")))
    }

    fn mass_drift(&self) -> f64 {
        nls::Trajectory::relative_drift(&self.inner.mass)
    }

    fn energy_drift(&self) -> f64 {
        nls::Trajectory::relative_drift(&self.inner.energy)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Spherical transform on the default grid: returns `(lambdas, values)`.
#[pyfunction]
fn spherical_transform(f: &PyRadial) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
    let grid = spectral::SpectralGrid::for_radius(f.inner.q(), f.inner.radius()).map_err(to_py)?;
    let h = spectral::spherical_transform(&f.inner, &grid);
    Ok((grid.lambdas.clone(), h.values))
}

/// `H^{-1} H f` on radii `0..=N`.
#[pyfunction]
fn spectral_roundtrip(f: &PyRadial) -> PyResult<PyRadial> {
    let n = f.inner.radius();
    let grid = spectral::SpectralGrid::for_radius(f.inner.q(), n).map_err(to_py)?;
    let inner = spectral::inverse_spherical(&spectral::spherical_transform(&f.inner, &grid), n).map_err(to_py)?;
    Ok(PyRadial { inner })
}

#[pyfunction]
fn spherical_phi(q: u32, lam: f64, n: usize) -> Complex64 {
    spectral::spherical_phi(q, lam, n)
}

#[pyfunction]
fn gamma_eig(q: u32, lam: f64) -> f64 {
    spectral::gamma_eig(q, lam)
}

#[pyfunction]
fn bessel_j(m: u32, x: f64) -> f64 {
    bessel::bessel_j(m, x)
}

#[pyfunction]
fn oscillatory_j(t: f64, m: u32, c: f64) -> Complex64 {
    kernel::oscillatory_j(t, m, c)
}

/// Kernel `s_t`; the radius defaults to the support radius at time `t`.
#[pyfunction]
#[pyo3(signature = (q, t, radius = None, tol = kernel::DEFAULT_TOL))]
fn schrodinger_kernel(q: u32, t: f64, radius: Option<usize>, tol: f64) -> PyResult<PyRadial> {
    let n = radius.unwrap_or_else(|| kernel::kernel_radius(q, t));
    let params = tree::TreeParams::new(q, n).map_err(to_py)?;
    let s = kernel::schrodinger_kernel(params, t, tol).map_err(to_py)?;
    Ok(PyRadial { inner: s.values })
}

/// `||s_t||_q` for the kernel on its full support.
#[pyfunction]
#[pyo3(signature = (q, t, p, tol = kernel::DEFAULT_TOL))]
fn kernel_lq_norm(q: u32, t: f64, p: f64, tol: f64) -> PyResult<f64> {
    let s = kernel::schrodinger_kernel_auto(q, t, tol).map_err(to_py)?;
    kernel::kernel_lq_norm(&s, p).map_err(to_py)
}

/// `(recovered f(0), correction factor)` for the nominal inversion constant.
#[pyfunction]
fn normalization_audit(q: u32) -> PyResult<(f64, f64)> {
    let a = spectral::normalization_audit(q).map_err(to_py)?;
    Ok((a.recovered_delta, a.correction))
}

/// `e^{itL} f` by the spectral route.
#[pyfunction]
fn propagate(f: &PyRadial, t: f64) -> PyResult<PyRadial> {
    let params = f.inner.params.with_radius(f.inner.support_radius().max(1));
    let plan = propagator::PropagatorPlan::new(params, t).map_err(to_py)?;
    let inner = propagator::propagate_spectral(&f.inner.resized(params.n), t, &plan).map_err(to_py)?;
    Ok(PyRadial { inner })
}

/// `||s_t||_q` on a time grid with the log–log slope over `t >= 1`.
#[pyfunction]
#[pyo3(signature = (q, times, branching = 2, tol = kernel::DEFAULT_TOL))]
fn dispersive_decay_scan<'py>(
    py: Python<'py>,
    q: f64,
    times: Vec<f64>,
    branching: u32,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let scan = py
        .detach(|| propagator::dispersive_decay_scan(q, &times, branching, tol))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("times", scan.rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("norms", scan.rows.iter().map(|r| r.norm).collect::<Vec<_>>())?;
    d.set_item("slope", scan.fit.slope)?;
    d.set_item("ci", scan.fit.ci)?;
    Ok(d)
}

/// Least-squares slope of `ln v` against `ln t`.
#[pyfunction]
fn fit_decay<'py>(py: Python<'py>, times: Vec<f64>, values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let fit = analysis::fit_decay(&times, &values).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("slope", fit.slope)?;
    d.set_item("intercept", fit.intercept)?;
    d.set_item("residual", fit.residual)?;
    d.set_item("ci", fit.ci)?;
    Ok(d)
}

#[pyfunction]
fn energy(f: &PyRadial, gamma: f64, lam: f64) -> PyResult<f64> {
    Ok(nls::energy(&f.inner, &spec_from(gamma, lam, "power")?))
}

#[pyfunction]
#[pyo3(signature = (f, gamma = 3.0, lam = 1.0, form = "power", dt = 1e-3, horizon = 10.0, stride = 100, scheme = "strang"))]
#[allow(clippy::too_many_arguments)]
fn nls_evolve(
    py: Python<'_>,
    f: &PyRadial,
    gamma: f64,
    lam: f64,
    form: &str,
    dt: f64,
    horizon: f64,
    stride: usize,
    scheme: &str,
) -> PyResult<PyTrajectory> {
    let spec = spec_from(gamma, lam, form)?;
    let scheme = match scheme {
        "strang" => Scheme::Strang,
        "picard" => Scheme::Picard,
        other => return Err(PyValueError::new_err(format!("scheme must be 'strang' or 'picard', got {other:?}"))),
    };
    let cfg = EvolutionConfig {
        dt,
        horizon,
        stride,
        scheme,
        ..Default::default()
    };
    let data = f.inner.clone();
    let inner = py.detach(|| nls::nls_evolve(&data, &spec, &cfg)).map_err(to_py)?;
    Ok(PyTrajectory { inner })
}

/// Samples of `e^{itL} f` at the given times.
#[pyfunction]
fn linear_trajectory(py: Python<'_>, f: &PyRadial, times: Vec<f64>) -> PyResult<PyTrajectory> {
    let data = f.inner.clone();
    let inner = py.detach(|| propagator::linear_trajectory(&data, &times)).map_err(to_py)?;
    Ok(PyTrajectory { inner })
}

/// Picard iteration on `[0, t_local]`: returns the differences, their ratios
/// and whether the iteration converged.
#[pyfunction]
#[pyo3(signature = (f, t_local, gamma = 3.0, lam = 1.0))]
fn picard_solve<'py>(
    py: Python<'py>,
    f: &PyRadial,
    t_local: f64,
    gamma: f64,
    lam: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec_from(gamma, lam, "power")?;
    let r = nls::picard_solve(&f.inner, &spec, t_local, &PicardOptions::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("differences", r.differences)?;
    d.set_item("ratios", r.ratios)?;
    d.set_item("converged", r.converged)?;
    d.set_item("solution", PyRadial { inner: r.solution })?;
    Ok(d)
}

/// Windowed `L^p_t L^q_x` norms; `p` and `q` may be `float('inf')`.
#[pyfunction]
fn strichartz_norm<'py>(
    py: Python<'py>,
    traj: &PyTrajectory,
    p: f64,
    q: f64,
    windows: Vec<(f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let pair = AdmissiblePair::from_exponents(p, q).map_err(to_py)?;
    let r = analysis::strichartz_norm(&traj.inner, pair, &windows).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("norms", r.windows.iter().map(|w| w.norm).collect::<Vec<_>>())?;
    d.set_item("increments", r.windows.iter().map(|w| w.increment).collect::<Vec<_>>())?;
    d.set_item("cumulative", r.cumulative)?;
    d.set_item("stride_check", r.stride_check)?;
    Ok(d)
}

#[pyfunction]
fn is_admissible(p: f64, q: f64) -> bool {
    AdmissiblePair::is_admissible(1.0 / p, 1.0 / q)
}

/// Cauchy increments of `e^{-itL} u(t)` along a ladder of recorded times.
#[pyfunction]
fn scattering_probe<'py>(py: Python<'py>, traj: &PyTrajectory, ladder: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let data = traj.inner.clone();
    let r = py.detach(|| analysis::scattering_probe(&data, &ladder)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item(
        "doubling",
        r.doubling.iter().map(|c| (c.t1, c.t2, c.distance)).collect::<Vec<_>>(),
    )?;
    d.set_item("cauchy", r.cauchy.iter().map(|c| (c.t1, c.t2, c.distance)).collect::<Vec<_>>())?;
    d.set_item("residuals", r.residuals)?;
    d.set_item("k_ratio", r.k_ratio)?;
    d.set_item("u_plus", PyRadial { inner: r.u_plus })?;
    Ok(d)
}

/// Runs the invariant suite; returns `{name: (measured, tolerance, passed)}`
/// plus the overall flag under `"passed"`.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn selftest<'py>(py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let report = py.detach(|| {
        run_selftest(&SelftestOptions {
            seed,
            ..Default::default()
        })
    });
    let d = PyDict::new(py);
    for i in &report.invariants {
        d.set_item(&i.name, (i.measured, i.tolerance, i.passed))?;
    }
    d.set_item("passed", report.passed)?;
    Ok(d)
}

#[pymodule(name = "tree_dispersion")]
pub fn tree_dispersion_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", tree_dispersion::cli::VERSION)?;
    m.add("POINTWISE_C_STAR", kernel::POINTWISE_C_STAR)?;
    m.add_class::<PyRadial>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(spherical_transform, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(spherical_phi, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_eig, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(oscillatory_j, m)?)?;
    m.add_function(wrap_pyfunction!(schrodinger_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_lq_norm, m)?)?;
    m.add_function(wrap_pyfunction!(normalization_audit, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(dispersive_decay_scan, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(nls_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(linear_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(picard_solve, m)?)?;
    m.add_function(wrap_pyfunction!(strichartz_norm, m)?)?;
    m.add_function(wrap_pyfunction!(is_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(scattering_probe, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
