//! Python bindings: energy landscapes, dissipation pairs, the deterministic
//! solvers, the action functionals, and the exact jump-process simulator.
//!
//! Errors from the core crate surface as `ValueError`.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ggflow::dissipation::DissipationFamily;
use ggflow::energy::{make_builtin, EnergyLandscape};
use ggflow::flows::{
    solve_generalized_flow, solve_quadratic_flow, solve_rate_independent, BVCurve, SampledCurve,
};
use ggflow::functionals::{
    action_J_RI, action_J_Q, action_J_alpha_beta, jump_cost_delta, ActionReport, JumpCostMode,
};
use ggflow::stochastic::simulate_jump_process;

fn err(e: ggflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An energy landscape `E(x, t)` from the built-in catalog.
#[pyclass(name = "Landscape")]
struct PyLandscape {
    inner: EnergyLandscape,
}

#[pymethods]
impl PyLandscape {
    #[new]
    #[pyo3(signature = (id, params = None))]
    fn new(id: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let params = params.unwrap_or_default();
        Ok(PyLandscape {
            inner: make_builtin(id, &params).map_err(err)?,
        })
    }

    fn value(&self, x: f64, t: f64) -> f64 {
        self.inner.value(x, t)
    }

    fn gradient(&self, x: f64, t: f64) -> f64 {
        self.inner.gradient(x, t)
    }

    fn time_derivative(&self, x: f64, t: f64) -> f64 {
        self.inner.time_derivative(x, t)
    }
}

/// A convex dissipation pair `(psi, psi*)`.
#[pyclass(name = "Dissipation")]
struct PyDissipation {
    inner: DissipationFamily,
}

#[pymethods]
impl PyDissipation {
    #[staticmethod]
    fn cosh(alpha: f64, beta: f64) -> Self {
        PyDissipation { inner: DissipationFamily::cosh(alpha, beta) }
    }

    #[staticmethod]
    fn vanishing_viscosity(beta: f64, a: f64) -> Self {
        PyDissipation { inner: DissipationFamily::vanishing_viscosity(beta, a) }
    }

    #[staticmethod]
    fn quadratic(omega: f64) -> Self {
        PyDissipation { inner: DissipationFamily::quadratic_limit(omega) }
    }

    #[staticmethod]
    fn rate_independent(a: f64) -> Self {
        PyDissipation { inner: DissipationFamily::rate_independent(a) }
    }

    fn psi(&self, v: f64) -> f64 {
        self.inner.psi(v)
    }

    fn psi_star(&self, w: f64) -> f64 {
        self.inner.psi_star(w)
    }

    fn dpsi(&self, v: f64) -> f64 {
        self.inner.dpsi(v)
    }

    fn dpsi_star(&self, w: f64) -> f64 {
        self.inner.dpsi_star(w)
    }
}

fn curve_to_py(py: Python<'_>, curve: &SampledCurve) -> PyResult<Py<PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("dt", curve.dt)?;
    d.set_item("values", curve.values.clone())?;
    Ok(d.into())
}

fn curve_from_py(dt: f64, values: Vec<f64>) -> PyResult<SampledCurve> {
    if values.len() < 2 || dt <= 0.0 {
        return Err(PyValueError::new_err("curve needs dt > 0 and at least two values"));
    }
    Ok(SampledCurve { dt, values })
}

fn report_to_py(py: Python<'_>, r: &ActionReport) -> PyResult<Py<PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("total", r.total)?;
    d.set_item("part_psi", r.part_psi)?;
    d.set_item("part_psi_star", r.part_psi_star)?;
    d.set_item("part_work", r.part_work)?;
    d.set_item("part_jump", r.part_jump)?;
    d.set_item("part_var", r.part_var)?;
    d.set_item("quadrature_step", r.quadrature_step)?;
    d.set_item("violation_at", r.violation_at)?;
    Ok(d.into())
}

fn bv_to_py(py: Python<'_>, c: &BVCurve) -> PyResult<Py<PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("times", c.times.clone())?;
    d.set_item("values", c.values.clone())?;
    d.set_item("total_variation", c.total_variation)?;
    let jumps: Vec<(f64, f64, f64, f64)> = c
        .jumps
        .iter()
        .map(|j| (j.time, j.x_left, j.x_plateau, j.x_right))
        .collect();
    d.set_item("jumps", jumps)?;
    Ok(d.into())
}

/// Solve `x' = -2 alpha sinh(beta grad E)`.
#[pyfunction]
#[pyo3(signature = (landscape, alpha, beta, x0, t_end, tol = 1e-8))]
fn generalized_flow(
    py: Python<'_>,
    landscape: &PyLandscape,
    alpha: f64,
    beta: f64,
    x0: f64,
    t_end: f64,
    tol: f64,
) -> PyResult<Py<PyDict>> {
    let c = solve_generalized_flow(&landscape.inner, alpha, beta, x0, t_end, tol).map_err(err)?;
    curve_to_py(py, &c)
}

/// Solve `x' = -2 omega grad E`.
#[pyfunction]
#[pyo3(signature = (landscape, omega, x0, t_end, tol = 1e-8))]
fn quadratic_flow(
    py: Python<'_>,
    landscape: &PyLandscape,
    omega: f64,
    x0: f64,
    t_end: f64,
    tol: f64,
) -> PyResult<Py<PyDict>> {
    let c = solve_quadratic_flow(&landscape.inner, omega, x0, t_end, tol).map_err(err)?;
    curve_to_py(py, &c)
}

/// Rate-independent stick-slip evolution with activation threshold `a`.
#[pyfunction]
#[pyo3(signature = (landscape, a, x0, t_end, dt_load = None))]
fn rate_independent_flow(
    py: Python<'_>,
    landscape: &PyLandscape,
    a: f64,
    x0: f64,
    t_end: f64,
    dt_load: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let dt_load = dt_load.unwrap_or(t_end / 2048.0);
    let c = solve_rate_independent(&landscape.inner, a, x0, t_end, dt_load).map_err(err)?;
    bv_to_py(py, &c)
}

/// Large-deviation action `J_{alpha,beta}` of a uniformly sampled curve.
#[pyfunction]
fn action(
    py: Python<'_>,
    dt: f64,
    values: Vec<f64>,
    landscape: &PyLandscape,
    alpha: f64,
    beta: f64,
) -> PyResult<Py<PyDict>> {
    let c = curve_from_py(dt, values)?;
    let r = action_J_alpha_beta(&c, &landscape.inner, alpha, beta).map_err(err)?;
    report_to_py(py, &r)
}

/// Quadratic action `J_Q` of a uniformly sampled curve.
#[pyfunction]
fn action_quadratic(
    py: Python<'_>,
    dt: f64,
    values: Vec<f64>,
    landscape: &PyLandscape,
    omega: f64,
) -> PyResult<Py<PyDict>> {
    let c = curve_from_py(dt, values)?;
    let r = action_J_Q(&c, &landscape.inner, omega).map_err(err)?;
    report_to_py(py, &r)
}

/// Rate-independent balance functional of a jump-free sampled curve.
#[pyfunction]
fn action_rate_independent(
    py: Python<'_>,
    dt: f64,
    values: Vec<f64>,
    landscape: &PyLandscape,
    a: f64,
) -> PyResult<Py<PyDict>> {
    let c = curve_from_py(dt, values)?;
    let bv = BVCurve::from_sampled(&c);
    let r = action_J_RI(&bv, &landscape.inner, a).map_err(err)?;
    report_to_py(py, &r)
}

/// Energy-weighted jump cost between two points at frozen time `t`.
#[pyfunction]
#[pyo3(signature = (x0, x1, t, landscape, a, brute_force = false))]
fn jump_cost(
    x0: f64,
    x1: f64,
    t: f64,
    landscape: &PyLandscape,
    a: f64,
    brute_force: bool,
) -> PyResult<f64> {
    let mode = if brute_force { JumpCostMode::BruteForce } else { JumpCostMode::ClosedForm };
    jump_cost_delta(x0, x1, t, &landscape.inner, a, mode).map_err(err)
}

/// Exact trajectory of the lattice jump process; returns `(event_times,
/// positions_after_event, exited)` with the initial state prepended.
#[pyfunction]
fn simulate(
    landscape: &PyLandscape,
    n: u64,
    alpha: f64,
    beta: f64,
    x0: f64,
    t_end: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>, bool)> {
    let p = simulate_jump_process(&landscape.inner, n, alpha, beta, x0, t_end, seed).map_err(err)?;
    let mut times = vec![0.0];
    let mut xs = vec![p.start];
    for (k, &(t, _)) in p.events.iter().enumerate() {
        times.push(t);
        xs.push(p.position_after(k + 1));
    }
    Ok((times, xs, p.exited))
}

#[pymodule]
fn ggflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLandscape>()?;
    m.add_class::<PyDissipation>()?;
    m.add_function(wrap_pyfunction!(generalized_flow, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic_flow, m)?)?;
    m.add_function(wrap_pyfunction!(rate_independent_flow, m)?)?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(action_quadratic, m)?)?;
    m.add_function(wrap_pyfunction!(action_rate_independent, m)?)?;
    m.add_function(wrap_pyfunction!(jump_cost, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
