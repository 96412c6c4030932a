//! Python bindings: meshes, weights, a stepping solver and the experiment drivers.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fracphase_core::config::RunConfig;
use fracphase_core::energy::{modified_energy, original_energy as core_original_energy, EnergyReport};
use fracphase_core::experiments::{run_circle, run_convergence, run_energy_study};
use fracphase_core::scheme::{HistoryMode, SchemeConfig, SchemeKind, SchemeState, Solver};
use fracphase_core::spectral::{BoundaryCondition, Domain, Field, SpatialGrid};
use fracphase_core::timegrid::{weights as core_weights, TimeMesh, WeightFamily};
use fracphase_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Config(_) | Error::InvalidParameter(_) | Error::Mesh(_) | Error::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("invalid {what} '{s}'")))
}

/// Time mesh `0 = t_0 < ... < t_M = T`.
#[pyclass(name = "TimeMesh", frozen)]
struct PyTimeMesh {
    inner: Arc<TimeMesh>,
}

#[pymethods]
impl PyTimeMesh {
    #[staticmethod]
    fn graded(steps: usize, r: f64, t_end: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(TimeMesh::graded(steps, r, t_end).map_err(to_py)?),
        })
    }

    #[staticmethod]
    fn uniform(steps: usize, t_end: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(TimeMesh::uniform(steps, t_end).map_err(to_py)?),
        })
    }

    /// Graded on `[0, t1]` with `steps` points, then uniform `dt` up to `t_end`.
    #[staticmethod]
    fn composite(steps: usize, r: f64, t1: f64, dt: f64, t_end: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(TimeMesh::composite(steps, r, t1, dt, t_end).map_err(to_py)?),
        })
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    fn points(&self) -> Vec<f64> {
        self.inner.points().to_vec()
    }

    fn tau(&self, n: usize) -> PyResult<f64> {
        if n == 0 || n > self.inner.steps() {
            return Err(PyValueError::new_err(format!("step index {n} out of range")));
        }
        Ok(self.inner.tau(n))
    }

    fn __len__(&self) -> usize {
        self.inner.steps() + 1
    }

    fn __repr__(&self) -> String {
        format!("TimeMesh(steps={}, T={})", self.inner.steps(), self.inner.horizon())
    }
}

/// Tensor grid on a rectangle, periodic or Neumann.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Arc<SpatialGrid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (nx, ny, x0, x1, y0, y1, bc = "periodic"))]
    fn new(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64, bc: &str) -> PyResult<Self> {
        let bc: BoundaryCondition = parse("boundary condition", bc)?;
        Ok(Self {
            inner: SpatialGrid::new(nx, ny, Domain::new(x0, x1, y0, y1), bc).map_err(to_py)?,
        })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.ny(), self.inner.nx())
    }

    #[getter]
    fn bc(&self) -> String {
        self.inner.bc().to_string()
    }

    fn xs(&self) -> Vec<f64> {
        self.inner.xs().to_vec()
    }

    fn ys(&self) -> Vec<f64> {
        self.inner.ys().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}x{}, {})", self.inner.nx(), self.inner.ny(), self.inner.bc())
    }
}

fn field(grid: &Arc<SpatialGrid>, values: Vec<f64>) -> PyResult<Field> {
    Field::new(grid, values).map_err(to_py)
}

/// A solver together with its evolving state.
#[pyclass(name = "Simulation")]
struct PySimulation {
    solver: Solver,
    state: SchemeState,
}

#[pymethods]
impl PySimulation {
    /// `phi0` holds the initial values row-major with `x` fastest.
    #[new]
    #[pyo3(signature = (scheme, alpha, eps2, grid, mesh, phi0, theta2 = 0.0, c0 = 0.0, history = "auto"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        scheme: &str,
        alpha: f64,
        eps2: f64,
        grid: &PyGrid,
        mesh: &PyTimeMesh,
        phi0: Vec<f64>,
        theta2: f64,
        c0: f64,
        history: &str,
    ) -> PyResult<Self> {
        let kind: SchemeKind = parse("scheme", scheme)?;
        let history: HistoryMode = parse("history mode", history)?;
        let config = SchemeConfig::new(kind, alpha, eps2)
            .and_then(|c| c.with_theta2(theta2))
            .map_err(to_py)?
            .with_c0(c0)
            .with_history(history);
        let solver = Solver::new(config, grid.inner.clone(), mesh.inner.clone()).map_err(to_py)?;
        let state = solver.init_state(field(&grid.inner, phi0)?).map_err(to_py)?;
        Ok(Self { solver, state })
    }

    /// Advance one step and return its diagnostics.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = self.solver.step(&mut self.state).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("n", rep.n)?;
        d.set_item("t", rep.t)?;
        d.set_item("sigma", rep.sigma)?;
        d.set_item("residual", rep.residual)?;
        d.set_item("energy_before", rep.energy_before)?;
        d.set_item("energy_after", rep.energy_after)?;
        d.set_item("step_change", rep.step_change)?;
        Ok(d)
    }

    /// Step to the end of the mesh; returns the modified energy at every level.
    fn run(&mut self, py: Python<'_>) -> PyResult<Vec<f64>> {
        let config = self.solver.config().clone();
        let mut energies = vec![modified_energy(&self.state, &config)];
        let (solver, state) = (&self.solver, &mut self.state);
        py.detach(|| {
            solver.run(state, |s, _| {
                energies.push(modified_energy(s, &config));
                Ok(())
            })
        })
        .map_err(to_py)?;
        Ok(energies)
    }

    #[getter]
    fn n(&self) -> usize {
        self.state.n
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t()
    }

    #[getter]
    fn r(&self) -> f64 {
        self.state.r
    }

    #[getter]
    fn finished(&self) -> bool {
        self.state.is_finished()
    }

    fn phi(&self) -> Vec<f64> {
        self.state.phi.values().to_vec()
    }

    fn modified_energy(&self) -> f64 {
        modified_energy(&self.state, self.solver.config())
    }

    fn original_energy(&self) -> f64 {
        core_original_energy(&self.state.phi, self.solver.config().eps2)
    }
}

/// Weights `b[0..=n]` of the discrete fractional operator for the step `t_n -> t_{n+1}`.
#[pyfunction]
fn weights(family: &str, mesh: &PyTimeMesh, n: usize, alpha: f64) -> PyResult<Vec<f64>> {
    let family = match parse::<SchemeKind>("weight family", family)? {
        SchemeKind::L1 => WeightFamily::L1,
        SchemeKind::L1Cn => WeightFamily::L1Cn,
        SchemeKind::L1Plus => WeightFamily::L1Plus,
    };
    Ok(core_weights(family, &mesh.inner, n, alpha).map_err(to_py)?.b)
}

#[pyfunction]
fn original_energy(grid: &PyGrid, values: Vec<f64>, eps2: f64) -> PyResult<f64> {
    Ok(core_original_energy(&field(&grid.inner, values)?, eps2))
}

#[pyfunction]
fn caputo_power(mu: f64, alpha: f64, t: f64) -> PyResult<f64> {
    fracphase_core::experiments::caputo_power(mu, alpha, t).map_err(to_py)
}

fn run_config(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            cfg.set(&key, &v.str()?.to_string()).map_err(to_py)?;
        }
    }
    Ok(cfg)
}

fn report_rows<'py>(py: Python<'py>, report: &EnergyReport) -> PyResult<Vec<Bound<'py, PyDict>>> {
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("n", r.n)?;
            d.set_item("t", r.t)?;
            d.set_item("E", r.original)?;
            d.set_item("E_mod", r.modified)?;
            d.set_item("R", r.r)?;
            d.set_item("phi_min", r.phi_min)?;
            d.set_item("phi_max", r.phi_max)?;
            Ok(d)
        })
        .collect()
}

type OrderRow = (usize, f64, f64, Option<f64>);

/// Convergence study; keyword arguments are config keys. Returns `(M, tau, error, order)` rows.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn converge(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<OrderRow>> {
    let spec = run_config(kwargs)?.convergence_spec().map_err(to_py)?;
    let rows = py.detach(|| run_convergence(&spec)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.steps, r.tau, r.error, r.order)).collect())
}

/// Long-time energy study; returns one dict per time level.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn energy_study<'py>(py: Python<'py>, kwargs: Option<&Bound<'py, PyDict>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = run_config(kwargs)?.energy_spec().map_err(to_py)?;
    let report = py.detach(|| run_energy_study(&spec)).map_err(to_py)?;
    report_rows(py, &report)
}

/// Shrinking circle; returns `(t, R², E)` rows.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn circle(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<(f64, f64, f64)>> {
    let spec = run_config(kwargs)?.circle_spec().map_err(to_py)?;
    let rows = py.detach(|| run_circle(&spec)).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.t, r.radius_sq, r.energy)).collect())
}

#[pymodule]
fn fracphase(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeMesh>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(original_energy, m)?)?;
    m.add_function(wrap_pyfunction!(caputo_power, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(energy_study, m)?)?;
    m.add_function(wrap_pyfunction!(circle, m)?)?;
    Ok(())
}
