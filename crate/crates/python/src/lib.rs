//! Python bindings: configuration, node generation, the constitutive update,
//! stencil weights, solves, sweeps and the invariant suite.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rbffd_core::approx::{build_supports, operator_weights as core_weights, Op, StencilParams};
use rbffd_core::benchmarks::invariants::run_invariants;
use rbffd_core::benchmarks::{run_case, run_sweep, SWEEP_METRICS};
use rbffd_core::constitutive::{self as cm, Hardening, PlaneMode};
use rbffd_core::io::{field_table, parse_config, RunConfig};
use rbffd_core::spatial::PointIndex;

create_exception!(rbffd, RbffdError, PyException);

fn err(e: rbffd_core::Error) -> PyErr {
    RbffdError::new_err(e.to_string())
}

/// Validated run configuration parsed from `key = value` text.
#[pyclass(name = "Config")]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: parse_config(text).map_err(err)?,
        })
    }

    /// Effective configuration with all defaults spelled out.
    fn echo(&self) -> String {
        self.inner.echo()
    }

    #[getter]
    fn case(&self) -> String {
        self.inner.case.id.to_string()
    }

    #[getter]
    fn approach(&self) -> String {
        self.inner.approach.approach.to_string()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn __repr__(&self) -> String {
        format!("Config(case={}, approach={}, h={}, seed={})", self.case(), self.approach(), self.inner.h, self.inner.seed)
    }
}

/// Scattered nodes with kinds, outward normals and boundary tags.
#[pyclass(name = "NodeCloud")]
struct PyNodeCloud {
    inner: rbffd_core::geometry::NodeCloud,
}

#[pymethods]
impl PyNodeCloud {
    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.positions().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn kinds(&self) -> Vec<&'static str> {
        self.inner.kinds().iter().map(|k| k.as_str()).collect()
    }

    #[getter]
    fn normals(&self) -> Vec<(f64, f64)> {
        (0..self.inner.len()).map(|i| self.inner.normal(i)).map(|n| (n[0], n[1])).collect()
    }

    fn min_spacing(&self) -> f64 {
        self.inner.min_spacing()
    }

    fn to_table(&self) -> String {
        self.inner.to_table()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// History at one material point; Voigt order `(11, 22, 33, 12)` with
/// engineering shear strain.
#[pyclass(name = "MaterialState")]
#[derive(Clone, Default)]
struct PyMaterialState {
    inner: cm::MaterialState,
}

#[pymethods]
impl PyMaterialState {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[getter]
    fn stress(&self) -> [f64; 4] {
        self.inner.stress
    }

    #[getter]
    fn strain(&self) -> [f64; 4] {
        self.inner.strain
    }

    #[getter]
    fn elastic_strain(&self) -> [f64; 4] {
        self.inner.elastic_strain
    }

    #[getter]
    fn plastic_strain(&self) -> [f64; 4] {
        self.inner.plastic_strain
    }

    #[getter]
    fn epbar(&self) -> f64 {
        self.inner.epbar
    }

    fn __repr__(&self) -> String {
        format!("MaterialState(stress={:?}, epbar={})", self.inner.stress, self.inner.epbar)
    }
}

/// Isotropic elastic or von Mises material with linear hardening.
#[pyclass(name = "Material")]
#[derive(Clone)]
struct PyMaterial {
    inner: cm::Material,
}

#[pymethods]
impl PyMaterial {
    #[staticmethod]
    #[pyo3(signature = (young, poisson, plane_stress = false))]
    fn elastic(young: f64, poisson: f64, plane_stress: bool) -> PyResult<Self> {
        let mode = if plane_stress { PlaneMode::PlaneStress } else { PlaneMode::PlaneStrain };
        Ok(PyMaterial {
            inner: cm::Material::elastic(young, poisson, mode).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (young, poisson, sigma_y0, hardening = 0.0))]
    fn plastic(young: f64, poisson: f64, sigma_y0: f64, hardening: f64) -> PyResult<Self> {
        Ok(PyMaterial {
            inner: cm::Material::plastic(young, poisson, sigma_y0, Hardening::Linear(hardening)).map_err(err)?,
        })
    }

    /// Returns `(new_state, tangent, dgamma)` for a strain increment.
    fn return_map(&self, state: &PyMaterialState, de: [f64; 4]) -> PyResult<(PyMaterialState, [[f64; 4]; 4], f64)> {
        let up = cm::return_map(&state.inner, &de, &self.inner).map_err(err)?;
        Ok((PyMaterialState { inner: up.state }, up.tangent.d, up.dgamma))
    }

    fn yield_function(&self, stress: [f64; 4], epbar: f64) -> f64 {
        cm::yield_function(&stress, epbar, &self.inner)
    }

    fn elastic_tensor(&self) -> [[f64; 4]; 4] {
        self.inner.elastic_tensor()
    }
}

/// Outcome of a load program.
#[pyclass(name = "Solution")]
struct PySolution {
    #[pyo3(get)]
    positions: Vec<(f64, f64)>,
    #[pyo3(get)]
    displacement: Vec<(f64, f64)>,
    #[pyo3(get)]
    stress: Vec<[f64; 4]>,
    #[pyo3(get)]
    epbar: Vec<f64>,
    #[pyo3(get)]
    load: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    report_csv: String,
    #[pyo3(get)]
    field_table: String,
    steps: Vec<rbffd_core::solver::StepReport>,
}

#[pymethods]
impl PySolution {
    /// One dict per attempted increment.
    fn steps<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.steps
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("step", s.step)?;
                d.set_item("load", s.load)?;
                d.set_item("iterations", s.iterations)?;
                d.set_item("converged", s.converged)?;
                d.set_item("residuals", s.residuals.clone())?;
                d.set_item("plastic_points", s.plastic_points)?;
                d.set_item("error", s.error.clone())?;
                Ok(d)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.positions.len()
    }
}

/// Generates the node cloud of the configured case.
#[pyfunction]
fn generate_nodes(config: &PyConfig) -> PyResult<PyNodeCloud> {
    let c = &config.inner;
    let problem = c.case.problem(c.h, c.seed).map_err(err)?;
    Ok(PyNodeCloud { inner: problem.cloud })
}

/// Runs the configured case through its load program.
#[pyfunction]
fn solve(py: Python<'_>, config: &PyConfig) -> PyResult<PySolution> {
    let c = config.inner.clone();
    let run = py
        .allow_threads(|| run_case(&c.case, c.h, c.seed, &c.approach, &c.settings, false))
        .map_err(err)?;
    let n = run.disc.n_nodes();
    let total = c.case.load_program().map_err(err)?.len();
    Ok(PySolution {
        positions: run.disc.positions().iter().map(|p| (p[0], p[1])).collect(),
        displacement: (0..n).map(|l| (run.state.u[2 * l], run.state.u[2 * l + 1])).collect(),
        stress: run.state.states[..n].iter().map(|s| s.stress).collect(),
        epbar: run.state.states[..n].iter().map(|s| s.epbar).collect(),
        load: run.state.load,
        converged: run.report.all_converged() && run.report.steps.len() == total,
        report_csv: run.report.to_csv(),
        field_table: field_table(&run.disc, &run.state),
        steps: run.report.steps,
    })
}

/// Runs the configured sweep grid; returns one CSV text per metric plus `slopes`.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let spec = config.inner.sweep_spec();
    let table = py.allow_threads(|| run_sweep(&spec)).map_err(err)?;
    let d = PyDict::new(py);
    for m in SWEEP_METRICS {
        d.set_item(m, table.to_csv(m).map_err(err)?)?;
    }
    d.set_item("slopes", table.slopes_csv())?;
    Ok(d)
}

/// Weights of one operator (`identity`, `dx`, `dy`, `dxx`, `dxy`, `dyy`,
/// `laplacian`) at `eval` over the support of node `center`.
#[pyfunction]
#[pyo3(signature = (positions, center, eval, op, m = 3, degree = 2))]
fn operator_weights(
    positions: Vec<(f64, f64)>,
    center: usize,
    eval: (f64, f64),
    op: &str,
    m: u32,
    degree: u32,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let op = match op {
        "identity" => Op::Identity,
        "dx" => Op::Dx,
        "dy" => Op::Dy,
        "dxx" => Op::Dxx,
        "dxy" => Op::Dxy,
        "dyy" => Op::Dyy,
        "laplacian" => Op::Laplacian,
        _ => return Err(RbffdError::new_err(format!("unknown operator `{op}`"))),
    };
    let pts: Vec<[f64; 2]> = positions.iter().map(|&(x, y)| [x, y]).collect();
    if center >= pts.len() {
        return Err(RbffdError::new_err(format!("center {center} out of range")));
    }
    let params = StencilParams::new(m, degree);
    let supports = build_supports(&PointIndex::new(&pts), params.n_support()).map_err(err)?;
    let s = &supports[center];
    let w = core_weights(&pts, s, &params.basis(), m, op, [eval.0, eval.1]).map_err(err)?;
    Ok((s.indices.clone(), w))
}

/// Quick invariant suite: list of `(name, passed, detail)`.
#[pyfunction]
#[pyo3(signature = (seed = 1))]
fn check(py: Python<'_>, seed: u64) -> PyResult<Vec<(String, bool, String)>> {
    let res = py.allow_threads(|| run_invariants(seed)).map_err(err)?;
    Ok(res.into_iter().map(|r| (r.name.to_string(), r.pass, r.detail)).collect())
}

#[pymodule]
#[pyo3(name = "rbffd")]
fn rbffd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RbffdError", m.py().get_type::<RbffdError>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyNodeCloud>()?;
    m.add_class::<PyMaterialState>()?;
    m.add_class::<PyMaterial>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(generate_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(operator_weights, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
