use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use xxz_transfer::dynamics::{transfer_report as core_transfer_report, FidelityTrace};
use xxz_transfer::{self as core, AmplitudeState, BarrierLayout, GapReport};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Open XXZ chain with weakened bonds.
#[pyclass(name = "ChainSpec", frozen, module = "pyxxz", skip_from_py_object)]
#[derive(Clone)]
struct PyChainSpec {
    inner: core::ChainSpec,
}

#[pymethods]
impl PyChainSpec {
    #[new]
    #[pyo3(signature = (n_sites, delta, beta=0.0, barriers=None, equal_wells=None, j0=1.0, e0=0.0))]
    fn new(
        n_sites: usize,
        delta: f64,
        beta: f64,
        barriers: Option<Vec<usize>>,
        equal_wells: Option<usize>,
        j0: f64,
        e0: f64,
    ) -> PyResult<Self> {
        let layout = match (barriers, equal_wells) {
            (Some(_), Some(_)) => {
                return Err(PyValueError::new_err(
                    "give barriers or equal_wells, not both",
                ))
            }
            (Some(b), None) => BarrierLayout::new(b),
            (None, Some(k)) => BarrierLayout::equal_wells(n_sites, k),
            (None, None) => Ok(BarrierLayout::homogeneous()),
        }
        .map_err(err)?;
        let inner =
            core::ChainSpec::with_units(n_sites, delta, j0, beta, layout, e0).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        core::ChainSpec::from_toml_str(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }
    #[getter]
    fn j0(&self) -> f64 {
        self.inner.j0()
    }
    #[getter]
    fn j1(&self) -> f64 {
        self.inner.j1()
    }
    #[getter]
    fn e0(&self) -> f64 {
        self.inner.e0()
    }
    #[getter]
    fn barriers(&self) -> Vec<usize> {
        self.inner.layout().bonds().to_vec()
    }
    #[getter]
    fn n_wells(&self) -> usize {
        self.inner.layout().n_wells()
    }

    fn mirrored(&self) -> Self {
        Self {
            inner: self.inner.mirrored(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "ChainSpec(n_sites={}, delta={}, beta={}, barriers={:?}, j0={}, e0={})",
            self.inner.n_sites(),
            self.inner.delta(),
            self.inner.beta(),
            self.inner.layout().bonds(),
            self.inner.j0(),
            self.inner.e0()
        )
    }
}

fn trace_dict<'py>(py: Python<'py>, trace: FidelityTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("times", trace.times)?;
    d.set_item("f_left", trace.f_left)?;
    d.set_item("f_right", trace.f_right)?;
    Ok(d)
}

/// Eigenvalues (ascending), energies and eigenvectors of the single-flip operator.
#[pyfunction]
fn spectrum<'py>(py: Python<'py>, spec: PyRef<'py, PyChainSpec>) -> PyResult<Bound<'py, PyDict>> {
    let res = core::spectrum(&spec.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambdas", res.lambdas)?;
    d.set_item("omegas", res.omegas)?;
    d.set_item("vectors", res.vectors)?;
    Ok(d)
}

#[pyfunction]
fn energy_gap<'py>(py: Python<'py>, spec: PyRef<'py, PyChainSpec>) -> PyResult<Bound<'py, PyDict>> {
    let g = core::energy_gap(&spec.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta_e", g.delta_e)?;
    d.set_item("t_tau", g.t_tau)?;
    d.set_item("degenerate", g.degenerate)?;
    Ok(d)
}

/// Spectrum from the roots of the closed-form polynomial (equal wells only).
#[pyfunction]
fn find_roots<'py>(py: Python<'py>, spec: PyRef<'py, PyChainSpec>) -> PyResult<Bound<'py, PyDict>> {
    let r = core::find_roots(&spec.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda_roots", r.lambda_roots)?;
    d.set_item("eigenvalues", r.eigenvalues)?;
    d.set_item("omegas", r.omegas)?;
    Ok(d)
}

#[pyfunction]
fn char_poly(spec: PyRef<'_, PyChainSpec>, lam: f64) -> PyResult<f64> {
    core::char_poly_eval(&spec.inner, lam).map_err(err)
}

#[pyfunction]
fn det_y(lam: f64, m: usize, det_x: f64, det_x_prime: f64) -> f64 {
    core::det_y(lam, m, det_x, det_x_prime)
}

/// Fidelity traces for a spin flipped on `initial_site` (0-based).
#[pyfunction]
#[pyo3(signature = (spec, times, initial_site=0))]
fn evolve<'py>(
    py: Python<'py>,
    spec: PyRef<'py, PyChainSpec>,
    times: Vec<f64>,
    initial_site: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let n = spec.inner.n_sites();
    if initial_site >= n {
        return Err(PyValueError::new_err(format!(
            "initial_site {initial_site} out of range for {n} sites"
        )));
    }
    let trace =
        core::evolve(&spec.inner, &AmplitudeState::site(n, initial_site), &times).map_err(err)?;
    trace_dict(py, trace)
}

#[pyfunction]
fn superposition<'py>(
    py: Python<'py>,
    spec: PyRef<'py, PyChainSpec>,
    times: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    trace_dict(
        py,
        core::superposition_transfer(&spec.inner, &times).map_err(err)?,
    )
}

#[pyfunction]
#[pyo3(signature = (delta_e, times, j0=1.0))]
fn two_level<'py>(
    py: Python<'py>,
    delta_e: f64,
    times: Vec<f64>,
    j0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let gap = GapReport::from_gap(delta_e, j0);
    trace_dict(py, core::two_level_fidelities(&gap, &times).map_err(err)?)
}

/// First transfer peak of an `f_right` series.
#[pyfunction]
fn transfer_time(times: Vec<f64>, f_right: Vec<f64>) -> PyResult<f64> {
    let trace = FidelityTrace {
        f_left: vec![0.0; times.len()],
        times,
        f_right,
    };
    core::transfer_time(&trace).map_err(err)
}

/// Exact and two-level transfer times on the default grid.
#[pyfunction]
fn transfer_report<'py>(
    py: Python<'py>,
    spec: PyRef<'py, PyChainSpec>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core_transfer_report(&spec.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta_e", r.gap.delta_e)?;
    d.set_item("two_level", r.two_level)?;
    d.set_item("exact", r.exact)?;
    d.set_item("max_f_right", r.max_f_right)?;
    Ok(d)
}

#[pyfunction]
fn lindblad<'py>(
    py: Python<'py>,
    spec: PyRef<'py, PyChainSpec>,
    rate: f64,
    times: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let t = core::lindblad_evolve(&spec.inner, rate, &times).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", t.times)?;
    d.set_item("rho_11", t.rho_11)?;
    d.set_item("rho_nn", t.rho_nn)?;
    d.set_item("trace_error", t.trace_error)?;
    d.set_item("steps", t.steps)?;
    Ok(d)
}

/// How the closed-form polynomial counts wells (`"wells"` or `"barriers"`).
#[pyfunction]
fn nw_convention() -> &'static str {
    core::resolved_convention().as_str()
}

#[pymodule]
fn pyxxz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChainSpec>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(energy_gap, m)?)?;
    m.add_function(wrap_pyfunction!(find_roots, m)?)?;
    m.add_function(wrap_pyfunction!(char_poly, m)?)?;
    m.add_function(wrap_pyfunction!(det_y, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(superposition, m)?)?;
    m.add_function(wrap_pyfunction!(two_level, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_time, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_report, m)?)?;
    m.add_function(wrap_pyfunction!(lindblad, m)?)?;
    m.add_function(wrap_pyfunction!(nw_convention, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
