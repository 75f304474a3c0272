//! Python module `ringqed`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ringqed::disorder::{mean_structure_factor as mc_mean, DisorderSpec};
use ringqed::meanfield::{find_steady_state, SteadyStateOptions};
use ringqed::model::{structure_factor as s_of, AtomChain, StructureFactor, SystemParams};
use ringqed::modes::polariton_eigenvalues as eigen;
use ringqed::oracle::solve_converged;
use ringqed::routing::{self, metrics_for_structure};
use ringqed::scan::{run_scan as scan, ScanConfig};
use ringqed::weak_drive::{normalized_photon_numbers, steady_state_fields};
use ringqed::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::Config { .. } | Error::EmptyChain | Error::CapExceeded { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// System parameters in units of γ.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct Params {
    #[pyo3(get, set)]
    g: f64,
    #[pyo3(get, set)]
    kappa_in: f64,
    #[pyo3(get, set)]
    kappa_other: f64,
    #[pyo3(get, set)]
    gamma: f64,
    #[pyo3(get, set)]
    epsilon: f64,
    #[pyo3(get, set)]
    delta: f64,
    #[pyo3(get, set)]
    delta_ac: f64,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (g=0.5, kappa_in=0.1, kappa_other=0.0, gamma=1.0, epsilon=1e-3, delta=0.0, delta_ac=10.0))]
    fn new(g: f64, kappa_in: f64, kappa_other: f64, gamma: f64, epsilon: f64, delta: f64, delta_ac: f64) -> Self {
        Self {
            g,
            kappa_in,
            kappa_other,
            gamma,
            epsilon,
            delta,
            delta_ac,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(g={}, kappa_in={}, kappa_other={}, gamma={}, epsilon={}, delta={}, delta_ac={})",
            self.g, self.kappa_in, self.kappa_other, self.gamma, self.epsilon, self.delta, self.delta_ac
        )
    }
}

impl Params {
    fn core(&self) -> PyResult<SystemParams> {
        let p = SystemParams {
            g: self.g,
            kappa_in: self.kappa_in,
            kappa_other: self.kappa_other,
            gamma: self.gamma,
            epsilon: self.epsilon,
            delta: self.delta,
            delta_ac: self.delta_ac,
        };
        p.validate().map_err(to_py)?;
        Ok(p)
    }
}

fn params_or_default(p: Option<Params>) -> PyResult<SystemParams> {
    match p {
        Some(p) => p.core(),
        None => Ok(SystemParams::default()),
    }
}

#[pyfunction]
fn structure_factor(positions: Vec<f64>) -> Complex64 {
    s_of(&AtomChain::new(positions)).value
}

/// Polariton energies `[E1+, E1-, E2+, E2-]` in the cavity frame.
#[pyfunction]
#[pyo3(signature = (positions, params=None))]
fn polariton_eigenvalues(positions: Vec<f64>, params: Option<Params>) -> PyResult<Vec<Complex64>> {
    let p = params_or_default(params)?;
    Ok(eigen(&p, &AtomChain::new(positions)).map_err(to_py)?.all().to_vec())
}

/// Weak-drive cavity fields and normalised photon numbers.
#[pyfunction]
#[pyo3(signature = (positions, params=None))]
fn steady_state<'py>(py: Python<'py>, positions: Vec<f64>, params: Option<Params>) -> PyResult<Bound<'py, PyDict>> {
    let p = params_or_default(params)?;
    let f = steady_state_fields(&p, &AtomChain::new(positions)).map_err(to_py)?;
    let n = normalized_photon_numbers(&f, &p).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("a_plus", f.a_plus)?;
    d.set_item("a_minus", f.a_minus)?;
    d.set_item("n_plus", n.n_plus)?;
    d.set_item("n_minus", n.n_minus)?;
    d.set_item("n_tot", n.n_tot)?;
    Ok(d)
}

/// Cavity amplitudes from the mean-field equations, integrated to rest.
#[pyfunction]
#[pyo3(signature = (positions, params=None))]
fn mean_field_steady_state(positions: Vec<f64>, params: Option<Params>) -> PyResult<(Complex64, Complex64)> {
    let p = params_or_default(params)?;
    let s = find_steady_state(&p, &AtomChain::new(positions), &SteadyStateOptions::default()).map_err(to_py)?;
    Ok((s.state.a_plus, s.state.a_minus))
}

/// Cavity amplitudes from the full master equation (at most three atoms).
#[pyfunction]
#[pyo3(signature = (positions, params=None, cap=ringqed::oracle::DEFAULT_CAP))]
fn oracle_steady_state(positions: Vec<f64>, params: Option<Params>, cap: usize) -> PyResult<(Complex64, Complex64)> {
    let p = params_or_default(params)?;
    let r = solve_converged(&p, &AtomChain::new(positions), 2, cap).map_err(to_py)?;
    Ok((r.expectations.a_plus, r.expectations.a_minus))
}

/// Output powers and phases; phases are None when undefined.
#[pyfunction]
#[pyo3(signature = (n_atoms, s_magnitude, params=None, arg_s=0.0))]
fn routing_metrics<'py>(
    py: Python<'py>,
    n_atoms: usize,
    s_magnitude: f64,
    params: Option<Params>,
    arg_s: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params_or_default(params)?;
    let m = metrics_for_structure(&p, n_atoms, StructureFactor::from_polar(s_magnitude, arg_s)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n_out_plus", m.n_out_plus)?;
    d.set_item("n_out_minus", m.n_out_minus)?;
    d.set_item("n_out_tot", m.n_out_tot)?;
    d.set_item("phi_plus", m.phi_plus)?;
    d.set_item("phi_minus", m.phi_minus)?;
    d.set_item("relative_phase", m.relative_phase)?;
    Ok(d)
}

/// `(tuning_range, n_loss)` of the router at δ = 0.
#[pyfunction]
#[pyo3(signature = (n_atoms, params=None))]
fn router_figures(n_atoms: usize, params: Option<Params>) -> PyResult<(f64, f64)> {
    let p = params_or_default(params)?;
    let f = routing::router_figures(&p, n_atoms).map_err(to_py)?;
    Ok((f.tuning_range, f.n_loss))
}

#[pyfunction]
fn tuning_range(nc: f64, delta: f64) -> f64 {
    routing::tuning_range(nc, delta)
}

#[pyfunction]
fn max_photon_loss(nc: f64, delta: f64) -> f64 {
    routing::max_photon_loss_analytic(nc, delta)
}

/// `(nc, delta_min, delta_max)` at the smallest feasible cooperativity.
#[pyfunction]
#[pyo3(signature = (w=0.9, loss=0.01))]
fn feasible_min_nc(w: f64, loss: f64) -> PyResult<(f64, f64, f64)> {
    let r = routing::feasible_region(w, loss).map_err(to_py)?;
    Ok((r.min_nc, r.window_at_min.delta_min, r.window_at_min.delta_max))
}

/// Disorder-averaged `|S|/N` and its standard error; σ in units of λ.
#[pyfunction]
#[pyo3(signature = (n_atoms, sigma, samples=10_000, seed=0))]
fn mean_structure_factor(n_atoms: usize, sigma: f64, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let spec = DisorderSpec::new(sigma, samples, seed).map_err(to_py)?;
    let m = mc_mean(n_atoms, &spec).map_err(to_py)?;
    Ok((m.mean, m.std_error))
}

/// Runs a JSON scan config; returns CSV text or the JSON document.
#[pyfunction]
#[pyo3(signature = (config, format="csv"))]
fn run_scan(config: &str, format: &str) -> PyResult<String> {
    let c = ScanConfig::from_json(config).map_err(to_py)?;
    let table = scan(&c).map_err(to_py)?;
    match format {
        "csv" => table.to_csv_string().map_err(to_py),
        "json" => Ok(table.to_json().to_string()),
        other => Err(PyValueError::new_err(format!("unknown format `{other}`"))),
    }
}

/// `(id, name, passed, detail)` for each acceptance criterion.
#[pyfunction]
fn acceptance() -> Vec<(usize, String, bool, String)> {
    ringqed::acceptance::run_all()
        .into_iter()
        .map(|o| (o.id, o.name.to_string(), o.passed, o.detail))
        .collect()
}

#[pymodule(name = "ringqed")]
fn ringqed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(structure_factor, m)?)?;
    m.add_function(wrap_pyfunction!(polariton_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(mean_field_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(routing_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(router_figures, m)?)?;
    m.add_function(wrap_pyfunction!(tuning_range, m)?)?;
    m.add_function(wrap_pyfunction!(max_photon_loss, m)?)?;
    m.add_function(wrap_pyfunction!(feasible_min_nc, m)?)?;
    m.add_function(wrap_pyfunction!(mean_structure_factor, m)?)?;
    m.add_function(wrap_pyfunction!(run_scan, m)?)?;
    m.add_function(wrap_pyfunction!(acceptance, m)?)?;
    Ok(())
}
