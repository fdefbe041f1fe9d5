//! Python access to the catalog kernels, the general density formula, the
//! verification suites and the simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use darboux_core::catalog::{ExampleId, ExampleModel};
use darboux_core::darboux::darboux_density as core_darboux_density;
use darboux_core::montecarlo::{mc_density_error, simulate_paths, SimConfig};
use darboux_core::verify::{default_bins, run_suite, Suite, VerifyOptions};
use darboux_core::Error;

/// `(bin_lo, bin_hi, mc_mass, kernel_mass, z_score)`
type BinRow = (f64, f64, f64, f64, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::UnknownSuite(_) | Error::InvalidSpec(_) | Error::DomainMargin { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn model(example: &str, gamma: Option<f64>) -> PyResult<ExampleModel> {
    ExampleId::parse(example, gamma)
        .and_then(ExampleModel::new)
        .map_err(to_py)
}

/// Closed-form `(p_Y, p_Ytilde)` at `(t, x, y)`.
#[pyfunction]
#[pyo3(signature = (example, t, x, y, gamma=None))]
fn density(example: &str, t: f64, x: f64, y: f64, gamma: Option<f64>) -> PyResult<(f64, f64)> {
    let m = model(example, gamma)?;
    Ok((m.py_eval(t, x, y), m.pytilde_eval(t, x, y)))
}

/// Transformed density computed from the original kernel and the seed by
/// quadrature and differentiation.
#[pyfunction]
#[pyo3(signature = (example, t, x, y, gamma=None))]
fn darboux_density(example: &str, t: f64, x: f64, y: f64, gamma: Option<f64>) -> PyResult<f64> {
    let m = model(example, gamma)?;
    core_darboux_density(&m.p_y, &m.seed, m.m_h, t, x, y).map_err(to_py)
}

/// Eigenfunction expansion of the transformed kernel.
#[pyfunction]
#[pyo3(signature = (example, t, x, y, tol=1e-9, gamma=None))]
fn spectral_density(example: &str, t: f64, x: f64, y: f64, tol: f64, gamma: Option<f64>) -> PyResult<f64> {
    model(example, gamma)?.spectral_eval(t, x, y, tol).map_err(to_py)
}

/// Runs a suite and returns `(name, value, tol, passed)` per check.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (suite, example=None, gamma=None, tol=None, paths=100_000, seed=42, dt=1e-3))]
fn verify(
    py: Python<'_>,
    suite: &str,
    example: Option<&str>,
    gamma: Option<f64>,
    tol: Option<f64>,
    paths: usize,
    seed: u64,
    dt: f64,
) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let examples = match example {
        Some(e) => vec![ExampleId::parse(e, gamma).map_err(to_py)?],
        None => Vec::new(),
    };
    let opts = VerifyOptions {
        examples,
        tol,
        sim: SimConfig::new(dt, paths, seed).map_err(to_py)?,
    };
    let checks = py.detach(|| run_suite(suite, &opts)).map_err(to_py)?;
    Ok(checks.into_iter().map(|c| (c.name, c.value, c.tol, c.pass)).collect())
}

/// Simulates the transformed process and returns per-bin
/// `(bin_lo, bin_hi, mc_mass, kernel_mass, z_score)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (example, t=0.5, paths=100_000, seed=42, dt=1e-3, x0=None, gamma=None))]
fn simulate(
    py: Python<'_>,
    example: &str,
    t: f64,
    paths: usize,
    seed: u64,
    dt: f64,
    x0: Option<f64>,
    gamma: Option<f64>,
) -> PyResult<Vec<BinRow>> {
    let m = model(example, gamma)?;
    let cfg = SimConfig::new(dt, paths, seed).map_err(to_py)?;
    let (x_default, edges) = default_bins(m.id, t);
    let x0 = x0.unwrap_or(x_default);
    let cmp = py
        .detach(|| {
            let out = simulate_paths(&m.p_ytilde.spec, x0, t, &cfg)?;
            mc_density_error(&out, &m.p_ytilde, t, x0, &edges)
        })
        .map_err(to_py)?;
    Ok(cmp
        .bins
        .iter()
        .map(|b| (b.lo, b.hi, b.mc_mass, b.kernel_mass, b.z_score))
        .collect())
}

/// `(example, gamma)` pairs for every catalog configuration.
#[pyfunction]
fn examples() -> Vec<(&'static str, Option<f64>)> {
    ExampleId::all()
        .into_iter()
        .map(|id| match id {
            ExampleId::E3 { gamma } => (id.name(), Some(gamma)),
            _ => (id.name(), None),
        })
        .collect()
}

/// Names accepted by `verify`.
#[pyfunction]
fn suites() -> Vec<&'static str> {
    Suite::ALL.iter().map(|s| s.name()).collect()
}

#[pymodule]
fn darboux(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(darboux_density, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_density, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(examples, m)?)?;
    m.add_function(wrap_pyfunction!(suites, m)?)?;
    Ok(())
}
