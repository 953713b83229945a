//! Python bindings for the relbound solver: systems, states, spectrum
//! solves and the Dirac-Coulomb reference.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use relbound::cli::{parse_state_label, preset};
use relbound::kernel::{build_grid, Mapping};
use relbound::reference;
use relbound::solver::{
    assemble, default_window, normalize, select_state, solve_bound_states, NormConvention, QuantumState,
    TwoBodySystem,
};

use std::sync::Arc;

fn err(e: relbound::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A two-body Coulomb system (masses in MeV).
#[pyclass(name = "System")]
struct PySystem {
    inner: TwoBodySystem,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (m1, m2, alpha, label = "custom".to_string()))]
    fn new(m1: f64, m2: f64, alpha: f64, label: String) -> PyResult<Self> {
        Ok(Self { inner: TwoBodySystem::new(m1, m2, alpha, label).map_err(err)? })
    }

    /// Build a preset: hydrogen-e, hydrogen-mu, positronium, e-mu, mu-mu.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self { inner: preset(name).map_err(err)?.0 })
    }

    #[getter]
    fn m1(&self) -> f64 {
        self.inner.m1()
    }

    #[getter]
    fn m2(&self) -> f64 {
        self.inner.m2()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.xi()
    }

    #[getter]
    fn reduced_mass(&self) -> f64 {
        self.inner.reduced_mass()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn swapped(&self) -> Self {
        Self { inner: self.inner.swapped() }
    }

    fn __repr__(&self) -> String {
        format!(
            "System(m1={}, m2={}, alpha={}, label='{}')",
            self.inner.m1(),
            self.inner.m2(),
            self.inner.alpha(),
            self.inner.label
        )
    }
}

/// Quantum numbers n, F, L, S, mF.
#[pyclass(name = "State")]
struct PyState {
    inner: QuantumState,
}

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (n, f, l, s, m_f = None))]
    fn new(n: u32, f: i32, l: i32, s: i32, m_f: Option<i32>) -> PyResult<Self> {
        Ok(Self { inner: QuantumState::new(n, f, l, s, m_f.unwrap_or(f)).map_err(err)? })
    }

    /// Parse a label like "1S0F0" or "2P1F1".
    #[staticmethod]
    fn parse(label: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_state_label(label).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n
    }

    #[getter]
    fn f(&self) -> i32 {
        self.inner.f
    }

    #[getter]
    fn l(&self) -> i32 {
        self.inner.l
    }

    #[getter]
    fn s(&self) -> i32 {
        self.inner.s
    }

    #[getter]
    fn m_f(&self) -> i32 {
        self.inner.m_f
    }

    fn __repr__(&self) -> String {
        let st = &self.inner;
        format!("State(n={}, f={}, l={}, s={}, m_f={})", st.n, st.f, st.l, st.s, st.m_f)
    }
}

/// A solved bound state: energy in eV plus the radial functions.
#[pyclass(name = "Solution")]
struct PySolution {
    #[pyo3(get)]
    epsilon_ev: f64,
    #[pyo3(get)]
    epsilon_m1: f64,
    #[pyo3(get)]
    node_count: usize,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    p_over_m1: Vec<f64>,
    #[pyo3(get)]
    g: Vec<f64>,
    #[pyo3(get)]
    h: Vec<f64>,
}

/// Solve one bound state on an N-point grid; the radial functions come
/// back L2-normalized.
#[pyfunction]
#[pyo3(signature = (system, state, n_grid = 400))]
fn solve(system: &PySystem, state: &PyState, n_grid: usize) -> PyResult<PySolution> {
    let grid = Arc::new(
        build_grid(n_grid, Mapping::Rational { scale: system.inner.bohr_momentum() }).map_err(err)?,
    );
    let op = assemble(&system.inner, &state.inner, &grid).map_err(err)?;
    let sols = solve_bound_states(&op, default_window()).map_err(err)?;
    let sol = select_state(&sols, state.inner.n, state.inner.l).map_err(err)?;
    let sol = normalize(&sol, NormConvention::DiscreteL2).map_err(err)?;
    Ok(PySolution {
        epsilon_ev: sol.epsilon * system.inner.ev_per_m1(),
        epsilon_m1: sol.epsilon,
        node_count: sol.node_count,
        residual: sol.residual,
        p_over_m1: sol.grid.nodes().to_vec(),
        g: sol.g.clone(),
        h: sol.h.clone(),
    })
}

/// Bound-state energies (eV, ascending) resolved on an N-point grid.
#[pyfunction]
#[pyo3(signature = (system, state, n_grid = 400, max_levels = 8))]
fn spectrum(system: &PySystem, state: &PyState, n_grid: usize, max_levels: usize) -> PyResult<Vec<f64>> {
    let grid = Arc::new(
        build_grid(n_grid, Mapping::Rational { scale: system.inner.bohr_momentum() }).map_err(err)?,
    );
    let op = assemble(&system.inner, &state.inner, &grid).map_err(err)?;
    let vals = relbound::solver::bound_eigenvalues(&op, default_window()).map_err(err)?;
    Ok(vals.iter().take(max_levels).map(|e| e * system.inner.ev_per_m1()).collect())
}

/// Closed-form Dirac-Coulomb binding energy; `mass` sets the unit.
#[pyfunction]
fn dirac_coulomb_energy(n: u32, twice_j: i32, mass: f64, alpha: f64) -> PyResult<f64> {
    reference::dirac_coulomb_energy(n, twice_j, mass, alpha).map_err(err)
}

/// Contracted channel weights (g-small, h-big, h-small) as dicts
/// keyed by L'.
#[pyfunction]
fn channel_weights(f: i32, m_f: i32, l: i32, s: i32) -> PyResult<(Vec<(i32, f64)>, Vec<(i32, f64)>, Vec<(i32, f64)>)> {
    let w = relbound::angular::channel_weights(f, m_f, l, s).map_err(err)?;
    let flat = |m: &std::collections::BTreeMap<i32, f64>| m.iter().map(|(&k, &v)| (k, v)).collect::<Vec<_>>();
    Ok((flat(&w.g_small), flat(&w.h_big), flat(&w.h_small)))
}

#[pymodule]
fn relbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(dirac_coulomb_energy, m)?)?;
    m.add_function(wrap_pyfunction!(channel_weights, m)?)?;
    m.add("M_ELECTRON", relbound::M_ELECTRON)?;
    m.add("M_MUON", relbound::M_MUON)?;
    m.add("M_PROTON", relbound::M_PROTON)?;
    m.add("ALPHA", relbound::ALPHA)?;
    Ok(())
}
