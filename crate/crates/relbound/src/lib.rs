//! Relativistic two-body Coulomb bound states in momentum space.
//!
//! The bound-state problem is reduced to coupled radial integral equations
//! for an upper and a lower radial function, discretized on a mapped
//! Gauss-Legendre grid and solved as a dense matrix eigenvalue problem.
//! A Dirac-Coulomb reference (analytic energies plus the numerical
//! large-`m2` limit of the same equations) serves as the built-in oracle.

pub mod angular;
pub mod cli;
pub mod kernel;
pub mod quad;
pub mod reference;
pub mod solver;

pub use angular::{AngularMomentum, CouplingTable};
pub use kernel::{MomentumGrid, PartialWaveKernel};
pub use solver::{QuantumState, RadialSolution, TwoBodySystem};

/// Electron mass, MeV (CODATA 2018).
pub const M_ELECTRON: f64 = 0.51099895;
/// Muon mass, MeV.
pub const M_MUON: f64 = 105.6583755;
/// Proton mass, MeV.
pub const M_PROTON: f64 = 938.2720882;
/// Fine-structure constant (CODATA 2018).
pub const ALPHA: f64 = 7.2973525693e-3;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular kernel: p = p' = {0}")]
    Singular(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("state not found: {0}")]
    NotFound(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
