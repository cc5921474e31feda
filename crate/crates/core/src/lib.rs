//! Ground states of the discrete nonlinear Schrödinger equation on truncated
//! lattice boxes: constrained minimization, existence-threshold estimation,
//! functional-inequality probes and standing-wave time evolution.

pub mod cli;
pub mod config;
pub mod energy;
pub mod evolution;
pub mod inequalities;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod solver;
pub mod thresholds;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation undefined on the zero field")]
    ZeroField,
    #[error("table potential has no value for site index {0}")]
    TableOutOfRange(usize),
    #[error("domain with {0} sites is too large for exhaustive search")]
    DomainTooLarge(usize),
    #[error("no solver start converged within the iteration budget")]
    NoStartConverged,
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

// Default-precision aliases; the library itself is generic over `scalar::Real`.
pub type Field = lattice::LatticeField<f64>;
pub type ComplexField = evolution::ComplexLatticeField<f64>;
pub type Model = energy::Problem<f64>;
pub type Context = energy::EnergyContext<f64>;
