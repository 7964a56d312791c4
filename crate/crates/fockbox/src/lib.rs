//! Finite-dimensional bosonic Fock-space linear algebra.
//!
//! Continuum amplitudes f ∈ L² enter through f_m = √w_m f(k_m), so discrete
//! inner products approximate the L² ones and the fibered-Hamiltonian
//! formulas hold with sums in place of integrals.

pub mod basis;
pub mod dressing;
pub mod krylov;
pub mod lanczos;
pub mod modes;
pub mod ops;
pub mod sparse;

pub use basis::FockBasis;
pub use dressing::{dressing_displacement, Dressing};
pub use krylov::{expm_multiply, krylov_propagate};
pub use lanczos::{lanczos_ground_state, GroundState};
pub use modes::{Mode, ModeGrid};
pub use ops::{
    annihilation_op, coupling_amplitudes, creation_op, discrete_alpha, field_op, second_quantization,
    van_hove_from_amplitudes, van_hove_hamiltonian,
};
pub use sparse::SparseOperator;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("Lanczos did not converge after {iterations} matrix-vector products; best residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Krylov step size collapsed to {step:e} at t = {time:e}")]
    StepCollapse { step: f64, time: f64 },
    #[error("dressing unitarity defect {defect:e} exceeds {tol:e}; raise n_max")]
    Truncation { defect: f64, tol: f64 },
    #[error(transparent)]
    Model(#[from] nelson_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
