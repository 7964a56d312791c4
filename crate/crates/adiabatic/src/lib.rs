//! A one-dimensional particle on a periodic grid coupled to a handful of
//! field modes. The state space is grid ⊗ truncated Fock space, indexed
//! `x * dim_fock + f`.

pub mod leakage;
pub mod projector;
pub mod toy;

pub use leakage::{leakage_scan, LeakageRow, Wavepacket};
pub use projector::{bare_projector, dressed_projector, DressedProjector};
pub use toy::{build_toy_hamiltonian, ModeLayout, ToyModelSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid toy model: {0}")]
    Invalid(String),
    #[error("state dimension {dim} exceeds the budget {budget}")]
    Budget { dim: usize, budget: usize },
    #[error(transparent)]
    Fock(#[from] fockbox::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
