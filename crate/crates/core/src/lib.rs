//! Dressed-particle dynamics of the massless Nelson model at small velocity:
//! smeared electrostatics, effective flows, radiation and a classical
//! particle–field reference simulation.

pub mod classical_field;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod radiation;
pub mod special;

pub use error::{Error, Result};
