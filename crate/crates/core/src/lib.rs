//! Fermionic classical shadows, cumulant reconstruction of reduced density
//! matrices and quantum subspace expansion on dense state vectors.

pub mod combinatorics;
pub mod cumulant;
pub mod error;
pub mod fermion;
pub mod models;
pub mod pauli;
pub mod qse;
pub mod rdm;
pub mod rng;
pub mod shadows;
pub mod statevector;

pub use error::{Error, Result};
