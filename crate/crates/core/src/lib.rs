//! Simulation and learning of interacting bosonic Hamiltonians
//!
//! `H = Σ h_ij b_i†b_j + Σ ω_i n_i + Σ (ξ_i/2) n_i(n_i-1)`
//!
//! from coherent-state preparations, evolution with randomly inserted
//! number-conserving unitaries, and homodyne detection. Parameters are
//! recovered by robust frequency estimation, so the total evolution time
//! scales as `O(1/ε)`.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod lattice;
pub mod operator;
pub mod protocols;
pub mod rfe;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Library version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
