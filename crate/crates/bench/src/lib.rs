//! Benchmark harness for bosonic Hamiltonian learning: learning campaigns,
//! accuracy sweeps against a fixed-time control, and numerical checks of the
//! error bounds the protocol relies on.

pub mod baseline;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;
pub mod trials;
