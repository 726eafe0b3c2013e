//! Time evolution: exact, randomized-insertion trajectories, twirled
//! effective dynamics, two-mode rotations and SPAM perturbations.

mod ensemble;
mod krylov;
mod propagator;
mod randomized;
mod rotation;
mod spam;

pub use ensemble::{density_matrix, pure_density, trace_distance, trace_distance_to_pure};
pub use krylov::krylov_evolve;
pub use propagator::{evolve_exact, evolve_exact_with, BlockUnitary, EvolveOptions, SpectralPropagator};
pub use randomized::{evolve_randomized, AngleLaw, InsertedUnitary, RandomizationPlan, RandomizedEvolver};
pub use rotation::{two_mode_rotation, Frame, PairRotation, RotationKind};
pub(crate) use rotation::twirl_blocks;
pub use spam::{apply_displacement, apply_spam, displacement_matrix, SpamChannel, SpamKind};

use crate::lattice::LatticeModel;

/// Analytic generator of the dynamics averaged over independent uniform
/// phases `e^{-iθ n_i}` on `randomized_modes`: every hopping touching a
/// randomized mode carries unbalanced `b_i`/`b_i†` counts and drops out.
pub fn effective_hamiltonian(model: &LatticeModel, randomized_modes: &[usize]) -> LatticeModel {
    model.retain_edges(|i, j| !randomized_modes.contains(&i) && !randomized_modes.contains(&j))
}
