//! State-preparation and measurement perturbations.
//!
//! With probability `strength` a random displacement kick `D(β)`, `β` uniform
//! in a disk of radius `kick_radius`, hits every affected mode; otherwise the
//! state passes unchanged. The channel is `(1-s)·id + s·K`, so half its
//! diamond distance to the identity is at most `s`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpamKind {
    StatePreparation,
    PreMeasurement,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpamChannel {
    strength: f64,
    kind: SpamKind,
    kick_radius: f64,
}

impl SpamChannel {
    pub const DEFAULT_KICK_RADIUS: f64 = 0.5;

    pub fn new(strength: f64, kind: SpamKind) -> Result<Self> {
        if !(strength.is_finite() && (0.0..1.0).contains(&strength)) {
            return Err(Error::InvalidSpam(strength));
        }
        Ok(Self { strength, kind, kick_radius: Self::DEFAULT_KICK_RADIUS })
    }

    pub fn with_kick_radius(mut self, radius: f64) -> Self {
        self.kick_radius = radius.abs();
        self
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn kind(&self) -> SpamKind {
        self.kind
    }

    pub fn kick_radius(&self) -> f64 {
        self.kick_radius
    }

    pub fn is_identity(&self) -> bool {
        self.strength == 0.0
    }

    /// A kick amplitude uniform in the disk.
    pub fn draw_kick<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let r = self.kick_radius * rng.random::<f64>().sqrt();
        Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
    }
}

/// `exp(β b† - β* b)` on one truncated mode.
pub fn displacement_matrix(beta: Complex64, cutoff: usize) -> DMatrix<Complex64> {
    let levels = cutoff + 1;
    // Hermitian g with exp(i g) = exp(β b† - β* b): g = -i(β b† - β* b).
    let mut g = DMatrix::<Complex64>::zeros(levels, levels);
    for k in 0..cutoff {
        let s = ((k + 1) as f64).sqrt();
        g[(k + 1, k)] = Complex64::new(0.0, -1.0) * beta * s;
        g[(k, k + 1)] = Complex64::new(0.0, 1.0) * beta.conj() * s;
    }
    let eig = g.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from_polar(1.0, eig.eigenvalues[j]);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Applies `D(β)` to one mode of a multi-mode state.
pub fn apply_displacement(state: &FockVector, mode: usize, beta: Complex64) -> Result<FockVector> {
    let basis = state.basis();
    basis.check_mode(mode)?;
    let d = displacement_matrix(beta, basis.cutoff());
    let levels = basis.levels();
    let stride = basis.stride(mode);
    let x = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for base in 0..basis.dim() {
        if basis.occupation(base, mode) != 0 {
            continue;
        }
        for m in 0..levels {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..levels {
                acc += d[(m, n)] * x[base + n * stride];
            }
            out[base + m * stride] = acc;
        }
    }
    state.with_amplitudes(out)
}

/// One stochastic realization of the channel on `modes`.
pub fn apply_spam<R: Rng + ?Sized>(
    channel: &SpamChannel,
    state: &FockVector,
    modes: &[usize],
    rng: &mut R,
) -> Result<FockVector> {
    if channel.is_identity() || rng.random::<f64>() >= channel.strength {
        return Ok(state.clone());
    }
    let mut out = state.clone();
    for &m in modes {
        let beta = channel.draw_kick(rng);
        out = apply_displacement(&out, m, beta)?;
    }
    Ok(out)
}
