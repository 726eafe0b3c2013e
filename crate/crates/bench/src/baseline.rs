//! Standard-quantum-limit control: every shot evolves for the same fixed time
//! and precision comes only from repeating shots.
//!
//! Each trial draws `ω, ξ ∈ [-1, 1]`, prepares `|α₁>` and `|α₂>`, evolves for
//! `t₀ = 1` and measures both quadratures `L` times. With `Z_k ≈ <b>_{α_k}`,
//! `ŝ = arcsin(Im(Z₁/Z₂)/|Z₁/Z₂|)/(|α₂|² - |α₁|²) ≈ sin ξt₀` and
//! `ω̂ = (-arg Z₁ - |α₁|² ŝ)/t₀`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use bosonic_learn::dynamics::evolve_exact;
use bosonic_learn::fock::coherent_state;
use bosonic_learn::homodyne::{HermiteTable, Quadrature, QuadratureDistribution, QuadratureSampler};
use bosonic_learn::lattice::{build_hamiltonian, LatticeModel};
use bosonic_learn::rng;
use bosonic_learn::stats::rmse;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Evolution time of every baseline shot.
pub const T0: f64 = 1.0;
/// Growth factor of the shot-count search.
pub const GRID_FACTOR: f64 = 1.1;
const START_SHOTS: u64 = 16;
const MAX_SHOTS: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselinePoint {
    pub epsilon: f64,
    /// Shots per quadrature per amplitude.
    pub shots: u64,
    /// Total samples, `4L`.
    pub samples: u64,
    pub evolution_time: f64,
    pub rmse: f64,
    pub trials: usize,
}

struct Trial {
    omega: f64,
    /// X and P distributions for `α₁` then `α₂`.
    dists: [QuadratureDistribution; 4],
}

pub struct SqlBaseline {
    alpha1: f64,
    alpha2: f64,
    seed: u64,
    trials: Vec<Trial>,
}

impl SqlBaseline {
    pub fn new(alpha1: f64, alpha2: f64, cutoff: usize, trials: usize, seed: u64) -> anyhow::Result<Self> {
        let table = Arc::new(HermiteTable::new(cutoff, 8.0, 0.01)?);
        let trials = (0..trials as u64)
            .into_par_iter()
            .map(|k| {
                let mut r = rng::stream(seed, &[0, k]);
                let omega = r.random_range(-1.0..1.0);
                let xi = r.random_range(-1.0..1.0);
                let h = build_hamiltonian(&LatticeModel::single_mode(omega, xi)?, cutoff)?;
                let mut dists = Vec::with_capacity(4);
                for a in [alpha1, alpha2] {
                    let s = evolve_exact(&h, &coherent_state(Complex64::new(a, 0.0), 1, 0, cutoff)?, T0)?;
                    for q in [Quadrature::X, Quadrature::P] {
                        dists.push(QuadratureSampler::new(0, q, table.clone()).distribution(&s)?);
                    }
                }
                let dists: [QuadratureDistribution; 4] = dists.try_into().expect("four distributions");
                Ok(Trial { omega, dists })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Self { alpha1, alpha2, seed, trials })
    }

    /// Error of every trial with `shots` shots per quadrature per amplitude.
    pub fn errors(&self, shots: u64, stream: u64) -> Vec<f64> {
        let (l1, l2) = (self.alpha1 * self.alpha1, self.alpha2 * self.alpha2);
        self.trials
            .par_iter()
            .enumerate()
            .map(|(k, tr)| {
                let mut r = rng::stream(self.seed, &[1, stream, k as u64]);
                let mut z = [Complex64::new(0.0, 0.0); 2];
                for (a, zk) in z.iter_mut().enumerate() {
                    let x = tr.dists[2 * a].sample_batch(shots, f64::INFINITY, &mut r).mean();
                    let p = tr.dists[2 * a + 1].sample_batch(shots, f64::INFINITY, &mut r).mean();
                    *zk = Complex64::new(x, p) * FRAC_1_SQRT_2;
                }
                let q = z[0] / z[1];
                let s = ((q / q.norm()).im.clamp(-1.0, 1.0)).asin() / (l2 - l1);
                let omega_hat = (-z[0].arg() - l1 * s) / T0;
                omega_hat - tr.omega
            })
            .collect()
    }

    /// Smallest shot count on the search grid whose RMSE reaches `epsilon`.
    pub fn point(&self, epsilon: f64) -> anyhow::Result<BaselinePoint> {
        let mut shots = START_SHOTS;
        let mut step = 0u64;
        loop {
            let e = rmse(&self.errors(shots, step));
            if e <= epsilon {
                let samples = 4 * shots;
                return Ok(BaselinePoint {
                    epsilon,
                    shots,
                    samples,
                    evolution_time: samples as f64 * T0,
                    rmse: e,
                    trials: self.trials.len(),
                });
            }
            if shots > MAX_SHOTS {
                anyhow::bail!("baseline did not reach epsilon = {epsilon} within {MAX_SHOTS} shots");
            }
            shots = ((shots as f64 * GRID_FACTOR).ceil() as u64).max(shots + 1);
            step += 1;
        }
    }
}
