//! Trajectories `Π_j U_j† e^{-iHτ} U_j |psi>` with random inserted unitaries.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockVector};
use crate::operator::SparseOperator;
use crate::rng;

use super::krylov::krylov_evolve;
use super::propagator::{BlockUnitary, EvolveOptions, SpectralPropagator};
use super::rotation::{PairRotation, RotationKind};

#[derive(Clone, Debug, PartialEq)]
pub enum InsertedUnitary {
    /// `Π_{i in modes} e^{-iθ_i n_i}`, independent angles per mode.
    PhaseShifters { modes: Vec<usize> },
    /// `U_kind(-θ/2)` on the pair, so each step reads `U(θ/2) e^{-iHτ} U(-θ/2)`.
    Rotation { kind: RotationKind, modes: (usize, usize) },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleLaw {
    /// i.i.d. uniform on `[0, 2π)`.
    Uniform,
    /// Every angle forced to zero.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomizationPlan {
    steps: usize,
    t: f64,
    pub inserted: Vec<InsertedUnitary>,
    pub angles: AngleLaw,
    pub seed: u64,
}

impl RandomizationPlan {
    pub fn new(t: f64, steps: usize, inserted: Vec<InsertedUnitary>, seed: u64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidTime(t));
        }
        if steps == 0 {
            return Err(Error::PlanMismatch("need at least one step".into()));
        }
        Ok(Self { steps, t, inserted, angles: AngleLaw::Uniform, seed })
    }

    pub fn with_angles(mut self, angles: AngleLaw) -> Self {
        self.angles = angles;
        self
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `τ = t / r`.
    pub fn tau(&self) -> f64 {
        self.t / self.steps as f64
    }

    /// Number of angles drawn per step.
    pub fn angles_per_step(&self) -> usize {
        self.inserted
            .iter()
            .map(|u| match u {
                InsertedUnitary::PhaseShifters { modes } => modes.len(),
                InsertedUnitary::Rotation { .. } => 1,
            })
            .sum()
    }
}

enum Piece {
    Phases(Vec<usize>),
    Rot(PairRotation),
}

enum Step {
    Dense(BlockUnitary),
    Krylov,
}

/// Precomputed pieces for repeated trajectories of one plan shape.
pub struct RandomizedEvolver {
    basis: FockBasis,
    h: SparseOperator,
    pieces: Vec<Piece>,
    step: Step,
    steps: usize,
    tau: f64,
    angles: AngleLaw,
    opts: EvolveOptions,
}

impl RandomizedEvolver {
    pub fn new(h: &SparseOperator, plan: &RandomizationPlan) -> Result<Self> {
        Self::with_options(h, plan, EvolveOptions::default())
    }

    pub fn with_options(h: &SparseOperator, plan: &RandomizationPlan, opts: EvolveOptions) -> Result<Self> {
        let basis = h.basis();
        let defect = h.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NonHermitian { defect });
        }
        let mut used = vec![false; basis.num_modes()];
        let mut claim = |m: usize| -> Result<()> {
            if m >= basis.num_modes() {
                return Err(Error::PlanMismatch(format!("mode {m} outside a {}-mode model", basis.num_modes())));
            }
            if std::mem::replace(&mut used[m], true) {
                return Err(Error::PlanMismatch(format!("mode {m} targeted twice")));
            }
            Ok(())
        };
        let mut pieces = Vec::new();
        for u in &plan.inserted {
            match u {
                InsertedUnitary::PhaseShifters { modes } => {
                    for &m in modes {
                        claim(m)?;
                    }
                    pieces.push(Piece::Phases(modes.clone()));
                }
                InsertedUnitary::Rotation { kind, modes: (a, b) } => {
                    claim(*a)?;
                    claim(*b)?;
                    pieces.push(Piece::Rot(PairRotation::new(basis, *kind, *a, *b)?));
                }
            }
        }
        let tau = plan.tau();
        let step = if basis.dim() <= opts.dense_limit {
            Step::Dense(SpectralPropagator::new(h)?.step_operator(tau))
        } else {
            Step::Krylov
        };
        Ok(Self { basis, h: h.clone(), pieces, step, steps: plan.steps, tau, angles: plan.angles, opts })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.angles_per_step();
        match self.angles {
            AngleLaw::Uniform => (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
            AngleLaw::Zero => vec![0.0; n],
        }
    }

    /// Applies the inserted unitary with angles `theta` (one per drawn angle).
    fn insert(&self, x: Vec<Complex64>, theta: &[f64]) -> Vec<Complex64> {
        let mut k = 0;
        let mut v = x;
        for p in &self.pieces {
            match p {
                Piece::Phases(modes) => {
                    let th = &theta[k..k + modes.len()];
                    k += modes.len();
                    if th.iter().all(|&a| a == 0.0) {
                        continue;
                    }
                    for (idx, a) in v.iter_mut().enumerate() {
                        let phase: f64 = modes.iter().zip(th).map(|(&m, &t)| t * self.basis.occupation(idx, m) as f64).sum();
                        *a *= Complex64::from_polar(1.0, -phase);
                    }
                }
                Piece::Rot(r) => {
                    let th = theta[k];
                    k += 1;
                    if th != 0.0 {
                        v = r.apply_slice(&v, -th / 2.0);
                    }
                }
            }
        }
        v
    }

    fn propagate(&self, x: Vec<Complex64>) -> Result<Vec<Complex64>> {
        match &self.step {
            Step::Dense(u) => Ok(u.apply_slice(&x)),
            Step::Krylov => krylov_evolve(&self.h, &x, self.tau, self.opts.krylov_tol),
        }
    }

    /// One trajectory with angles drawn from the plan's law.
    pub fn trajectory<R: Rng + ?Sized>(&self, state: &FockVector, rng: &mut R) -> Result<FockVector> {
        let angles: Vec<Vec<f64>> = (0..self.steps).map(|_| self.draw(rng)).collect();
        self.trajectory_with_angles(state, &angles)
    }

    /// One trajectory with the given angles, one vector per step in the
    /// order of the plan's insertions. Adjacent insertions are merged into a
    /// single unitary with the angle difference.
    pub fn trajectory_with_angles(&self, state: &FockVector, angles: &[Vec<f64>]) -> Result<FockVector> {
        if state.basis() != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: state.basis().dim() });
        }
        let per_step = self.angles_per_step();
        if angles.len() != self.steps || angles.iter().any(|a| a.len() != per_step) {
            return Err(Error::PlanMismatch(format!("need {} steps of {per_step} angles", self.steps)));
        }
        let mut v = self.insert(state.amplitudes().to_vec(), &angles[0]);
        for j in 0..self.steps {
            v = self.propagate(v)?;
            let diff: Vec<f64> = match angles.get(j + 1) {
                Some(next) => next.iter().zip(&angles[j]).map(|(a, b)| a - b).collect(),
                None => angles[j].iter().map(|a| -a).collect(),
            };
            v = self.insert(v, &diff);
        }
        let out = state.with_amplitudes(v)?;
        let drift = (out.norm() - state.norm()).abs();
        if drift > self.opts.leak_tol {
            return Err(Error::NormDrift { drift, tol: self.opts.leak_tol });
        }
        Ok(out)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn angles_per_step(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Phases(m) => m.len(),
                Piece::Rot(_) => 1,
            })
            .sum()
    }
}

/// One trajectory drawn from the plan's own seed.
pub fn evolve_randomized(h: &SparseOperator, state: &FockVector, plan: &RandomizationPlan) -> Result<FockVector> {
    let evolver = RandomizedEvolver::new(h, plan)?;
    let mut r = rng::stream(plan.seed, &[0]);
    evolver.trajectory(state, &mut r)
}
