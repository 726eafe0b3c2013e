//! Simulated devices for each stage: which modes start excited, which frame
//! is prepared and undone, and how the coupling is averaged away.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng;

use crate::dynamics::{
    apply_displacement, twirl_blocks, EvolveOptions, Frame, InsertedUnitary, PairRotation, RandomizationPlan,
    RandomizedEvolver, RotationKind, SpamChannel, SpamKind, SpectralPropagator,
};
use crate::error::{Error, Result};
use crate::fock::{product_coherent_state, FockBasis, FockVector};
use crate::lattice::{build_hamiltonian, ColorClusters, LatticeModel};
use crate::operator::{NumberSectors, SparseOperator};

use super::config::{Backend, ProtocolConfig};
use super::report::Stage;

/// Frame rotation for a frequency stage, if any.
pub fn stage_rotation(stage: Stage) -> Option<RotationKind> {
    match stage {
        Stage::Decoupled => None,
        Stage::RealFrame => Some(RotationKind::Y),
        Stage::ImagFrame => Some(RotationKind::X),
    }
}

/// Angle of the frame rotation `R`; `R b_1 R† = (b_1 + b_2)/√2` or `(b_1 + i b_2)/√2`.
pub const FRAME_ANGLE: f64 = -FRAC_PI_4;

/// Random unitary that averages the frame mode's partner out of the dynamics.
fn stage_insertion(stage: Stage) -> Option<RotationKind> {
    match stage {
        Stage::Decoupled => None,
        Stage::RealFrame => Some(RotationKind::X),
        Stage::ImagFrame => Some(RotationKind::Y),
    }
}

enum Dynamics {
    Effective(SpectralPropagator),
    Randomized { h: SparseOperator, inserted: Vec<InsertedUnitary>, trajectories: usize, step_rate: f64 },
}

/// A block of modes simulated together.
struct Part {
    basis: FockBasis,
    /// Global index of each local mode.
    modes: Vec<usize>,
    /// Local modes prepared in `|α>` (in frame coordinates).
    excited: Vec<bool>,
    frame: Frame,
    dynamics: Dynamics,
}

/// Target of a measurement: a local mode of one part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Probe {
    pub part: usize,
    pub local_mode: usize,
}

pub struct StageSimulator {
    stage: Stage,
    parts: Vec<Part>,
    spam_strength: f64,
    spam: SpamChannel,
    spam_kicks: usize,
    leak_tol: f64,
}

impl StageSimulator {
    /// `clusters` lists the modes measured together; in the frame stages only
    /// two-mode clusters take part.
    pub fn new(cfg: &ProtocolConfig, model: &LatticeModel, clusters: &ColorClusters, stage: Stage) -> Result<Self> {
        let active: Vec<&Vec<usize>> =
            clusters.clusters.iter().filter(|c| stage == Stage::Decoupled || c.len() == 2).collect();
        if active.is_empty() {
            return Err(Error::Protocol(format!("no cluster takes part in stage {stage:?}")));
        }
        let spam = SpamChannel::new(cfg.spam_strength, SpamKind::StatePreparation)?.with_kick_radius(cfg.spam_kick_radius);
        let parts = match cfg.backend {
            Backend::Effective => {
                active.iter().map(|c| effective_part(model, c, stage, cfg.cutoff)).collect::<Result<Vec<_>>>()?
            }
            Backend::Randomized { trajectories, step_rate } => {
                vec![randomized_part(model, &active, &clusters.spectators, stage, cfg.cutoff, trajectories, step_rate)?]
            }
        };
        Ok(Self {
            stage,
            parts,
            spam_strength: cfg.spam_strength,
            spam,
            spam_kicks: cfg.spam_kicks,
            leak_tol: cfg.leak_tol,
        })
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// Where global mode `mode` is measured.
    pub fn probe(&self, mode: usize) -> Option<Probe> {
        self.parts.iter().enumerate().find_map(|(p, part)| {
            part.modes.iter().position(|&m| m == mode).map(|local_mode| Probe { part: p, local_mode })
        })
    }

    /// Weighted states at detection for part `p`, every excited mode started
    /// at amplitude `alpha`, after evolution time `t`.
    pub fn ensemble<R: Rng + ?Sized>(&self, p: usize, alpha: f64, t: f64, rng: &mut R) -> Result<Vec<(f64, FockVector)>> {
        let part = &self.parts[p];
        let amps: Vec<Complex64> =
            part.excited.iter().map(|&e| Complex64::new(if e { alpha } else { 0.0 }, 0.0)).collect();
        let frame_state = product_coherent_state(&amps, part.basis.cutoff())?;
        if frame_state.leakage() > self.leak_tol {
            return Err(Error::TruncationLeakage { leakage: frame_state.leakage(), tol: self.leak_tol });
        }
        let n = part.modes.len();
        let mut branches: Vec<(f64, Option<Vec<Complex64>>, Option<Vec<Complex64>>)> = Vec::new();
        let s = self.spam_strength;
        if s == 0.0 {
            branches.push((1.0, None, None));
        } else {
            let k = self.spam_kicks as f64;
            let mut kicks = || (0..n).map(|_| self.spam.draw_kick(rng)).collect::<Vec<_>>();
            branches.push(((1.0 - s) * (1.0 - s), None, None));
            for _ in 0..self.spam_kicks {
                branches.push((s * (1.0 - s) / k, Some(kicks()), None));
                branches.push((s * (1.0 - s) / k, None, Some(kicks())));
                branches.push((s * s / k, Some(kicks()), Some(kicks())));
            }
        }
        let evolver = match &part.dynamics {
            Dynamics::Randomized { h, inserted, step_rate, .. } => {
                let steps = ((step_rate * t * t).ceil() as usize).max(1);
                let plan = RandomizationPlan::new(t, steps, inserted.clone(), 0)?;
                let opts = EvolveOptions { leak_tol: self.leak_tol.max(1e-8), ..EvolveOptions::default() };
                Some(RandomizedEvolver::with_options(h, &plan, opts)?)
            }
            Dynamics::Effective(_) => None,
        };
        let mut out = Vec::new();
        for (w, prep, meas) in branches {
            let start = match &prep {
                None => frame_state.clone(),
                Some(kick) => part.frame.apply_inverse(&displace_all(&part.frame.apply(&frame_state)?, kick)?)?,
            };
            let finals: Vec<(f64, FockVector)> = match (&part.dynamics, &evolver) {
                (Dynamics::Effective(prop), _) => vec![(w, prop.evolve(&start, t)?)],
                (Dynamics::Randomized { trajectories, .. }, Some(ev)) => {
                    let lab = part.frame.apply(&start)?;
                    let wk = w / *trajectories as f64;
                    (0..*trajectories)
                        .map(|_| Ok((wk, part.frame.apply_inverse(&ev.trajectory(&lab, rng)?)?)))
                        .collect::<Result<_>>()?
                }
                _ => unreachable!("randomized dynamics always builds an evolver"),
            };
            for (wf, state) in finals {
                let state = match &meas {
                    None => state,
                    Some(kick) => displace_all(&state, kick)?,
                };
                out.push((wf, state));
            }
        }
        Ok(out)
    }
}

fn displace_all(state: &FockVector, kicks: &[Complex64]) -> Result<FockVector> {
    let mut s = state.clone();
    for (m, &beta) in kicks.iter().enumerate() {
        s = apply_displacement(&s, m, beta)?;
    }
    Ok(s)
}

fn frame_for(basis: FockBasis, stage: Stage, pairs: &[(usize, usize)]) -> Result<Frame> {
    let mut frame = Frame::identity();
    if let Some(kind) = stage_rotation(stage) {
        for &(a, b) in pairs {
            frame.push(PairRotation::new(basis, kind, a, b)?, FRAME_ANGLE)?;
        }
    }
    Ok(frame)
}

/// One cluster evolved under its twirled generator, in frame coordinates.
fn effective_part(model: &LatticeModel, cluster: &[usize], stage: Stage, cutoff: usize) -> Result<Part> {
    let sub = model.submodel(cluster)?;
    let h = build_hamiltonian(&sub, cutoff)?;
    let basis = h.basis();
    let n = cluster.len();
    let (excited, prop, frame) = match stage {
        Stage::Decoupled => {
            let twirled = if n == 2 { h.phase_twirl(&[0])? } else { h };
            (vec![true; n], SpectralPropagator::new(&twirled)?, Frame::identity())
        }
        Stage::RealFrame | Stage::ImagFrame => {
            let frame = frame_for(basis, stage, &[(0, 1)])?;
            let sectors = NumberSectors::new(basis);
            let mut blocks = frame.conjugate_blocks(&h, &sectors);
            twirl_blocks(basis, &sectors, &mut blocks, &[0]);
            let prop = SpectralPropagator::from_blocks(basis, std::sync::Arc::new(sectors), blocks);
            (vec![true, false], prop, frame)
        }
    };
    Ok(Part { basis, modes: cluster.to_vec(), excited, frame, dynamics: Dynamics::Effective(prop) })
}

/// The whole lattice with explicit random insertions.
fn randomized_part(
    model: &LatticeModel,
    active: &[&Vec<usize>],
    spectators: &[usize],
    stage: Stage,
    cutoff: usize,
    trajectories: usize,
    step_rate: f64,
) -> Result<Part> {
    let h = build_hamiltonian(model, cutoff)?;
    let basis = h.basis();
    let n = model.num_modes();
    let pairs: Vec<(usize, usize)> = active.iter().filter(|c| c.len() == 2).map(|c| (c[0], c[1])).collect();
    let mut phased: Vec<usize> = spectators.to_vec();
    let mut inserted = Vec::new();
    let mut excited = vec![false; n];
    match stage_insertion(stage) {
        None => {
            phased.extend(pairs.iter().map(|p| p.0));
            for c in active {
                for &m in c.iter() {
                    excited[m] = true;
                }
            }
        }
        Some(kind) => {
            for &(a, b) in &pairs {
                inserted.push(InsertedUnitary::Rotation { kind, modes: (a, b) });
                excited[a] = true;
            }
        }
    }
    phased.sort();
    if !phased.is_empty() {
        inserted.insert(0, InsertedUnitary::PhaseShifters { modes: phased });
    }
    let frame = frame_for(basis, stage, &pairs)?;
    Ok(Part {
        basis,
        modes: (0..n).collect(),
        excited,
        frame,
        dynamics: Dynamics::Randomized { h, inserted, trajectories, step_rate },
    })
}
