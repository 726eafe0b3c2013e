//! Robust frequency estimation from unit-circle phase signals.
//!
//! Signals `Z(t) ≈ e^{-i(ωt + f(t))}` at doubling times `t_j = 2^j/W̃` refine a
//! phase `θ ≈ ω/W̃`; each step keeps the candidate closest to the previous one.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::PhaseSignal;

/// `|x|_{2π} = π - |(x mod 2π) - π|`.
pub fn circle_norm(x: f64) -> f64 {
    PI - (x.rem_euclid(TAU) - PI).abs()
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn modular_distance(a: f64, b: f64) -> f64 {
    circle_norm(a - b)
}

/// Representative of `x` in `[-π, π]`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfeSchedule {
    pub w: f64,
    pub epsilon: f64,
    pub w_tilde: f64,
    /// Number of iterations `J`.
    pub iterations: usize,
}

impl RfeSchedule {
    pub fn new(w: f64, epsilon: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0 && epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Constraint(format!("need W > 0 and epsilon > 0, got W = {w}, epsilon = {epsilon}")));
        }
        let w_tilde = 3.0 * w / PI;
        let raw = (4.0 * PI * w_tilde / (3.0 * epsilon)).log2().ceil();
        let iterations = if raw.is_finite() && raw > 1.0 { raw as usize } else { 1 };
        Ok(Self { w, epsilon, w_tilde, iterations })
    }

    /// `t_j = 2^j / W̃`.
    pub fn time(&self, j: usize) -> f64 {
        2f64.powi(j as i32) / self.w_tilde
    }

    /// Unclamped `(3ε²/4E_j²) · 2^j/(2^J - 1)`, which for `j >= 1` is
    /// `27ε²/(π²W̃²) · 2^{3j-6}/(2^J - 1)`.
    ///
    /// At `j = 0` the second form would exceed the first and push
    /// `Σ E_j² δ_j` above `3ε²/4`, so the first form is used throughout.
    pub fn delta_raw(&self, j: usize) -> f64 {
        let jj = self.iterations as i32;
        3.0 * self.epsilon.powi(2) / (4.0 * self.error_scale(j).powi(2)) * 2f64.powi(j as i32) / (2f64.powi(jj) - 1.0)
    }

    /// Failure budget of iteration `j`, clamped into `(0, 1]`.
    pub fn delta(&self, j: usize) -> f64 {
        self.delta_raw(j).min(1.0)
    }

    /// `E_0 = 2π`, `E_j = 4πW̃/(3·2^j)`.
    pub fn error_scale(&self, j: usize) -> f64 {
        if j == 0 {
            TAU
        } else {
            4.0 * PI * self.w_tilde / (3.0 * 2f64.powi(j as i32))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseTrack {
    pub schedule: RfeSchedule,
    /// `θ_{-1} = 0` followed by `θ_0, θ_1, ...`.
    pub theta_history: Vec<f64>,
    pub candidate_sets: Vec<Vec<f64>>,
    pub total_time: f64,
}

impl PhaseTrack {
    pub fn new(schedule: RfeSchedule) -> Self {
        Self { schedule, theta_history: vec![0.0], candidate_sets: Vec::new(), total_time: 0.0 }
    }

    /// Index of the next iteration.
    pub fn next_iteration(&self) -> usize {
        self.candidate_sets.len()
    }

    pub fn is_complete(&self) -> bool {
        self.next_iteration() >= self.schedule.iterations
    }

    /// Feeds the signal measured at `t_j` for the next `j`.
    pub fn update(&mut self, signal: &PhaseSignal) -> Result<()> {
        if self.is_complete() {
            return Err(Error::Protocol("phase track already complete".into()));
        }
        let j = self.next_iteration();
        let arg = signal.value().arg();
        let count = 1usize << j;
        let scale = count as f64;
        let candidates: Vec<f64> = (0..count).map(|k| (TAU * k as f64 - arg) / scale).collect();
        let prev = *self.theta_history.last().unwrap();
        // Strict comparison keeps the smallest index on ties.
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, &c) in candidates.iter().enumerate() {
            let d = modular_distance(c, prev);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        self.theta_history.push(candidates[best]);
        self.candidate_sets.push(candidates);
        self.total_time += signal.ledger_time();
        Ok(())
    }

    /// `W̃ θ_{J-1}` with the phase wrapped into `[-π, π]`.
    pub fn estimate(&self) -> Option<f64> {
        if !self.is_complete() {
            return None;
        }
        Some(self.schedule.w_tilde * wrap_to_pi(*self.theta_history.last().unwrap()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RfeOutcome {
    pub estimate: f64,
    pub total_time: f64,
    pub track: PhaseTrack,
}

/// Runs all iterations, asking `provider(t_j, δ_j)` for each signal.
pub fn rfe_run<P>(mut provider: P, schedule: RfeSchedule) -> Result<RfeOutcome>
where
    P: FnMut(f64, f64) -> Result<PhaseSignal>,
{
    let mut track = PhaseTrack::new(schedule);
    for j in 0..schedule.iterations {
        let signal = provider(schedule.time(j), schedule.delta(j))?;
        track.update(&signal)?;
    }
    let estimate = track.estimate().expect("track complete");
    Ok(RfeOutcome { estimate, total_time: track.total_time, track })
}
