use serde::{Deserialize, Serialize};

use crate::dynamics::SpamChannel;
use crate::error::{Error, Result};
use crate::fock::DEFAULT_LEAK_TOL;
use crate::homodyne::{OmegaBudget, XiBudget};

/// How the randomized dynamics is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Exact evolution under the twirled (phase-averaged) generator.
    Effective,
    /// Explicit random insertions; `r(t) = max(1, ceil(step_rate·t²))` steps and
    /// `trajectories` samples of the random unitaries per experiment.
    Randomized { trajectories: usize, step_rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Target RMSE per parameter.
    pub epsilon: f64,
    /// Prior bound on `|ω_i|` and `|ξ_i|`.
    pub w: f64,
    /// Prior bound on the rotated-frame frequencies.
    pub w_rotated: f64,
    pub omega: OmegaBudget,
    pub xi: XiBudget,
    pub cutoff: usize,
    pub leak_tol: f64,
    /// Strength of both the preparation and the pre-measurement channel.
    pub spam_strength: f64,
    pub spam_kick_radius: f64,
    /// Kick amplitudes drawn per affected branch of the SPAM mixture.
    pub spam_kicks: usize,
    pub backend: Backend,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            w: 1.05,
            w_rotated: 2.05,
            omega: OmegaBudget::defaults(0.4),
            xi: XiBudget::defaults(0.5, 0.9),
            cutoff: 24,
            leak_tol: DEFAULT_LEAK_TOL,
            spam_strength: 0.0,
            spam_kick_radius: SpamChannel::DEFAULT_KICK_RADIUS,
            spam_kicks: 4,
            backend: Backend::Effective,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_spam(mut self, strength: f64) -> Self {
        self.spam_strength = strength;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_leak_tol(mut self, tol: f64) -> Self {
        self.leak_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.epsilon) {
            return Err(Error::Constraint(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !positive(self.w) || !positive(self.w_rotated) {
            return Err(Error::Constraint("frequency bounds must be positive".into()));
        }
        self.omega.validate()?;
        self.xi.validate()?;
        let alpha_sq = [self.omega.alpha, self.xi.alpha1, self.xi.alpha2].iter().map(|a| a * a).fold(0.0, f64::max);
        if self.cutoff == 0 || alpha_sq > self.cutoff as f64 / 4.0 {
            return Err(Error::CutoffTooSmall { cutoff: self.cutoff, alpha_sq });
        }
        if !(self.leak_tol > 0.0 && self.leak_tol < 1.0) {
            return Err(Error::Constraint(format!("leak_tol must lie in (0, 1), got {}", self.leak_tol)));
        }
        SpamChannel::new(self.spam_strength, crate::dynamics::SpamKind::StatePreparation)?;
        if !(self.spam_kick_radius.is_finite() && self.spam_kick_radius >= 0.0) || self.spam_kicks == 0 {
            return Err(Error::Constraint("SPAM kicks need a finite radius and at least one draw".into()));
        }
        if let Backend::Randomized { trajectories, step_rate } = self.backend {
            if trajectories == 0 || !positive(step_rate) {
                return Err(Error::Constraint("randomized backend needs trajectories >= 1 and step_rate > 0".into()));
            }
        }
        Ok(())
    }
}
