//! Constraint chains tying α, M, η₀, η₁ and the shot count L to a valid
//! phase signal.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|α| e^{-2|α|²} sin(π/6 - |α|²/2) - (2|α|²+1)/M`.
pub fn omega_margin(alpha: f64, m: f64) -> f64 {
    let l = alpha * alpha;
    alpha.abs() * (-2.0 * l).exp() * (PI / 6.0 - l / 2.0).sin() - (2.0 * l + 1.0) / m
}

pub fn omega_m_lower_bound(alpha: f64) -> f64 {
    let l = alpha * alpha;
    (2.0 * l).exp() * (2.0 * l + 1.0) / (alpha.abs() * (PI / 6.0 - l / 2.0).sin())
}

/// Strict upper bound on η₀.
pub fn omega_eta0_bound(alpha: f64, m: f64) -> f64 {
    omega_margin(alpha, m) / m
}

pub fn omega_eta1_bound(alpha: f64, m: f64, eta0: f64) -> f64 {
    omega_margin(alpha, m) - m * eta0
}

/// `⌈(2M²/η₁²) log(4/δ)⌉`.
pub fn omega_shots(m: f64, eta1: f64, delta: f64) -> u64 {
    (2.0 * m * m / (eta1 * eta1) * (4.0 / delta).ln()).ceil() as u64
}

/// `(K₁, K₂, β)` with `K₁ = (4 log2 |α₁|⁻³ + 16/β |α₁|⁻¹) e^{2|α₁|²}` and
/// `K₂ = 16/β |α₂|⁻¹ e^{2|α₂|²}`.
pub fn xi_constants(alpha1: f64, alpha2: f64) -> (f64, f64, f64) {
    let (l1, l2) = (alpha1 * alpha1, alpha2 * alpha2);
    let beta = (l1 - l2).abs();
    let k1 = (4.0 * LN_2 * alpha1.abs().powi(-3) + 16.0 / beta / alpha1.abs()) * (2.0 * l1).exp();
    let k2 = 16.0 / beta / alpha2.abs() * (2.0 * l2).exp();
    (k1, k2, beta)
}

pub fn xi_m_lower_bound(alpha1: f64, alpha2: f64) -> f64 {
    let (k1, k2, _) = xi_constants(alpha1, alpha2);
    k1 * (2.0 * alpha1 * alpha1 + 1.0) + k2 * (2.0 * alpha2 * alpha2 + 1.0)
}

pub fn xi_eta0_bound(alpha1: f64, alpha2: f64, m: f64) -> f64 {
    let (k1, k2, _) = xi_constants(alpha1, alpha2);
    (m - xi_m_lower_bound(alpha1, alpha2)) / (m * m * (k1 + k2))
}

pub fn xi_eta1_bound(alpha1: f64, alpha2: f64, m: f64, eta0: f64) -> f64 {
    let (k1, k2, _) = xi_constants(alpha1, alpha2);
    let (l1, l2) = (alpha1 * alpha1, alpha2 * alpha2);
    let num = m - k1 * (2.0 * l1 + 1.0 + m * m * eta0) - k2 * (2.0 * l2 + 1.0 + m * m * eta0);
    num / (m * (k1 + k2))
}

/// `⌈(2M²/η₁²) log(8/δ)⌉`.
pub fn xi_shots(m: f64, eta1: f64, delta: f64) -> u64 {
    (2.0 * m * m / (eta1 * eta1) * (8.0 / delta).ln()).ceil() as u64
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Constraint(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn validate_omega(alpha: f64, m: f64, eta0: f64, eta1: f64) -> Result<()> {
    positive("alpha", alpha)?;
    positive("M", m)?;
    positive("eta1", eta1)?;
    if !(eta0.is_finite() && eta0 >= 0.0) {
        return Err(Error::Constraint(format!("eta0 must be non-negative, got {eta0}")));
    }
    if alpha * alpha >= PI / 3.0 {
        return Err(Error::Constraint(format!("|alpha|^2 = {} must stay below pi/3", alpha * alpha)));
    }
    let mb = omega_m_lower_bound(alpha);
    if m <= mb {
        return Err(Error::Constraint(format!("M = {m} must exceed {mb:.6} for alpha = {alpha}")));
    }
    let e0 = omega_eta0_bound(alpha, m);
    if eta0 >= e0 {
        return Err(Error::Constraint(format!("eta0 = {eta0:e} must stay below {e0:e}")));
    }
    let e1 = omega_eta1_bound(alpha, m, eta0);
    if eta1 > e1 {
        return Err(Error::Constraint(format!("eta1 = {eta1:e} must not exceed {e1:e}")));
    }
    Ok(())
}

pub fn validate_xi(alpha1: f64, alpha2: f64, m: f64, eta0: f64, eta1: f64) -> Result<()> {
    positive("alpha1", alpha1)?;
    positive("alpha2", alpha2)?;
    positive("M", m)?;
    positive("eta1", eta1)?;
    if !(eta0.is_finite() && eta0 >= 0.0) {
        return Err(Error::Constraint(format!("eta0 must be non-negative, got {eta0}")));
    }
    let (l1, l2) = (alpha1 * alpha1, alpha2 * alpha2);
    if l1 >= PI / 3.0 || l2 >= PI / 3.0 {
        return Err(Error::Constraint("|alpha1|^2 and |alpha2|^2 must stay below pi/3".into()));
    }
    if alpha2 <= alpha1 {
        return Err(Error::Constraint(format!("alpha2 = {alpha2} must exceed alpha1 = {alpha1}")));
    }
    let beta = l2 - l1;
    if beta > PI / 3.0 {
        return Err(Error::Constraint(format!("beta = {beta} must not exceed pi/3")));
    }
    let mb = xi_m_lower_bound(alpha1, alpha2);
    if m <= mb {
        return Err(Error::Constraint(format!("M = {m} must exceed {mb:.6} for alpha1 = {alpha1}, alpha2 = {alpha2}")));
    }
    let e0 = xi_eta0_bound(alpha1, alpha2, m);
    if eta0 >= e0 {
        return Err(Error::Constraint(format!("eta0 = {eta0:e} must stay below {e0:e}")));
    }
    let e1 = xi_eta1_bound(alpha1, alpha2, m, eta0);
    if eta1 > e1 {
        return Err(Error::Constraint(format!("eta1 = {eta1:e} must not exceed {e1:e}")));
    }
    Ok(())
}

/// Parameters of the ω signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaBudget {
    pub alpha: f64,
    pub m: f64,
    pub eta0: f64,
    pub eta1: f64,
}

impl OmegaBudget {
    /// M is the lower bound rounded up to the next integer, η₀ half its
    /// bound and η₁ at its bound.
    pub fn defaults(alpha: f64) -> Self {
        let m = omega_m_lower_bound(alpha).floor() + 1.0;
        let eta0 = 0.5 * omega_eta0_bound(alpha, m);
        let eta1 = omega_eta1_bound(alpha, m, eta0);
        Self { alpha, m, eta0, eta1 }
    }

    pub fn validate(&self) -> Result<()> {
        validate_omega(self.alpha, self.m, self.eta0, self.eta1)
    }

    pub fn shots(&self, delta: f64) -> u64 {
        omega_shots(self.m, self.eta1, delta)
    }
}

/// Parameters of the ξ signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiBudget {
    pub alpha1: f64,
    pub alpha2: f64,
    pub m: f64,
    pub eta0: f64,
    pub eta1: f64,
}

impl XiBudget {
    /// M at twice its lower bound (rounded up), which minimizes the shot
    /// count `∝ M⁴/(M - M_min)²`; η₀ half its bound, η₁ at its bound.
    pub fn defaults(alpha1: f64, alpha2: f64) -> Self {
        let m = (2.0 * xi_m_lower_bound(alpha1, alpha2)).ceil();
        let eta0 = 0.5 * xi_eta0_bound(alpha1, alpha2, m);
        let eta1 = xi_eta1_bound(alpha1, alpha2, m, eta0);
        Self { alpha1, alpha2, m, eta0, eta1 }
    }

    pub fn validate(&self) -> Result<()> {
        validate_xi(self.alpha1, self.alpha2, self.m, self.eta0, self.eta1)
    }

    pub fn shots(&self, delta: f64) -> u64 {
        xi_shots(self.m, self.eta1, delta)
    }
}
