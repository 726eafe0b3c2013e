use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::FockVector;

use super::grid::{HermiteTable, Quadrature, QuadratureSampler, TruncatedSum};

/// `<b>` of an anharmonic oscillator started in `|α>`:
/// `α e^{-|α|²} e^{-iωt} e^{|α|² e^{-iξt}}`.
pub fn closed_form_b(alpha: Complex64, omega: f64, xi: f64, t: f64) -> Complex64 {
    let l = alpha.norm_sqr();
    alpha * (-l).exp() * Complex64::from_polar(1.0, -omega * t) * (Complex64::from_polar(l, -xi * t)).exp()
}

/// Bookkeeping attached to a signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignalMeta {
    pub t: f64,
    /// Shots per quadrature experiment.
    pub shots: u64,
    pub delta: f64,
    /// Total evolution time spent producing the signal.
    pub ledger_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSignal {
    value: Complex64,
    pub meta: SignalMeta,
}

impl PhaseSignal {
    /// Normalizes `z` onto the unit circle.
    pub fn new(z: Complex64, meta: SignalMeta) -> Result<Self> {
        let n = z.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ZeroSignal);
        }
        Ok(Self { value: z / n, meta })
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn t(&self) -> f64 {
        self.meta.t
    }

    pub fn ledger_time(&self) -> f64 {
        self.meta.ledger_time
    }
}

/// `Z/|Z|`.
pub fn signal_for_omega(z_bar: Complex64, meta: SignalMeta) -> Result<PhaseSignal> {
    PhaseSignal::new(z_bar, meta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiSignal {
    pub signal: PhaseSignal,
    /// The arcsin argument left `[-1, 1]` and was clamped.
    pub clamped: bool,
}

/// `(ĉ + iŝ)/|ĉ + iŝ|` with `ĉ = log(|Z₁|/|α₁|)/|α₁|² + 1` and
/// `ŝ = arcsin(Im(Z₁/Z₂)/|Z₁/Z₂|)/(|α₂|² - |α₁|²)`; close to `e^{iξt}`.
pub fn signal_for_xi(z1: Complex64, z2: Complex64, alpha1: f64, alpha2: f64, meta: SignalMeta) -> Result<XiSignal> {
    let (l1, l2) = (alpha1 * alpha1, alpha2 * alpha2);
    if z1.norm() == 0.0 || z2.norm() == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let c = (z1.norm() / alpha1.abs()).ln() / l1 + 1.0;
    let q = z1 / z2;
    let arg = (q / q.norm()).im;
    let clamped = !(-1.0..=1.0).contains(&arg);
    let s = arg.clamp(-1.0, 1.0).asin() / (l2 - l1);
    let signal = PhaseSignal::new(Complex64::new(c, s), meta)?;
    Ok(XiSignal { signal, clamped })
}

/// Result of one pair of X and P experiments on one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedEstimate {
    /// `(x̄ + i p̄)/√2`.
    pub z: Complex64,
    pub x: TruncatedSum,
    pub p: TruncatedSum,
    pub ledger_time: f64,
}

/// Runs `shots` X and `shots` P experiments on `mode`.
///
/// `prepare` returns the weighted ensemble of states present at detection
/// for the requested quadrature (one element for a deterministic preparation).
/// Every shot evolves for `t`, so the ledger grows by `2·shots·t`.
pub fn estimate_truncated_b<F, R>(
    mut prepare: F,
    mode: usize,
    table: Arc<HermiteTable>,
    m: f64,
    shots: u64,
    t: f64,
    rng: &mut R,
) -> Result<TruncatedEstimate>
where
    F: FnMut(Quadrature) -> Result<Vec<(f64, FockVector)>>,
    R: Rng + ?Sized,
{
    let mut sums = [TruncatedSum::default(); 2];
    for (slot, q) in [Quadrature::X, Quadrature::P].into_iter().enumerate() {
        let ensemble = prepare(q)?;
        let dist = QuadratureSampler::new(mode, q, table.clone()).mixture_distribution(&ensemble)?;
        sums[slot] = dist.sample_batch(shots, m, rng);
    }
    finish(sums, m, t)
}

/// Same as [`estimate_truncated_b`] when the ensemble does not depend on the
/// quadrature being measured.
pub fn estimate_b_from_ensemble<R: Rng + ?Sized>(
    ensemble: &[(f64, FockVector)],
    mode: usize,
    table: Arc<HermiteTable>,
    m: f64,
    shots: u64,
    t: f64,
    rng: &mut R,
) -> Result<TruncatedEstimate> {
    estimate_truncated_b(|_| Ok(ensemble.to_vec()), mode, table, m, shots, t, rng)
}

fn finish(sums: [TruncatedSum; 2], m: f64, t: f64) -> Result<TruncatedEstimate> {
    if sums.iter().any(|s| s.kept == 0) {
        return Err(Error::AllSamplesDiscarded { m });
    }
    let z = Complex64::new(sums[0].mean(), sums[1].mean()) * FRAC_1_SQRT_2;
    Ok(TruncatedEstimate { z, x: sums[0], p: sums[1], ledger_time: 2.0 * sums[0].shots as f64 * t })
}
