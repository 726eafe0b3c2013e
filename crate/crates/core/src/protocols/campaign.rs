//! Shared-shot RFE runs: one experiment per iteration serves every probe.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::homodyne::{estimate_b_from_ensemble, signal_for_omega, signal_for_xi, HermiteTable, PhaseSignal, SignalMeta};
use crate::rfe::{PhaseTrack, RfeSchedule};

use super::config::ProtocolConfig;
use super::engine::{Probe, StageSimulator};
use super::report::{CampaignSummary, SignalKind};

pub struct Tables {
    pub omega: Arc<HermiteTable>,
    pub xi: Arc<HermiteTable>,
}

impl Tables {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self> {
        Ok(Self {
            omega: Arc::new(HermiteTable::for_threshold(cfg.cutoff, cfg.omega.m)?),
            xi: Arc::new(HermiteTable::for_threshold(cfg.cutoff, cfg.xi.m)?),
        })
    }
}

pub struct CampaignResult {
    pub estimates: Vec<f64>,
    pub tracks: Vec<PhaseTrack>,
    pub summary: CampaignSummary,
}

struct Counter<'a> {
    summary: &'a mut CampaignSummary,
}

impl Counter<'_> {
    /// Truncated `<b>` estimate; a zero result is retried once with twice the shots.
    fn measure<R: Rng + ?Sized>(
        &mut self,
        ensemble: &[(f64, FockVector)],
        local_mode: usize,
        table: &Arc<HermiteTable>,
        m: f64,
        shots: u64,
        t: f64,
        rng: &mut R,
    ) -> Result<Complex64> {
        match estimate_b_from_ensemble(ensemble, local_mode, table.clone(), m, shots, t, rng) {
            Ok(e) if e.z.norm() > 0.0 => return Ok(e.z),
            Ok(_) | Err(Error::AllSamplesDiscarded { .. }) => {}
            Err(e) => return Err(e),
        }
        self.summary.zero_signal_retries += 1;
        self.summary.ledger_time += 2.0 * (2 * shots) as f64 * t;
        self.summary.shots += 4 * shots;
        self.summary.experiments += 2;
        let e = estimate_b_from_ensemble(ensemble, local_mode, table.clone(), m, 2 * shots, t, rng)?;
        if e.z.norm() > 0.0 {
            Ok(e.z)
        } else {
            Err(Error::ZeroSignal)
        }
    }
}

/// Runs every iteration of `schedule`, estimating one frequency per probe.
pub fn run_campaign<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    sim: &StageSimulator,
    probes: &[Probe],
    kind: SignalKind,
    schedule: RfeSchedule,
    color: Option<usize>,
    tables: &Tables,
    rng: &mut R,
) -> Result<CampaignResult> {
    let mut summary = CampaignSummary {
        color,
        stage: sim.stage(),
        signal: kind,
        schedule,
        ledger_time: 0.0,
        shots: 0,
        experiments: 0,
        zero_signal_retries: 0,
        arcsin_clamps: 0,
    };
    let mut tracks = vec![PhaseTrack::new(schedule); probes.len()];
    let mut parts: Vec<usize> = probes.iter().map(|p| p.part).collect();
    parts.sort();
    parts.dedup();
    for j in 0..schedule.iterations {
        let t = schedule.time(j);
        let delta = schedule.delta(j);
        let mut counter = Counter { summary: &mut summary };
        match kind {
            SignalKind::Omega => {
                let shots = cfg.omega.shots(delta);
                let ledger = 2.0 * shots as f64 * t;
                let ens: Vec<_> = parts
                    .iter()
                    .map(|&p| Ok((p, sim.ensemble(p, cfg.omega.alpha, t, rng)?)))
                    .collect::<Result<_>>()?;
                let meta = SignalMeta { t, shots, delta, ledger_time: ledger };
                let mut signals = Vec::with_capacity(probes.len());
                for probe in probes {
                    let e = &ens.iter().find(|(p, _)| *p == probe.part).unwrap().1;
                    let z = counter.measure(e, probe.local_mode, &tables.omega, cfg.omega.m, shots, t, rng)?;
                    signals.push(signal_for_omega(z, meta)?);
                }
                counter.summary.ledger_time += ledger;
                counter.summary.shots += 2 * shots;
                counter.summary.experiments += 2;
                for (track, s) in tracks.iter_mut().zip(&signals) {
                    track.update(s)?;
                }
            }
            SignalKind::Xi => {
                let shots = cfg.xi.shots(delta);
                let ledger = 4.0 * shots as f64 * t;
                let (a1, a2) = (cfg.xi.alpha1, cfg.xi.alpha2);
                let ens: Vec<_> = parts
                    .iter()
                    .map(|&p| Ok((p, sim.ensemble(p, a1, t, rng)?, sim.ensemble(p, a2, t, rng)?)))
                    .collect::<Result<_>>()?;
                let meta = SignalMeta { t, shots, delta, ledger_time: ledger };
                let mut signals = Vec::with_capacity(probes.len());
                for probe in probes {
                    let (_, e1, e2) = ens.iter().find(|(p, _, _)| *p == probe.part).unwrap();
                    let z1 = counter.measure(e1, probe.local_mode, &tables.xi, cfg.xi.m, shots, t, rng)?;
                    let z2 = counter.measure(e2, probe.local_mode, &tables.xi, cfg.xi.m, shots, t, rng)?;
                    let xs = signal_for_xi(z1, z2, a1, a2, meta)?;
                    if xs.clamped {
                        counter.summary.arcsin_clamps += 1;
                    }
                    // The ξ signal rotates as e^{+iξt}; the tracker expects e^{-iξt}.
                    signals.push(PhaseSignal::new(xs.signal.value().conj(), meta)?);
                }
                counter.summary.ledger_time += ledger;
                counter.summary.shots += 4 * shots;
                counter.summary.experiments += 4;
                for (track, s) in tracks.iter_mut().zip(&signals) {
                    track.update(s)?;
                }
            }
        }
    }
    let estimates = tracks.iter().map(|t| t.estimate().expect("all iterations ran")).collect();
    Ok(CampaignResult { estimates, tracks, summary })
}
