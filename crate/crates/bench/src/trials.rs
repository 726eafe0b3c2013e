//! Independent learning trials run in parallel.

use bosonic_learn::protocols::{learn_lattice, EstimationReport, ParamKind};
use bosonic_learn::stats::rmse;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub report: EstimationReport,
}

/// RMSE over trials for each parameter class present.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClassRmse {
    pub omega: Option<f64>,
    pub xi: Option<f64>,
    pub re_h: Option<f64>,
    pub im_h: Option<f64>,
}

impl ClassRmse {
    pub fn max(&self) -> f64 {
        [self.omega, self.xi, self.re_h, self.im_h].into_iter().flatten().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialSet {
    pub epsilon: f64,
    pub records: Vec<TrialRecord>,
}

impl TrialSet {
    fn errors(&self, kind: ParamKind) -> Vec<f64> {
        self.records.iter().flat_map(|r| r.report.of_kind(kind).filter_map(|p| p.error)).collect()
    }

    pub fn class_rmse(&self) -> ClassRmse {
        let f = |k| {
            let e = self.errors(k);
            (!e.is_empty()).then(|| rmse(&e))
        };
        ClassRmse {
            omega: f(ParamKind::Omega),
            xi: f(ParamKind::Xi),
            re_h: f(ParamKind::ReHopping),
            im_h: f(ParamKind::ImHopping),
        }
    }

    /// RMSE of each named parameter over trials, in report order.
    pub fn parameter_rmse(&self) -> Vec<(String, f64)> {
        let Some(first) = self.records.first() else { return vec![] };
        first
            .report
            .parameters
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let e: Vec<f64> = self.records.iter().filter_map(|r| r.report.parameters[k].error).collect();
                (p.name.clone(), rmse(&e))
            })
            .collect()
    }

    fn mean_of(&self, f: impl Fn(&EstimationReport) -> f64) -> f64 {
        self.records.iter().map(|r| f(&r.report)).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_evolution_time(&self) -> f64 {
        self.mean_of(|r| r.total_evolution_time)
    }

    pub fn mean_experiments(&self) -> f64 {
        self.mean_of(|r| r.total_experiments as f64)
    }

    pub fn mean_shots(&self) -> f64 {
        self.mean_of(|r| r.total_shots as f64)
    }

    pub fn wall_times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.report.wall_time_s).collect()
    }
}

/// Runs `cfg.campaign.trials` trials at target `epsilon`. Results are in
/// trial order regardless of scheduling.
pub fn run_trials(cfg: &ExperimentConfig, epsilon: f64) -> anyhow::Result<TrialSet> {
    let trials = cfg.campaign.trials as u64;
    let run = || -> anyhow::Result<Vec<TrialRecord>> {
        (0..trials)
            .into_par_iter()
            .map(|trial| {
                let seed = cfg.trial_seed(trial);
                let model = cfg.model(trial)?;
                let pc = cfg.protocol_config(epsilon, seed)?;
                let report = learn_lattice(&model, &pc)?;
                Ok(TrialRecord { trial, seed, report })
            })
            .collect()
    };
    let records = with_pool(cfg.campaign.threads, run)?;
    Ok(TrialSet { epsilon, records })
}

/// Runs `f` on a pool of `threads` workers (0: the global pool).
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
