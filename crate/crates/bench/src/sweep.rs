//! Accuracy sweeps: evolution time and RMSE against the target ε.

use bosonic_learn::stats::{loglog_fit, LinearFit};
use serde::Serialize;

use crate::baseline::{BaselinePoint, SqlBaseline};
use crate::config::ExperimentConfig;
use crate::trials::{run_trials, with_pool, ClassRmse, TrialSet};

/// Fewest ε values for which a slope is reported.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub trials: usize,
    pub rmse: ClassRmse,
    pub rmse_max: f64,
    pub mean_evolution_time: f64,
    pub mean_experiments: f64,
    pub mean_shots: f64,
    pub baseline: Option<BaselinePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `log T` against `log(1/ε)`.
    pub time_fit: Option<LinearFit>,
    /// Baseline `log(samples)` against `log(1/ε)`.
    pub baseline_fit: Option<LinearFit>,
    #[serde(skip)]
    pub trial_sets: Vec<TrialSet>,
}

fn fit(eps: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if eps.len() < MIN_FIT_POINTS {
        return None;
    }
    let inv: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    loglog_fit(&inv, ys)
}

pub fn sweep(cfg: &ExperimentConfig, epsilons: &[f64], baseline: bool) -> anyhow::Result<SweepResult> {
    if epsilons.is_empty() {
        return Err(crate::config::ValidationError("sweep needs at least one epsilon".into()).into());
    }
    let control = if baseline {
        let p = &cfg.protocol;
        let trials = cfg.sweep.baseline_trials;
        let seed = bosonic_learn::rng::derive_seed(cfg.campaign.seed, &[u64::MAX]);
        Some(with_pool(cfg.campaign.threads, || SqlBaseline::new(p.alpha1, p.alpha2, p.cutoff, trials, seed))?)
    } else {
        None
    };
    let mut points = Vec::new();
    let mut trial_sets = Vec::new();
    for &eps in epsilons {
        let set = run_trials(cfg, eps)?;
        let base = match &control {
            Some(c) => Some(with_pool(cfg.campaign.threads, || c.point(eps))?),
            None => None,
        };
        let rmse = set.class_rmse();
        points.push(SweepPoint {
            epsilon: eps,
            trials: set.records.len(),
            rmse_max: rmse.max(),
            rmse,
            mean_evolution_time: set.mean_evolution_time(),
            mean_experiments: set.mean_experiments(),
            mean_shots: set.mean_shots(),
            baseline: base,
        });
        trial_sets.push(set);
    }
    let time_fit = fit(epsilons, &points.iter().map(|p| p.mean_evolution_time).collect::<Vec<_>>());
    let baseline_fit = if baseline {
        fit(epsilons, &points.iter().filter_map(|p| p.baseline.as_ref().map(|b| b.samples as f64)).collect::<Vec<_>>())
    } else {
        None
    };
    Ok(SweepResult { points, time_fit, baseline_fit, trial_sets })
}
