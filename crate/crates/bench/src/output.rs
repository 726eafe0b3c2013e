//! Report files. Every file carries the config hash and crate version; wall
//! clock figures live only under the `timing` key so the rest of a report is
//! reproducible byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::BoundsReport;
use crate::config::{provenance, ExperimentConfig, SCHEMA_VERSION};
use crate::sweep::{SweepResult, MIN_FIT_POINTS};
use crate::trials::TrialSet;

fn header(cfg: &ExperimentConfig) -> serde_json::Map<String, Value> {
    let (hash, version) = provenance(cfg);
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("version".into(), json!(version));
    m.insert("config_hash".into(), json!(hash));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

fn trial_summary(set: &TrialSet) -> Value {
    let params: serde_json::Map<String, Value> =
        set.parameter_rmse().into_iter().map(|(name, e)| (name, json!(e))).collect();
    json!({
        "epsilon": set.epsilon,
        "trials": set.records.len(),
        "class_rmse": set.class_rmse(),
        "rmse_max": set.class_rmse().max(),
        "parameter_rmse": params,
        "mean_evolution_time": set.mean_evolution_time(),
        "mean_experiments": set.mean_experiments(),
        "mean_shots": set.mean_shots(),
    })
}

/// JSON document for a `learn` run.
pub fn learn_json(cfg: &ExperimentConfig, set: &TrialSet, wall_time_s: f64) -> Value {
    let mut m = header(cfg);
    m.insert("summary".into(), trial_summary(set));
    m.insert("trials".into(), serde_json::to_value(&set.records).expect("records serialize"));
    m.insert("timing".into(), json!({ "total_wall_time_s": wall_time_s, "trial_wall_time_s": set.wall_times() }));
    Value::Object(m)
}

/// JSON document for a `sweep` run.
pub fn sweep_json(cfg: &ExperimentConfig, res: &SweepResult, wall_time_s: f64) -> Value {
    let mut m = header(cfg);
    m.insert("points".into(), serde_json::to_value(&res.points).expect("points serialize"));
    m.insert("time_fit".into(), fit_value(res.time_fit.as_ref()));
    m.insert("baseline_fit".into(), fit_value(res.baseline_fit.as_ref()));
    m.insert("summaries".into(), Value::Array(res.trial_sets.iter().map(trial_summary).collect()));
    let per_eps: Vec<Value> = res
        .trial_sets
        .iter()
        .map(|s| json!({ "epsilon": s.epsilon, "trial_wall_time_s": s.wall_times() }))
        .collect();
    m.insert("timing".into(), json!({ "total_wall_time_s": wall_time_s, "per_epsilon": per_eps }));
    Value::Object(m)
}

fn fit_value(fit: Option<&bosonic_learn::stats::LinearFit>) -> Value {
    match fit {
        Some(f) => serde_json::to_value(f).expect("fit serializes"),
        None => json!({ "unavailable": format!("needs at least {MIN_FIT_POINTS} epsilon values") }),
    }
}

/// JSON document for `verify-bounds`.
pub fn bounds_json(cfg: &ExperimentConfig, rep: &BoundsReport, wall_time_s: f64) -> Value {
    let mut m = header(cfg);
    m.insert("passed".into(), json!(rep.passed()));
    m.insert("suites".into(), serde_json::to_value(&rep.suites).expect("suites serialize"));
    m.insert("r_slope".into(), serde_json::to_value(&rep.r_slope).expect("r slope serializes"));
    m.insert("timing".into(), json!({ "total_wall_time_s": wall_time_s }));
    Value::Object(m)
}

/// Drops the `timing` key, leaving the reproducible part.
pub fn without_timing(mut v: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.remove("timing");
    }
    v
}

#[derive(Serialize)]
struct TrialRow<'a> {
    config_hash: &'a str,
    version: &'a str,
    epsilon: f64,
    trial: u64,
    seed: u64,
    parameter: &'a str,
    kind: &'a str,
    truth: Option<f64>,
    estimate: f64,
    error: Option<f64>,
    total_evolution_time: f64,
    total_shots: u64,
    total_experiments: u64,
}

fn kind_name(k: bosonic_learn::protocols::ParamKind) -> &'static str {
    use bosonic_learn::protocols::ParamKind::*;
    match k {
        Omega => "omega",
        Xi => "xi",
        ReHopping => "re_hopping",
        ImHopping => "im_hopping",
    }
}

/// One row per parameter per trial.
pub fn trials_csv(cfg: &ExperimentConfig, sets: &[TrialSet]) -> anyhow::Result<String> {
    let (hash, version) = provenance(cfg);
    let mut w = csv::Writer::from_writer(Vec::new());
    for set in sets {
        for rec in &set.records {
            let r = &rec.report;
            for p in &r.parameters {
                w.serialize(TrialRow {
                    config_hash: &hash,
                    version,
                    epsilon: set.epsilon,
                    trial: rec.trial,
                    seed: rec.seed,
                    parameter: &p.name,
                    kind: kind_name(p.kind),
                    truth: p.truth,
                    estimate: p.estimate,
                    error: p.error,
                    total_evolution_time: r.total_evolution_time,
                    total_shots: r.total_shots,
                    total_experiments: r.total_experiments,
                })?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize, Default)]
struct ScalingRow<'a> {
    config_hash: &'a str,
    version: &'a str,
    row: &'a str,
    epsilon: Option<f64>,
    trials: Option<usize>,
    rmse_omega: Option<f64>,
    rmse_xi: Option<f64>,
    rmse_re_h: Option<f64>,
    rmse_im_h: Option<f64>,
    rmse_max: Option<f64>,
    mean_evolution_time: Option<f64>,
    mean_experiments: Option<f64>,
    mean_shots: Option<f64>,
    baseline_shots: Option<u64>,
    baseline_samples: Option<u64>,
    baseline_evolution_time: Option<f64>,
    baseline_rmse: Option<f64>,
    slope: Option<f64>,
    slope_ci95: Option<f64>,
    intercept: Option<f64>,
    fit_points: Option<usize>,
    note: String,
}

/// Per-ε rows followed by one row per fit (`fit_time`, `fit_baseline`).
pub fn scaling_csv(cfg: &ExperimentConfig, res: &SweepResult, baseline: bool) -> anyhow::Result<String> {
    let (hash, version) = provenance(cfg);
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &res.points {
        let b = p.baseline.as_ref();
        w.serialize(ScalingRow {
            config_hash: &hash,
            version,
            row: "point",
            epsilon: Some(p.epsilon),
            trials: Some(p.trials),
            rmse_omega: p.rmse.omega,
            rmse_xi: p.rmse.xi,
            rmse_re_h: p.rmse.re_h,
            rmse_im_h: p.rmse.im_h,
            rmse_max: Some(p.rmse_max),
            mean_evolution_time: Some(p.mean_evolution_time),
            mean_experiments: Some(p.mean_experiments),
            mean_shots: Some(p.mean_shots),
            baseline_shots: b.map(|b| b.shots),
            baseline_samples: b.map(|b| b.samples),
            baseline_evolution_time: b.map(|b| b.evolution_time),
            baseline_rmse: b.map(|b| b.rmse),
            ..Default::default()
        })?;
    }
    let mut fits = vec![("fit_time", res.time_fit)];
    if baseline {
        fits.push(("fit_baseline", res.baseline_fit));
    }
    for (name, fit) in fits {
        let row = match fit {
            Some(f) => ScalingRow {
                slope: Some(f.slope),
                slope_ci95: f.slope_ci95.is_finite().then_some(f.slope_ci95),
                intercept: Some(f.intercept),
                fit_points: Some(f.points),
                ..Default::default()
            },
            None => ScalingRow {
                note: format!("unavailable: needs at least {MIN_FIT_POINTS} epsilon values"),
                ..Default::default()
            },
        };
        w.serialize(ScalingRow { config_hash: &hash, version, row: name, ..row })?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
struct BoundsRow<'a> {
    config_hash: &'a str,
    version: &'a str,
    suite: &'a str,
    check: &'a str,
    value: f64,
    limit: f64,
    passed: bool,
}

pub fn bounds_csv(cfg: &ExperimentConfig, rep: &BoundsReport) -> anyhow::Result<String> {
    let (hash, version) = provenance(cfg);
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &rep.suites {
        for c in &s.checks {
            w.serialize(BoundsRow {
                config_hash: &hash,
                version,
                suite: &s.suite,
                check: &c.name,
                value: c.value,
                limit: c.limit,
                passed: c.passed,
            })?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes `files` under `dir`, creating it if needed. Returns the paths written.
pub fn write_files(dir: &Path, files: &[(&str, String)]) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        out.push(p);
    }
    Ok(out)
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}
