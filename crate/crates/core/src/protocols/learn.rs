use std::f64::consts::SQRT_2;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lattice::{clusters_for_color, color_link_graph, ColorClusters, ColoringScheme, LatticeModel};
use crate::rfe::RfeSchedule;
use crate::rng;

use super::campaign::{run_campaign, Tables};
use super::config::ProtocolConfig;
use super::engine::StageSimulator;
use super::report::{CampaignSummary, EstimationReport, ParamKind, ParameterEstimate, SignalKind, Stage};

/// Learns `ω` and `ξ` of a single anharmonic oscillator.
pub fn learn_single_mode(model: &LatticeModel, cfg: &ProtocolConfig) -> Result<EstimationReport> {
    if model.num_modes() != 1 {
        return Err(Error::InvalidModel(format!("expected one mode, got {}", model.num_modes())));
    }
    learn_lattice(model, cfg)
}

/// Learns both on-site terms of two coupled modes plus their hopping.
pub fn learn_two_mode(model: &LatticeModel, cfg: &ProtocolConfig) -> Result<EstimationReport> {
    if model.num_modes() != 2 || model.edges().len() != 1 {
        return Err(Error::InvalidModel("expected two modes joined by one coupling".into()));
    }
    learn_lattice(model, cfg)
}

struct ColorResult {
    omega: Vec<(usize, f64)>,
    xi: Vec<(usize, f64)>,
    /// `(edge, ω̃ in the real frame, ω̃ in the imaginary frame)`.
    rotated: Vec<((usize, usize), f64, f64)>,
}

/// Learns every parameter of a bounded-degree lattice, one color class of
/// couplings at a time.
pub fn learn_lattice(model: &LatticeModel, cfg: &ProtocolConfig) -> Result<EstimationReport> {
    cfg.validate()?;
    let start = Instant::now();
    let tables = Tables::new(cfg)?;
    let coloring = color_link_graph(model);
    let coupled = coloring.chi > 0;
    let colors: Vec<Option<usize>> = if coupled { (0..coloring.chi).map(Some).collect() } else { vec![None] };
    // Hopping estimates combine three frequencies, so on-site frequencies get
    // a tighter target when there is any coupling to learn.
    let eps_omega = if coupled { cfg.epsilon / SQRT_2 } else { cfg.epsilon };
    let omega_schedule = RfeSchedule::new(cfg.w, eps_omega)?;
    let xi_schedule = RfeSchedule::new(cfg.w, cfg.epsilon)?;
    let rotated_schedule = RfeSchedule::new(cfg.w_rotated, cfg.epsilon / 2.0)?;

    let mut campaigns: Vec<CampaignSummary> = Vec::new();
    let mut results: Vec<ColorResult> = Vec::new();
    for &color in &colors {
        let clusters = match color {
            Some(c) => clusters_for_color(model, &coloring, c)?,
            None => ColorClusters { clusters: (0..model.num_modes()).map(|m| vec![m]).collect(), spectators: vec![] },
        };
        let tag = color.map_or(u64::MAX, |c| c as u64);
        let mut res = ColorResult { omega: vec![], xi: vec![], rotated: vec![] };

        let sim = StageSimulator::new(cfg, model, &clusters, Stage::Decoupled)?;
        let modes = clusters.cluster_modes();
        let probes: Vec<_> = modes.iter().map(|&m| sim.probe(m).expect("cluster mode simulated")).collect();
        let mut r = rng::stream(cfg.seed, &[tag, 0]);
        let om = run_campaign(cfg, &sim, &probes, SignalKind::Omega, omega_schedule, color, &tables, &mut r)?;
        let mut r = rng::stream(cfg.seed, &[tag, 1]);
        let xi = run_campaign(cfg, &sim, &probes, SignalKind::Xi, xi_schedule, color, &tables, &mut r)?;
        res.omega = modes.iter().copied().zip(om.estimates).collect();
        res.xi = modes.iter().copied().zip(xi.estimates).collect();
        campaigns.push(om.summary);
        campaigns.push(xi.summary);

        let pairs: Vec<(usize, usize)> =
            clusters.clusters.iter().filter(|c| c.len() == 2).map(|c| (c[0], c[1])).collect();
        if !pairs.is_empty() {
            let mut freqs = Vec::new();
            for (k, stage) in [Stage::RealFrame, Stage::ImagFrame].into_iter().enumerate() {
                let sim = StageSimulator::new(cfg, model, &clusters, stage)?;
                let probes: Vec<_> = pairs.iter().map(|p| sim.probe(p.0).expect("pair simulated")).collect();
                let mut r = rng::stream(cfg.seed, &[tag, 2 + k as u64]);
                let out = run_campaign(cfg, &sim, &probes, SignalKind::Omega, rotated_schedule, color, &tables, &mut r)?;
                freqs.push(out.estimates);
                campaigns.push(out.summary);
            }
            res.rotated = pairs.iter().enumerate().map(|(k, &p)| (p, freqs[0][k], freqs[1][k])).collect();
        }
        results.push(res);
    }

    let parameters = merge(model, &coloring, &results)?;
    let total_evolution_time = campaigns.iter().map(|c| c.ledger_time).sum();
    let total_shots = campaigns.iter().map(|c| c.shots).sum();
    let total_experiments = campaigns.iter().map(|c| c.experiments).sum();
    Ok(EstimationReport {
        parameters,
        campaigns,
        coloring: coupled.then_some(coloring),
        total_evolution_time,
        total_shots,
        total_experiments,
        config: *cfg,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn param(name: String, kind: ParamKind, modes: Vec<usize>, estimate: f64, truth: f64) -> ParameterEstimate {
    ParameterEstimate { name, kind, modes, estimate, truth: Some(truth), error: Some(estimate - truth) }
}

/// On-site terms come from the first color that measured the mode; each
/// hopping from the color of its edge, using that color's on-site estimates.
fn merge(model: &LatticeModel, coloring: &ColoringScheme, results: &[ColorResult]) -> Result<Vec<ParameterEstimate>> {
    let mut out = Vec::new();
    for m in 0..model.num_modes() {
        let first = |pick: fn(&ColorResult) -> &Vec<(usize, f64)>| {
            results.iter().find_map(|r| pick(r).iter().find(|(k, _)| *k == m).map(|(_, v)| *v))
        };
        let (Some(w), Some(x)) = (first(|r| &r.omega), first(|r| &r.xi)) else {
            return Err(Error::Protocol(format!("mode {m} was never measured")));
        };
        out.push(param(format!("omega[{m}]"), ParamKind::Omega, vec![m], w, model.omega()[m]));
        out.push(param(format!("xi[{m}]"), ParamKind::Xi, vec![m], x, model.xi()[m]));
    }
    for (k, &(i, j)) in coloring.edges.iter().enumerate() {
        let r = &results[coloring.colors[k]];
        let Some(&(_, re_freq, im_freq)) = r.rotated.iter().find(|(e, _, _)| *e == (i, j)) else {
            return Err(Error::Protocol(format!("coupling ({i}, {j}) was never measured")));
        };
        let on_site = |m: usize| r.omega.iter().find(|(k, _)| *k == m).map(|(_, v)| *v).expect("pair modes measured");
        let mean = 0.5 * (on_site(i) + on_site(j));
        let h = model.h(i, j);
        out.push(param(format!("re_h[{i},{j}]"), ParamKind::ReHopping, vec![i, j], re_freq - mean, h.re));
        out.push(param(format!("im_h[{i},{j}]"), ParamKind::ImHopping, vec![i, j], im_freq - mean, h.im));
    }
    Ok(out)
}
