//! Bound-verification suites: truncation bias, O(1/r) convergence of the
//! randomized dynamics, Hoeffding shot counts and the phase-averaging
//! selection rule.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::sync::Arc;

use bosonic_learn::dynamics::{
    density_matrix, effective_hamiltonian, evolve_exact, pure_density, trace_distance_to_pure, InsertedUnitary,
    RandomizationPlan, RandomizedEvolver,
};
use bosonic_learn::fock::{coherent_state, expectation, product_coherent_state, FockBasis, ModeOperator};
use bosonic_learn::homodyne::{estimate_b_from_ensemble, HermiteTable, OmegaBudget, Quadrature, QuadratureSampler};
use bosonic_learn::lattice::{build_hamiltonian, LatticeModel};
use bosonic_learn::rng;
use bosonic_learn::stats::loglog_fit;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// The check passes when `value <= limit`.
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, passed: value <= limit }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Reported, not asserted.
    pub notes: Vec<(String, f64)>,
}

impl SuiteResult {
    fn new(suite: &str, checks: Vec<Check>, notes: Vec<(String, f64)>) -> Self {
        Self { suite: suite.into(), passed: checks.iter().all(|c| c.passed), checks, notes }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const TRUNCATION_ALPHAS: [f64; 3] = [0.3, 0.5, 0.8];
pub const TRUNCATION_THRESHOLDS: [f64; 3] = [2.0, 4.0, 8.0];

/// `|Z_M - <b>| <= (2|α|²+1)/M` with `Z_M = (<X 1{|X|<=M}> + i<P 1{|P|<=M}>)/√2`,
/// every expectation exact on the truncated space. States are `|α>` evolved
/// under an anharmonic oscillator for several times.
pub fn truncation_suite() -> anyhow::Result<SuiteResult> {
    let cutoff = 30;
    let table = Arc::new(HermiteTable::new(cutoff, 10.0, 0.01)?);
    let h = build_hamiltonian(&LatticeModel::single_mode(0.7, 0.3)?, cutoff)?;
    let mut checks = Vec::new();
    for alpha in TRUNCATION_ALPHAS {
        let s0 = coherent_state(c(alpha, 0.0), 1, 0, cutoff)?;
        let mut worst = [0.0f64; 3];
        for t in [0.0, 1.0, 3.0] {
            let s = evolve_exact(&h, &s0, t)?;
            let b = expectation(&[ModeOperator::annihilate(0)], &s)?;
            let x = QuadratureSampler::new(0, Quadrature::X, table.clone()).distribution(&s)?;
            let p = QuadratureSampler::new(0, Quadrature::P, table.clone()).distribution(&s)?;
            for (k, m) in TRUNCATION_THRESHOLDS.into_iter().enumerate() {
                let z = c(x.truncated_mean(m), p.truncated_mean(m)) * FRAC_1_SQRT_2;
                worst[k] = worst[k].max((z - b).norm());
            }
        }
        for (k, m) in TRUNCATION_THRESHOLDS.into_iter().enumerate() {
            checks.push(Check::new(format!("alpha={alpha} M={m}"), worst[k], (2.0 * alpha * alpha + 1.0) / m));
        }
    }
    Ok(SuiteResult::new("truncation", checks, vec![]))
}

/// Two-mode model of the convergence suite.
pub fn r_slope_model() -> LatticeModel {
    LatticeModel::new(2, &[(0, 1, c(0.6, 0.4))], vec![0.3, -0.5], vec![0.4, -0.2]).expect("valid model")
}

pub const R_SLOPE_CUTOFF: usize = 7;
pub const R_SLOPE_ALPHA: f64 = 0.8;
pub const R_SLOPE_TIME: f64 = 1.0;
/// Mode whose phase is randomized.
pub const R_SLOPE_MODE: usize = 0;
pub const R_SLOPE_TOLERANCE: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RSlopeRow {
    pub r: usize,
    /// Ensemble stratified per step: at each step the K angles occupy
    /// the K equal arcs of the circle once each, in random order.
    pub stratified: f64,
    /// Ensemble of antithetic pairs `(θ, θ + π)`.
    pub antithetic: f64,
    /// Ensemble of independent trajectories.
    pub independent: f64,
    /// Exact average over the random phases.
    pub exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RSlopeData {
    pub rows: Vec<RSlopeRow>,
    pub trajectories: usize,
    pub slope: f64,
    pub slope_ci95: f64,
    /// `C` in `D(r) ≈ C/r` (with `t = 1`).
    pub constant: f64,
    pub antithetic_slope: f64,
    pub independent_slope: f64,
    pub exact_slope: f64,
}

/// Trace distance between the randomized ensemble and the state evolved under
/// the phase-averaged generator, for each `r`.
pub fn r_slope(r_values: &[usize], trajectories: usize, seed: u64) -> anyhow::Result<RSlopeData> {
    let model = r_slope_model();
    let h = build_hamiltonian(&model, R_SLOPE_CUTOFF)?;
    let start = product_coherent_state(&[c(R_SLOPE_ALPHA, 0.0), c(R_SLOPE_ALPHA, 0.0)], R_SLOPE_CUTOFF)?;
    let eff = build_hamiltonian(&effective_hamiltonian(&model, &[R_SLOPE_MODE]), R_SLOPE_CUTOFF)?;
    let target = evolve_exact(&eff, &start, R_SLOPE_TIME)?;
    let rows = r_values
        .par_iter()
        .map(|&r| {
            let inserted = vec![InsertedUnitary::PhaseShifters { modes: vec![R_SLOPE_MODE] }];
            let plan = RandomizationPlan::new(R_SLOPE_TIME, r, inserted, seed)?;
            let ev = RandomizedEvolver::new(&h, &plan)?;
            let mut g = rng::stream(seed, &[r as u64, 0]);
            let mut anti = Vec::with_capacity(trajectories);
            while anti.len() < trajectories {
                let a: Vec<Vec<f64>> = (0..r).map(|_| vec![g.random_range(0.0..TAU)]).collect();
                let b: Vec<Vec<f64>> = a.iter().map(|v| vec![v[0] + PI]).collect();
                anti.push(ev.trajectory_with_angles(&start, &a)?);
                if anti.len() < trajectories {
                    anti.push(ev.trajectory_with_angles(&start, &b)?);
                }
            }
            let mut g = rng::stream(seed, &[r as u64, 2]);
            let mut angles = vec![Vec::with_capacity(r); trajectories];
            for _ in 0..r {
                let mut strata: Vec<usize> = (0..trajectories).collect();
                strata.shuffle(&mut g);
                for (k, &s) in strata.iter().enumerate() {
                    angles[k].push(vec![TAU * (s as f64 + g.random::<f64>()) / trajectories as f64]);
                }
            }
            let strat = angles.iter().map(|a| ev.trajectory_with_angles(&start, a)).collect::<Result<Vec<_>, _>>()?;
            let mut g = rng::stream(seed, &[r as u64, 1]);
            let iid = (0..trajectories).map(|_| ev.trajectory(&start, &mut g)).collect::<Result<Vec<_>, _>>()?;
            let exact = phase_averaged_channel(&h.to_dense(), &pure_density(&start), start.basis(), r, R_SLOPE_TIME);
            Ok(RSlopeRow {
                r,
                stratified: trace_distance_to_pure(&density_matrix(&strat)?, &target),
                antithetic: trace_distance_to_pure(&density_matrix(&anti)?, &target),
                independent: trace_distance_to_pure(&density_matrix(&iid)?, &target),
                exact: trace_distance_to_pure(&exact, &target),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let rs: Vec<f64> = rows.iter().map(|x| x.r as f64).collect();
    let fit = |ys: Vec<f64>| loglog_fit(&rs, &ys).ok_or_else(|| anyhow::anyhow!("need at least two distinct r"));
    let main = fit(rows.iter().map(|x| x.stratified).collect())?;
    let antithetic = fit(rows.iter().map(|x| x.antithetic).collect())?;
    let independent = fit(rows.iter().map(|x| x.independent).collect())?;
    let exact = fit(rows.iter().map(|x| x.exact).collect())?;
    Ok(RSlopeData {
        rows,
        trajectories,
        slope: main.slope,
        slope_ci95: main.slope_ci95,
        constant: main.intercept.exp() / R_SLOPE_TIME.powi(2),
        antithetic_slope: antithetic.slope,
        independent_slope: independent.slope,
        exact_slope: exact.slope,
    })
}

/// `r` steps of `ρ -> E_θ[P(-θ) U P(θ) ρ P(-θ) U† P(θ)]` with `U = e^{-iHt/r}` and
/// `P(θ) = e^{-iθ n_0}`: the average keeps the part of `UρU†` whose mode-0
/// number difference matches the input's. `U` conserves the total number, so
/// the work is done block by block over number sectors.
fn phase_averaged_channel(
    h: &DMatrix<Complex64>,
    rho: &DMatrix<Complex64>,
    basis: FockBasis,
    r: usize,
    t: f64,
) -> DMatrix<Complex64> {
    let dim = basis.dim();
    let u = (h * c(0.0, -t / r as f64)).exp();
    let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); basis.num_modes() * basis.cutoff() + 1];
    for i in 0..dim {
        sectors[basis.total_number(i)].push(i);
    }
    sectors.retain(|s| !s.is_empty());
    let blocks: Vec<DMatrix<Complex64>> =
        sectors.iter().map(|s| DMatrix::from_fn(s.len(), s.len(), |a, b| u[(s[a], s[b])])).collect();
    let n0 = |i: usize| basis.occupation(i, R_SLOPE_MODE) as i64;
    let mut rho = rho.clone();
    for _ in 0..r {
        let mut out = DMatrix::<Complex64>::zeros(dim, dim);
        for (a, sa) in sectors.iter().enumerate() {
            for (b, sb) in sectors.iter().enumerate() {
                let x = DMatrix::from_fn(sa.len(), sb.len(), |k, l| rho[(sa[k], sb[l])]);
                let charge = |k: usize, l: usize| n0(sa[k]) - n0(sb[l]);
                let (lo, hi) = (-(basis.cutoff() as i64), basis.cutoff() as i64);
                for d in lo..=hi {
                    let part = DMatrix::from_fn(sa.len(), sb.len(), |k, l| if charge(k, l) == d { x[(k, l)] } else { c(0.0, 0.0) });
                    if part.iter().all(|z| *z == c(0.0, 0.0)) {
                        continue;
                    }
                    let moved = &blocks[a] * part * blocks[b].adjoint();
                    for k in 0..sa.len() {
                        for l in 0..sb.len() {
                            if charge(k, l) == d {
                                out[(sa[k], sb[l])] += moved[(k, l)];
                            }
                        }
                    }
                }
            }
        }
        rho = out;
    }
    rho
}

pub fn r_slope_suite(r_values: &[usize], trajectories: usize, seed: u64) -> anyhow::Result<(SuiteResult, RSlopeData)> {
    let data = r_slope(r_values, trajectories, seed)?;
    let checks = vec![Check::new("|slope + 1|", (data.slope + 1.0).abs(), R_SLOPE_TOLERANCE)];
    let mut notes = vec![
        ("slope".to_string(), data.slope),
        ("constant".to_string(), data.constant),
        ("antithetic_slope".to_string(), data.antithetic_slope),
        ("independent_slope".to_string(), data.independent_slope),
        ("exact_slope".to_string(), data.exact_slope),
    ];
    for row in &data.rows {
        notes.push((format!("distance r={}", row.r), row.stratified));
    }
    Ok((SuiteResult::new("r_slope", checks, notes), data))
}

/// Empirical rate of `|Z̄ - Z_M| > η₁` with `L` from the Hoeffding shot count.
pub fn hoeffding_suite(budget: &OmegaBudget, deltas: &[f64], reps: usize, seed: u64) -> anyhow::Result<SuiteResult> {
    let cutoff = 20;
    let h = build_hamiltonian(&LatticeModel::single_mode(0.7, 0.2)?, cutoff)?;
    let s = evolve_exact(&h, &coherent_state(c(budget.alpha, 0.0), 1, 0, cutoff)?, 1.0)?;
    let table = Arc::new(HermiteTable::for_threshold(cutoff, budget.m)?);
    let exact = |q| -> anyhow::Result<f64> {
        Ok(QuadratureSampler::new(0, q, table.clone()).distribution(&s)?.truncated_mean(budget.m))
    };
    let z_m = c(exact(Quadrature::X)?, exact(Quadrature::P)?) * FRAC_1_SQRT_2;
    let ensemble = [(1.0, s.clone())];
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for (k, &delta) in deltas.iter().enumerate() {
        let shots = budget.shots(delta);
        let fails = (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let mut r = rng::stream(seed, &[k as u64, rep]);
                let est = estimate_b_from_ensemble(&ensemble, 0, table.clone(), budget.m, shots, 1.0, &mut r)?;
                Ok(((est.z - z_m).norm() > budget.eta1) as usize)
            })
            .sum::<anyhow::Result<usize>>()?;
        checks.push(Check::new(format!("failure rate delta={delta}"), fails as f64 / reps as f64, delta));
        notes.push((format!("shots delta={delta}"), shots as f64));
    }
    Ok(SuiteResult::new("hoeffding", checks, notes))
}

/// Entrywise distance between the analytic averaged generator and a numeric
/// average of `P(θ) H P(θ)†` over a phase grid on random modes of random
/// three-mode models.
pub fn selection_rule_suite(models: usize, seed: u64) -> anyhow::Result<SuiteResult> {
    let cutoff = 3;
    let grid: usize = 8;
    let edges = [(0, 1), (1, 2), (0, 2)];
    let mut worst = 0.0f64;
    for k in 0..models as u64 {
        let mut r = rng::stream(seed, &[k]);
        let model = LatticeModel::random(3, &edges, &mut r)?;
        let randomized: Vec<usize> = (0..3).filter(|_| r.random::<bool>()).collect();
        let h = build_hamiltonian(&model, cutoff)?;
        let basis = h.basis();
        let dense = h.to_dense();
        let mut avg = DMatrix::<Complex64>::zeros(basis.dim(), basis.dim());
        let combos = grid.pow(randomized.len() as u32);
        for idx in 0..combos {
            let mut rest = idx;
            let angles: Vec<f64> = randomized
                .iter()
                .map(|_| {
                    let a = TAU * (rest % grid) as f64 / grid as f64;
                    rest /= grid;
                    a
                })
                .collect();
            let phase = |i: usize| {
                let th: f64 = randomized.iter().zip(&angles).map(|(&m, a)| a * basis.occupation(i, m) as f64).sum();
                Complex64::from_polar(1.0, -th)
            };
            avg += DMatrix::from_fn(basis.dim(), basis.dim(), |i, j| phase(i) * dense[(i, j)] * phase(j).conj());
        }
        avg /= c(combos as f64, 0.0);
        let analytic = build_hamiltonian(&effective_hamiltonian(&model, &randomized), cutoff)?.to_dense();
        worst = worst.max((avg - analytic).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(SuiteResult::new("selection_rule", vec![Check::new("max entry difference", worst, 1e-8)], vec![]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub suites: Vec<SuiteResult>,
    pub r_slope: RSlopeData,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

pub fn verify_bounds(cfg: &crate::config::ExperimentConfig) -> anyhow::Result<BoundsReport> {
    let b = &cfg.bounds;
    let seed = cfg.campaign.seed;
    let pc = cfg.protocol_config(cfg.protocol.epsilon, seed)?;
    let truncation = truncation_suite()?;
    let (r_suite, r_data) = r_slope_suite(&b.r_values, b.trajectories, rng::derive_seed(seed, &[1]))?;
    let hoeffding = hoeffding_suite(&pc.omega, &b.hoeffding_deltas, b.hoeffding_reps, rng::derive_seed(seed, &[2]))?;
    let selection = selection_rule_suite(b.selection_models, rng::derive_seed(seed, &[3]))?;
    Ok(BoundsReport { suites: vec![truncation, r_suite, hoeffding, selection], r_slope: r_data })
}
