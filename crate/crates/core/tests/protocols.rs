use std::f64::consts::FRAC_1_SQRT_2;

use bosonic_learn::dynamics::{evolve_exact, two_mode_rotation, Frame, PairRotation};
use bosonic_learn::fock::{expectation, product_coherent_state, FockBasis, ModeOperator};
use bosonic_learn::lattice::{build_hamiltonian, chain_edges, LatticeModel};
use bosonic_learn::protocols::{
    learn_lattice, learn_single_mode, learn_two_mode, stage_rotation, Backend, EstimationReport, ParamKind,
    ProtocolConfig, Stage, FRAME_ANGLE,
};
use bosonic_learn::rng;
use bosonic_learn::Error;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn within(report: &EstimationReport, eps: f64) -> bool {
    report.max_error() <= eps
}

#[test]
fn single_mode_end_to_end() {
    let model = LatticeModel::single_mode(0.7, 0.3).unwrap();
    let eps = 1e-2;
    let trials = 100;
    let ok = (0..trials)
        .filter(|&s| within(&learn_single_mode(&model, &ProtocolConfig::new(eps).with_seed(s)).unwrap(), eps))
        .count();
    assert!(ok * 100 >= 95 * trials as usize, "{ok}/{trials}");
}

#[test]
fn single_mode_degenerate_cases() {
    let eps = 1e-2;
    for (omega, xi) in [(0.45, 0.0), (0.0, 0.0)] {
        let model = LatticeModel::single_mode(omega, xi).unwrap();
        let report = learn_single_mode(&model, &ProtocolConfig::new(eps).with_seed(3)).unwrap();
        assert_eq!(report.parameters.len(), 2);
        assert!(within(&report, eps), "omega {omega} xi {xi}: {}", report.max_error());
    }
}

#[test]
fn invalid_configuration_is_rejected_early() {
    let model = LatticeModel::single_mode(0.7, 0.3).unwrap();
    assert!(learn_single_mode(&model, &ProtocolConfig::new(-1.0)).is_err());
    assert!(matches!(
        learn_single_mode(&model, &ProtocolConfig::new(0.1).with_cutoff(1)),
        Err(Error::CutoffTooSmall { .. })
    ));
    let mut cfg = ProtocolConfig::new(0.1);
    cfg.omega.m = 5.0;
    assert!(learn_single_mode(&model, &cfg).is_err());
    let two = LatticeModel::new(2, &[(0, 1, c(0.1, 0.0))], vec![0.0; 2], vec![0.0; 2]).unwrap();
    assert!(matches!(learn_single_mode(&two, &ProtocolConfig::new(0.1)), Err(Error::InvalidModel(_))));
    assert!(matches!(learn_two_mode(&model, &ProtocolConfig::new(0.1)), Err(Error::InvalidModel(_))));
}

#[test]
fn uncoupled_pair_gives_zero_hopping() {
    let model = LatticeModel::new(2, &[(0, 1, c(0.0, 0.0))], vec![0.3, 0.5], vec![0.2, 0.4]).unwrap();
    let eps = 2e-2;
    let report = learn_two_mode(&model, &ProtocolConfig::new(eps).with_seed(1)).unwrap();
    assert!(report.estimate(ParamKind::ReHopping, &[0, 1]).unwrap().abs() <= eps);
    assert!(report.estimate(ParamKind::ImHopping, &[0, 1]).unwrap().abs() <= eps);
}

#[test]
fn two_mode_end_to_end() {
    let model = LatticeModel::new(2, &[(0, 1, c(0.2, 0.1))], vec![0.3, 0.5], vec![0.2, 0.4]).unwrap();
    let eps = 2e-2;
    let mut sq = [0.0; 6];
    let trials = 10;
    for s in 0..trials {
        let report = learn_two_mode(&model, &ProtocolConfig::new(eps).with_seed(s)).unwrap();
        assert_eq!(report.parameters.len(), 6);
        for (k, p) in report.parameters.iter().enumerate() {
            sq[k] += p.error.unwrap().powi(2);
        }
    }
    for v in sq {
        assert!((v / trials as f64).sqrt() <= eps);
    }
}

/// `<n,0| R† H R |n,0>` for the frame of `stage`.
fn frame_energy(model: &LatticeModel, stage: Stage, n: usize, cutoff: usize) -> f64 {
    let h = build_hamiltonian(model, cutoff).unwrap().to_dense();
    let basis = FockBasis::new(2, cutoff).unwrap();
    let r = two_mode_rotation(stage_rotation(stage).unwrap(), FRAME_ANGLE, basis, 0, 1).unwrap();
    let k = basis.to_index(&[n, 0]).unwrap();
    (r.adjoint() * h * r)[(k, k)].re
}

#[test]
fn rotated_frequency_matches_quadratic_block() {
    let mut r = rng::stream(21, &[]);
    for _ in 0..10 {
        let model = LatticeModel::random(2, &[(0, 1)], &mut r).unwrap();
        let (w, h) = (model.omega(), model.h(0, 1));
        let mean = 0.5 * (w[0] + w[1]);
        // Single excitation sector.
        let re = frame_energy(&model, Stage::RealFrame, 1, 4);
        let im = frame_energy(&model, Stage::ImagFrame, 1, 4);
        assert!((re - (mean + h.re)).abs() < 1e-10);
        assert!((im - (mean + h.im)).abs() < 1e-10);
        // Same relation from the eigenvectors of the 2x2 block.
        let block = nalgebra::Matrix2::new(c(w[0], 0.0), h, h.conj(), c(w[1], 0.0));
        let u = nalgebra::Vector2::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0));
        assert!(((u.adjoint() * block * u)[(0, 0)].re - re).abs() < 1e-12);
        let eig = nalgebra::Matrix2::new(w[0], h.re, h.re, w[1]).symmetric_eigenvalues();
        assert!((eig.sum() - 2.0 * mean).abs() < 1e-12);
    }
}

#[test]
fn rotated_quartic_coefficient() {
    let model = LatticeModel::new(2, &[(0, 1, c(0.35, -0.6))], vec![0.3, -0.5], vec![0.4, -0.2]).unwrap();
    let (w, h, x) = (model.omega(), model.h(0, 1), model.xi());
    let xi_tilde = (x[0] + x[1]) / 4.0;
    for (stage, hop) in [(Stage::RealFrame, h.re), (Stage::ImagFrame, h.im)] {
        let w_tilde = 0.5 * (w[0] + w[1]) + hop;
        for n in 0..=6 {
            let e = frame_energy(&model, stage, n, 6);
            let expected = w_tilde * n as f64 + 0.5 * xi_tilde * (n * n.saturating_sub(1)) as f64;
            assert!((e - expected).abs() < 1e-10, "{stage:?} n = {n}: {e} vs {expected}");
        }
    }
}

#[test]
fn frame_measurement_basis() {
    let cutoff = 8;
    let model = LatticeModel::new(2, &[(0, 1, c(0.6, 0.4))], vec![0.3, -0.5], vec![0.4, -0.2]).unwrap();
    let h = build_hamiltonian(&model, cutoff).unwrap();
    let basis = FockBasis::new(2, cutoff).unwrap();
    let b1 = ModeOperator::annihilate(0);
    let b2 = ModeOperator::annihilate(1);
    for (stage, phase) in [(Stage::RealFrame, c(1.0, 0.0)), (Stage::ImagFrame, c(0.0, 1.0))] {
        let mut frame = Frame::identity();
        frame.push(PairRotation::new(basis, stage_rotation(stage).unwrap(), 0, 1).unwrap(), FRAME_ANGLE).unwrap();
        let start = frame.apply(&product_coherent_state(&[c(0.4, 0.0), c(0.0, 0.0)], cutoff).unwrap()).unwrap();
        // The prepared state is the frame-mode coherent state.
        let prepared = (expectation(&[b1], &start).unwrap() + phase * expectation(&[b2], &start).unwrap())
            * FRAC_1_SQRT_2;
        assert!((prepared - 0.4).norm() < 1e-8);
        let evolved = evolve_exact(&h, &start, 1.7).unwrap();
        let frame_b1 =
            (expectation(&[b1], &evolved).unwrap() + phase * expectation(&[b2], &evolved).unwrap()) * FRAC_1_SQRT_2;
        let undone = frame.apply_inverse(&evolved).unwrap();
        let measured = expectation(&[b1], &undone).unwrap();
        assert!((measured - frame_b1).norm() < 1e-8, "{stage:?}: {measured} vs {frame_b1}");
    }
}

#[test]
fn lattice_of_two_reduces_to_pair() {
    let model = LatticeModel::new(2, &[(0, 1, c(-0.4, 0.25))], vec![0.1, -0.7], vec![0.5, 0.3]).unwrap();
    let cfg = ProtocolConfig::new(5e-2).with_seed(8);
    let a = learn_two_mode(&model, &cfg).unwrap();
    let b = learn_lattice(&model, &cfg).unwrap();
    assert_eq!(a.parameters, b.parameters);
    assert_eq!(a.campaigns, b.campaigns);
    assert_eq!(a.total_evolution_time, b.total_evolution_time);
}

#[test]
fn chain_parameter_coverage() {
    let mut r = rng::stream(5, &[]);
    let model = LatticeModel::random(4, &chain_edges(4), &mut r).unwrap();
    let cfg = ProtocolConfig::new(1e-1).with_seed(2).with_cutoff(5).with_leak_tol(1e-3);
    let report = learn_lattice(&model, &cfg).unwrap();
    assert_eq!(report.of_kind(ParamKind::Omega).count(), 4);
    assert_eq!(report.of_kind(ParamKind::Xi).count(), 4);
    assert_eq!(report.of_kind(ParamKind::ReHopping).count(), 3);
    assert_eq!(report.of_kind(ParamKind::ImHopping).count(), 3);
    let mut names: Vec<&str> = report.parameters.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), 14);
    for (i, j) in chain_edges(4) {
        assert!(report.get(ParamKind::ReHopping, &[i, j]).is_some());
    }
    assert!(within(&report, 1e-1), "{}", report.max_error());
}

#[test]
fn evolution_time_independent_of_chain_length() {
    let cfg = ProtocolConfig::new(1e-1).with_seed(4).with_cutoff(5).with_leak_tol(1e-3);
    let mut r = rng::stream(6, &[]);
    let t4 = learn_lattice(&LatticeModel::random(4, &chain_edges(4), &mut r).unwrap(), &cfg).unwrap();
    let t6 = learn_lattice(&LatticeModel::random(6, &chain_edges(6), &mut r).unwrap(), &cfg).unwrap();
    let ratio = t6.total_evolution_time / t4.total_evolution_time;
    assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn same_seed_same_report() {
    let model = LatticeModel::new(2, &[(0, 1, c(0.2, 0.1))], vec![0.3, 0.5], vec![0.2, 0.4]).unwrap();
    let cfg = ProtocolConfig::new(5e-2).with_seed(11).with_spam(0.05);
    let mut a = learn_two_mode(&model, &cfg).unwrap();
    let mut b = learn_two_mode(&model, &cfg).unwrap();
    a.wall_time_s = 0.0;
    b.wall_time_s = 0.0;
    assert_eq!(a, b);
    let c2 = learn_two_mode(&model, &cfg.with_seed(12)).unwrap();
    assert_ne!(a.parameters, c2.parameters);
}

#[test]
fn spam_does_not_create_error_floor() {
    let model = LatticeModel::single_mode(-0.4, 0.6).unwrap();
    let eps = 1e-2;
    let ok = (0..20)
        .filter(|&s| within(&learn_single_mode(&model, &ProtocolConfig::new(eps).with_seed(s).with_spam(0.05)).unwrap(), eps))
        .count();
    assert!(ok >= 19, "{ok}/20");
}

#[test]
fn randomized_backend_agrees_with_effective() {
    let model = LatticeModel::new(2, &[(0, 1, c(0.3, -0.2))], vec![0.2, -0.4], vec![0.3, 0.1]).unwrap();
    let eps = 0.2;
    let cfg = ProtocolConfig::new(eps).with_seed(1).with_cutoff(6).with_leak_tol(1e-3);
    let eff = learn_two_mode(&model, &cfg).unwrap();
    let rnd =
        learn_two_mode(&model, &cfg.with_backend(Backend::Randomized { trajectories: 8, step_rate: 8.0 })).unwrap();
    assert!(within(&eff, eps));
    assert!(within(&rnd, eps), "{}", rnd.max_error());
    assert_eq!(eff.total_evolution_time, rnd.total_evolution_time);
    for (a, b) in eff.parameters.iter().zip(&rnd.parameters) {
        assert!((a.estimate - b.estimate).abs() <= eps, "{}: {} vs {}", a.name, a.estimate, b.estimate);
    }
}

#[test]
fn ledger_accounting() {
    let model = LatticeModel::single_mode(0.7, 0.3).unwrap();
    let report = learn_single_mode(&model, &ProtocolConfig::new(5e-2).with_seed(1)).unwrap();
    let sum: f64 = report.campaigns.iter().map(|c| c.ledger_time).sum();
    assert_eq!(report.total_evolution_time, sum);
    assert_eq!(report.campaigns.len(), 2);
    assert!(report.total_shots > 0 && report.total_experiments > 0);
    assert!(report.coloring.is_none());
}
