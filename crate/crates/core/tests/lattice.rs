use std::f64::consts::TAU;

use bosonic_learn::fock::FockBasis;
use bosonic_learn::lattice::{
    build_hamiltonian, chain_edges, chi_bound, clusters_for_color, color_link_graph, edges_conflict,
    effective_model_for_color, grid_edges, star_edges, validate_coloring, LatticeModel,
};
use bosonic_learn::rng;
use bosonic_learn::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_model(n: usize, edges: &[(usize, usize)], seed: u64) -> LatticeModel {
    LatticeModel::random(n, edges, &mut rng::stream(seed, &[n as u64])).unwrap()
}

/// Average of `U H U†` over `K` equally spaced phases `e^{-iθ n_m}`, mode by mode.
fn phase_average(h: &DMatrix<Complex64>, basis: FockBasis, modes: &[usize], k: usize) -> DMatrix<Complex64> {
    let mut out = h.clone();
    for &m in modes {
        let mut acc = DMatrix::zeros(h.nrows(), h.ncols());
        for s in 0..k {
            let th = TAU * s as f64 / k as f64;
            let mut term = out.clone();
            for r in 0..h.nrows() {
                for col in 0..h.ncols() {
                    let dn = basis.occupation(r, m) as f64 - basis.occupation(col, m) as f64;
                    term[(r, col)] *= Complex64::from_polar(1.0, -th * dn);
                }
            }
            acc += term;
        }
        out = acc / Complex64::new(k as f64, 0.0);
    }
    out
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn number_operator_spectrum() {
    let h = build_hamiltonian(&LatticeModel::single_mode(1.0, 0.0).unwrap(), 5).unwrap();
    for k in 0..=5 {
        assert_eq!(h.get(k, k), c(k as f64, 0.0));
    }
    assert_eq!(h.nnz(), 5);
}

#[test]
fn kerr_spectrum() {
    let h = build_hamiltonian(&LatticeModel::single_mode(0.0, 1.0).unwrap(), 4).unwrap();
    let diag: Vec<f64> = (0..=4).map(|k| h.get(k, k).re).collect();
    assert_eq!(diag, vec![0.0, 0.0, 1.0, 3.0, 6.0]);
}

#[test]
fn hopping_matrix_element() {
    let m = LatticeModel::new(2, &[(0, 1, c(1.0, 0.0))], vec![0.0; 2], vec![0.0; 2]).unwrap();
    let h = build_hamiltonian(&m, 1).unwrap();
    let basis = h.basis();
    let ten = basis.to_index(&[1, 0]).unwrap();
    let one = basis.to_index(&[0, 1]).unwrap();
    assert_eq!(h.get(ten, one), c(1.0, 0.0));
    let m = LatticeModel::new(2, &[(0, 1, c(0.3, 0.4))], vec![0.0; 2], vec![0.0; 2]).unwrap();
    let h = build_hamiltonian(&m, 1).unwrap();
    assert_eq!(h.get(ten, one), c(0.3, 0.4));
    assert_eq!(h.get(one, ten), c(0.3, -0.4));
}

#[test]
fn conjugate_orientation_is_accepted() {
    let a = LatticeModel::new(2, &[(0, 1, c(0.2, 0.1)), (1, 0, c(0.2, -0.1))], vec![0.0; 2], vec![0.0; 2]).unwrap();
    let b = LatticeModel::new(2, &[(1, 0, c(0.2, -0.1))], vec![0.0; 2], vec![0.0; 2]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.h(0, 1), c(0.2, 0.1));
    assert_eq!(a.h(1, 0), c(0.2, -0.1));
    let err = LatticeModel::new(2, &[(0, 1, c(0.2, 0.1)), (1, 0, c(0.2, 0.1))], vec![0.0; 2], vec![0.0; 2]);
    assert!(matches!(err, Err(Error::InconsistentHopping { .. })));
}

#[test]
fn parameter_bounds_enforced() {
    assert!(LatticeModel::single_mode(1.5, 0.0).is_err());
    assert!(LatticeModel::new(2, &[(0, 1, c(1.0, 1.0))], vec![0.0; 2], vec![0.0; 2]).is_err());
    assert!(LatticeModel::new(2, &[(1, 1, c(0.1, 0.0))], vec![0.0; 2], vec![0.0; 2]).is_err());
}

#[test]
fn chain_needs_three_colors() {
    let m = random_model(6, &chain_edges(6), 1);
    let s = color_link_graph(&m);
    assert_eq!(s.chi, 3);
    let color_of = |e| s.colors[s.edges.iter().position(|x| *x == e).unwrap()];
    assert_eq!(color_of((0, 1)), color_of((3, 4)));
    validate_coloring(&m, &s).unwrap();
}

#[test]
fn single_edge_one_color() {
    let m = random_model(2, &[(0, 1)], 2);
    let s = color_link_graph(&m);
    assert_eq!((s.chi, s.colors.clone()), (1, vec![0]));
    assert_eq!(effective_model_for_color(&m, &s, 0).unwrap(), m);
}

#[test]
fn square_grid_coloring() {
    let m = random_model(9, &grid_edges(3, 3), 3);
    let s = color_link_graph(&m);
    validate_coloring(&m, &s).unwrap();
    assert_eq!(m.max_degree(), 4);
    assert!(s.chi <= chi_bound(4));
    assert_eq!(chi_bound(4), 37);
    assert!(s.chi <= 8, "chi = {}", s.chi);
}

#[test]
fn empty_graph_gives_empty_coloring() {
    let m = random_model(3, &[], 4);
    let s = color_link_graph(&m);
    assert_eq!(s.chi, 0);
    assert!(s.colors.is_empty());
}

#[test]
fn chain_six_clusters() {
    let m = random_model(6, &chain_edges(6), 5);
    let s = color_link_graph(&m);
    let c0 = s.colors[0];
    let cl = clusters_for_color(&m, &s, c0).unwrap();
    assert_eq!(cl.clusters, vec![vec![0, 1], vec![3, 4]]);
    assert_eq!(cl.spectators, vec![2, 5]);
}

#[test]
fn single_vertex_is_a_singleton_cluster() {
    let m = LatticeModel::single_mode(0.3, 0.1).unwrap();
    let s = color_link_graph(&m);
    let cl = clusters_for_color(&m, &s, 0).unwrap();
    assert_eq!(cl.clusters, vec![vec![0]]);
    assert!(cl.spectators.is_empty());
}

#[test]
fn star_colors_are_single_edges() {
    let m = random_model(4, &star_edges(3), 6);
    let s = color_link_graph(&m);
    assert_eq!(s.chi, 3);
    for color in 0..s.chi {
        let cl = clusters_for_color(&m, &s, color).unwrap();
        assert_eq!(cl.clusters.len(), 1);
        assert_eq!(cl.clusters[0].len(), 2);
        assert_eq!(cl.spectators.len(), 2);
    }
}

#[test]
fn chain_four_effective_model() {
    let m = random_model(4, &chain_edges(4), 7);
    let s = color_link_graph(&m);
    let color = s.colors[1];
    let eff = effective_model_for_color(&m, &s, color).unwrap();
    assert_eq!(eff.edges(), &[(1, 2)]);
    assert_eq!(eff.h(1, 2), m.h(1, 2));
    assert_eq!(eff.omega(), m.omega());
    assert_eq!(eff.xi(), m.xi());
}

#[test]
fn invalid_coloring_rejected() {
    let m = random_model(4, &chain_edges(4), 8);
    let mut s = color_link_graph(&m);
    s.colors = vec![0, 0, 0];
    s.chi = 1;
    assert!(matches!(validate_coloring(&m, &s), Err(Error::InvalidColoring(_))));
    assert!(clusters_for_color(&m, &s, 0).is_err());
}

#[test]
fn effective_model_matches_phase_average() {
    for (n, edges, seed) in
        [(4, chain_edges(4), 11u64), (5, star_edges(4), 12), (4, vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)], 13)]
    {
        let m = random_model(n, &edges, seed);
        let s = color_link_graph(&m);
        for color in 0..s.chi {
            let cl = clusters_for_color(&m, &s, color).unwrap();
            let h = build_hamiltonian(&m, 2).unwrap();
            let avg = phase_average(&h.to_dense(), h.basis(), &cl.spectators, 64);
            let eff = build_hamiltonian(&effective_model_for_color(&m, &s, color).unwrap(), 2).unwrap();
            assert!(max_diff(&avg, &eff.to_dense()) < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_coloring_is_valid(n in 2usize..9, mask in any::<u64>(), seed in any::<u64>()) {
        let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let edges: Vec<_> = all.iter().enumerate().filter(|(k, _)| mask >> (k % 64) & 1 == 1).map(|(_, e)| *e).take(20).collect();
        let m = random_model(n, &edges, seed);
        let s = color_link_graph(&m);
        validate_coloring(&m, &s).unwrap();
        prop_assert!(s.chi <= chi_bound(m.max_degree()));
        for a in 0..s.edges.len() {
            for b in a + 1..s.edges.len() {
                if edges_conflict(&m, s.edges[a], s.edges[b]) {
                    prop_assert_ne!(s.colors[a], s.colors[b]);
                }
            }
        }
        prop_assert_eq!(color_link_graph(&m), s.clone());
        for color in 0..s.chi {
            let cl = clusters_for_color(&m, &s, color).unwrap();
            let eff = effective_model_for_color(&m, &s, color).unwrap();
            for mode in cl.cluster_modes() {
                prop_assert!(eff.degree(mode) <= 1);
            }
            // Applying the same color restriction twice changes nothing.
            let again = eff.retain_edges(|i, j| s.edges_of_color(color).contains(&(i, j)));
            prop_assert_eq!(again, eff);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_conserves_number(n in 1usize..4, seed in any::<u64>(), cutoff in 1usize..5) {
        let m = random_model(n, &chain_edges(n), seed);
        let h = build_hamiltonian(&m, cutoff).unwrap();
        prop_assert!(h.hermiticity_defect() <= 1e-12);
        prop_assert!(h.conserves_number());
        let basis = h.basis();
        for (r, col, _) in h.triplets() {
            prop_assert_eq!(basis.total_number(r), basis.total_number(col));
        }
    }
}
