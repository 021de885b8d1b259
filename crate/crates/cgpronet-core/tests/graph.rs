use cgpronet_core::graph::{
    default_kernel_width, gen_erdos_renyi, gen_sbm, graph_from_distances, perturb, power_norms,
    spectral_norm, DirectedGraph, GraphOp,
};
use cgpronet_core::rng::SeededRng;
use cgpronet_core::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn er_zero_probability_is_empty() {
    let g = gen_erdos_renyi(5, 0.0, 1).unwrap();
    assert_eq!(g.n_edges(), 0);
}

#[test]
fn er_full_probability_is_complete() {
    let g = gen_erdos_renyi(4, 1.0, 1).unwrap();
    assert_eq!(g.n_edges(), 12);
    for (_, _, w) in g.edges() {
        assert!((0.1..=0.3).contains(&w.abs()), "weight {w} out of range");
    }
}

#[test]
fn er_edge_count_matches_binomial() {
    // Mean edge count over many seeds should sit within 3 sigma of the
    // binomial mean for n(n-1) trials.
    let n = 100usize;
    let p = 0.03f64;
    let trials = 50usize;
    let pairs = (n * (n - 1)) as f64;
    let mut total = 0usize;
    for seed in 0..trials as u64 {
        total += gen_erdos_renyi(n, p, seed).unwrap().n_edges();
    }
    let mean = total as f64 / trials as f64;
    let expected = pairs * p;
    let sigma = (pairs * p * (1.0 - p) / trials as f64).sqrt();
    assert!((mean - expected).abs() <= 3.0 * sigma, "mean {mean} vs {expected}");
}

#[test]
fn er_rejects_bad_args() {
    assert!(matches!(gen_erdos_renyi(0, 0.5, 1), Err(Error::InvalidArgument(_))));
    assert!(matches!(gen_erdos_renyi(5, 1.5, 1), Err(Error::InvalidArgument(_))));
}

#[test]
fn sbm_degenerate_probabilities() {
    let g = gen_sbm(6, 3, 1.0, 0.0, 1).unwrap();
    assert_eq!(g.n_edges(), 6);
    for (s, d, _) in g.edges() {
        assert_eq!(s / 2, d / 2, "edge crosses blocks");
    }
    let empty = gen_sbm(9, 3, 0.0, 0.0, 1).unwrap();
    assert_eq!(empty.n_edges(), 0);
}

#[test]
fn sbm_edge_counts_match_binomial() {
    let (n, c) = (90usize, 3usize);
    let (p_in, p_out) = (0.3f64, 0.01f64);
    let trials = 30usize;
    let intra_pairs = (3 * 30 * 29) as f64;
    let inter_pairs = (n * (n - 1)) as f64 - intra_pairs;
    let block = |i: usize| i * c / n;
    let (mut intra, mut inter) = (0usize, 0usize);
    for seed in 0..trials as u64 {
        for (s, d, _) in gen_sbm(n, c, p_in, p_out, seed).unwrap().edges() {
            if block(s) == block(d) {
                intra += 1;
            } else {
                inter += 1;
            }
        }
    }
    let t = trials as f64;
    let intra_mean = intra as f64 / t;
    let inter_mean = inter as f64 / t;
    let intra_sigma = (intra_pairs * p_in * (1.0 - p_in) / t).sqrt();
    let inter_sigma = (inter_pairs * p_out * (1.0 - p_out) / t).sqrt();
    assert!((intra_mean - intra_pairs * p_in).abs() <= 3.0 * intra_sigma);
    assert!((inter_mean - inter_pairs * p_out).abs() <= 3.0 * inter_sigma);
}

#[test]
fn generators_are_deterministic() {
    let a = gen_erdos_renyi(40, 0.2, 99).unwrap();
    let b = gen_erdos_renyi(40, 0.2, 99).unwrap();
    assert_eq!(a, b);
    let c = gen_sbm(30, 3, 0.4, 0.05, 7).unwrap();
    let d = gen_sbm(30, 3, 0.4, 0.05, 7).unwrap();
    assert_eq!(c, d);
}

#[test]
fn distances_all_zero_gives_complete_unit_graph() {
    let d = DMatrix::zeros(4, 4);
    let g = graph_from_distances(&d, 1.0, 0.5).unwrap();
    assert_eq!(g.n_edges(), 12);
    for (_, _, w) in g.edges() {
        assert_eq!(w, 1.0);
    }
}

#[test]
fn distances_high_threshold_gives_empty_graph() {
    let mut d = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                d[(i, j)] = 0.5;
            }
        }
    }
    let g = graph_from_distances(&d, 1.0, 0.999).unwrap();
    assert_eq!(g.n_edges(), 0);
}

#[test]
fn distances_three_sensor_example() {
    let mut d = DMatrix::zeros(3, 3);
    let pairs = [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)];
    for &(i, j, v) in &pairs {
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    let g = graph_from_distances(&d, 1.0, 0.1).unwrap();
    // Only d=1 survives: exp(-1) ~ 0.3679 > 0.1, exp(-4) and exp(-9) drop.
    assert_eq!(g.n_edges(), 2);
    let edges: Vec<_> = g.edges().collect();
    assert_eq!(edges[0].0, 0);
    assert_eq!(edges[0].1, 1);
    assert!((edges[0].2 - (-1.0f64).exp()).abs() < 1e-12);
    assert_eq!((edges[1].0, edges[1].1), (1, 0));
}

#[test]
fn distances_output_is_symmetric_with_bounded_weights() {
    let mut rng = SeededRng::new(3);
    let n = 8;
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.uniform_in(0.2, 3.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    let width = default_kernel_width(&d);
    let g = graph_from_distances(&d, width, 0.1).unwrap();
    let a = g.to_dense();
    for i in 0..n {
        for j in 0..n {
            assert_eq!(a[(i, j)], a[(j, i)]);
            assert!(a[(i, j)] == 0.0 || (a[(i, j)] > 0.1 && a[(i, j)] <= 1.0));
        }
    }
}

#[test]
fn distances_rejects_bad_inputs() {
    let d = DMatrix::zeros(3, 3);
    assert!(graph_from_distances(&d, 0.0, 0.1).is_err());
    let mut asym = DMatrix::zeros(3, 3);
    asym[(0, 1)] = 1.0;
    assert!(graph_from_distances(&asym, 1.0, 0.1).is_err());
}

#[test]
fn perturb_huge_snr_is_negligible() {
    let g = gen_erdos_renyi(20, 0.2, 5).unwrap();
    let p = perturb(&g, 300.0, 1).unwrap();
    assert!(p.perturbation().norm() / g.frobenius_norm() <= 1e-14);
}

#[test]
fn perturb_matches_snr_formula() {
    let g = gen_erdos_renyi(20, 0.2, 5).unwrap();
    let a_norm = g.frobenius_norm();
    let zero = perturb(&g, 0.0, 2).unwrap();
    assert!((zero.perturbation().norm() - a_norm).abs() < 1e-12 * a_norm);
    let twenty = perturb(&g, 20.0, 2).unwrap();
    assert!((twenty.perturbation().norm() - 0.1 * a_norm).abs() < 1e-12 * a_norm);
    for snr in [-40.0, -12.5, 0.0, 7.0, 40.0] {
        let p = perturb(&g, snr, 9).unwrap();
        let measured = 20.0 * (a_norm / p.perturbation().norm()).log10();
        assert!((measured - snr).abs() < 1e-9, "snr {snr} measured {measured}");
    }
}

#[test]
fn perturb_reconstructs_base_exactly() {
    let g = gen_erdos_renyi(15, 0.3, 11).unwrap();
    let p = perturb(&g, 5.0, 3).unwrap();
    // The clean graph is stored, not re-derived, so it is bit-identical, and
    // A-hat = A + E recomputes identically every time.
    assert_eq!(p.base(), &g);
    assert_eq!(p.perturbed_adjacency(), p.perturbed_adjacency());
    // The operator view agrees with the dense view.
    let x = DVector::from_fn(15, |i, _| (i as f64).sin());
    let via_op = p.matvec(&x);
    let via_dense = p.perturbed_adjacency() * &x;
    assert!((via_op - via_dense).norm() < 1e-12);
}

#[test]
fn spectral_norm_identity_and_diagonal() {
    let eye = DMatrix::<f64>::identity(3, 3);
    assert!((spectral_norm(&eye, 1e-12).unwrap().value - 1.0).abs() < 1e-10);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -3.0]));
    assert!((spectral_norm(&d, 1e-12).unwrap().value - 3.0).abs() < 1e-10);
}

#[test]
fn spectral_norm_matches_svd_oracle() {
    let mut rng = SeededRng::new(42);
    let m = DMatrix::from_fn(20, 20, |_, _| rng.normal());
    let est = spectral_norm(&m, 1e-14).unwrap();
    assert!(est.converged);
    let svd = m.clone().svd(false, false);
    let truth = svd.singular_values.max();
    assert!((est.value - truth).abs() < 1e-8 * truth.max(1.0));
}

#[test]
fn power_norms_zero_and_permutation() {
    let zero = DirectedGraph::from_edges(4, vec![]).unwrap();
    assert_eq!(power_norms(&zero, 3, 2000, false).unwrap(), vec![0.0, 0.0, 0.0]);
    // 4-cycle permutation matrix: every power is an isometry.
    let perm = DirectedGraph::from_edges(
        4,
        vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
    )
    .unwrap();
    for v in power_norms(&perm, 3, 2000, false).unwrap() {
        assert!((v - 1.0).abs() < 1e-9);
    }
}

#[test]
fn power_norms_match_dense_oracle_and_submultiplicativity() {
    let g = gen_erdos_renyi(20, 0.2, 17).unwrap();
    let norms = power_norms(&g, 3, 2000, false).unwrap();
    let a = g.to_dense();
    let mut power = DMatrix::<f64>::identity(20, 20);
    for (i, &est) in norms.iter().enumerate() {
        power = &power * &a;
        let truth = power.clone().svd(false, false).singular_values.max();
        assert!((est - truth).abs() < 1e-8 * truth.max(1.0), "power {}", i + 1);
    }
    assert!(norms[1] <= norms[0] * norms[0] + 1e-9);
    assert!(norms[2] <= norms[0] * norms[1] + 1e-9);
}

#[test]
fn power_norms_implicit_path_matches_dense_path() {
    let g = gen_erdos_renyi(25, 0.15, 23).unwrap();
    let dense = power_norms(&g, 3, 2000, false).unwrap();
    // Force the matrix-free branch with a tiny cap.
    let implicit = power_norms(&g, 3, 1, true).unwrap();
    for (a, b) in dense.iter().zip(&implicit) {
        assert!((a - b).abs() < 1e-7 * a.max(1.0));
    }
    assert!(matches!(power_norms(&g, 3, 1, false), Err(Error::ResourceLimit(_))));
}

#[test]
fn from_edges_validates() {
    assert!(DirectedGraph::from_edges(3, vec![(0, 0, 1.0)]).is_err());
    assert!(DirectedGraph::from_edges(3, vec![(0, 3, 1.0)]).is_err());
    assert!(DirectedGraph::from_edges(3, vec![(0, 1, 1.0), (0, 1, 2.0)]).is_err());
    assert!(DirectedGraph::from_edges(3, vec![(0, 1, f64::NAN)]).is_err());
    assert!(DirectedGraph::from_edges(0, vec![]).is_err());
}

proptest! {
    #[test]
    fn matvec_matches_dense(seed in 0u64..500, n in 2usize..12, p in 0.0f64..0.8) {
        let g = gen_erdos_renyi(n, p, seed).unwrap();
        let mut rng = SeededRng::new(seed ^ 0xabcd);
        let x = DVector::from_fn(n, |_, _| rng.normal());
        let sparse = g.matvec(&x);
        let dense = g.to_dense() * &x;
        prop_assert!((sparse - dense).norm() < 1e-12);
        let sparse_t = g.matvec_transpose(&x);
        let dense_t = g.to_dense().transpose() * &x;
        prop_assert!((sparse_t - dense_t).norm() < 1e-12);
    }
}
