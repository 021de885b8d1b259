use cgpronet_core::filter::{
    apply_heat, apply_poly, apply_poly_dense_oracle, matrix_exponential, HeatCoeffs,
    HeatKernelCache, PolyCoeffs,
};
use cgpronet_core::graph::{gen_erdos_renyi, spectral_norm, DirectedGraph};
use cgpronet_core::rng::SeededRng;
use cgpronet_core::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn random_signal(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = SeededRng::new(seed);
    DVector::from_fn(n, |_, _| rng.normal())
}

#[test]
fn identity_filter_passes_signal_through() {
    let g = gen_erdos_renyi(6, 0.5, 1).unwrap();
    let x = random_signal(6, 2);
    let c = PolyCoeffs::new(vec![1.0]).unwrap();
    assert_eq!(apply_poly(&g, &c, &x).unwrap(), x);
    let c2 = PolyCoeffs::new(vec![1.0, 0.0, 0.0]).unwrap();
    assert!((apply_poly(&g, &c2, &x).unwrap() - &x).norm() < 1e-15);
}

#[test]
fn zero_signal_maps_to_zero() {
    let g = gen_erdos_renyi(6, 0.5, 1).unwrap();
    let c = PolyCoeffs::new(vec![0.3, -0.2, 0.1]).unwrap();
    let out = apply_poly(&g, &c, &DVector::zeros(6)).unwrap();
    assert_eq!(out, DVector::zeros(6));
}

#[test]
fn directed_cycle_shift() {
    // 0->1->2->0 with unit weights: (Ax)_i = sum_j A_ij x_j shifts the signal.
    let g = DirectedGraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
    let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let c = PolyCoeffs::new(vec![0.0, 1.0]).unwrap();
    let out = apply_poly(&g, &c, &x).unwrap();
    assert_eq!(out, DVector::from_vec(vec![2.0, 3.0, 1.0]));
}

#[test]
fn dimension_mismatch_rejected() {
    let g = gen_erdos_renyi(4, 0.5, 1).unwrap();
    let c = PolyCoeffs::new(vec![0.0, 1.0]).unwrap();
    assert!(matches!(
        apply_poly(&g, &c, &DVector::zeros(5)),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn dense_oracle_zero_coeffs_and_cap() {
    let g = gen_erdos_renyi(5, 0.5, 1).unwrap();
    let x = random_signal(5, 7);
    let zero = PolyCoeffs::new(vec![0.0, 0.0]).unwrap();
    assert_eq!(apply_poly_dense_oracle(&g, &zero, &x, 2000).unwrap(), DVector::zeros(5));
    assert!(matches!(
        apply_poly_dense_oracle(&g, &zero, &x, 2),
        Err(Error::ResourceLimit(_))
    ));
}

#[test]
fn recursion_matches_dense_oracle_sweep() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let g = gen_erdos_renyi(30, 0.15, seed).unwrap();
        let mut rng = SeededRng::new(seed ^ 0x77);
        let coeffs: Vec<f64> = (0..6).map(|_| rng.uniform_in(-0.5, 0.5)).collect();
        let c = PolyCoeffs::new(coeffs).unwrap();
        let x = random_signal(30, seed.wrapping_add(1000));
        let fast = apply_poly(&g, &c, &x).unwrap();
        let slow = apply_poly_dense_oracle(&g, &c, &x, 2000).unwrap();
        worst = worst.max((fast - slow).amax());
    }
    assert!(worst <= 1e-10, "max deviation {worst}");
}

#[test]
fn filter_output_respects_operator_norm_bound() {
    for seed in 0..20u64 {
        let g = gen_erdos_renyi(15, 0.3, seed).unwrap();
        let mut rng = SeededRng::new(seed ^ 0x33);
        let c = PolyCoeffs::new((0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap();
        let x = random_signal(15, seed + 5);
        let out = apply_poly(&g, &c, &x).unwrap();
        let a = g.to_dense();
        let mut power = DMatrix::<f64>::identity(15, 15);
        let mut bound = 0.0;
        for (j, theta) in c.coeffs().iter().enumerate() {
            if j > 0 {
                power = &power * &a;
            }
            bound += theta.abs() * spectral_norm(&power, 1e-12).unwrap().value;
        }
        assert!(out.norm() <= bound * x.norm() + 1e-9);
    }
}

proptest! {
    #[test]
    fn apply_poly_is_linear(seed in 0u64..200, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = gen_erdos_renyi(10, 0.3, seed).unwrap();
        let mut rng = SeededRng::new(seed ^ 0x9e37);
        let c = PolyCoeffs::new((0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap();
        let x = random_signal(10, seed + 1);
        let y = random_signal(10, seed + 2);
        let combined = apply_poly(&g, &c, &(&x * a + &y * b)).unwrap();
        let separate = apply_poly(&g, &c, &x).unwrap() * a + apply_poly(&g, &c, &y).unwrap() * b;
        prop_assert!((combined - separate).norm() < 1e-10);
    }
}

#[test]
fn expm_of_zero_is_identity() {
    let z = DMatrix::<f64>::zeros(4, 4);
    let e = matrix_exponential(&z).unwrap();
    assert!((e - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
}

#[test]
fn expm_of_diagonal() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 0.5]));
    let e = matrix_exponential(&d).unwrap();
    for (i, a) in [1.0f64, -2.0, 0.5].iter().enumerate() {
        assert!((e[(i, i)] - a.exp()).abs() < 1e-12 * a.exp().max(1.0));
    }
    assert!(e[(0, 1)].abs() < 1e-15);
}

#[test]
fn expm_of_nilpotent_truncates() {
    let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let e = matrix_exponential(&m).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    assert!((e - expected).amax() < 1e-12);
}

fn expm_symmetric_oracle(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let exp_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.exp()));
    &eig.eigenvectors * exp_d * eig.eigenvectors.transpose()
}

#[test]
fn expm_matches_eigendecomposition_oracle() {
    let mut rng = SeededRng::new(8);
    let raw = DMatrix::from_fn(15, 15, |_, _| rng.normal());
    let sym = (&raw + raw.transpose()) * 0.5;
    let fast = matrix_exponential(&sym).unwrap();
    let slow = expm_symmetric_oracle(&sym);
    let rel = (&fast - &slow).amax() / slow.amax();
    assert!(rel < 1e-9, "relative deviation {rel}");
}

#[test]
fn expm_semigroup_property() {
    let mut rng = SeededRng::new(13);
    let a = DMatrix::from_fn(6, 6, |_, _| rng.uniform_in(-0.5, 0.5));
    for (s, t) in [(0.3, 0.7), (1.2, 0.4), (2.0, 2.0)] {
        let whole = matrix_exponential(&(&a * (s + t))).unwrap();
        let parts =
            matrix_exponential(&(&a * s)).unwrap() * matrix_exponential(&(&a * t)).unwrap();
        assert!((whole - parts).amax() < 1e-8);
    }
}

#[test]
fn heat_time_zero_is_identity_and_zero_scale_vanishes() {
    let g = gen_erdos_renyi(5, 0.4, 2).unwrap();
    let x = random_signal(5, 3);
    let id = apply_heat(&g, &HeatCoeffs::new(1.0, 0.0).unwrap(), &x, 2000).unwrap();
    assert!((id - &x).norm() < 1e-12);
    let zero = apply_heat(&g, &HeatCoeffs::new(0.0, 3.0).unwrap(), &x, 2000).unwrap();
    assert_eq!(zero, DVector::zeros(5));
}

#[test]
fn heat_on_nilpotent_graph_is_truncated_series() {
    let g = DirectedGraph::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
    let x = DVector::from_vec(vec![1.0, 2.0]);
    let out = apply_heat(&g, &HeatCoeffs::new(2.0, 0.5).unwrap(), &x, 2000).unwrap();
    // A is nilpotent: exp(0.5 A) = I + 0.5 A, so output = 2 (I + 0.5 A) x.
    let expected = DVector::from_vec(vec![2.0 * (1.0 + 0.5 * 2.0), 2.0 * 2.0]);
    assert!((out - expected).norm() < 1e-12);
}

#[test]
fn heat_cache_reuses_and_replaces_kernels() {
    let g = gen_erdos_renyi(6, 0.4, 4).unwrap();
    let x = random_signal(6, 9);
    let mut cache = HeatKernelCache::new(&g, 1e-12);
    let c = HeatCoeffs::new(1.5, 0.3).unwrap();
    let direct = apply_heat(&g, &c, &x, 2000).unwrap();
    let cached1 = cache.apply(&c, &x).unwrap();
    let cached2 = cache.apply(&c, &x).unwrap();
    assert_eq!(cached1, cached2);
    assert!((cached1 - direct).norm() < 1e-14);
    // A different time gets its own kernel rather than the stale one.
    let c2 = HeatCoeffs::new(1.5, 0.9).unwrap();
    let direct2 = apply_heat(&g, &c2, &x, 2000).unwrap();
    assert!((cache.apply(&c2, &x).unwrap() - direct2).norm() < 1e-14);
}

#[test]
fn heat_respects_dense_cap() {
    let g = gen_erdos_renyi(10, 0.3, 1).unwrap();
    let x = random_signal(10, 1);
    assert!(matches!(
        apply_heat(&g, &HeatCoeffs::new(1.0, 1.0).unwrap(), &x, 5),
        Err(Error::ResourceLimit(_))
    ));
}

#[test]
fn poly_coeffs_validation() {
    assert!(PolyCoeffs::new(vec![]).is_err());
    assert!(PolyCoeffs::new(vec![1.0, f64::INFINITY]).is_err());
    assert!(HeatCoeffs::new(f64::NAN, 0.0).is_err());
}
