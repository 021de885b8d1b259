//! Acceptance suite: one test per release criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; any failure also fails the build.

use cgpronet::experiments::{
    baseline_metrics, forecast_matrix, run_ablation, run_bounds_verification,
    run_stability_experiment, AblationConfig, StabilityConfig,
};
use cgpronet_core::analysis::{metrics, BaselineKind};
use cgpronet_core::filter::{
    apply_poly, apply_poly_dense_oracle, matrix_exponential, PolyCoeffs,
};
use cgpronet_core::graph::gen_erdos_renyi;
use cgpronet_core::model::{
    backward, forward, Activation, CgpParams, HeatParams, MultiHorizonParams,
    MultiHorizonVariant,
};
use cgpronet_core::rng::SeededRng;
use cgpronet_core::synth::{generate, EtaMode, GraphKind, SynthConfig};
use cgpronet_core::train::{fd_grad, split, train, LossKind, Regularizer, SplitSpec, TrainConfig};
use nalgebra::{DMatrix, DVector};

fn verdict(id: u32, name: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("criterion {id} ({name}): PASS"),
        Err(why) => {
            println!("criterion {id} ({name}): FAIL - {why}");
            panic!("criterion {id} ({name}) failed: {why}");
        }
    }
}

fn ensure(cond: bool, why: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn random_window(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = SeededRng::new(seed);
    DMatrix::from_fn(n, m, |_, _| rng.normal())
}

fn random_params(m: usize, activation: Activation, seed: u64) -> CgpParams {
    let mut rng = SeededRng::new(seed);
    let alphas: Vec<f64> = (0..m).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    let thetas = (1..=m)
        .map(|i| PolyCoeffs::new((0..=i).map(|_| rng.uniform_in(-0.6, 0.6)).collect()).unwrap())
        .collect();
    CgpParams::new(alphas, thetas, activation).unwrap()
}

#[test]
fn criterion_01_parameter_counts() {
    verdict(1, "parameter counts", (|| {
        for (m, want) in [(3usize, 12usize), (6, 33), (9, 63)] {
            let got = CgpParams::init(m, Activation::Tanh, None).unwrap().n_params();
            ensure(got == want, || format!("base M={m}: {got} != {want}"))?;
        }
        for (variant, table) in [
            (MultiHorizonVariant::MlpHead, [(3usize, 15usize), (6, 18), (9, 21)]),
            (MultiHorizonVariant::Adaptive, [(3, 30), (6, 57), (9, 84)]),
        ] {
            for (h, want) in table {
                let got = MultiHorizonParams::init(variant, 3, h, Activation::Tanh, None)
                    .unwrap()
                    .n_params();
                ensure(got == want, || format!("{variant:?} H={h}: {got} != {want}"))?;
            }
        }
        let shared = MultiHorizonParams::init(MultiHorizonVariant::Shared, 3, 6, Activation::Tanh, None)
            .unwrap()
            .n_params();
        ensure(shared == 12, || format!("shared: {shared} != 12"))?;
        for m in [1usize, 3, 5] {
            let got = HeatParams::init(m, Activation::Tanh).unwrap().n_params();
            ensure(got == 3 * m, || format!("heat M={m}: {got} != {}", 3 * m))?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_02_gradient_correctness() {
    verdict(2, "analytic gradients vs finite differences", (|| {
        let mut worst = 0.0f64;
        for seed in 0..50u64 {
            let n = 4 + (seed as usize % 12); // N <= 15
            let m = 1 + (seed as usize % 4); // M <= 4
            let g = gen_erdos_renyi(n, 0.3, seed).map_err(|e| e.to_string())?;
            let params = random_params(m, Activation::Tanh, seed + 1);
            let window = random_window(n, m, seed + 2);
            let mut rng = SeededRng::new(seed + 3);
            let upstream = DVector::from_fn(n, |_, _| rng.normal());
            let analytic =
                backward(&params, &g, &window, &upstream).map_err(|e| e.to_string())?.flatten();
            let up_mat = DMatrix::from_column_slice(n, 1, upstream.as_slice());
            let numeric = fd_grad(&params, &g, &window, &up_mat).map_err(|e| e.to_string())?;
            let scale = numeric.iter().fold(1e-8f64, |a, v| a.max(v.abs()));
            for (a, b) in analytic.iter().zip(&numeric) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        ensure(worst <= 1e-5, || format!("max relative gradient error {worst:.3e} > 1e-5"))
    })());
}

#[test]
fn criterion_03_recursive_filter_matches_dense_oracle() {
    verdict(3, "recursive diffusion vs dense powers", (|| {
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let n = 5 + (seed as usize % 46); // N <= 50
            let order = seed as usize % 8; // order <= 7
            let g = gen_erdos_renyi(n, 0.2, seed).map_err(|e| e.to_string())?;
            let mut rng = SeededRng::new(seed ^ 0xabc);
            let c = PolyCoeffs::new((0..=order).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
                .map_err(|e| e.to_string())?;
            let x = DVector::from_fn(n, |_, _| rng.normal());
            let fast = apply_poly(&g, &c, &x).map_err(|e| e.to_string())?;
            let dense = apply_poly_dense_oracle(&g, &c, &x, n).map_err(|e| e.to_string())?;
            worst = worst.max((fast - dense).amax());
        }
        ensure(worst <= 1e-10, || format!("max deviation {worst:.3e} > 1e-10"))
    })());
}

#[test]
fn criterion_04_var_cgp_linear_reduction() {
    verdict(4, "identity/unit-alpha forward equals linear CGP", (|| {
        let mut worst = 0.0f64;
        for seed in 0..50u64 {
            let n = 4 + (seed as usize % 20);
            let m = 1 + (seed as usize % 3);
            let g = gen_erdos_renyi(n, 0.3, seed).map_err(|e| e.to_string())?;
            let mut params = random_params(m, Activation::Identity, seed + 7);
            params.alphas = vec![1.0; m];
            let window = random_window(n, m, seed + 8);
            let out = forward(&params, &g, &window).map_err(|e| e.to_string())?;
            // Dense linear CGP: x_k = sum_i P(A, theta_i) x_{k-i}.
            let mut dense = DVector::zeros(n);
            for (i, theta) in params.thetas.iter().enumerate() {
                // Window columns are oldest-first; lag i+1 is column m-1-i.
                let x = window.column(m - 1 - i).into_owned();
                dense += apply_poly_dense_oracle(&g, theta, &x, n).map_err(|e| e.to_string())?;
            }
            worst = worst.max((out - dense).amax());
        }
        ensure(worst <= 1e-10, || format!("max deviation {worst:.3e} > 1e-10"))
    })());
}

#[test]
fn criterion_05_table1_desk_scale_reproduction() {
    verdict(5, "synthetic benchmark rMSE band and baselines", (|| {
        let spec = SplitSpec::new(0.5, 0.25, 0.25).map_err(|e| e.to_string())?;
        let tc = TrainConfig {
            learning_rate: 0.01,
            epochs: 1000,
            regularizer: Regularizer::None,
            reg_weight: 0.0,
            loss: LossKind::Mse,
        };
        for seed in 1..=3u64 {
            let gt = generate(&SynthConfig {
                n_nodes: 100,
                n_steps: 100,
                ar_order: 3,
                graph: GraphKind::ErdosRenyi { p: 0.03 },
                snr_db: 0.0,
                eta_mode: EtaMode::PerStep,
                seed,
            })
            .map_err(|e| e.to_string())?;
            let init = CgpParams::init(3, Activation::Tanh, Some(seed)).map_err(|e| e.to_string())?;
            let report = train(init, &gt.graph, &gt.series, &spec, &tc).map_err(|e| e.to_string())?;
            let (_, _, test) = split(&gt.series, &spec).map_err(|e| e.to_string())?;
            let (pred, target) =
                forecast_matrix(&report.best_params, &gt.graph, &test).map_err(|e| e.to_string())?;
            let rmse = metrics(&pred, &target).map_err(|e| e.to_string())?.rmse;
            ensure((0.65..=0.80).contains(&rmse), || {
                format!("seed {seed}: test rMSE {rmse:.4} outside [0.65, 0.80]")
            })?;
            for kind in [BaselineKind::Avg, BaselineKind::Last] {
                let b = baseline_metrics(&test, 3, kind).map_err(|e| e.to_string())?.rmse;
                ensure(rmse < b, || {
                    format!("seed {seed}: model {rmse:.4} not better than {kind:?} {b:.4}")
                })?;
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_06_stability_trends() {
    verdict(6, "perturbation-stability grid trends", (|| {
        let cfg = StabilityConfig::default();
        assert_eq!(cfg.ar_order, 10);
        assert_eq!(cfg.trials, 5);
        let cells = run_stability_experiment(&cfg).map_err(|e| e.to_string())?;
        let cell = |p: f64, snr: f64| {
            cells
                .iter()
                .find(|c| (c.p - p).abs() < 1e-12 && (c.snr_db - snr).abs() < 1e-12)
                .map(|c| c.mean_rmse)
                .ok_or_else(|| format!("missing cell p={p}, snr={snr}"))
        };
        let anchor = cell(0.1, 15.0)?;
        ensure((0.05..=0.11).contains(&anchor), || {
            format!("p=0.1/SNR=15 cell {anchor:.4} outside [0.05, 0.11]")
        })?;
        for &p in &cfg.p_grid {
            let (a, b, c) = (cell(p, 15.0)?, cell(p, 0.0)?, cell(p, -15.0)?);
            ensure(a < b && b < c, || {
                format!("p={p}: rMSE not increasing across SNR 15/0/-15: {a:.4}, {b:.4}, {c:.4}")
            })?;
        }
        for &snr in &cfg.snr_grid {
            let (lo, hi) = (cell(0.1, snr)?, cell(0.7, snr)?);
            ensure(lo < hi, || {
                format!("snr={snr}: rMSE not increasing from p=0.1 ({lo:.4}) to p=0.7 ({hi:.4})")
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_07_bound_verification() {
    verdict(7, "stability bounds hold on random instances", (|| {
        let report = run_bounds_verification(100, 1).map_err(|e| e.to_string())?;
        for check in &report.checks {
            ensure(check.violations == 0, || {
                format!("{}: {} violations (worst ratio {:.4})", check.name, check.violations, check.worst_ratio)
            })?;
            ensure(check.worst_ratio <= 1.0, || {
                format!("{}: worst ratio {:.6} exceeds 1", check.name, check.worst_ratio)
            })?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_08_ablation_ordering() {
    verdict(8, "regularization/non-linearity ablation ordering", (|| {
        let rows = run_ablation(&AblationConfig::default()).map_err(|e| e.to_string())?;
        let get = |name: &str| {
            rows.iter()
                .find(|r| r.variant == name)
                .map(|r| r.mean_rmse)
                .ok_or_else(|| format!("missing variant {name}"))
        };
        let chain = [
            get("cgp+tanh+l1")?,
            get("cgp+tanh")?,
            get("cgp+l1")?,
            get("cgp")?,
            get("var")?,
        ];
        ensure(chain.windows(2).all(|w| w[0] < w[1]), || {
            format!(
                "ordering violated: tanh+l1 {:.6} / tanh {:.6} / l1 {:.6} / plain {:.6} / var {:.6}",
                chain[0], chain[1], chain[2], chain[3], chain[4]
            )
        })
    })());
}

#[test]
fn criterion_09_matrix_exponential_oracles() {
    verdict(9, "matrix exponential vs eigendecomposition oracle", (|| {
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let n = 2 + (seed as usize % 19); // N <= 20
            let mut rng = SeededRng::new(seed ^ 0x5eed);
            let raw = DMatrix::from_fn(n, n, |_, _| rng.uniform_in(-1.0, 1.0));
            let sym = (&raw + raw.transpose()) * 0.5;
            let e = matrix_exponential(&sym).map_err(|err| err.to_string())?;
            let eig = sym.clone().symmetric_eigen();
            let oracle = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp))
                * eig.eigenvectors.transpose();
            worst = worst.max((&e - &oracle).norm() / oracle.norm());
        }
        ensure(worst <= 1e-8, || format!("max relative error {worst:.3e} > 1e-8"))?;

        // Nilpotent closed form: strictly upper triangular 4x4.
        let mut nil = DMatrix::zeros(4, 4);
        nil[(0, 1)] = 2.0;
        nil[(1, 2)] = -1.0;
        nil[(2, 3)] = 0.5;
        nil[(0, 2)] = 3.0;
        let e = matrix_exponential(&nil).map_err(|err| err.to_string())?;
        let n2 = &nil * &nil;
        let n3 = &n2 * &nil;
        let closed = DMatrix::identity(4, 4) + &nil + n2 / 2.0 + n3 / 6.0;
        ensure((&e - &closed).amax() <= 1e-12, || {
            format!("nilpotent deviation {:.3e} > 1e-12", (&e - &closed).amax())
        })?;

        // Diagonal closed form.
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.5, -0.25, 0.0, 3.0]));
        let e = matrix_exponential(&d).map_err(|err| err.to_string())?;
        let closed = DMatrix::from_diagonal(&DVector::from_vec(vec![
            (1.5f64).exp(),
            (-0.25f64).exp(),
            1.0,
            (3.0f64).exp(),
        ]));
        ensure((&e - &closed).amax() <= 1e-12, || {
            format!("diagonal deviation {:.3e} > 1e-12", (&e - &closed).amax())
        })
    })());
}

#[test]
fn criterion_10_determinism() {
    verdict(10, "byte-identical reruns", (|| {
        let bin = env!("CARGO_BIN_EXE_cgpronet");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let run = |args: &[&str]| -> Result<(), String> {
            let out = std::process::Command::new(bin)
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            if out.status.success() {
                Ok(())
            } else {
                Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
            }
        };
        let compare = |a: &std::path::Path, b: &std::path::Path, files: &[&str]| {
            for f in files {
                let ba = std::fs::read(a.join(f)).map_err(|e| format!("{f}: {e}"))?;
                let bb = std::fs::read(b.join(f)).map_err(|e| format!("{f}: {e}"))?;
                if ba != bb {
                    return Err(format!("{f} differs between reruns"));
                }
            }
            Ok(())
        };
        let (g1, g2) = (dir.path().join("g1"), dir.path().join("g2"));
        for out in [&g1, &g2] {
            run(&[
                "generate", "--n", "15", "--k", "50", "--m", "2", "--p", "0.2", "--snr", "5",
                "--seed", "42", "--out", out.to_str().unwrap(),
            ])?;
        }
        compare(&g1, &g2, &["graph.csv", "series.csv", "manifest.json"])?;

        let (t1, t2) = (dir.path().join("t1"), dir.path().join("t2"));
        for out in [&t1, &t2] {
            run(&[
                "train", "--graph", g1.join("graph.csv").to_str().unwrap(),
                "--series", g1.join("series.csv").to_str().unwrap(),
                "--m", "2", "--epochs", "50", "--seed", "42", "--out", out.to_str().unwrap(),
            ])?;
        }
        compare(&t1, &t2, &["checkpoint.json", "loss_curve.csv", "metrics.json"])?;

        let (s1, s2) = (dir.path().join("s1"), dir.path().join("s2"));
        for out in [&s1, &s2] {
            run(&[
                "stability", "--n", "12", "--k", "30", "--m", "2", "--trials", "1",
                "--p-grid", "0.2", "--snr-grid", "10", "--epochs", "5",
                "--seed", "42", "--out", out.to_str().unwrap(),
            ])?;
        }
        compare(&s1, &s2, &["stability.csv"])
    })());
}
