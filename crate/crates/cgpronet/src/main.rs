use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cgpronet_core::analysis::{metrics, BaselineKind};
use cgpronet_core::model::{CgpParams, HeatParams, MultiHorizonParams, MultiHorizonVariant};
use cgpronet_core::synth::{generate, EtaMode, GraphKind, SynthConfig};
use cgpronet_core::train::{
    split, train, HeatForecaster, LossKind, Regularizer, SplitSpec, TrainConfig,
};
use cgpronet_core::{DirectedGraph, TimeSeries, DEFAULT_DENSE_CAP};
use clap::{Args, Parser, Subcommand};

use cgpronet::checkpoint::{from_checkpoint, parse_activation, to_checkpoint, Model};
use cgpronet::config::Config;
use cgpronet::experiments::{
    ablation_csv, baseline_metrics, forecast_matrix, run_ablation, run_bounds_verification,
    run_stability_experiment, stability_csv, AblationConfig, StabilityConfig,
};
use cgpronet::io;
use cgpronet::plot;

/// Forecasting on directed graphs with polynomial graph filters.
#[derive(Parser)]
#[command(name = "cgpronet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// key=value config file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for experiment grids (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ground-truth process (graph + series + manifest).
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Named settings preset: table1-snr | table1-k | table1-n | table1-m.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Erdos-Renyi edge probability.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        snr: Option<f64>,
        /// Noise-scale convention: per-step | fixed.
        #[arg(long)]
        eta: Option<String>,
        /// Graph family: er | sbm.
        #[arg(long)]
        graph: Option<String>,
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long)]
        p_in: Option<f64>,
        #[arg(long)]
        p_out: Option<f64>,
    },
    /// Train a model on a graph + series pair.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// tanh | identity.
        #[arg(long)]
        activation: Option<String>,
        /// none | l1 | l2.
        #[arg(long)]
        reg: Option<String>,
        /// Regularization weight.
        #[arg(long)]
        lambda: Option<f64>,
        /// base | mlp_head | adaptive | shared | heat.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        horizons: Option<usize>,
        /// Chronological fractions, e.g. 0.5,0.25,0.25.
        #[arg(long)]
        split: Option<String>,
        /// Per-node standardization fitted on the training slice.
        #[arg(long)]
        standardize: bool,
        /// Replace non-numeric series cells with the node's previous value.
        #[arg(long)]
        forward_fill: bool,
    },
    /// Evaluate a checkpoint on a graph + series pair.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        series: PathBuf,
        /// If given, evaluate only the test slice of this split.
        #[arg(long)]
        split: Option<String>,
        /// Replace non-numeric series cells with the node's previous value.
        #[arg(long)]
        forward_fill: bool,
    },
    /// Perturbation-stability grid (Table-12-style CSV).
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        p_grid: Option<String>,
        #[arg(long)]
        snr_grid: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        data_snr: Option<f64>,
        /// Noise-scale convention for the generated data: per-step | fixed.
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// L1 weight used when training the per-trial models.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Empirical verification of the stability bounds.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Regularization/non-linearity ablation (Table-6-style CSV).
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        snr: Option<f64>,
        /// Noise-scale convention for the generated data: per-step | fixed.
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Render result CSVs as gnuplot data + SVG.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        input: PathBuf,
        /// loss | stability.
        #[arg(long)]
        kind: String,
    },
}

/// Marker attached to error chains so main() can map them to exit codes:
/// 2 config, 3 data, 4 divergence, 5 bound violation.
#[derive(Debug, Clone, Copy)]
struct ExitCode(i32);

impl fmt::Display for ExitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            2 => write!(f, "config error"),
            3 => write!(f, "data error"),
            4 => write!(f, "divergence"),
            5 => write!(f, "bound violation"),
            c => write!(f, "error ({c})"),
        }
    }
}

fn classify(err: &anyhow::Error) -> i32 {
    if let Some(ExitCode(c)) = err.downcast_ref::<ExitCode>() {
        return *c;
    }
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<cgpronet_core::Error>() {
            if matches!(core, cgpronet_core::Error::Divergence { .. }) {
                return 4;
            }
        }
    }
    2
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(classify(&err));
        }
    }
}

fn dense_cap() -> Result<usize> {
    match std::env::var("CGP_DENSE_CAP") {
        Ok(raw) => raw
            .parse()
            .map_err(|e| anyhow::anyhow!("CGP_DENSE_CAP={raw}: {e}"))
            .context(ExitCode(2)),
        Err(_) => Ok(DEFAULT_DENSE_CAP),
    }
}

fn init_threads(common: &CommonArgs) -> Result<()> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing thread pool")
            .context(ExitCode(2))?;
    }
    Ok(())
}

fn load_config(common: &CommonArgs) -> Result<Config> {
    match &common.config {
        Some(path) => Config::load(path).context(ExitCode(2)),
        None => Ok(Config::default()),
    }
}

fn parse_split(text: &str) -> Result<SplitSpec> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("split {text:?}: expected three numbers"))
        .context(ExitCode(2))?;
    if parts.len() != 3 {
        bail!(anyhow::anyhow!("split {text:?} needs exactly three fractions").context(ExitCode(2)));
    }
    SplitSpec::new(parts[0], parts[1], parts[2]).context(ExitCode(2))
}

fn parse_eta(name: &str) -> Result<EtaMode> {
    match name {
        "per-step" | "per_step" => Ok(EtaMode::PerStep),
        "fixed" => Ok(EtaMode::Fixed),
        other => Err(anyhow::anyhow!("unknown eta mode {other:?} (per-step | fixed)")
            .context(ExitCode(2))),
    }
}

fn eta_name(mode: EtaMode) -> &'static str {
    match mode {
        EtaMode::PerStep => "per-step",
        EtaMode::Fixed => "fixed",
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("grid {text:?}: expected comma-separated numbers"))
        .context(ExitCode(2))
}

/// Reads a graph sized to the series it accompanies, so trailing isolated
/// nodes (absent from the edge list) keep their rows.
fn read_graph(path: &Path, n_nodes: usize) -> Result<DirectedGraph> {
    io::read_graph_csv(path, Some(n_nodes)).context(ExitCode(3))
}

fn read_series(path: &Path, forward_fill: bool) -> Result<TimeSeries> {
    io::read_series_csv_opts(path, forward_fill).context(ExitCode(3))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, preset, n, k, m, p, snr, eta, graph, communities, p_in, p_out } => {
            init_threads(&common)?;
            let file_cfg = load_config(&common)?;
            // Defaults, then preset, then config file, then flags.
            let (dn, dk, dm, dp, dsnr) = match preset.as_deref() {
                None | Some("table1-snr") | Some("table1-k") => (100, 100, 3, 0.03, 0.0),
                Some("table1-n") => (100, 100, 3, 0.03, -10.0),
                Some("table1-m") => (1000, 100, 3, 0.03, 0.0),
                Some(other) => {
                    bail!(anyhow::anyhow!("unknown preset {other:?}").context(ExitCode(2)))
                }
            };
            let n = file_cfg.resolve(n, "n", dn).context(ExitCode(2))?;
            let k = file_cfg.resolve(k, "k", dk).context(ExitCode(2))?;
            let m = file_cfg.resolve(m, "m", dm).context(ExitCode(2))?;
            let p = file_cfg.resolve(p, "p", dp).context(ExitCode(2))?;
            let snr = file_cfg.resolve(snr, "snr", dsnr).context(ExitCode(2))?;
            let eta_text =
                file_cfg.resolve(eta, "eta", "per-step".into()).context(ExitCode(2))?;
            let eta_mode = parse_eta(&eta_text)?;
            let family =
                file_cfg.resolve(graph, "graph", "er".to_string()).context(ExitCode(2))?;
            let kind = match family.as_str() {
                "er" => GraphKind::ErdosRenyi { p },
                "sbm" => GraphKind::Sbm {
                    communities: file_cfg.resolve(communities, "communities", 3).context(ExitCode(2))?,
                    p_in: file_cfg.resolve(p_in, "p_in", 0.3).context(ExitCode(2))?,
                    p_out: file_cfg.resolve(p_out, "p_out", 0.01).context(ExitCode(2))?,
                },
                other => bail!(anyhow::anyhow!("unknown graph family {other:?}").context(ExitCode(2))),
            };
            let config = SynthConfig {
                n_nodes: n,
                n_steps: k,
                ar_order: m,
                graph: kind,
                snr_db: snr,
                eta_mode,
                seed: common.seed,
            };
            config.validate().context(ExitCode(2))?;
            let gt = generate(&config)?;
            io::write_graph_csv(&common.out.join("graph.csv"), &gt.graph)?;
            io::write_series_csv(&common.out.join("series.csv"), &gt.series)?;
            let manifest = serde_json::json!({
                "n": n, "k": k, "m": m, "snr_db": snr, "eta": eta_name(eta_mode),
                "seed": common.seed,
                "graph": match config.graph {
                    GraphKind::ErdosRenyi { p } => serde_json::json!({"family": "er", "p": p}),
                    GraphKind::Sbm { communities, p_in, p_out } => serde_json::json!({
                        "family": "sbm", "communities": communities,
                        "p_in": p_in, "p_out": p_out,
                    }),
                },
                "coefficients": gt.coeffs.iter().map(|c| c.coeffs().to_vec()).collect::<Vec<_>>(),
                "n_edges": gt.graph.n_edges(),
            });
            io::write_json(&common.out.join("manifest.json"), &manifest)?;
            archive_config(&common, &file_cfg, &[
                ("n", n.to_string()), ("k", k.to_string()), ("m", m.to_string()),
                ("p", p.to_string()), ("snr", snr.to_string()),
                ("eta", eta_text), ("graph", family),
            ])?;
            println!(
                "generated N={n} K={k} M={m} snr={snr}dB edges={} -> {}",
                gt.graph.n_edges(),
                common.out.display()
            );
            Ok(())
        }

        Command::Train {
            common, graph, series, m, lr, epochs, activation, reg, lambda, variant, horizons,
            split: split_arg, standardize, forward_fill,
        } => {
            init_threads(&common)?;
            let file_cfg = load_config(&common)?;
            let raw_series = read_series(&series, forward_fill)?;
            let g = read_graph(&graph, raw_series.n_nodes())?;
            let m = file_cfg.resolve(m, "m", 3).context(ExitCode(2))?;
            let lr = file_cfg.resolve(lr, "lr", 0.01).context(ExitCode(2))?;
            let epochs = file_cfg.resolve(epochs, "epochs", 1000).context(ExitCode(2))?;
            let act_name =
                file_cfg.resolve(activation, "activation", "tanh".into()).context(ExitCode(2))?;
            let act = parse_activation(&act_name).context(ExitCode(2))?;
            let reg_name = file_cfg.resolve(reg, "reg", "none".into()).context(ExitCode(2))?;
            let regularizer = match reg_name.as_str() {
                "none" => Regularizer::None,
                "l1" => Regularizer::L1,
                "l2" => Regularizer::L2,
                other => {
                    bail!(anyhow::anyhow!("unknown regularizer {other:?}").context(ExitCode(2)))
                }
            };
            let lambda = file_cfg.resolve(lambda, "lambda", 0.01).context(ExitCode(2))?;
            let variant_name =
                file_cfg.resolve(variant, "variant", "base".into()).context(ExitCode(2))?;
            let horizons = file_cfg.resolve(horizons, "horizons", 1).context(ExitCode(2))?;
            let split_text = file_cfg
                .resolve(split_arg, "split", "0.5,0.25,0.25".into())
                .context(ExitCode(2))?;
            let spec = parse_split(&split_text)?;
            let series_data = if standardize {
                let (tr, _, _) = split(&raw_series, &spec)?;
                raw_series.standardize_per_node(tr.len())?.0
            } else {
                raw_series
            };
            let tc = TrainConfig {
                learning_rate: lr,
                epochs,
                regularizer,
                reg_weight: if regularizer == Regularizer::None { 0.0 } else { lambda },
                loss: LossKind::Mse,
            };
            let cap = dense_cap()?;
            let t0 = std::time::Instant::now();
            let (model, train_curve, val_curve, best_epoch) = match variant_name.as_str() {
                "base" => {
                    let init = CgpParams::init(m, act, Some(common.seed))?;
                    let r = train(init, &g, &series_data, &spec, &tc)?;
                    (Model::Base(r.best_params), r.train_curve, r.val_curve, r.best_epoch)
                }
                "mlp_head" | "adaptive" | "shared" => {
                    let mh_variant = match variant_name.as_str() {
                        "mlp_head" => MultiHorizonVariant::MlpHead,
                        "adaptive" => MultiHorizonVariant::Adaptive,
                        _ => MultiHorizonVariant::Shared,
                    };
                    let init =
                        MultiHorizonParams::init(mh_variant, m, horizons, act, Some(common.seed))?;
                    let r = train(init, &g, &series_data, &spec, &tc)?;
                    (Model::Multi(r.best_params), r.train_curve, r.val_curve, r.best_epoch)
                }
                "heat" => {
                    let mut params = HeatParams::init(m, act)?;
                    params.dense_cap = cap;
                    let init = HeatForecaster { params, graph: &g };
                    let r = train(init, &g, &series_data, &spec, &tc)?;
                    (
                        Model::Heat(r.best_params.params),
                        r.train_curve,
                        r.val_curve,
                        r.best_epoch,
                    )
                }
                other => bail!(anyhow::anyhow!("unknown variant {other:?}").context(ExitCode(2))),
            };
            let wall = t0.elapsed().as_secs_f64();
            io::write_json(&common.out.join("checkpoint.json"), &to_checkpoint(&model))?;
            io::write_loss_csv(&common.out.join("loss_curve.csv"), &train_curve, &val_curve)?;
            let (_, _, test) = split(&series_data, &spec)?;
            let report = eval_model(&model, &g, &test, cap)?;
            io::write_json(&common.out.join("metrics.json"), &MetricsDoc::from(&report))?;
            archive_config(&common, &file_cfg, &[
                ("m", m.to_string()), ("lr", lr.to_string()), ("epochs", epochs.to_string()),
                ("activation", act_name), ("reg", reg_name), ("lambda", lambda.to_string()),
                ("variant", variant_name.clone()), ("horizons", horizons.to_string()),
                ("split", split_text),
            ])?;
            println!(
                "trained variant={variant_name} params={} best_epoch={best_epoch} \
                 test_rmse={:.6} wall={wall:.1}s -> {}",
                model.n_params(),
                report.rmse,
                common.out.display()
            );
            Ok(())
        }

        Command::Eval { common, checkpoint, graph, series, split: split_arg, forward_fill } => {
            init_threads(&common)?;
            let ck: cgpronet::checkpoint::Checkpoint =
                io::read_json(&checkpoint).context(ExitCode(3))?;
            let model = from_checkpoint(&ck).context(ExitCode(3))?;
            let series_data = read_series(&series, forward_fill)?;
            let g = read_graph(&graph, series_data.n_nodes())?;
            let eval_series = match &split_arg {
                Some(text) => {
                    let spec = parse_split(text)?;
                    split(&series_data, &spec)?.2
                }
                None => series_data,
            };
            let report = eval_model(&model, &g, &eval_series, dense_cap()?)?;
            io::write_json(&common.out.join("metrics.json"), &MetricsDoc::from(&report))?;
            let avg = baseline_metrics(&eval_series, model.ar_order(), BaselineKind::Avg)?;
            let last = baseline_metrics(&eval_series, model.ar_order(), BaselineKind::Last)?;
            io::write_json(
                &common.out.join("baselines.json"),
                &serde_json::json!({
                    "avg": MetricsDoc::from(&avg),
                    "last": MetricsDoc::from(&last),
                }),
            )?;
            println!(
                "eval mse={:.6} rmse={:.6} mae={:.6} (baselines avg rmse={:.6} last rmse={:.6})",
                report.mse, report.rmse, report.mae, avg.rmse, last.rmse
            );
            Ok(())
        }

        Command::Stability {
            common, p_grid, snr_grid, trials, n, k, m, data_snr, eta, epochs, lr, lambda,
        } => {
            init_threads(&common)?;
            let file_cfg = load_config(&common)?;
            let defaults = StabilityConfig::default();
            let p_grid = match file_cfg.resolve(p_grid, "p_grid", String::new()).context(ExitCode(2))? {
                s if s.is_empty() => defaults.p_grid.clone(),
                s => parse_grid(&s)?,
            };
            let snr_grid =
                match file_cfg.resolve(snr_grid, "snr_grid", String::new()).context(ExitCode(2))? {
                    s if s.is_empty() => defaults.snr_grid.clone(),
                    s => parse_grid(&s)?,
                };
            let cfg = StabilityConfig {
                n_nodes: file_cfg.resolve(n, "n", defaults.n_nodes).context(ExitCode(2))?,
                k_steps: file_cfg.resolve(k, "k", defaults.k_steps).context(ExitCode(2))?,
                ar_order: file_cfg.resolve(m, "m", defaults.ar_order).context(ExitCode(2))?,
                data_snr_db: file_cfg
                    .resolve(data_snr, "data_snr", defaults.data_snr_db)
                    .context(ExitCode(2))?,
                eta_mode: parse_eta(
                    &file_cfg
                        .resolve(eta, "eta", eta_name(defaults.eta_mode).into())
                        .context(ExitCode(2))?,
                )?,
                p_grid,
                snr_grid,
                trials: file_cfg.resolve(trials, "trials", defaults.trials).context(ExitCode(2))?,
                epochs: file_cfg.resolve(epochs, "epochs", defaults.epochs).context(ExitCode(2))?,
                learning_rate: file_cfg.resolve(lr, "lr", defaults.learning_rate).context(ExitCode(2))?,
                reg_weight: file_cfg
                    .resolve(lambda, "lambda", defaults.reg_weight)
                    .context(ExitCode(2))?,
                seed: common.seed,
            };
            let cells = run_stability_experiment(&cfg)?;
            io::atomic_write(&common.out.join("stability.csv"), stability_csv(&cells).as_bytes())?;
            let mut jsonl = String::new();
            for cell in &cells {
                jsonl.push_str(&serde_json::to_string(cell)?);
                jsonl.push('\n');
            }
            io::atomic_write(&common.out.join("stability_cells.jsonl"), jsonl.as_bytes())?;
            archive_config(&common, &file_cfg, &[
                ("n", cfg.n_nodes.to_string()), ("k", cfg.k_steps.to_string()),
                ("m", cfg.ar_order.to_string()), ("trials", cfg.trials.to_string()),
                ("epochs", cfg.epochs.to_string()),
            ])?;
            println!("stability grid: {} cells -> {}", cells.len(), common.out.display());
            Ok(())
        }

        Command::Bounds { common, trials } => {
            init_threads(&common)?;
            let file_cfg = load_config(&common)?;
            let trials = file_cfg.resolve(trials, "trials", 100).context(ExitCode(2))?;
            let report = run_bounds_verification(trials, common.seed)?;
            io::write_json(&common.out.join("bounds_report.json"), &report)?;
            for check in &report.checks {
                println!(
                    "{}: trials={} violations={} worst_ratio={:.4}",
                    check.name, check.trials, check.violations, check.worst_ratio
                );
            }
            println!("violations: {}", report.total_violations);
            if report.total_violations > 0 {
                bail!(anyhow::anyhow!(
                    "{} bound violation(s) found",
                    report.total_violations
                )
                .context(ExitCode(5)));
            }
            Ok(())
        }

        Command::Ablate { common, realizations, n, k, m, p, snr, eta, epochs, lr, lambda } => {
            init_threads(&common)?;
            let file_cfg = load_config(&common)?;
            let defaults = AblationConfig::default();
            let cfg = AblationConfig {
                n_nodes: file_cfg.resolve(n, "n", defaults.n_nodes).context(ExitCode(2))?,
                k_steps: file_cfg.resolve(k, "k", defaults.k_steps).context(ExitCode(2))?,
                ar_order: file_cfg.resolve(m, "m", defaults.ar_order).context(ExitCode(2))?,
                p: file_cfg.resolve(p, "p", defaults.p).context(ExitCode(2))?,
                snr_db: file_cfg.resolve(snr, "snr", defaults.snr_db).context(ExitCode(2))?,
                eta_mode: parse_eta(
                    &file_cfg
                        .resolve(eta, "eta", eta_name(defaults.eta_mode).into())
                        .context(ExitCode(2))?,
                )?,
                realizations: file_cfg
                    .resolve(realizations, "realizations", defaults.realizations)
                    .context(ExitCode(2))?,
                epochs: file_cfg.resolve(epochs, "epochs", defaults.epochs).context(ExitCode(2))?,
                learning_rate: file_cfg.resolve(lr, "lr", defaults.learning_rate).context(ExitCode(2))?,
                reg_weight: file_cfg.resolve(lambda, "lambda", defaults.reg_weight).context(ExitCode(2))?,
                seed: common.seed,
            };
            let rows = run_ablation(&cfg)?;
            io::atomic_write(&common.out.join("ablation.csv"), ablation_csv(&rows).as_bytes())?;
            io::write_json(&common.out.join("ablation.json"), &rows)?;
            for row in &rows {
                println!(
                    "{:<14} params={:<6} mean_rmse={:.6}",
                    row.variant, row.n_params, row.mean_rmse
                );
            }
            Ok(())
        }

        Command::Plot { common, input, kind } => {
            init_threads(&common)?;
            let data = match kind.as_str() {
                "loss" => plot::loss_plot(&input).context(ExitCode(3))?,
                "stability" => plot::stability_plot(&input).context(ExitCode(3))?,
                other => bail!(anyhow::anyhow!("unknown plot kind {other:?}").context(ExitCode(2))),
            };
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "plot".into());
            io::atomic_write(
                &common.out.join(format!("{stem}.dat")),
                plot::to_gnuplot(&data).as_bytes(),
            )?;
            io::atomic_write(
                &common.out.join(format!("{stem}.svg")),
                plot::to_svg(&data)?.as_bytes(),
            )?;
            println!("plotted {} series -> {}", data.series.len(), common.out.display());
            Ok(())
        }
    }
}

/// Serializable metrics document.
#[derive(serde::Serialize)]
struct MetricsDoc {
    mse: f64,
    rmse: f64,
    mae: f64,
    rmae: f64,
    mape: f64,
}

impl From<&cgpronet_core::analysis::MetricsReport> for MetricsDoc {
    fn from(r: &cgpronet_core::analysis::MetricsReport) -> Self {
        Self { mse: r.mse, rmse: r.rmse, mae: r.mae, rmae: r.rmae, mape: r.mape }
    }
}

fn eval_model(
    model: &Model,
    g: &DirectedGraph,
    series: &TimeSeries,
    cap: usize,
) -> Result<cgpronet_core::analysis::MetricsReport> {
    let (pred, target) = match model {
        Model::Base(p) => forecast_matrix(p, g, series)?,
        Model::Multi(p) => forecast_matrix(p, g, series)?,
        Model::Heat(p) => {
            let mut params = p.clone();
            params.dense_cap = cap;
            forecast_matrix(&HeatForecaster { params, graph: g }, g, series)?
        }
    };
    Ok(metrics(&pred, &target)?)
}

/// Copies the fully resolved configuration into the run's output directory.
fn archive_config(
    common: &CommonArgs,
    file_cfg: &Config,
    resolved: &[(&str, String)],
) -> Result<()> {
    let mut archived = file_cfg.clone();
    for (key, value) in resolved {
        archived.set(key, value);
    }
    archived.set("seed", common.seed);
    io::atomic_write(&common.out.join("run_config.txt"), archived.to_text().as_bytes())
}
