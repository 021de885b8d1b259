//! Windowing, chronological splits, losses, regularizers, Adam, and the
//! full-batch training loop with validation-based model selection.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::graph::GraphOp;
use crate::model::{backward, forecast_multi, forward_heat, CgpParams, HeatParams, MultiHorizonParams, VarParams};
use crate::series::TimeSeries;

/// Sliding windows over a series: sample i pairs the N x M window starting at
/// column i with the N x H target block that follows it.
pub struct WindowDataset<'a> {
    series: &'a TimeSeries,
    ar_order: usize,
    horizons: usize,
}

impl<'a> WindowDataset<'a> {
    pub fn len(&self) -> usize {
        self.series.len() - self.ar_order - self.horizons + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window(&self, i: usize) -> DMatrix<f64> {
        self.series.block(i, self.ar_order)
    }

    pub fn target(&self, i: usize) -> DMatrix<f64> {
        self.series.block(i + self.ar_order, self.horizons)
    }
}

pub fn make_windows(series: &TimeSeries, ar_order: usize, horizons: usize) -> Result<WindowDataset<'_>> {
    if ar_order == 0 || horizons == 0 {
        return Err(invalid("M and H must be positive"));
    }
    if series.len() < ar_order + horizons {
        return Err(invalid("series shorter than M + H"));
    }
    Ok(WindowDataset { series, ar_order, horizons })
}

/// Chronological train/val/test fractions (must sum to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64) -> Result<Self> {
        for f in [train_frac, val_frac, test_frac] {
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid("fractions must lie in [0, 1]"));
            }
        }
        if (train_frac + val_frac + test_frac - 1.0).abs() > 1e-12 {
            return Err(invalid("fractions must sum to 1"));
        }
        Ok(Self { train_frac, val_frac, test_frac })
    }
}

/// Contiguous chronological slices by floor; the remainder goes to test.
pub fn split(series: &TimeSeries, spec: &SplitSpec) -> Result<(TimeSeries, TimeSeries, TimeSeries)> {
    let k = series.len();
    let n_train = libm::floor(spec.train_frac * k as f64) as usize;
    let n_val = libm::floor(spec.val_frac * k as f64) as usize;
    let n_test = k - n_train - n_val;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(invalid("a split slice would be empty"));
    }
    Ok((
        series.slice(0, n_train)?,
        series.slice(n_train, n_val)?,
        series.slice(n_train + n_val, n_test)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Mae,
}

/// Mean squared or mean absolute entry difference.
pub fn loss(pred: &DMatrix<f64>, target: &DMatrix<f64>, kind: LossKind) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(invalid("prediction/target shape mismatch"));
    }
    let count = (pred.nrows() * pred.ncols()) as f64;
    let sum: f64 = pred
        .iter()
        .zip(target.iter())
        .map(|(p, t)| match kind {
            LossKind::Mse => (p - t) * (p - t),
            LossKind::Mae => (p - t).abs(),
        })
        .sum();
    Ok(sum / count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    None,
    L1,
    L2,
}

/// l1 = sum of absolute values, l2 = sum of squares, over all learnable
/// entries (flattened).
pub fn regularizer(flat_params: &[f64], kind: Regularizer) -> f64 {
    match kind {
        Regularizer::None => 0.0,
        Regularizer::L1 => flat_params.iter().map(|v| v.abs()).sum(),
        Regularizer::L2 => flat_params.iter().map(|v| v * v).sum(),
    }
}

fn regularizer_grad(flat_params: &[f64], kind: Regularizer, weight: f64, out: &mut [f64]) {
    match kind {
        Regularizer::None => {}
        Regularizer::L1 => {
            for (g, v) in out.iter_mut().zip(flat_params) {
                *g += weight * if *v > 0.0 { 1.0 } else if *v < 0.0 { -1.0 } else { 0.0 };
            }
        }
        Regularizer::L2 => {
            for (g, v) in out.iter_mut().zip(flat_params) {
                *g += weight * 2.0 * v;
            }
        }
    }
}

/// Adam moment buffers. One instance per flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: usize,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(invalid("parameter/gradient length mismatch"));
    }
    state.step += 1;
    let bc1 = 1.0 - libm::pow(state.beta1, state.step as f64);
    let bc2 = 1.0 - libm::pow(state.beta2, state.step as f64);
    for i in 0..params.len() {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (libm::sqrt(v_hat) + state.epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub regularizer: Regularizer,
    pub reg_weight: f64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 1000,
            regularizer: Regularizer::None,
            reg_weight: 0.0,
            loss: LossKind::Mse,
        }
    }
}

/// Anything trainable by the full-batch loop: exposes its flat parameter
/// vector, a multi-horizon prediction, and the gradient of
/// sum(upstream .* predict) — analytic where cheap, central finite
/// differences otherwise.
pub trait Forecaster: Clone {
    fn ar_order(&self) -> usize;
    fn horizons(&self) -> usize;
    fn flat(&self) -> Vec<f64>;
    fn set_flat(&mut self, vals: &[f64]) -> Result<()>;
    fn predict<G: GraphOp>(&self, g: &G, window: &DMatrix<f64>) -> Result<DMatrix<f64>>;
    fn grad<G: GraphOp>(
        &self,
        g: &G,
        window: &DMatrix<f64>,
        upstream: &DMatrix<f64>,
    ) -> Result<Vec<f64>> {
        fd_grad(self, g, window, upstream)
    }
}

const FD_STEP: f64 = 1e-5;

/// Central finite differences of sum(upstream .* predict) per parameter.
pub fn fd_grad<F: Forecaster, G: GraphOp>(
    model: &F,
    g: &G,
    window: &DMatrix<f64>,
    upstream: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let mut flat = model.flat();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(flat.len());
    for i in 0..flat.len() {
        let orig = flat[i];
        flat[i] = orig + FD_STEP;
        probe.set_flat(&flat)?;
        let plus: f64 = probe.predict(g, window)?.iter().zip(upstream.iter()).map(|(p, u)| p * u).sum();
        flat[i] = orig - FD_STEP;
        probe.set_flat(&flat)?;
        let minus: f64 = probe.predict(g, window)?.iter().zip(upstream.iter()).map(|(p, u)| p * u).sum();
        flat[i] = orig;
        out.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(out)
}

impl Forecaster for CgpParams {
    fn ar_order(&self) -> usize {
        CgpParams::ar_order(self)
    }

    fn horizons(&self) -> usize {
        1
    }

    fn flat(&self) -> Vec<f64> {
        self.flatten()
    }

    fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        CgpParams::set_flat(self, vals)
    }

    fn predict<G: GraphOp>(&self, g: &G, window: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let y = crate::model::forward(self, g, window)?;
        Ok(DMatrix::from_column_slice(y.len(), 1, y.as_slice()))
    }

    fn grad<G: GraphOp>(
        &self,
        g: &G,
        window: &DMatrix<f64>,
        upstream: &DMatrix<f64>,
    ) -> Result<Vec<f64>> {
        let up = DVector::from_column_slice(upstream.column(0).as_slice());
        Ok(backward(self, g, window, &up)?.flatten())
    }
}

impl Forecaster for MultiHorizonParams {
    fn ar_order(&self) -> usize {
        MultiHorizonParams::ar_order(self)
    }

    fn horizons(&self) -> usize {
        self.horizons
    }

    fn flat(&self) -> Vec<f64> {
        self.flatten()
    }

    fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        MultiHorizonParams::set_flat(self, vals)
    }

    fn predict<G: GraphOp>(&self, g: &G, window: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        forecast_multi(self, g, window)
    }
}

impl Forecaster for HeatParams {
    fn ar_order(&self) -> usize {
        HeatParams::ar_order(self)
    }

    fn horizons(&self) -> usize {
        1
    }

    fn flat(&self) -> Vec<f64> {
        self.flatten()
    }

    fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        HeatParams::set_flat(self, vals)
    }

    fn predict<G: GraphOp>(&self, _g: &G, _window: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Err(Error::InvalidArgument(alloc::string::String::from(
            "heat model needs a sparse DirectedGraph; use predict_heat",
        )))
    }
}

/// The heat model densifies the adjacency, so it trains against the concrete
/// graph type rather than the operator trait.
#[derive(Clone)]
pub struct HeatForecaster<'a> {
    pub params: HeatParams,
    pub graph: &'a crate::graph::DirectedGraph,
}

impl Forecaster for HeatForecaster<'_> {
    fn ar_order(&self) -> usize {
        self.params.ar_order()
    }

    fn horizons(&self) -> usize {
        1
    }

    fn flat(&self) -> Vec<f64> {
        self.params.flatten()
    }

    fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        self.params.set_flat(vals)
    }

    fn predict<G: GraphOp>(&self, _g: &G, window: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let y = forward_heat(&self.params, self.graph, window)?;
        Ok(DMatrix::from_column_slice(y.len(), 1, y.as_slice()))
    }
}

impl Forecaster for VarParams {
    fn ar_order(&self) -> usize {
        VarParams::ar_order(self)
    }

    fn horizons(&self) -> usize {
        1
    }

    fn flat(&self) -> Vec<f64> {
        self.flatten()
    }

    fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        VarParams::set_flat(self, vals)
    }

    fn predict<G: GraphOp>(&self, _g: &G, window: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let y = VarParams::predict(self, window)?;
        Ok(DMatrix::from_column_slice(y.len(), 1, y.as_slice()))
    }

    fn grad<G: GraphOp>(
        &self,
        _g: &G,
        window: &DMatrix<f64>,
        upstream: &DMatrix<f64>,
    ) -> Result<Vec<f64>> {
        // d/dR_i sum(u .* R_i x_{k-i}) = u x_{k-i}^T, column-major flattened.
        let m = self.ar_order();
        let n = self.n_nodes();
        let u = upstream.column(0);
        let mut out = Vec::with_capacity(self.n_params());
        for idx in 0..m {
            let lag = idx + 1;
            let x = window.column(m - lag);
            for j in 0..n {
                let xj = x[j];
                for r in 0..n {
                    out.push(u[r] * xj);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<F> {
    pub best_params: F,
    pub train_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
    pub best_epoch: usize,
    /// Filled in by callers that can measure time; the core loop leaves 0.
    pub wall_seconds: f64,
}

const DIVERGENCE_CAP: f64 = 1e12;

/// Mean loss over all windows of a dataset.
pub fn dataset_loss<F: Forecaster, G: GraphOp>(
    model: &F,
    g: &G,
    data: &WindowDataset<'_>,
    kind: LossKind,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..data.len() {
        let pred = model.predict(g, &data.window(i))?;
        total += loss(&pred, &data.target(i), kind)?;
    }
    Ok(total / data.len() as f64)
}

/// Full-batch training: per epoch, accumulate gradients over every training
/// window in chronological order, take one Adam step, then score the
/// validation split. Returns the parameters from the best validation epoch.
pub fn train<F: Forecaster, G: GraphOp>(
    model: F,
    g: &G,
    series: &TimeSeries,
    split_spec: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<TrainReport<F>> {
    if cfg.learning_rate <= 0.0 {
        return Err(invalid("learning rate must be positive"));
    }
    let (train_series, val_series, _) = split(series, split_spec)?;
    let m = model.ar_order();
    let h = model.horizons();
    let train_data = make_windows(&train_series, m, h)?;
    let val_data = make_windows(&val_series, m, h)?;
    train_on_windows(model, g, &train_data, &val_data, cfg)
}

/// Training loop against pre-built window datasets (useful when the caller
/// splits or standardizes the series itself).
pub fn train_on_windows<F: Forecaster, G: GraphOp>(
    mut model: F,
    g: &G,
    train_data: &WindowDataset<'_>,
    val_data: &WindowDataset<'_>,
    cfg: &TrainConfig,
) -> Result<TrainReport<F>> {
    let mut flat = model.flat();
    let n_params = flat.len();
    let mut adam = AdamState::new(n_params, cfg.learning_rate);
    let mut train_curve = Vec::with_capacity(cfg.epochs);
    let mut val_curve = Vec::with_capacity(cfg.epochs);
    let mut best = model.clone();
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut last_finite: Option<usize> = None;
    let samples = train_data.len() as f64;

    for epoch in 0..cfg.epochs {
        let mut grad_acc = vec![0.0; n_params];
        let mut train_loss = 0.0;
        for i in 0..train_data.len() {
            let window = train_data.window(i);
            let target = train_data.target(i);
            let pred = model.predict(g, &window)?;
            train_loss += loss(&pred, &target, cfg.loss)?;
            let count = (pred.nrows() * pred.ncols()) as f64;
            let upstream = DMatrix::from_fn(pred.nrows(), pred.ncols(), |r, c| {
                let diff = pred[(r, c)] - target[(r, c)];
                match cfg.loss {
                    LossKind::Mse => 2.0 * diff / (count * samples),
                    LossKind::Mae => {
                        let s = if diff > 0.0 { 1.0 } else if diff < 0.0 { -1.0 } else { 0.0 };
                        s / (count * samples)
                    }
                }
            });
            let gw = model.grad(g, &window, &upstream)?;
            for (a, b) in grad_acc.iter_mut().zip(&gw) {
                *a += b;
            }
        }
        train_loss /= samples;
        let reg = regularizer(&flat, cfg.regularizer);
        let objective = train_loss + cfg.reg_weight * reg;
        if !objective.is_finite() || objective > DIVERGENCE_CAP {
            return Err(Error::Divergence { last_finite_epoch: last_finite });
        }
        regularizer_grad(&flat, cfg.regularizer, cfg.reg_weight, &mut grad_acc);
        adam_step(&mut adam, &mut flat, &grad_acc)?;
        model.set_flat(&flat)?;

        let val_loss = dataset_loss(&model, g, val_data, cfg.loss)?;
        if !val_loss.is_finite() || val_loss > DIVERGENCE_CAP {
            return Err(Error::Divergence { last_finite_epoch: last_finite });
        }
        train_curve.push(objective);
        val_curve.push(val_loss);
        last_finite = Some(epoch);
        if val_loss < best_val {
            best_val = val_loss;
            best = model.clone();
            best_epoch = epoch;
        }
    }

    Ok(TrainReport { best_params: best, train_curve, val_curve, best_epoch, wall_seconds: 0.0 })
}
