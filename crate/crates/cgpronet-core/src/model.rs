//! Forecasting models: the discrete polynomial-filter network, its linear
//! reduction, the heat-kernel variant, the unconstrained VAR baseline, and
//! the multi-horizon extensions.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::filter::{apply_heat, apply_poly_with_states, HeatCoeffs, PolyCoeffs};
use crate::graph::{DirectedGraph, GraphOp};
use crate::rng::SeededRng;
use crate::DEFAULT_DENSE_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => libm::tanh(x),
            Activation::Identity => x,
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = libm::tanh(x);
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Learnable parameters of the base model: mixing weights alpha_i and one
/// order-i polynomial filter per lag i = 1..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct CgpParams {
    pub alphas: Vec<f64>,
    pub thetas: Vec<PolyCoeffs>,
    pub activation: Activation,
}

impl CgpParams {
    pub fn new(alphas: Vec<f64>, thetas: Vec<PolyCoeffs>, activation: Activation) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != thetas.len() {
            return Err(invalid("need one alpha and one filter per lag"));
        }
        for (idx, t) in thetas.iter().enumerate() {
            if t.order() != idx + 1 {
                return Err(invalid("filter for lag i must have order i"));
            }
        }
        Ok(Self { alphas, thetas, activation })
    }

    pub fn ar_order(&self) -> usize {
        self.alphas.len()
    }

    /// Near-averaging start: alpha_i = 1/M, theta_{i1} = 1/M, rest zero,
    /// plus optional seeded uniform(-0.1, 0.1) jitter.
    pub fn init(m: usize, activation: Activation, jitter_seed: Option<u64>) -> Result<Self> {
        if m == 0 {
            return Err(invalid("AR order must be at least 1"));
        }
        let inv = 1.0 / m as f64;
        let alphas = vec![inv; m];
        let mut thetas = Vec::with_capacity(m);
        for i in 1..=m {
            let mut c = vec![0.0; i + 1];
            c[1] = inv;
            thetas.push(PolyCoeffs::new(c)?);
        }
        let mut params = Self::new(alphas, thetas, activation)?;
        if let Some(seed) = jitter_seed {
            let mut rng = SeededRng::new(seed);
            let mut flat = params.flatten();
            for v in &mut flat {
                *v += rng.uniform_in(-0.1, 0.1);
            }
            params.set_flat(&flat)?;
        }
        Ok(params)
    }

    /// Total learnable entries: M + M(M+3)/2.
    pub fn n_params(&self) -> usize {
        param_count(ParamCountKind::Base, self.ar_order(), 1)
    }

    /// alphas first, then filter coefficients lag by lag.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.alphas.clone();
        for t in &self.thetas {
            out.extend_from_slice(t.coeffs());
        }
        out
    }

    pub fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        if vals.len() != self.n_params() {
            return Err(invalid("flat parameter length mismatch"));
        }
        let m = self.ar_order();
        self.alphas.copy_from_slice(&vals[..m]);
        let mut pos = m;
        for t in &mut self.thetas {
            let len = t.coeffs().len();
            t.coeffs_mut().copy_from_slice(&vals[pos..pos + len]);
            pos += len;
        }
        Ok(())
    }

    pub fn max_theta_l1(&self) -> f64 {
        self.thetas.iter().map(|t| t.l1_norm()).fold(0.0, f64::max)
    }

    pub fn alpha_l1(&self) -> f64 {
        self.alphas.iter().map(|a| a.abs()).sum()
    }
}

/// Pre-activation filter outputs and diffusion states per lag, reusable by
/// the gradient pass.
pub struct ForwardCache {
    /// u_i = P(A, theta_i) x_{k-i}.
    pub pre_activation: Vec<DVector<f64>>,
    /// states[i][j] = A^j x_{k-i-1} (lag index i is 0-based).
    pub states: Vec<Vec<DVector<f64>>>,
}

fn check_window<G: GraphOp>(g: &G, m: usize, window: &DMatrix<f64>) -> Result<()> {
    if window.ncols() != m {
        return Err(invalid("window must have M columns"));
    }
    if window.nrows() != g.n_nodes() {
        return Err(invalid("window row count must match node count"));
    }
    Ok(())
}

/// One-step prediction sum_i alpha_i sigma(P(A, theta_i) x_{k-i}).
/// Window columns are oldest-first: column M-1 is x_{k-1}.
pub fn forward<G: GraphOp>(
    params: &CgpParams,
    g: &G,
    window: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    Ok(forward_with_cache(params, g, window)?.0)
}

pub fn forward_with_cache<G: GraphOp>(
    params: &CgpParams,
    g: &G,
    window: &DMatrix<f64>,
) -> Result<(DVector<f64>, ForwardCache)> {
    let m = params.ar_order();
    check_window(g, m, window)?;
    let n = g.n_nodes();
    let mut out = DVector::zeros(n);
    let mut pre = Vec::with_capacity(m);
    let mut states = Vec::with_capacity(m);
    for (idx, theta) in params.thetas.iter().enumerate() {
        let lag = idx + 1;
        let x = DVector::from_column_slice(window.column(m - lag).as_slice());
        let (u, s) = apply_poly_with_states(g, theta, &x)?;
        let alpha = params.alphas[idx];
        for r in 0..n {
            out[r] += alpha * params.activation.apply(u[r]);
        }
        pre.push(u);
        states.push(s);
    }
    Ok((out, ForwardCache { pre_activation: pre, states }))
}

/// Gradients of the base model, mirroring [`CgpParams`] shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub alphas: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.alphas.clone();
        for t in &self.thetas {
            out.extend_from_slice(t);
        }
        out
    }
}

/// Analytic gradients of <upstream, forward(params, g, window)> with respect
/// to every alpha_i and theta_{ij}.
pub fn backward<G: GraphOp>(
    params: &CgpParams,
    g: &G,
    window: &DMatrix<f64>,
    upstream: &DVector<f64>,
) -> Result<Gradients> {
    let m = params.ar_order();
    check_window(g, m, window)?;
    if upstream.len() != g.n_nodes() {
        return Err(invalid("upstream length must match node count"));
    }
    let (_, cache) = forward_with_cache(params, g, window)?;
    let mut g_alphas = Vec::with_capacity(m);
    let mut g_thetas = Vec::with_capacity(m);
    for idx in 0..m {
        let u = &cache.pre_activation[idx];
        let alpha = params.alphas[idx];
        let mut g_alpha = 0.0;
        for r in 0..u.len() {
            g_alpha += upstream[r] * params.activation.apply(u[r]);
        }
        g_alphas.push(g_alpha);
        let mut row = Vec::with_capacity(idx + 2);
        for s in &cache.states[idx] {
            let mut dot = 0.0;
            for r in 0..u.len() {
                dot += upstream[r] * params.activation.derivative(u[r]) * s[r];
            }
            row.push(alpha * dot);
        }
        g_thetas.push(row);
    }
    Ok(Gradients { alphas: g_alphas, thetas: g_thetas })
}

/// Parameters of the heat-kernel variant: alpha_i plus (scale, time) per lag.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatParams {
    pub alphas: Vec<f64>,
    pub coeffs: Vec<HeatCoeffs>,
    pub activation: Activation,
    pub dense_cap: usize,
}

impl HeatParams {
    pub fn new(alphas: Vec<f64>, coeffs: Vec<HeatCoeffs>, activation: Activation) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != coeffs.len() {
            return Err(invalid("need one alpha and one heat filter per lag"));
        }
        Ok(Self { alphas, coeffs, activation, dense_cap: DEFAULT_DENSE_CAP })
    }

    pub fn init(m: usize, activation: Activation) -> Result<Self> {
        let inv = 1.0 / m as f64;
        let alphas = vec![inv; m];
        let coeffs = vec![HeatCoeffs { scale: inv, time: 0.1 }; m];
        Self::new(alphas, coeffs, activation)
    }

    pub fn ar_order(&self) -> usize {
        self.alphas.len()
    }

    pub fn n_params(&self) -> usize {
        3 * self.ar_order()
    }

    /// alphas, then (scale, time) pairs lag by lag.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.alphas.clone();
        for c in &self.coeffs {
            out.push(c.scale);
            out.push(c.time);
        }
        out
    }

    pub fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        if vals.len() != self.n_params() {
            return Err(invalid("flat parameter length mismatch"));
        }
        let m = self.ar_order();
        self.alphas.copy_from_slice(&vals[..m]);
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            c.scale = vals[m + 2 * i];
            c.time = vals[m + 2 * i + 1];
        }
        Ok(())
    }
}

/// Heat-kernel prediction sum_i alpha_i sigma(scale_i exp(time_i A) x_{k-i}).
pub fn forward_heat(
    params: &HeatParams,
    g: &DirectedGraph,
    window: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let m = params.ar_order();
    check_window(g, m, window)?;
    let n = g.n_nodes();
    let mut out = DVector::zeros(n);
    for idx in 0..m {
        let lag = idx + 1;
        let x = DVector::from_column_slice(window.column(m - lag).as_slice());
        let u = apply_heat(g, &params.coeffs[idx], &x, params.dense_cap)?;
        let alpha = params.alphas[idx];
        for r in 0..n {
            out[r] += alpha * params.activation.apply(u[r]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiHorizonVariant {
    MlpHead,
    Adaptive,
    Shared,
}

/// Multi-horizon extensions over a base parameter set.
///
/// * `MlpHead`: rank-1 head expansion of the one-step output.
/// * `Adaptive`: per-horizon filter sets theta^(h) with shared alphas; each
///   horizon consumes the M most recent columns of history plus its own
///   earlier predictions. `base.thetas` is unused in this variant.
/// * `Shared`: the adaptive recursion with the single base filter set.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHorizonParams {
    pub variant: MultiHorizonVariant,
    pub base: CgpParams,
    pub head: Option<Vec<f64>>,
    pub per_horizon: Option<Vec<Vec<PolyCoeffs>>>,
    pub horizons: usize,
}

impl MultiHorizonParams {
    pub fn new(
        variant: MultiHorizonVariant,
        base: CgpParams,
        horizons: usize,
        head: Option<Vec<f64>>,
        per_horizon: Option<Vec<Vec<PolyCoeffs>>>,
    ) -> Result<Self> {
        if horizons == 0 {
            return Err(invalid("need at least one horizon"));
        }
        match variant {
            MultiHorizonVariant::MlpHead => {
                let head = head.as_ref().ok_or_else(|| invalid("mlp_head needs a head vector"))?;
                if head.len() != horizons {
                    return Err(invalid("head length must equal H"));
                }
                if per_horizon.is_some() {
                    return Err(invalid("mlp_head takes no per-horizon filters"));
                }
            }
            MultiHorizonVariant::Adaptive => {
                let ph = per_horizon
                    .as_ref()
                    .ok_or_else(|| invalid("adaptive needs per-horizon filters"))?;
                if ph.len() != horizons {
                    return Err(invalid("need one filter set per horizon"));
                }
                for set in ph {
                    if set.len() != base.ar_order() {
                        return Err(invalid("each horizon needs M filters"));
                    }
                    for (idx, t) in set.iter().enumerate() {
                        if t.order() != idx + 1 {
                            return Err(invalid("filter for lag i must have order i"));
                        }
                    }
                }
                if head.is_some() {
                    return Err(invalid("adaptive takes no head"));
                }
            }
            MultiHorizonVariant::Shared => {
                if head.is_some() || per_horizon.is_some() {
                    return Err(invalid("shared variant has no extra parameters"));
                }
            }
        }
        Ok(Self { variant, base, head, per_horizon, horizons })
    }

    pub fn init(
        variant: MultiHorizonVariant,
        m: usize,
        horizons: usize,
        activation: Activation,
        jitter_seed: Option<u64>,
    ) -> Result<Self> {
        let base = CgpParams::init(m, activation, jitter_seed)?;
        match variant {
            MultiHorizonVariant::MlpHead => {
                Self::new(variant, base, horizons, Some(vec![1.0; horizons]), None)
            }
            MultiHorizonVariant::Adaptive => {
                let set = base.thetas.clone();
                let ph = vec![set; horizons];
                Self::new(variant, base, horizons, None, Some(ph))
            }
            MultiHorizonVariant::Shared => Self::new(variant, base, horizons, None, None),
        }
    }

    pub fn ar_order(&self) -> usize {
        self.base.ar_order()
    }

    pub fn n_params(&self) -> usize {
        let kind = match self.variant {
            MultiHorizonVariant::MlpHead => ParamCountKind::MlpHead,
            MultiHorizonVariant::Adaptive => ParamCountKind::Adaptive,
            MultiHorizonVariant::Shared => ParamCountKind::Shared,
        };
        param_count(kind, self.ar_order(), self.horizons)
    }

    pub fn flatten(&self) -> Vec<f64> {
        match self.variant {
            MultiHorizonVariant::MlpHead => {
                let mut out = self.base.flatten();
                out.extend_from_slice(self.head.as_ref().unwrap());
                out
            }
            MultiHorizonVariant::Adaptive => {
                let mut out = self.base.alphas.clone();
                for set in self.per_horizon.as_ref().unwrap() {
                    for t in set {
                        out.extend_from_slice(t.coeffs());
                    }
                }
                out
            }
            MultiHorizonVariant::Shared => self.base.flatten(),
        }
    }

    pub fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        if vals.len() != self.n_params() {
            return Err(invalid("flat parameter length mismatch"));
        }
        match self.variant {
            MultiHorizonVariant::MlpHead => {
                let nb = self.base.n_params();
                self.base.set_flat(&vals[..nb])?;
                self.head.as_mut().unwrap().copy_from_slice(&vals[nb..]);
            }
            MultiHorizonVariant::Adaptive => {
                let m = self.ar_order();
                self.base.alphas.copy_from_slice(&vals[..m]);
                let mut pos = m;
                for set in self.per_horizon.as_mut().unwrap() {
                    for t in set {
                        let len = t.coeffs().len();
                        t.coeffs_mut().copy_from_slice(&vals[pos..pos + len]);
                        pos += len;
                    }
                }
            }
            MultiHorizonVariant::Shared => self.base.set_flat(vals)?,
        }
        Ok(())
    }
}

/// N x H multi-horizon forecast; column h-1 predicts step k+h-1.
pub fn forecast_multi<G: GraphOp>(
    params: &MultiHorizonParams,
    g: &G,
    window: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let m = params.ar_order();
    check_window(g, m, window)?;
    let n = g.n_nodes();
    let h_total = params.horizons;
    match params.variant {
        MultiHorizonVariant::MlpHead => {
            let y = forward(&params.base, g, window)?;
            let head = params.head.as_ref().unwrap();
            let act = params.base.activation;
            let mut out = DMatrix::zeros(n, h_total);
            for h in 0..h_total {
                for r in 0..n {
                    out[(r, h)] = act.apply(y[r] * head[h]);
                }
            }
            Ok(out)
        }
        MultiHorizonVariant::Adaptive | MultiHorizonVariant::Shared => {
            let mut cols: Vec<DVector<f64>> = (0..m)
                .map(|c| DVector::from_column_slice(window.column(c).as_slice()))
                .collect();
            let mut out = DMatrix::zeros(n, h_total);
            for h in 0..h_total {
                let thetas: &[PolyCoeffs] = match params.variant {
                    MultiHorizonVariant::Adaptive => &params.per_horizon.as_ref().unwrap()[h],
                    _ => &params.base.thetas,
                };
                let step = CgpParams::new(
                    params.base.alphas.clone(),
                    thetas.to_vec(),
                    params.base.activation,
                )?;
                let mut win = DMatrix::zeros(n, m);
                for (c, col) in cols[cols.len() - m..].iter().enumerate() {
                    win.set_column(c, col);
                }
                let pred = forward(&step, g, &win)?;
                out.set_column(h, &pred);
                cols.push(pred);
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamCountKind {
    Base,
    MlpHead,
    Adaptive,
    Shared,
    Heat,
}

/// Exact learnable-parameter counts per model kind.
pub fn param_count(kind: ParamCountKind, m: usize, h: usize) -> usize {
    let base = m + m * (m + 3) / 2;
    match kind {
        ParamCountKind::Base | ParamCountKind::Shared => base,
        ParamCountKind::MlpHead => base + h,
        ParamCountKind::Adaptive => m + h * (m * (m + 3) / 2),
        ParamCountKind::Heat => 3 * m,
    }
}

/// Unconstrained VAR baseline: x_k = sum_i R_i x_{k-i} with dense N x N
/// coefficient matrices (M N^2 parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct VarParams {
    pub coeffs: Vec<DMatrix<f64>>,
}

impl VarParams {
    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(invalid("need positive dimensions"));
        }
        Ok(Self { coeffs: vec![DMatrix::zeros(n, n); m] })
    }

    pub fn ar_order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn n_params(&self) -> usize {
        let n = self.n_nodes();
        self.ar_order() * n * n
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for r in &self.coeffs {
            out.extend_from_slice(r.as_slice());
        }
        out
    }

    pub fn set_flat(&mut self, vals: &[f64]) -> Result<()> {
        if vals.len() != self.n_params() {
            return Err(invalid("flat parameter length mismatch"));
        }
        let per = self.n_nodes() * self.n_nodes();
        for (i, r) in self.coeffs.iter_mut().enumerate() {
            r.copy_from_slice(&vals[i * per..(i + 1) * per]);
        }
        Ok(())
    }

    pub fn predict(&self, window: &DMatrix<f64>) -> Result<DVector<f64>> {
        let m = self.ar_order();
        if window.ncols() != m || window.nrows() != self.n_nodes() {
            return Err(invalid("window shape mismatch"));
        }
        let mut out = DVector::zeros(self.n_nodes());
        for (idx, r) in self.coeffs.iter().enumerate() {
            let lag = idx + 1;
            let x = window.column(m - lag);
            out += r * x;
        }
        Ok(out)
    }
}
