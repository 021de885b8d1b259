//! Directed weighted graphs: CSR storage, random generators, sensor-distance
//! construction, Gaussian perturbation, and spectral quantities.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::rng::SeededRng;

/// Anything that can act as a (possibly dense) adjacency operator.
pub trait GraphOp {
    fn n_nodes(&self) -> usize;
    /// y = A x with A[i][j] the weight of edge i -> j.
    fn matvec(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// Sparse directed weighted graph in compressed-row form, A[src][dst] = w.
/// No self-loops, no duplicate edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n_nodes: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
}

impl DirectedGraph {
    /// Build from an edge list `(src, dst, weight)`. Rejects self-loops,
    /// duplicates, out-of-range indices, and non-finite weights.
    pub fn from_edges(n_nodes: usize, mut edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(invalid("graph must have at least one node"));
        }
        for &(s, d, w) in &edges {
            if s >= n_nodes || d >= n_nodes {
                return Err(invalid(format!("edge ({s},{d}) out of range for n={n_nodes}")));
            }
            if s == d {
                return Err(invalid(format!("self-loop on node {s}")));
            }
            if !w.is_finite() {
                return Err(invalid(format!("non-finite weight on edge ({s},{d})")));
            }
        }
        edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if edges.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(invalid("duplicate edge"));
        }
        let mut row_ptr = vec![0usize; n_nodes + 1];
        let mut col_idx = Vec::with_capacity(edges.len());
        let mut weights = Vec::with_capacity(edges.len());
        for &(s, d, w) in &edges {
            row_ptr[s + 1] += 1;
            col_idx.push(d);
            weights.push(w);
        }
        for i in 0..n_nodes {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n_nodes, row_ptr, col_idx, weights })
    }

    pub fn n_edges(&self) -> usize {
        self.col_idx.len()
    }

    /// Edges in (src, dst, weight) order, sorted by (src, dst).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nodes).flat_map(move |s| {
            (self.row_ptr[s]..self.row_ptr[s + 1])
                .map(move |k| (s, self.col_idx[k], self.weights[k]))
        })
    }

    /// y = A^T x.
    pub fn matvec_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n_nodes);
        for s in 0..self.n_nodes {
            let xs = x[s];
            if xs != 0.0 {
                for k in self.row_ptr[s]..self.row_ptr[s + 1] {
                    y[self.col_idx[k]] += self.weights[k] * xs;
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_nodes, self.n_nodes);
        for (s, d, w) in self.edges() {
            a[(s, d)] = w;
        }
        a
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.weights.iter().map(|w| w * w).sum())
    }
}

impl GraphOp for DirectedGraph {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n_nodes);
        for s in 0..self.n_nodes {
            let mut acc = 0.0;
            for k in self.row_ptr[s]..self.row_ptr[s + 1] {
                acc += self.weights[k] * x[self.col_idx[k]];
            }
            y[s] = acc;
        }
        y
    }
}

impl GraphOp for DMatrix<f64> {
    fn n_nodes(&self) -> usize {
        self.nrows()
    }

    fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
}

/// Draws an edge weight from U(0.1, 0.3) or U(-0.3, -0.1) with equal odds.
fn sample_weight(rng: &mut SeededRng) -> f64 {
    let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
    sign * rng.uniform_in(0.1, 0.3)
}

/// Directed Erdos-Renyi graph: each ordered pair (i, j), i != j, carries an
/// edge independently with probability `p`.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p must lie in [0, 1]"));
    }
    let mut rng = SeededRng::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.bernoulli(p) {
                edges.push((i, j, sample_weight(&mut rng)));
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}

/// Directed stochastic block model with near-equal communities: intra-block
/// probability `p_in`, inter-block `p_out`. Node i belongs to block
/// floor(i * communities / n).
pub fn gen_sbm(n: usize, communities: usize, p_in: f64, p_out: f64, seed: u64) -> Result<DirectedGraph> {
    if n == 0 || communities == 0 {
        return Err(invalid("n and communities must be positive"));
    }
    if communities > n {
        return Err(invalid("more communities than nodes"));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) {
        return Err(invalid("probabilities must lie in [0, 1]"));
    }
    let block = |i: usize| i * communities / n;
    let mut rng = SeededRng::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = if block(i) == block(j) { p_in } else { p_out };
            if rng.bernoulli(p) {
                edges.push((i, j, sample_weight(&mut rng)));
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}

/// Sensor graph from pairwise distances: w_ij = exp(-d_ij^2 / width^2) kept
/// when strictly above `threshold`. Output is symmetric as a digraph.
pub fn graph_from_distances(
    distances: &DMatrix<f64>,
    kernel_width: f64,
    threshold: f64,
) -> Result<DirectedGraph> {
    let n = distances.nrows();
    if distances.ncols() != n || n == 0 {
        return Err(invalid("distance matrix must be square and non-empty"));
    }
    if kernel_width <= 0.0 {
        return Err(invalid("kernel_width must be positive"));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(invalid("threshold must lie in [0, 1)"));
    }
    for i in 0..n {
        if distances[(i, i)] != 0.0 {
            return Err(invalid("distance matrix diagonal must be zero"));
        }
        for j in 0..n {
            let d = distances[(i, j)];
            if !d.is_finite() {
                return Err(invalid("non-finite distance"));
            }
            if (d - distances[(j, i)]).abs() > 1e-12 * (1.0 + d.abs()) {
                return Err(invalid("distance matrix must be symmetric"));
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = distances[(i, j)];
            let w = libm::exp(-(d * d) / (kernel_width * kernel_width));
            if w > threshold {
                edges.push((i, j, w));
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}

/// Default kernel width: standard deviation of the off-diagonal distances.
pub fn default_kernel_width(distances: &DMatrix<f64>) -> f64 {
    let n = distances.nrows();
    let mut vals = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                vals.push(distances[(i, j)]);
            }
        }
    }
    if vals.is_empty() {
        return 1.0;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
    let std = libm::sqrt(var);
    if std > 0.0 {
        std
    } else {
        1.0
    }
}

pub const DEFAULT_DISTANCE_THRESHOLD: f64 = 0.1;

/// A graph together with a dense Gaussian perturbation of its adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedGraph {
    base: DirectedGraph,
    perturbation: DMatrix<f64>,
    snr_db: f64,
}

impl PerturbedGraph {
    pub fn base(&self) -> &DirectedGraph {
        &self.base
    }

    /// The dense error matrix E.
    pub fn perturbation(&self) -> &DMatrix<f64> {
        &self.perturbation
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// A-hat = A + E, dense.
    pub fn perturbed_adjacency(&self) -> DMatrix<f64> {
        self.base.to_dense() + &self.perturbation
    }
}

/// Perturb `g` with an i.i.d. standard-normal matrix rescaled so that
/// 20 log10(|A|_F / |E|_F) equals `snr_db` exactly.
pub fn perturb(g: &DirectedGraph, snr_db: f64, seed: u64) -> Result<PerturbedGraph> {
    if g.n_edges() == 0 {
        return Err(invalid("cannot perturb an empty graph"));
    }
    let n = g.n_nodes();
    let mut rng = SeededRng::new(seed);
    // Row-major draw order fixes the byte stream per seed.
    let mut e = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] = rng.normal();
        }
    }
    let raw_norm = e.norm();
    let target = g.frobenius_norm() * libm::pow(10.0, -snr_db / 20.0);
    let scale = if raw_norm > 0.0 { target / raw_norm } else { 0.0 };
    e *= scale;
    Ok(PerturbedGraph { base: g.clone(), perturbation: e, snr_db })
}

impl GraphOp for PerturbedGraph {
    fn n_nodes(&self) -> usize {
        self.base.n_nodes()
    }

    fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        self.base.matvec(x) + &self.perturbation * x
    }
}

/// Result of a power-iteration spectral-norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

const SPECTRAL_MAX_ITER: usize = 10_000;

/// Largest singular value via power iteration on M^T M applied as two
/// mat-vecs per step. `apply`/`apply_t` must realize M and M^T.
fn spectral_norm_op(
    n: usize,
    tol: f64,
    apply: &mut dyn FnMut(&DVector<f64>) -> DVector<f64>,
    apply_t: &mut dyn FnMut(&DVector<f64>) -> DVector<f64>,
) -> SpectralNorm {
    // Deterministic pseudo-random start avoids accidental orthogonality to
    // the leading singular vector.
    let mut start_rng = SeededRng::new(0x5eed_u64);
    let mut v = DVector::from_fn(n, |_, _| start_rng.normal());
    let norm = v.norm();
    if norm == 0.0 {
        return SpectralNorm { value: 0.0, converged: true, iterations: 0 };
    }
    v /= norm;
    let mut sigma = 0.0;
    for it in 1..=SPECTRAL_MAX_ITER {
        let y = apply(&v);
        let sigma_new = y.norm();
        if sigma_new == 0.0 {
            return SpectralNorm { value: 0.0, converged: true, iterations: it };
        }
        let mut z = apply_t(&y);
        let zn = z.norm();
        if zn == 0.0 {
            return SpectralNorm { value: sigma_new, converged: true, iterations: it };
        }
        z /= zn;
        let delta = (sigma_new - sigma).abs();
        v = z;
        sigma = sigma_new;
        if it > 1 && delta <= tol * sigma.max(1e-300) {
            return SpectralNorm { value: sigma, converged: true, iterations: it };
        }
    }
    SpectralNorm { value: sigma, converged: false, iterations: SPECTRAL_MAX_ITER }
}

/// Spectral norm of a dense square matrix to relative tolerance `tol`.
pub fn spectral_norm(m: &DMatrix<f64>, tol: f64) -> Result<SpectralNorm> {
    if m.nrows() != m.ncols() {
        return Err(invalid("matrix must be square"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let mt = m.transpose();
    Ok(spectral_norm_op(
        m.nrows(),
        tol,
        &mut |x| m * x,
        &mut |y| &mt * y,
    ))
}

/// ||A^i||_2 for i = 1..=m. Dense matrix powers when N <= `dense_cap`;
/// otherwise matrix-free power iteration on the implicit operator when
/// `implicit_ok`.
pub fn power_norms(
    g: &DirectedGraph,
    m: usize,
    dense_cap: usize,
    implicit_ok: bool,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("AR order must be at least 1"));
    }
    let n = g.n_nodes();
    let tol = 1e-12;
    if n <= dense_cap {
        let a = g.to_dense();
        let mut power = DMatrix::identity(n, n);
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            power = &power * &a;
            out.push(spectral_norm(&power, tol)?.value);
        }
        Ok(out)
    } else if implicit_ok {
        let mut out = Vec::with_capacity(m);
        for i in 1..=m {
            let est = spectral_norm_op(
                n,
                tol,
                &mut |x| {
                    let mut y = x.clone();
                    for _ in 0..i {
                        y = g.matvec(&y);
                    }
                    y
                },
                &mut |x| {
                    let mut y = x.clone();
                    for _ in 0..i {
                        y = g.matvec_transpose(&y);
                    }
                    y
                },
            );
            out.push(est.value);
        }
        Ok(out)
    } else {
        Err(Error::ResourceLimit(alloc::format!(
            "n={n} exceeds dense cap {dense_cap} and implicit mode is disabled"
        )))
    }
}
