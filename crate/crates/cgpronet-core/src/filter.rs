//! Polynomial graph filters by recursive diffusion and continuous heat-kernel
//! filters by matrix exponential.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::graph::{DirectedGraph, GraphOp};

/// Coefficients of the polynomial filter sum_j theta[j] A^j.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("polynomial needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite filter coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

/// Heat-kernel filter scale * exp(time * A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCoeffs {
    pub scale: f64,
    pub time: f64,
}

impl HeatCoeffs {
    pub fn new(scale: f64, time: f64) -> Result<Self> {
        if !scale.is_finite() || !time.is_finite() {
            return Err(invalid("non-finite heat coefficient"));
        }
        Ok(Self { scale, time })
    }
}

/// sum_j theta[j] A^j x by the diffusion recursion s_0 = x, s_j = A s_{j-1}.
/// Never materializes A^j.
pub fn apply_poly<G: GraphOp>(g: &G, c: &PolyCoeffs, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != g.n_nodes() {
        return Err(invalid("signal length does not match node count"));
    }
    let coeffs = c.coeffs();
    let mut acc = x * coeffs[0];
    let mut state = x.clone();
    for &theta in &coeffs[1..] {
        state = g.matvec(&state);
        acc.axpy(theta, &state, 1.0);
    }
    Ok(acc)
}

/// Like [`apply_poly`] but also returns the diffusion states s_j = A^j x for
/// j = 0..=order, so gradients can reuse them.
pub fn apply_poly_with_states<G: GraphOp>(
    g: &G,
    c: &PolyCoeffs,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
    if x.len() != g.n_nodes() {
        return Err(invalid("signal length does not match node count"));
    }
    let coeffs = c.coeffs();
    let mut states = Vec::with_capacity(coeffs.len());
    states.push(x.clone());
    for _ in 1..coeffs.len() {
        let next = g.matvec(states.last().unwrap());
        states.push(next);
    }
    let mut acc = DVector::zeros(x.len());
    for (theta, s) in coeffs.iter().zip(&states) {
        acc.axpy(*theta, s, 1.0);
    }
    Ok((acc, states))
}

/// Test/verification oracle: materializes the dense powers A^j and evaluates
/// the same polynomial.
pub fn apply_poly_dense_oracle(
    g: &DirectedGraph,
    c: &PolyCoeffs,
    x: &DVector<f64>,
    dense_cap: usize,
) -> Result<DVector<f64>> {
    let n = g.n_nodes();
    if n > dense_cap {
        return Err(Error::ResourceLimit(alloc::format!("n={n} exceeds dense cap {dense_cap}")));
    }
    if x.len() != n {
        return Err(invalid("signal length does not match node count"));
    }
    let a = g.to_dense();
    let mut power = DMatrix::identity(n, n);
    let mut filter = DMatrix::zeros(n, n);
    for (j, &theta) in c.coeffs().iter().enumerate() {
        if j > 0 {
            power = &power * &a;
        }
        filter += &power * theta;
    }
    Ok(&filter * x)
}

// Numerator coefficients of the [13/13] Pade approximant to exp.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const PADE13_THETA: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// e^M by scaling-and-squaring with the degree-13 Pade approximant.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(invalid("matrix must be square"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    let s = if norm > PADE13_THETA {
        libm::ceil(libm::log2(norm / PADE13_THETA)) as i32
    } else {
        0
    };
    let a = m / libm::pow(2.0, s as f64);
    let b = &PADE13;
    let identity = DMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &identity * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &identity * b[0];
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal(alloc::string::String::from("singular Pade denominator")))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// scale * exp(time * A) x, with A densified. Errors above `dense_cap`.
pub fn apply_heat(
    g: &DirectedGraph,
    c: &HeatCoeffs,
    x: &DVector<f64>,
    dense_cap: usize,
) -> Result<DVector<f64>> {
    let n = g.n_nodes();
    if n > dense_cap {
        return Err(Error::ResourceLimit(alloc::format!("n={n} exceeds dense cap {dense_cap}")));
    }
    if x.len() != n {
        return Err(invalid("signal length does not match node count"));
    }
    if c.scale == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let kernel = matrix_exponential(&(g.to_dense() * c.time))?;
    Ok(&kernel * x * c.scale)
}

/// Cache of exp(t A) kernels for one fixed adjacency. Entries are reused when
/// `t` matches within `tol`; otherwise the stale entry is replaced. Exclusive
/// access (`&mut`) covers the single-writer contract.
pub struct HeatKernelCache {
    adjacency: DMatrix<f64>,
    tol: f64,
    entries: Vec<(f64, DMatrix<f64>)>,
}

impl HeatKernelCache {
    pub fn new(g: &DirectedGraph, tol: f64) -> Self {
        Self { adjacency: g.to_dense(), tol, entries: Vec::new() }
    }

    pub fn kernel(&mut self, time: f64) -> Result<&DMatrix<f64>> {
        if let Some(idx) = self.entries.iter().position(|(t, _)| (t - time).abs() <= self.tol) {
            return Ok(&self.entries[idx].1);
        }
        let k = matrix_exponential(&(&self.adjacency * time))?;
        self.entries.push((time, k));
        Ok(&self.entries.last().unwrap().1)
    }

    pub fn apply(&mut self, c: &HeatCoeffs, x: &DVector<f64>) -> Result<DVector<f64>> {
        if c.scale == 0.0 {
            return Ok(DVector::zeros(self.adjacency.nrows()));
        }
        let k = self.kernel(c.time)?;
        Ok(k * x * c.scale)
    }
}
