//! Forecast metrics, naive baselines, and machine-checkable stability bounds
//! for polynomial and heat-kernel graph filters.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::series::TimeSeries;

/// Inputs to the polynomial-filter bounds: L is the largest power spectral
/// norm, the deltas are perturbation radii, and the rhos are parameter-norm
/// bounds.
///
/// L must dominate |A^i|_2 for every power a filter touches, including the
/// zeroth (|A^0|_2 = 1), so use L = max(1, max_i |A^i|_2). With L taken only
/// over i >= 1 the bounds can be violated by the constant filter term on
/// contractive graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub l: f64,
    pub delta_a: f64,
    pub rho_theta: f64,
    pub delta_theta: f64,
    pub rho_alpha: f64,
    pub delta_alpha: f64,
    pub m: usize,
    pub x_norm: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.l,
            self.delta_a,
            self.rho_theta,
            self.delta_theta,
            self.rho_alpha,
            self.delta_alpha,
            self.x_norm,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("bound inputs must be finite and non-negative"));
        }
        if self.m == 0 {
            return Err(invalid("M must be at least 1"));
        }
        Ok(())
    }
}

/// Inputs to the heat-kernel bounds. `spectral_abscissa` is max Re(lambda(A));
/// `log_norm` is the largest eigenvalue of (A + A^T)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatBoundInputs {
    pub spectral_abscissa: f64,
    pub log_norm: f64,
    pub norm_a: f64,
    pub delta_a: f64,
    pub rho_alpha: f64,
    pub rho_theta: f64,
    pub rho_t: f64,
    pub m: usize,
    pub x_norm: f64,
}

impl HeatBoundInputs {
    /// Derives the spectral quantities of `a` with dense eigensolvers.
    /// Errors above `dense_cap`.
    pub fn from_adjacency(
        a: &DMatrix<f64>,
        delta_a: f64,
        rho_alpha: f64,
        rho_theta: f64,
        rho_t: f64,
        m: usize,
        x_norm: f64,
        dense_cap: usize,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(invalid("adjacency must be square and non-empty"));
        }
        if n > dense_cap {
            return Err(Error::ResourceLimit(alloc::format!("n={n} exceeds dense cap {dense_cap}")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("adjacency has non-finite entries"));
        }
        let spectral_abscissa = a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let sym = (a + a.transpose()) * 0.5;
        let log_norm = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let norm_a = crate::graph::spectral_norm(a, 1e-12)?.value;
        let out = Self {
            spectral_abscissa,
            log_norm,
            norm_a,
            delta_a,
            rho_alpha,
            rho_theta,
            rho_t,
            m,
            x_norm,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("M must be at least 1"));
        }
        let fields = [self.norm_a, self.delta_a, self.rho_alpha, self.rho_theta, self.rho_t, self.x_norm];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("heat bound inputs must be finite and non-negative"));
        }
        // The log norm dominates the spectral abscissa for any real matrix;
        // allow numerical slack.
        if self.log_norm < self.spectral_abscissa - 1e-9 * (1.0 + self.spectral_abscissa.abs()) {
            return Err(invalid("log norm must dominate the spectral abscissa"));
        }
        Ok(())
    }
}

/// hat_L_M(delta) = max_{1<=i<=M} ((L+delta)^i - L^i) / delta, with the
/// delta -> 0 limit max_i i L^(i-1).
pub fn hat_l(l: f64, delta: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(invalid("M must be at least 1"));
    }
    if !l.is_finite() || l < 0.0 || !delta.is_finite() || delta < 0.0 {
        return Err(invalid("L and delta must be finite and non-negative"));
    }
    let mut best = f64::NEG_INFINITY;
    for i in 1..=m {
        let v = if delta > 0.0 {
            (libm::pow(l + delta, i as f64) - libm::pow(l, i as f64)) / delta
        } else {
            i as f64 * libm::pow(l, (i - 1) as f64)
        };
        best = best.max(v);
    }
    Ok(best)
}

/// Norm bound on the perturbed filter:
/// (rho_theta + delta_theta)(L + delta_A hat_L).
pub fn bound_filter_norm(b: &BoundInputs, rho_theta_i: f64, delta_theta_i: f64) -> Result<f64> {
    b.validate()?;
    if rho_theta_i < 0.0 || delta_theta_i < 0.0 {
        return Err(invalid("per-lag norms must be non-negative"));
    }
    let hl = hat_l(b.l, b.delta_a, b.m)?;
    Ok((rho_theta_i + delta_theta_i) * (b.l + b.delta_a * hl))
}

/// Stability bound on the filter difference:
/// rho_theta delta_A hat_L + delta_theta (L + delta_A hat_L).
pub fn bound_filter_stability(b: &BoundInputs, rho_theta_i: f64, delta_theta_i: f64) -> Result<f64> {
    b.validate()?;
    if rho_theta_i < 0.0 || delta_theta_i < 0.0 {
        return Err(invalid("per-lag norms must be non-negative"));
    }
    let hl = hat_l(b.l, b.delta_a, b.m)?;
    Ok(rho_theta_i * b.delta_a * hl + delta_theta_i * (b.l + b.delta_a * hl))
}

/// End-to-end prediction stability bound:
/// rho_alpha (filter stability) |X| + delta_alpha (filter norm) |X|.
pub fn bound_prediction(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let stability = bound_filter_stability(b, b.rho_theta, b.delta_theta)?;
    let norm = bound_filter_norm(b, b.rho_theta, b.delta_theta)?;
    Ok(b.rho_alpha * stability * b.x_norm + b.delta_alpha * norm * b.x_norm)
}

/// Per-filter heat-kernel perturbation bound:
/// t |E| exp((mu(A) - alpha(A) + |A| + |E|) t).
pub fn bound_heat_kernel(hb: &HeatBoundInputs, t: f64) -> Result<f64> {
    hb.validate()?;
    if !t.is_finite() || t < 0.0 {
        return Err(invalid("t must be finite and non-negative"));
    }
    let exponent =
        (hb.log_norm - hb.spectral_abscissa + hb.norm_a + hb.delta_a) * t;
    Ok(t * hb.delta_a * libm::exp(exponent))
}

/// Heat-model prediction stability bound:
/// M rho_alpha rho_theta rho_t delta_A exp((mu - alpha + |A| + delta_A) rho_t) |X|.
pub fn bound_heat(hb: &HeatBoundInputs) -> Result<f64> {
    hb.validate()?;
    let exponent =
        (hb.log_norm - hb.spectral_abscissa + hb.norm_a + hb.delta_a) * hb.rho_t;
    Ok(hb.m as f64
        * hb.rho_alpha
        * hb.rho_theta
        * hb.rho_t
        * hb.delta_a
        * libm::exp(exponent)
        * hb.x_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedNormKind {
    /// Sum of column 2-norms (default).
    SumColumns,
    /// Max of column 2-norms (tighter alternative; still dominates every
    /// column).
    MaxColumns,
}

/// Mixed l_{1,2}-style norm of the observation matrix.
pub fn mixed_norm(x: &TimeSeries, kind: MixedNormKind) -> f64 {
    let data = x.data();
    match kind {
        MixedNormKind::SumColumns => (0..data.ncols()).map(|k| data.column(k).norm()).sum(),
        MixedNormKind::MaxColumns => {
            (0..data.ncols()).map(|k| data.column(k).norm()).fold(0.0, f64::max)
        }
    }
}

/// Test-set forecast metrics. The relative variants are norm ratios — rmse
/// is the 2-norm of the error over the 2-norm of the target, rmae the
/// 1-norm analogue — so the zero predictor scores exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub rmae: f64,
    /// Raw-division MAPE; zero-target entries are excluded from the mean.
    pub mape: f64,
}

pub fn metrics(pred: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<MetricsReport> {
    if pred.shape() != target.shape() {
        return Err(invalid("prediction/target shape mismatch"));
    }
    let count = (pred.nrows() * pred.ncols()) as f64;
    if count == 0.0 {
        return Err(invalid("empty matrices"));
    }
    let mut sq_err = 0.0;
    let mut abs_err = 0.0;
    let mut sq_tgt = 0.0;
    let mut abs_tgt = 0.0;
    let mut mape_sum = 0.0;
    let mut mape_count = 0usize;
    for (p, t) in pred.iter().zip(target.iter()) {
        let d = p - t;
        sq_err += d * d;
        abs_err += d.abs();
        sq_tgt += t * t;
        abs_tgt += t.abs();
        if *t != 0.0 {
            mape_sum += (d / t).abs();
            mape_count += 1;
        }
    }
    Ok(MetricsReport {
        mse: sq_err / count,
        rmse: if sq_tgt > 0.0 { libm::sqrt(sq_err / sq_tgt) } else { f64::NAN },
        mae: abs_err / count,
        rmae: if abs_tgt > 0.0 { abs_err / abs_tgt } else { f64::NAN },
        mape: if mape_count > 0 { mape_sum / mape_count as f64 } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Avg,
    Last,
}

/// Naive one-step forecast from a window: per-node mean or the last column.
pub fn baseline_forecast(window: &DMatrix<f64>, kind: BaselineKind) -> Result<DVector<f64>> {
    let m = window.ncols();
    if m == 0 || window.nrows() == 0 {
        return Err(invalid("window must be non-empty"));
    }
    Ok(match kind {
        BaselineKind::Avg => {
            let mut out = DVector::zeros(window.nrows());
            for c in 0..m {
                out += window.column(c);
            }
            out / m as f64
        }
        BaselineKind::Last => DVector::from_column_slice(window.column(m - 1).as_slice()),
    })
}
