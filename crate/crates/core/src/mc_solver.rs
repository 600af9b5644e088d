//! Nuclear-norm matrix completion by Singular Value Thresholding.
//!
//! SVT iterates
//!
//! ```text
//! X_k = shrink(Y_{k−1}, τ)
//! Y_k = Y_{k−1} + δ·P_Ω(M − X_k)
//! ```
//!
//! which converges to the minimizer of `τ‖X‖_* + ½‖X‖_F²` subject to the
//! observed entries. For large `τ` this approaches the minimum nuclear norm
//! completion. `Y` is supported on Ω throughout.

use nalgebra::DMatrix;

use crate::error::{param_err, Error, Result};
use crate::linalg::{svd, svd_warm, warm_basis, Svd};
use crate::pipeline::ReadingsMatrix;

/// A `rows×cols` matrix with values known only on Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteMatrix {
    rows: usize,
    cols: usize,
    // Sorted by (row, col); no duplicates.
    entries: Vec<(usize, usize, f64)>,
}

impl IncompleteMatrix {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return param_err(format!("duplicate observation at ({}, {})", w[0].0, w[0].1));
            }
        }
        for &(i, j, v) in &entries {
            if i >= rows || j >= cols {
                return param_err(format!("observation ({i}, {j}) outside {rows}x{cols}"));
            }
            if !v.is_finite() {
                return Err(Error::Numerical(format!("observation ({i}, {j}) is not finite")));
            }
        }
        Ok(IncompleteMatrix { rows, cols, entries })
    }

    /// Observes every entry of `m` at the positions in `omega`.
    pub fn from_dense(m: &DMatrix<f64>, omega: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let (rows, cols) = m.shape();
        let mut entries = Vec::new();
        for (i, j) in omega {
            if i >= rows || j >= cols {
                return param_err(format!("observation ({i}, {j}) outside {rows}x{cols}"));
            }
            entries.push((i, j, m[(i, j)]));
        }
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn observed_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.entries.binary_search_by_key(&(i, j), |&(a, b, _)| (a, b)).is_ok()
    }

    /// Frobenius norm of the observed values.
    pub fn observed_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    /// Zero-filled dense form.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
        }
        m
    }

    /// Relative residual `‖P_Ω(X − M)‖_F / ‖P_Ω M‖_F`.
    pub fn relative_residual(&self, x: &DMatrix<f64>) -> f64 {
        let res: f64 = self.entries.iter().map(|&(i, j, v)| (x[(i, j)] - v).powi(2)).sum::<f64>().sqrt();
        let norm = self.observed_norm();
        if norm == 0.0 {
            res
        } else {
            res / norm
        }
    }
}

/// SVT settings. `None` picks the standard data-dependent default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionConfig {
    /// Threshold; defaults to `5·√(rows·cols)`.
    pub tau: Option<f64>,
    /// Step; defaults to `1.2·rows·cols/|Ω|`.
    pub delta: Option<f64>,
    /// Stop once the relative residual on Ω is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Replace the equality constraints by `‖P_Ω(X − M)‖_F ≤ r·‖P_Ω M‖_F`.
    pub noise_radius_rel: Option<f64>,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig { tau: None, delta: None, tol: 1e-4, max_iter: 2000, noise_radius_rel: None }
    }
}

impl CompletionConfig {
    pub fn tau_for(&self, rows: usize, cols: usize) -> f64 {
        self.tau.unwrap_or(5.0 * ((rows * cols) as f64).sqrt())
    }

    pub fn delta_for(&self, rows: usize, cols: usize, observed: usize) -> f64 {
        self.delta.unwrap_or(1.2 * (rows * cols) as f64 / observed.max(1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionReport {
    pub iterations: usize,
    /// Singular values of the final iterate above the threshold.
    pub rank: usize,
    /// Relative Frobenius residual over Ω.
    pub residual: f64,
    pub converged: bool,
}

fn shrink_from(svd: &Svd, tau: f64, shape: (usize, usize)) -> (DMatrix<f64>, usize) {
    let kept: Vec<usize> = (0..svd.s.len()).filter(|&k| svd.s[k] > tau).collect();
    let mut x = DMatrix::zeros(shape.0, shape.1);
    if kept.is_empty() {
        return (x, 0);
    }
    let mut us = DMatrix::zeros(shape.0, kept.len());
    let mut vs = DMatrix::zeros(shape.1, kept.len());
    for (c, &k) in kept.iter().enumerate() {
        us.column_mut(c).copy_from(&(svd.u.column(k) * (svd.s[k] - tau)));
        vs.column_mut(c).copy_from(&svd.v.column(k));
    }
    x.gemm(1.0, &us, &vs.transpose(), 0.0);
    (x, kept.len())
}

/// Soft-thresholds the singular values of `m` by `tau`.
pub fn svd_shrink(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return param_err("shrink threshold must be non-negative");
    }
    Ok(shrink_from(&svd(m)?, tau, m.shape()).0)
}

/// `‖X − X₁‖_F / ‖X‖_F` where `X₁` is the best rank-1 approximation.
pub fn rank1_approx_ratio(x: &DMatrix<f64>) -> Result<f64> {
    let s = svd(x)?.s;
    let total: f64 = s.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Err(Error::Numerical("rank-1 ratio of a zero matrix is undefined".into()));
    }
    let tail: f64 = s.iter().skip(1).map(|v| v * v).sum();
    Ok((tail / total).sqrt())
}

/// Completes `observed` by SVT.
pub fn svt_complete(observed: &IncompleteMatrix, config: &CompletionConfig) -> Result<(ReadingsMatrix, CompletionReport)> {
    let (rows, cols) = (observed.rows, observed.cols);
    let m = observed.observed_count();
    if m == 0 {
        return param_err("matrix completion needs at least one observed entry");
    }
    let tau = config.tau_for(rows, cols);
    let delta = config.delta_for(rows, cols, m);
    if !(tau > 0.0 && delta > 0.0) || config.max_iter == 0 {
        return param_err("need tau > 0, delta > 0 and max_iter >= 1");
    }
    let obs_norm = observed.observed_norm();
    if obs_norm == 0.0 {
        let zero = DMatrix::zeros(rows, cols);
        return Ok((
            ReadingsMatrix::new(zero)?,
            CompletionReport { iterations: 0, rank: 0, residual: 0.0, converged: true },
        ));
    }

    let pm = observed.to_dense();
    let spectral = svd(&pm)?.s[0];
    // Skip the leading iterations that would return the zero matrix.
    let k0 = (tau / (delta * spectral)).ceil().max(1.0);
    let mut y = pm * (k0 * delta);

    let radius = config.noise_radius_rel.map(|r| r * obs_norm);
    let mut slack = radius.map(|_| 0.0);

    let mut basis: Option<DMatrix<f64>> = None;
    let mut prev_x: Option<DMatrix<f64>> = None;
    let mut report = CompletionReport { iterations: 0, rank: 0, residual: f64::INFINITY, converged: false };
    let mut x = DMatrix::zeros(rows, cols);
    for k in 1..=config.max_iter {
        let dec = svd_warm(&y, basis.as_ref())?;
        let (xk, rank) = shrink_from(&dec, tau, (rows, cols));
        basis = Some(warm_basis(&dec, (rows, cols)).clone());
        x = xk;

        let residual = observed.relative_residual(&x);
        report = CompletionReport { iterations: k, rank, residual, converged: false };
        let done = match config.noise_radius_rel {
            None => residual <= config.tol,
            Some(r) => {
                let step = prev_x.as_ref().map_or(f64::INFINITY, |p| (&x - p).norm() / x.norm().max(f64::MIN_POSITIVE));
                residual <= r + config.tol && step <= config.tol
            }
        };
        if done {
            report.converged = true;
            break;
        }

        match (radius, slack.as_mut()) {
            (Some(eps), Some(s)) => {
                // Step on (y, s), then project onto the cone ‖y‖ ≤ s.
                let mut yv: Vec<f64> = observed.entries.iter().map(|&(i, j, v)| y[(i, j)] + delta * (v - x[(i, j)])).collect();
                let mut sv = *s - delta * eps;
                let norm = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm <= -sv {
                    yv.iter_mut().for_each(|v| *v = 0.0);
                    sv = 0.0;
                } else if norm > sv {
                    let f = (norm + sv) / (2.0 * norm);
                    yv.iter_mut().for_each(|v| *v *= f);
                    sv = f * norm;
                }
                *s = sv;
                for (&(i, j, _), v) in observed.entries.iter().zip(yv) {
                    y[(i, j)] = v;
                }
                prev_x = Some(x.clone());
            }
            _ => {
                for &(i, j, v) in &observed.entries {
                    y[(i, j)] += delta * (v - x[(i, j)]);
                }
            }
        }
    }
    Ok((ReadingsMatrix::new(x)?, report))
}
