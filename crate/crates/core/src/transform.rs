//! Sparsifying bases for partial traces: orthonormal DCT-II and a multi-level
//! CDF 9/7 wavelet built from lifting steps.
//!
//! Wavelet coefficient layout for `L` levels on a length-`n` signal is the
//! usual Mallat order: the coarsest approximation band first, then the detail
//! bands from coarsest to finest,
//!
//! ```text
//! [ a_L | d_L | d_{L-1} | ... | d_1 ]
//! ```
//!
//! where level `l` splits a band of length `m` into `ceil(m/2)` approximation
//! and `floor(m/2)` detail coefficients. Boundaries use whole-sample
//! symmetric extension, so any length is perfectly reconstructed. Bands are
//! scaled so the approximation has DC gain `√2`, which keeps the transform
//! close to orthonormal.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{param_err, Error, Result};

/// Depth used when none is given, as in the six-level analysis of the Intel traces.
pub const DEFAULT_WAVELET_LEVELS: usize = 6;

/// Smallest approximation band a decomposition is allowed to produce.
pub const MIN_COARSE_LEN: usize = 4;

const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
const KAPPA: f64 = 1.230_174_104_914_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Dct,
    Wavelet97,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Dct => "dct",
            TransformKind::Wavelet97 => "w97",
        })
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dct" => Ok(TransformKind::Dct),
            "w97" | "wavelet97" | "cdf97" => Ok(TransformKind::Wavelet97),
            other => param_err(format!("unknown basis '{other}' (expected dct or w97)")),
        }
    }
}

/// An invertible length-`n` transform.
#[derive(Debug, Clone)]
pub struct TransformBasis {
    kind: TransformKind,
    length: usize,
    levels: usize,
    // Row-major n×n table of orthonormal DCT-II analysis rows.
    dct_table: Vec<f64>,
}

impl TransformBasis {
    pub fn new(kind: TransformKind, length: usize) -> Result<Self> {
        match kind {
            TransformKind::Dct => Self::dct(length),
            TransformKind::Wavelet97 => Self::wavelet97(length, DEFAULT_WAVELET_LEVELS),
        }
    }

    pub fn dct(length: usize) -> Result<Self> {
        if length == 0 {
            return param_err("transform length must be positive");
        }
        let n = length as f64;
        let mut table = Vec::with_capacity(length * length);
        for k in 0..length {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for t in 0..length {
                table.push(scale * (PI * (2 * t + 1) as f64 * k as f64 / (2.0 * n)).cos());
            }
        }
        Ok(TransformBasis { kind: TransformKind::Dct, length, levels: 0, dct_table: table })
    }

    /// A 9/7 wavelet with at most `levels` decomposition levels. Depth is
    /// reduced as needed so the coarsest band keeps at least
    /// [`MIN_COARSE_LEN`] samples.
    pub fn wavelet97(length: usize, levels: usize) -> Result<Self> {
        if length == 0 {
            return param_err("transform length must be positive");
        }
        Ok(TransformBasis {
            kind: TransformKind::Wavelet97,
            length,
            levels: feasible_levels(length, levels),
            dct_table: Vec::new(),
        })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    /// Decomposition depth actually used (0 for the DCT).
    pub fn levels(&self) -> usize {
        self.levels
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.length {
            return param_err(format!("vector length {} does not match basis length {}", v.len(), self.length));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(match self.kind {
            TransformKind::Dct => {
                let n = self.length;
                self.dct_table
                    .chunks_exact(n)
                    .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                    .collect()
            }
            TransformKind::Wavelet97 => {
                let mut c = x.to_vec();
                wavelet_forward(&mut c, self.levels);
                c
            }
        })
    }

    pub fn inverse(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c)?;
        Ok(match self.kind {
            TransformKind::Dct => {
                let n = self.length;
                let mut x = vec![0.0; n];
                for (row, &ck) in self.dct_table.chunks_exact(n).zip(c) {
                    for (xi, a) in x.iter_mut().zip(row) {
                        *xi += ck * a;
                    }
                }
                x
            }
            TransformKind::Wavelet97 => {
                let mut x = c.to_vec();
                wavelet_inverse(&mut x, self.levels);
                x
            }
        })
    }

    /// The `k`-th synthesis vector, `inverse(e_k)`.
    pub fn synthesis_column(&self, k: usize) -> Result<Vec<f64>> {
        if k >= self.length {
            return param_err(format!("column {k} out of range for basis length {}", self.length));
        }
        let mut e = vec![0.0; self.length];
        e[k] = 1.0;
        self.inverse(&e)
    }

    /// Explicit `n×n` synthesis matrix whose columns are the synthesis vectors.
    pub fn synthesis_matrix(&self) -> DMatrix<f64> {
        let n = self.length;
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            let col = self.synthesis_column(k).expect("index in range");
            m.column_mut(k).copy_from_slice(&col);
        }
        m
    }
}

/// Number of coefficients with magnitude strictly above `threshold`.
pub fn sparsity_profile(c: &[f64], threshold: f64) -> usize {
    c.iter().filter(|v| v.abs() > threshold).count()
}

fn feasible_levels(length: usize, requested: usize) -> usize {
    let mut len = length;
    let mut levels = 0;
    while levels < requested && len.div_ceil(2) >= MIN_COARSE_LEN {
        len = len.div_ceil(2);
        levels += 1;
    }
    levels
}

// Whole-sample symmetric reflection: x[-i] = x[i], x[n-1+i] = x[n-1-i].
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    i.clamp(0, n - 1) as usize
}

// Adds `coeff·(x[i-1] + x[i+1])` to every sample of the given parity.
fn lift(x: &mut [f64], parity: usize, coeff: f64) {
    let n = x.len();
    let mut i = parity;
    while i < n {
        let left = x[reflect(i as isize - 1, n)];
        let right = x[reflect(i as isize + 1, n)];
        x[i] += coeff * (left + right);
        i += 2;
    }
}

fn lift_forward_1d(x: &mut [f64], scratch: &mut Vec<f64>) {
    let n = x.len();
    if n < 2 {
        return;
    }
    lift(x, 1, ALPHA);
    lift(x, 0, BETA);
    lift(x, 1, GAMMA);
    lift(x, 0, DELTA);
    let low_scale = std::f64::consts::SQRT_2 / KAPPA;
    let high_scale = KAPPA / std::f64::consts::SQRT_2;
    // Deinterleave: evens to the front, odds to the back.
    scratch.clear();
    scratch.extend(x.iter().step_by(2).map(|v| v * low_scale));
    scratch.extend(x.iter().skip(1).step_by(2).map(|v| v * high_scale));
    x.copy_from_slice(scratch);
}

fn lift_inverse_1d(x: &mut [f64], scratch: &mut Vec<f64>) {
    let n = x.len();
    if n < 2 {
        return;
    }
    let low_len = n.div_ceil(2);
    let low_scale = KAPPA / std::f64::consts::SQRT_2;
    let high_scale = std::f64::consts::SQRT_2 / KAPPA;
    scratch.clear();
    scratch.resize(n, 0.0);
    for (k, v) in x[..low_len].iter().enumerate() {
        scratch[2 * k] = v * low_scale;
    }
    for (k, v) in x[low_len..].iter().enumerate() {
        scratch[2 * k + 1] = v * high_scale;
    }
    x.copy_from_slice(scratch);
    lift(x, 0, -DELTA);
    lift(x, 1, -GAMMA);
    lift(x, 0, -BETA);
    lift(x, 1, -ALPHA);
}

fn wavelet_forward(x: &mut [f64], levels: usize) {
    let mut scratch = Vec::with_capacity(x.len());
    let mut len = x.len();
    for _ in 0..levels {
        lift_forward_1d(&mut x[..len], &mut scratch);
        len = len.div_ceil(2);
    }
}

fn wavelet_inverse(x: &mut [f64], levels: usize) {
    let mut scratch = Vec::with_capacity(x.len());
    let mut lens = Vec::with_capacity(levels);
    let mut len = x.len();
    for _ in 0..levels {
        lens.push(len);
        len = len.div_ceil(2);
    }
    for &len in lens.iter().rev() {
        lift_inverse_1d(&mut x[..len], &mut scratch);
    }
}
