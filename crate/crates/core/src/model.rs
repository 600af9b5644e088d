//! Node-side domain types: pipeline parameters, seeded sampling masks, sparse
//! binary sensing matrices and the addition-only measurement operator.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{param_err, Error, Result};

/// Default number of ones per sensing-matrix column.
pub const DEFAULT_COLUMN_WEIGHT: usize = 8;

/// A 64-bit seed shared between nodes and sink.
///
/// All randomness in the crate flows through [`Seed::rng`], a ChaCha8 stream,
/// so structures regenerate identically on every platform. Independent
/// streams are split off with [`Seed::derive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seed(pub u64);

impl Seed {
    /// Child seed for stream `stream`: `splitmix64(self ^ splitmix64(stream))`.
    pub fn derive(self, stream: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(stream)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frame geometry shared by every node and the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineParams {
    /// Readings per node per frame.
    pub n: usize,
    /// Samples kept per node.
    pub q: usize,
    /// Measurements sent per node.
    pub p: usize,
    /// Ones per sensing-matrix column.
    pub d: usize,
    /// Number of nodes.
    pub j: usize,
}

impl PipelineParams {
    pub fn new(n: usize, q: usize, p: usize, d: usize, j: usize) -> Result<Self> {
        let params = PipelineParams { n, q, p, d, j };
        params.validate()?;
        Ok(params)
    }

    /// Builds parameters from the sample ratio `I = q/N` and the CS ratio
    /// `h = p/q`, with `q = round(I·N)` and `p = round(h·q)`.
    pub fn from_ratios(n: usize, sample_ratio: f64, cs_ratio: f64, d: usize, j: usize) -> Result<Self> {
        for (name, r) in [("I", sample_ratio), ("h", cs_ratio)] {
            if !(r > 0.0 && r <= 1.0) {
                return param_err(format!("ratio {name} = {r} outside (0, 1]"));
            }
        }
        let q = (sample_ratio * n as f64).round() as usize;
        let p = (cs_ratio * q as f64).round() as usize;
        Self::new(n, q, p, d, j)
    }

    pub fn validate(&self) -> Result<()> {
        let PipelineParams { n, q, p, d, j } = *self;
        if j == 0 {
            return param_err("node count must be positive");
        }
        if q == 0 || q > n {
            return param_err(format!("need 1 <= q <= N, got q={q}, N={n}"));
        }
        if p == 0 || p > q {
            return param_err(format!("need 1 <= p <= q, got p={p}, q={q}"));
        }
        if d == 0 || d >= p {
            return param_err(format!("need 1 <= d < p, got d={d}, p={p}"));
        }
        Ok(())
    }

    pub fn sample_ratio(&self) -> f64 {
        self.q as f64 / self.n as f64
    }

    pub fn cs_ratio(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Fraction of readings actually transmitted, `p/N = I·h`.
    pub fn total_ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

/// Positions a node samples within one frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SamplingMask {
    len: usize,
    ones: Vec<usize>,
}

impl SamplingMask {
    /// Builds a mask from arbitrary indices; they are sorted and checked for
    /// range and duplicates.
    pub fn new(len: usize, mut ones: Vec<usize>) -> Result<Self> {
        ones.sort_unstable();
        if ones.windows(2).any(|w| w[0] == w[1]) {
            return param_err("duplicate mask index");
        }
        if let Some(&last) = ones.last() {
            if last >= len {
                return param_err(format!("mask index {last} out of range for length {len}"));
            }
        }
        Ok(SamplingMask { len, ones })
    }

    pub fn full(len: usize) -> Self {
        SamplingMask { len, ones: (0..len).collect() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sampled positions, ascending.
    pub fn ones(&self) -> &[usize] {
        &self.ones
    }

    pub fn count(&self) -> usize {
        self.ones.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.ones.binary_search(&i).is_ok()
    }
}

/// Draws `q` of `n` positions uniformly without replacement.
pub fn generate_sampling_mask(seed: Seed, n: usize, q: usize) -> Result<SamplingMask> {
    if q == 0 || q > n {
        return param_err(format!("need 1 <= q <= N, got q={q}, N={n}"));
    }
    let mut rng = seed.rng();
    let mut ones = index::sample(&mut rng, n, q).into_vec();
    ones.sort_unstable();
    Ok(SamplingMask { len: n, ones })
}

/// Packs a mask into `ceil(N/8)` bytes, bit `i` at byte `i/8`, bit `i%8`
/// (least significant first).
pub fn mask_pack_bits(mask: &SamplingMask) -> Vec<u8> {
    let mut bytes = vec![0u8; mask.len.div_ceil(8)];
    for &i in &mask.ones {
        bytes[i / 8] |= 1 << (i % 8);
    }
    bytes
}

pub fn mask_unpack_bits(bytes: &[u8], n: usize) -> Result<SamplingMask> {
    if bytes.len() != n.div_ceil(8) {
        return Err(Error::Format(format!(
            "mask of length {n} needs {} bytes, got {}",
            n.div_ceil(8),
            bytes.len()
        )));
    }
    let mut ones = Vec::new();
    for (b, &byte) in bytes.iter().enumerate() {
        for bit in 0..8 {
            if byte & (1 << bit) != 0 {
                let i = b * 8 + bit;
                if i >= n {
                    return Err(Error::Format(format!("set bit {i} beyond mask length {n}")));
                }
                ones.push(i);
            }
        }
    }
    Ok(SamplingMask { len: n, ones })
}

/// A `p×q` 0/1 matrix stored as the sorted row support of each column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    rows: usize,
    cols: usize,
    supports: Vec<Vec<usize>>,
}

impl SparseBinaryMatrix {
    pub fn from_supports(rows: usize, supports: Vec<Vec<usize>>) -> Result<Self> {
        let mut supports = supports;
        for s in &mut supports {
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) || s.last().is_some_and(|&r| r >= rows) {
                return param_err("column support must hold distinct rows in range");
            }
        }
        Ok(SparseBinaryMatrix { rows, cols: supports.len(), supports })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column_support(&self, j: usize) -> &[usize] {
        &self.supports[j]
    }

    pub fn column_supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (j, s) in self.supports.iter().enumerate() {
            for &i in s {
                m[(i, j)] = 1.0;
            }
        }
        m
    }
}

/// Draws a `p×q` sensing matrix with `d` distinct random rows set per column.
pub fn generate_sensing_matrix(seed: Seed, p: usize, q: usize, d: usize) -> Result<SparseBinaryMatrix> {
    if d == 0 || d >= p {
        return param_err(format!("need 1 <= d < p, got d={d}, p={p}"));
    }
    if q == 0 {
        return param_err("sensing matrix needs at least one column");
    }
    let mut rng = seed.rng();
    let supports = (0..q)
        .map(|_| {
            let mut s = index::sample(&mut rng, p, d).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    Ok(SparseBinaryMatrix { rows: p, cols: q, supports })
}

/// Measurements `y = B·x` for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector(pub Vec<f64>);

impl MeasurementVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Computes `B·x` using additions only. Each output accumulates its terms in
/// ascending column order, so results are bit-reproducible.
pub fn apply_sensing(b: &SparseBinaryMatrix, x: &[f64]) -> Result<MeasurementVector> {
    if x.len() != b.cols {
        return param_err(format!("signal length {} does not match {} columns", x.len(), b.cols));
    }
    let mut y = vec![0.0; b.rows];
    for (xj, support) in x.iter().zip(&b.supports) {
        for &i in support {
            y[i] += xj;
        }
    }
    Ok(MeasurementVector(y))
}
