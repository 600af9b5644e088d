//! WebAssembly bindings for the browser demo in `www/`.

use wasm_bindgen::prelude::*;

use mccs::cs_solver::{BasisPursuitConfig, SinkDecoder};
use mccs::dataset::{synth_low_rank_smooth, SyntheticSpec};
use mccs::encoder::Encoder;
use mccs::experiment::normalized_sparsity;
use mccs::mc_solver::CompletionConfig;
use mccs::model::{PipelineParams, Seed};
use mccs::pipeline::{encode_readings, mc_only_baseline, relative_frobenius_error, Sink};
use mccs::transform::{TransformBasis, TransformKind};

fn js(e: mccs::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn world(seed: u64, rows: usize, cols: usize, rank: usize, smoothness: usize, noise: f64) -> Result<mccs::pipeline::ReadingsMatrix, JsError> {
    synth_low_rank_smooth(&SyntheticSpec { rows, cols, rank, smoothness, noise }, Seed(seed)).map_err(js)
}

#[wasm_bindgen]
pub struct SparsityView {
    trace: Vec<f64>,
    coefficients: Vec<f64>,
    significant: usize,
}

#[wasm_bindgen]
impl SparsityView {
    #[wasm_bindgen(getter)]
    pub fn trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn coefficients(&self) -> Vec<f64> {
        self.coefficients.clone()
    }

    /// Coefficients above the threshold after max-abs normalization.
    #[wasm_bindgen(getter)]
    pub fn significant(&self) -> usize {
        self.significant
    }
}

/// Transforms one synthetic trace with `basis` ("dct" or "w97").
#[wasm_bindgen]
pub fn sparsity(basis: &str, seed: u64, len: usize, smoothness: usize, noise: f64, threshold: f64) -> Result<SparsityView, JsError> {
    let kind: TransformKind = basis.parse().map_err(js)?;
    let trace = world(seed, 1, len, 1, smoothness, noise)?.row(0);
    let basis = TransformBasis::new(kind, len).map_err(js)?;
    let coefficients = basis.forward(&trace).map_err(js)?;
    let significant = normalized_sparsity(&basis, &trace, threshold).map_err(js)?;
    Ok(SparsityView { trace, coefficients, significant })
}

#[wasm_bindgen]
pub struct NodeView {
    truth: Vec<f64>,
    positions: Vec<f64>,
    recovered: Vec<f64>,
    error: f64,
    sent: usize,
}

#[wasm_bindgen]
impl NodeView {
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }

    /// Sampled time slots.
    #[wasm_bindgen(getter)]
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    /// Readings recovered at `positions`.
    #[wasm_bindgen(getter)]
    pub fn recovered(&self) -> Vec<f64> {
        self.recovered.clone()
    }

    /// Relative error over the sampled slots.
    #[wasm_bindgen(getter)]
    pub fn error(&self) -> f64 {
        self.error
    }

    /// Values transmitted.
    #[wasm_bindgen(getter)]
    pub fn sent(&self) -> usize {
        self.sent
    }
}

/// Encodes one node's frame and decodes it at the sink.
#[wasm_bindgen]
pub fn recover_node(seed: u64, len: usize, smoothness: usize, sample_ratio: f64, cs_ratio: f64, d: usize) -> Result<NodeView, JsError> {
    let truth = world(seed, 1, len, 1, smoothness, 0.0)?.row(0);
    let params = PipelineParams::from_ratios(len, sample_ratio, cs_ratio, d, 1).map_err(js)?;
    let sensing = Seed(seed).derive(1);
    let packet = Encoder::new(params, sensing)
        .and_then(|e| e.encode_frame(truth.as_slice(), 0, 0, Seed(seed).derive(2)))
        .map_err(js)?;
    let decoder = SinkDecoder::new(params, sensing, TransformBasis::dct(len).map_err(js)?).map_err(js)?;
    let (recovered, _) = decoder.recover(&packet, &BasisPursuitConfig::default()).map_err(js)?;
    let mask = packet.mask().map_err(js)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &v) in mask.ones().iter().zip(&recovered) {
        num += (v - truth[t]).powi(2);
        den += truth[t].powi(2);
    }
    Ok(NodeView {
        truth,
        positions: mask.ones().iter().map(|&t| t as f64).collect(),
        recovered,
        error: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
        sent: params.p,
    })
}

#[wasm_bindgen]
pub struct CompletionView {
    rows: usize,
    cols: usize,
    truth: Vec<f64>,
    mccs: Vec<f64>,
    mc: Vec<f64>,
    mccs_error: f64,
    mc_error: f64,
    iterations: usize,
}

#[wasm_bindgen]
impl CompletionView {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major ground truth.
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }

    /// Row-major MCCS reconstruction.
    #[wasm_bindgen(getter)]
    pub fn mccs(&self) -> Vec<f64> {
        self.mccs.clone()
    }

    /// Row-major MC-only reconstruction from the same masks.
    #[wasm_bindgen(getter)]
    pub fn mc(&self) -> Vec<f64> {
        self.mc.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mccs_error(&self) -> f64 {
        self.mccs_error
    }

    #[wasm_bindgen(getter)]
    pub fn mc_error(&self) -> f64 {
        self.mc_error
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn row_major(m: &mccs::pipeline::ReadingsMatrix) -> Vec<f64> {
    m.as_matrix().transpose().as_slice().to_vec()
}

/// Gathers a synthetic network with MCCS and with MC only.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn complete(
    seed: u64,
    rows: usize,
    cols: usize,
    rank: usize,
    smoothness: usize,
    sample_ratio: f64,
    cs_ratio: f64,
    d: usize,
) -> Result<CompletionView, JsError> {
    let truth = world(seed, rows, cols, rank, smoothness, 0.0)?;
    let params = PipelineParams::from_ratios(cols, sample_ratio, cs_ratio, d, rows).map_err(js)?;
    let sensing = Seed(seed).derive(1);
    let encoder = Encoder::new(params, sensing).map_err(js)?;
    let packets = encode_readings(&encoder, &truth, 0, Seed(seed).derive(2)).map_err(js)?;
    let sink = Sink::new(
        params,
        sensing,
        TransformBasis::dct(cols).map_err(js)?,
        BasisPursuitConfig::default(),
        CompletionConfig::default(),
    )
    .map_err(js)?;
    let mccs = sink.recover(&packets).map_err(js)?;
    let masks = packets.iter().map(|p| p.mask()).collect::<mccs::Result<Vec<_>>>().map_err(js)?;
    let mc = mc_only_baseline(&truth, &masks, &CompletionConfig::default()).map_err(js)?;
    Ok(CompletionView {
        rows,
        cols,
        truth: row_major(&truth),
        mccs_error: relative_frobenius_error(&mccs.matrix, &truth).map_err(js)?,
        mc_error: mc.relative_error.unwrap_or(f64::NAN),
        mccs: row_major(&mccs.matrix),
        mc: row_major(&mc.matrix),
        iterations: mccs.completion.iterations,
    })
}
