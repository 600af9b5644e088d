//! Sink-side orchestration: per-node CS recovery, assembly of the incomplete
//! readings matrix, matrix completion, and the MC-only baseline that skips
//! the CS stage.

use nalgebra::DMatrix;

use crate::cs_solver::{BasisPursuitConfig, SinkDecoder, SolverReport};
use crate::encoder::{mask_seed, Encoder, NodePacket};
use crate::error::{param_err, Error, Result};
use crate::mc_solver::{svt_complete, CompletionConfig, CompletionReport, IncompleteMatrix};
use crate::model::{PipelineParams, SamplingMask, Seed};
use crate::transform::TransformBasis;

/// Dense `J×N` matrix of sensor readings, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadingsMatrix(DMatrix<f64>);

impl ReadingsMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("readings matrix has non-finite entries".into()));
        }
        Ok(ReadingsMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return param_err("rows have different lengths");
        }
        Self::new(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().cloned().collect()
    }
}

/// Output of one sink-side recovery.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub matrix: ReadingsMatrix,
    /// One report per node, in node order; empty for the MC-only baseline.
    pub cs_reports: Vec<SolverReport>,
    pub completion: CompletionReport,
    /// Relative Frobenius error against ground truth, when known.
    pub relative_error: Option<f64>,
}

impl RecoveryResult {
    pub fn score(mut self, truth: &ReadingsMatrix) -> Result<Self> {
        self.relative_error = Some(relative_frobenius_error(&self.matrix, truth)?);
        Ok(self)
    }
}

/// `‖X̂ − X‖_F / ‖X‖_F`.
pub fn relative_frobenius_error(estimate: &ReadingsMatrix, truth: &ReadingsMatrix) -> Result<f64> {
    if estimate.0.shape() != truth.0.shape() {
        return param_err(format!("shape {:?} does not match {:?}", estimate.0.shape(), truth.0.shape()));
    }
    let norm = truth.0.norm();
    if norm == 0.0 {
        return Err(Error::Numerical("relative error against a zero matrix is undefined".into()));
    }
    Ok((&estimate.0 - &truth.0).norm() / norm)
}

/// Places each node's recovered samples at its mask positions.
pub fn assemble_incomplete(packets: &[NodePacket], recovered: &[Vec<f64>], rows: usize, cols: usize) -> Result<IncompleteMatrix> {
    if packets.len() != recovered.len() {
        return Err(Error::Assembly(format!("{} packets but {} recovered traces", packets.len(), recovered.len())));
    }
    let mut seen = vec![false; rows];
    let mut entries = Vec::new();
    for (packet, values) in packets.iter().zip(recovered) {
        let node = packet.node_id as usize;
        if node >= rows {
            return Err(Error::Assembly(format!("node id {node} outside {rows} rows")));
        }
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::Assembly(format!("duplicate packet from node {node}")));
        }
        if packet.frame_len as usize != cols {
            return Err(Error::Assembly(format!("node {node} frame length {} != {cols}", packet.frame_len)));
        }
        let mask = packet.mask()?;
        if mask.count() != values.len() {
            return Err(Error::Assembly(format!("node {node}: {} values for {} mask positions", values.len(), mask.count())));
        }
        entries.extend(mask.ones().iter().zip(values).map(|(&t, &v)| (node, t, v)));
    }
    IncompleteMatrix::new(rows, cols, entries)
}

/// A configured sink: shared sensing matrix, basis and solver settings.
#[derive(Debug, Clone)]
pub struct Sink {
    decoder: SinkDecoder,
    pub cs_config: BasisPursuitConfig,
    pub mc_config: CompletionConfig,
}

impl Sink {
    pub fn new(
        params: PipelineParams,
        sensing_seed: Seed,
        basis: TransformBasis,
        cs_config: BasisPursuitConfig,
        mc_config: CompletionConfig,
    ) -> Result<Self> {
        Ok(Sink { decoder: SinkDecoder::new(params, sensing_seed, basis)?, cs_config, mc_config })
    }

    pub fn decoder(&self) -> &SinkDecoder {
        &self.decoder
    }

    /// CS-recovers every packet, then completes the matrix.
    pub fn recover(&self, packets: &[NodePacket]) -> Result<RecoveryResult> {
        let params = self.decoder.params();
        if packets.len() != params.j {
            return param_err(format!("expected {} packets, got {}", params.j, packets.len()));
        }
        let decoded: Vec<Result<(Vec<f64>, SolverReport)>> = par_map(packets, |pkt| {
            self.decoder
                .recover(pkt, &self.cs_config)
                .map_err(|e| Error::Node { node: pkt.node_id as usize, source: Box::new(e) })
        });
        let mut recovered = Vec::with_capacity(packets.len());
        let mut reports = Vec::with_capacity(packets.len());
        for d in decoded {
            let (x, r) = d?;
            recovered.push(x);
            reports.push(r);
        }
        let incomplete = assemble_incomplete(packets, &recovered, params.j, params.n)?;
        let (matrix, completion) = svt_complete(&incomplete, &self.mc_config)?;
        // Reports follow node order regardless of packet order.
        let mut order: Vec<usize> = (0..packets.len()).collect();
        order.sort_by_key(|&k| packets[k].node_id);
        let cs_reports = order.into_iter().map(|k| reports[k]).collect();
        Ok(RecoveryResult { matrix, cs_reports, completion, relative_error: None })
    }
}

/// Full sink procedure for one frame of packets.
pub fn recover_all(
    packets: &[NodePacket],
    sensing_seed: Seed,
    params: &PipelineParams,
    basis: &TransformBasis,
    cs_config: &BasisPursuitConfig,
    mc_config: &CompletionConfig,
) -> Result<RecoveryResult> {
    Sink::new(*params, sensing_seed, basis.clone(), *cs_config, *mc_config)?.recover(packets)
}

/// Every node encodes its row of `truth` for one frame; node `i` draws its
/// mask from `mask_seed(frame_seed, i)`.
pub fn encode_readings(encoder: &Encoder, truth: &ReadingsMatrix, frame_id: u32, frame_seed: Seed) -> Result<Vec<NodePacket>> {
    (0..truth.rows())
        .map(|i| encoder.encode_frame(truth.row(i).as_slice(), i, frame_id, mask_seed(frame_seed, i)))
        .collect()
}

/// Completion from the true readings at the mask positions, with no CS
/// stage (the MC-only gathering scheme).
pub fn mc_only_baseline(truth: &ReadingsMatrix, masks: &[SamplingMask], mc_config: &CompletionConfig) -> Result<RecoveryResult> {
    let (rows, cols) = truth.0.shape();
    if masks.len() != rows {
        return param_err(format!("{} masks for {rows} rows", masks.len()));
    }
    if masks.iter().any(|m| m.len() != cols) {
        return param_err("mask length does not match matrix width");
    }
    let omega = masks.iter().enumerate().flat_map(|(i, m)| m.ones().iter().map(move |&t| (i, t)));
    let incomplete = IncompleteMatrix::from_dense(&truth.0, omega)?;
    let (matrix, completion) = svt_complete(&incomplete, mc_config)?;
    RecoveryResult { matrix, cs_reports: Vec::new(), completion, relative_error: None }.score(truth)
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mask_pack_bits, MeasurementVector};

    fn packet(node: u16, mask: &SamplingMask) -> NodePacket {
        NodePacket {
            node_id: node,
            frame_id: 0,
            frame_len: mask.len() as u16,
            measurements: MeasurementVector(vec![]),
            mask_bits: mask_pack_bits(mask),
        }
    }

    #[test]
    fn single_full_row() {
        let mask = SamplingMask::full(5);
        let vals = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]];
        let inc = assemble_incomplete(&[packet(0, &mask)], &vals, 1, 5).unwrap();
        assert_eq!(inc.observed_count(), 5);
        assert_eq!(inc.to_dense().row(0).iter().cloned().collect::<Vec<_>>(), vals[0]);
    }

    #[test]
    fn omega_has_j_times_q_entries() {
        let masks: Vec<SamplingMask> = (0..4)
            .map(|i| crate::model::generate_sampling_mask(Seed(i), 20, 6).unwrap())
            .collect();
        let packets: Vec<NodePacket> = masks.iter().enumerate().map(|(i, m)| packet(i as u16, m)).collect();
        let vals = vec![vec![1.0; 6]; 4];
        let inc = assemble_incomplete(&packets, &vals, 4, 20).unwrap();
        assert_eq!(inc.observed_count(), 24);
        for (i, m) in masks.iter().enumerate() {
            for &t in m.ones() {
                assert!(inc.is_observed(i, t));
            }
        }
    }

    #[test]
    fn duplicate_node_rejected() {
        let mask = SamplingMask::full(3);
        let vals = vec![vec![0.0; 3]; 2];
        let err = assemble_incomplete(&[packet(1, &mask), packet(1, &mask)], &vals, 2, 3).unwrap_err();
        assert!(matches!(err, Error::Assembly(_)));
    }

    #[test]
    fn relative_errors() {
        let x = ReadingsMatrix::new(DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.0)).unwrap();
        assert_eq!(relative_frobenius_error(&x, &x).unwrap(), 0.0);
        let twice = ReadingsMatrix::new(x.as_matrix() * 2.0).unwrap();
        assert!((relative_frobenius_error(&twice, &x).unwrap() - 1.0).abs() < 1e-15);
        // ‖X‖² = Σ (k−5)² for k in 0..12 = 146; E has a single entry of 3.
        let mut e = x.as_matrix().clone();
        e[(1, 2)] += 3.0;
        let r = relative_frobenius_error(&ReadingsMatrix::new(e).unwrap(), &x).unwrap();
        assert!((r - 3.0 / 146f64.sqrt()).abs() < 1e-14);
        let zero = ReadingsMatrix::new(DMatrix::zeros(3, 4)).unwrap();
        assert!(relative_frobenius_error(&x, &zero).is_err());
    }

    #[test]
    fn baseline_with_full_masks_is_exact() {
        let x = ReadingsMatrix::new(DMatrix::from_fn(5, 12, |i, j| 20.0 + (i as f64) * 0.3 + (j as f64 * 0.2).sin())).unwrap();
        let masks = vec![SamplingMask::full(12); 5];
        let r = mc_only_baseline(&x, &masks, &CompletionConfig::default()).unwrap();
        assert!(r.relative_error.unwrap() < 1e-4);
    }
}
