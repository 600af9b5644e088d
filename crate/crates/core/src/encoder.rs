//! What a single node computes per frame: draw a sampling mask, sample only
//! those positions, compress with the shared sparse binary matrix and emit a
//! packet.

use std::cell::Cell;

use crate::error::{param_err, Error, Result};
use crate::model::{
    apply_sensing, generate_sampling_mask, generate_sensing_matrix, mask_pack_bits, mask_unpack_bits,
    MeasurementVector, PipelineParams, SamplingMask, Seed, SparseBinaryMatrix,
};

/// Bytes in the fixed packet header: node id, frame id, p, N.
pub const HEADER_LEN: usize = 2 + 4 + 2 + 2;

/// Random access to a node's readings for one frame.
pub trait TraceSource {
    fn len(&self) -> usize;
    fn read(&self, t: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TraceSource for [f64] {
    fn len(&self) -> usize {
        <[f64]>::len(self)
    }

    fn read(&self, t: usize) -> f64 {
        self[t]
    }
}

impl TraceSource for Vec<f64> {
    fn len(&self) -> usize {
        Vec::len(self)
    }

    fn read(&self, t: usize) -> f64 {
        self[t]
    }
}

/// Wraps a trace and counts every sample taken from it.
pub struct CountingTrace<'a> {
    inner: &'a [f64],
    reads: Cell<usize>,
}

impl<'a> CountingTrace<'a> {
    pub fn new(inner: &'a [f64]) -> Self {
        CountingTrace { inner, reads: Cell::new(0) }
    }

    pub fn reads(&self) -> usize {
        self.reads.get()
    }
}

impl TraceSource for CountingTrace<'_> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn read(&self, t: usize) -> f64 {
        self.reads.set(self.reads.get() + 1);
        self.inner[t]
    }
}

/// One node's transmission for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePacket {
    pub node_id: u16,
    pub frame_id: u32,
    /// Frame length `N`.
    pub frame_len: u16,
    pub measurements: MeasurementVector,
    /// Sampling mask packed as by [`mask_pack_bits`].
    pub mask_bits: Vec<u8>,
}

impl NodePacket {
    pub fn mask(&self) -> Result<SamplingMask> {
        mask_unpack_bits(&self.mask_bits, self.frame_len as usize)
    }

    /// Little-endian wire form: `node_id u16, frame_id u32, p u16, N u16`,
    /// then `p` f64 measurements, then `ceil(N/8)` mask bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let p = u16::try_from(self.measurements.len())
            .map_err(|_| Error::Format("too many measurements for a u16 count".into()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * p as usize + self.mask_bits.len());
        out.extend_from_slice(&self.node_id.to_le_bytes());
        out.extend_from_slice(&self.frame_id.to_le_bytes());
        out.extend_from_slice(&p.to_le_bytes());
        out.extend_from_slice(&self.frame_len.to_le_bytes());
        for v in self.measurements.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.mask_bits);
        Ok(out)
    }

    /// Parses one packet from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(NodePacket, usize)> {
        let short = || Error::Format("truncated packet".into());
        let header = bytes.get(..HEADER_LEN).ok_or_else(short)?;
        let node_id = u16::from_le_bytes([header[0], header[1]]);
        let frame_id = u32::from_le_bytes([header[2], header[3], header[4], header[5]]);
        let p = u16::from_le_bytes([header[6], header[7]]) as usize;
        let frame_len = u16::from_le_bytes([header[8], header[9]]);
        let mask_len = (frame_len as usize).div_ceil(8);
        let total = HEADER_LEN + 8 * p + mask_len;
        let body = bytes.get(HEADER_LEN..total).ok_or_else(short)?;
        let values = body[..8 * p]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let packet = NodePacket {
            node_id,
            frame_id,
            frame_len,
            measurements: MeasurementVector(values),
            mask_bits: body[8 * p..].to_vec(),
        };
        // Reject malformed masks up front.
        packet.mask()?;
        Ok((packet, total))
    }
}

/// Writes packets back to back, as in a packet-dump file.
pub fn write_packets(packets: &[NodePacket]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for p in packets {
        out.extend(p.to_bytes()?);
    }
    Ok(out)
}

pub fn read_packets(mut bytes: &[u8]) -> Result<Vec<NodePacket>> {
    let mut packets = Vec::new();
    while !bytes.is_empty() {
        let (p, used) = NodePacket::from_bytes(bytes)?;
        packets.push(p);
        bytes = &bytes[used..];
    }
    Ok(packets)
}

/// Seed of the sampling mask node `node_id` draws in the frame seeded by
/// `frame_seed`.
pub fn mask_seed(frame_seed: Seed, node_id: usize) -> Seed {
    frame_seed.derive(node_id as u64)
}

/// Node-side state: the parameters and the sensing matrix generated once from
/// the pre-shared seed.
#[derive(Debug, Clone)]
pub struct Encoder {
    params: PipelineParams,
    sensing: SparseBinaryMatrix,
}

impl Encoder {
    pub fn new(params: PipelineParams, sensing_seed: Seed) -> Result<Self> {
        params.validate()?;
        let sensing = generate_sensing_matrix(sensing_seed, params.p, params.q, params.d)?;
        Ok(Encoder { params, sensing })
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn sensing_matrix(&self) -> &SparseBinaryMatrix {
        &self.sensing
    }

    /// Encodes one frame using a freshly drawn mask.
    pub fn encode_frame<T: TraceSource + ?Sized>(
        &self,
        trace: &T,
        node_id: usize,
        frame_id: u32,
        mask_seed: Seed,
    ) -> Result<NodePacket> {
        let mask = generate_sampling_mask(mask_seed, self.params.n, self.params.q)?;
        self.encode_with_mask(trace, node_id, frame_id, &mask)
    }

    /// Encodes one frame with a given mask. Only masked positions are read.
    pub fn encode_with_mask<T: TraceSource + ?Sized>(
        &self,
        trace: &T,
        node_id: usize,
        frame_id: u32,
        mask: &SamplingMask,
    ) -> Result<NodePacket> {
        let PipelineParams { n, q, .. } = self.params;
        if trace.len() != n {
            return param_err(format!("trace length {} does not match frame length {n}", trace.len()));
        }
        if mask.len() != n || mask.count() != q {
            return param_err(format!("mask must select {q} of {n} positions"));
        }
        let node_id = u16::try_from(node_id).map_err(|_| Error::Param(format!("node id {node_id} exceeds u16")))?;
        let frame_len = u16::try_from(n).map_err(|_| Error::Param(format!("frame length {n} exceeds u16")))?;
        let samples: Vec<f64> = mask.ones().iter().map(|&t| trace.read(t)).collect();
        let measurements = apply_sensing(&self.sensing, &samples)?;
        Ok(NodePacket { node_id, frame_id, frame_len, measurements, mask_bits: mask_pack_bits(mask) })
    }
}

/// Stateless form of [`Encoder::encode_frame`].
pub fn encode_frame<T: TraceSource + ?Sized>(
    trace: &T,
    node_id: usize,
    frame_id: u32,
    params: &PipelineParams,
    sensing_seed: Seed,
    mask_seed: Seed,
) -> Result<NodePacket> {
    Encoder::new(*params, sensing_seed)?.encode_frame(trace, node_id, frame_id, mask_seed)
}

/// Per-frame transmission of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionCost {
    /// Real values sent (`p`).
    pub values_sent: usize,
    /// Mask bits sent (`N`).
    pub mask_bits: usize,
    /// `p/N`.
    pub total_ratio: f64,
}

pub fn transmission_cost(params: &PipelineParams) -> TransmissionCost {
    TransmissionCost { values_sent: params.p, mask_bits: params.n, total_ratio: params.total_ratio() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn trace(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = Seed(seed).rng();
        (0..n).map(|_| 18.0 + rng.random_range(0.0..6.0)).collect()
    }

    #[test]
    fn intel_geometry_packet() {
        let params = PipelineParams::from_ratios(250, 0.5, 0.4, 8, 46).unwrap();
        assert_eq!((params.q, params.p), (125, 50));
        let x = trace(1, 250);
        let pkt = encode_frame(x.as_slice(), 10, 0, &params, Seed(7), Seed(8)).unwrap();
        assert_eq!(pkt.measurements.len(), 50);
        assert_eq!(pkt.mask_bits.len(), 32);
        assert_eq!(pkt.mask().unwrap().count(), 125);
        assert_eq!(pkt.to_bytes().unwrap().len(), HEADER_LEN + 50 * 8 + 32);
    }

    #[test]
    fn reads_only_masked_positions() {
        let params = PipelineParams::from_ratios(250, 0.3, 0.4, 8, 1).unwrap();
        let x = trace(2, 250);
        let counting = CountingTrace::new(&x);
        let pkt = encode_frame(&counting, 0, 0, &params, Seed(1), Seed(2)).unwrap();
        assert_eq!(counting.reads(), params.q);
        assert_eq!(pkt.mask().unwrap().count(), 75);
    }

    #[test]
    fn zero_trace_zero_measurements() {
        let params = PipelineParams::from_ratios(100, 0.5, 0.4, 4, 1).unwrap();
        let pkt = encode_frame(vec![0.0; 100].as_slice(), 0, 0, &params, Seed(1), Seed(2)).unwrap();
        assert!(pkt.measurements.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weight_one_rows_sum_their_columns() {
        let params = PipelineParams::new(12, 12, 12, 1, 1).unwrap();
        let enc = Encoder::new(params, Seed(4)).unwrap();
        let x: Vec<f64> = (0..12).map(|i| i as f64 + 1.0).collect();
        let pkt = enc.encode_with_mask(x.as_slice(), 0, 0, &SamplingMask::full(12)).unwrap();
        let mut expect = [0.0; 12];
        for (j, s) in enc.sensing_matrix().column_supports().iter().enumerate() {
            expect[s[0]] += x[j];
        }
        assert_eq!(pkt.measurements.as_slice(), &expect);
        let total: f64 = pkt.measurements.as_slice().iter().sum();
        assert_eq!(total, x.iter().sum::<f64>());
    }

    #[test]
    fn packets_are_deterministic_and_round_trip() {
        let params = PipelineParams::from_ratios(250, 0.5, 0.4, 8, 3).unwrap();
        let enc = Encoder::new(params, Seed(11)).unwrap();
        let packets: Vec<NodePacket> = (0..3)
            .map(|i| enc.encode_frame(trace(i, 250).as_slice(), i as usize, 5, mask_seed(Seed(3), i as usize)).unwrap())
            .collect();
        let again: Vec<NodePacket> = (0..3)
            .map(|i| enc.encode_frame(trace(i, 250).as_slice(), i as usize, 5, mask_seed(Seed(3), i as usize)).unwrap())
            .collect();
        let bytes = write_packets(&packets).unwrap();
        assert_eq!(bytes, write_packets(&again).unwrap());
        assert_eq!(read_packets(&bytes).unwrap(), packets);
    }

    #[test]
    fn header_layout() {
        let pkt = NodePacket {
            node_id: 0x0102,
            frame_id: 0x0A0B0C0D,
            frame_len: 8,
            measurements: MeasurementVector(vec![1.5]),
            mask_bits: vec![0x81],
        };
        let b = pkt.to_bytes().unwrap();
        assert_eq!(&b[..HEADER_LEN], &[0x02, 0x01, 0x0D, 0x0C, 0x0B, 0x0A, 1, 0, 8, 0]);
        assert_eq!(&b[HEADER_LEN..HEADER_LEN + 8], &1.5f64.to_le_bytes());
        assert_eq!(b[HEADER_LEN + 8], 0x81);
        assert!(NodePacket::from_bytes(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn rejects_wrong_trace_length() {
        let params = PipelineParams::from_ratios(100, 0.5, 0.4, 4, 1).unwrap();
        assert!(matches!(
            encode_frame(vec![0.0; 99].as_slice(), 0, 0, &params, Seed(1), Seed(2)),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn costs() {
        let c = transmission_cost(&PipelineParams::from_ratios(250, 0.3, 0.4, 8, 46).unwrap());
        assert_eq!((c.values_sent, c.mask_bits), (30, 250));
        assert!((c.total_ratio - 0.12).abs() < 1e-15);
        let c = transmission_cost(&PipelineParams::from_ratios(250, 0.5, 0.4, 8, 46).unwrap());
        assert_eq!(c.values_sent, 50);
        assert!((c.total_ratio - 0.2).abs() < 1e-15);
        let c = transmission_cost(&PipelineParams::from_ratios(250, 1.0, 1.0, 8, 46).unwrap());
        assert_eq!(c.total_ratio, 1.0);
    }
}
