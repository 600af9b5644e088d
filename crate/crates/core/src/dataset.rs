//! Ground-truth readings: the Intel Berkeley Lab log and synthetic low-rank,
//! temporally smooth worlds.
//!
//! The Intel log is whitespace separated, one reading per line:
//!
//! ```text
//! date time epoch moteid temperature humidity light voltage
//! 2004-03-01 00:59:16.02785 2820 10 19.871 38.4 45.08 2.68742
//! ```

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveTime, Timelike};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param_err, Error, Result};
use crate::model::Seed;
use crate::pipeline::ReadingsMatrix;

/// Public location of the Intel Lab log.
pub const INTEL_DATA_URL: &str = "http://db.csail.mit.edu/labdata/data.txt.gz";

/// Seconds between Intel Lab readings.
pub const READING_PERIOD_S: f64 = 31.0;

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorRecord {
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub epoch: u64,
    pub mote_id: u32,
    pub temperature: Option<f64>,
    pub humidity: Option<f64>,
    pub light: Option<f64>,
    pub voltage: Option<f64>,
}

impl SensorRecord {
    /// Time of day in seconds.
    pub fn seconds(&self) -> f64 {
        self.time.num_seconds_from_midnight() as f64 + self.time.nanosecond() as f64 * 1e-9
    }

    /// Parses one log line. `None` means the line is malformed.
    pub fn parse_line(line: &str) -> Option<SensorRecord> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return None;
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").ok()?;
        let time = NaiveTime::parse_from_str(fields[1], "%H:%M:%S%.f").ok()?;
        let epoch = fields[2].parse().ok()?;
        let mote_id: u32 = fields[3].parse().ok()?;
        if mote_id == 0 {
            return None;
        }
        let value = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        Some(SensorRecord {
            date,
            time,
            epoch,
            mote_id,
            temperature: value(fields[4]),
            humidity: value(fields[5]),
            light: value(fields[6]),
            voltage: value(fields[7]),
        })
    }
}

impl fmt::Display for SensorRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |x| x.to_string());
        write!(
            f,
            "{} {} {} {} {} {} {} {}",
            self.date.format("%Y-%m-%d"),
            self.time.format("%H:%M:%S%.f"),
            self.epoch,
            self.mote_id,
            v(self.temperature),
            v(self.humidity),
            v(self.light),
            v(self.voltage)
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub records: Vec<SensorRecord>,
    /// Lines skipped for having the wrong shape.
    pub malformed: usize,
    /// Records kept despite an unreadable temperature.
    pub missing_temperature: usize,
}

/// Parses an Intel Lab log. Blank lines are ignored; malformed lines are
/// skipped and counted, and more than half malformed is a format error.
pub fn parse_intel_log<R: BufRead>(reader: R) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    let mut lines = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        match SensorRecord::parse_line(&line) {
            Some(r) => {
                if r.temperature.is_none() {
                    out.missing_temperature += 1;
                }
                out.records.push(r);
            }
            None => out.malformed += 1,
        }
    }
    if lines > 0 && out.malformed * 2 > lines {
        return Err(Error::Format(format!("{} of {lines} lines are malformed", out.malformed)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEntry {
    pub mote_id: u32,
    /// Distinct epochs with a temperature on the day.
    pub readings: usize,
    /// `readings` over the readings expected at a 31 s period, capped at 1.
    pub fraction: f64,
    pub kept: bool,
}

#[derive(Debug, Clone)]
pub struct DatasetSlice {
    /// Mote ids of the matrix rows, ascending.
    pub node_ids: Vec<u32>,
    pub day: NaiveDate,
    pub matrix: ReadingsMatrix,
    /// Every mote seen on the day, ascending by id.
    pub coverage: Vec<CoverageEntry>,
    /// Set when the surviving node count differs from the expected 46.
    pub warning: Option<String>,
}

impl DatasetSlice {
    /// Matrix row of a mote, if it survived the coverage filter.
    pub fn row_of(&self, mote_id: u32) -> Option<usize> {
        self.node_ids.iter().position(|&m| m == mote_id)
    }
}

/// Nodes the Intel slice is expected to keep.
pub const EXPECTED_INTEL_NODES: usize = 46;

/// Builds the temperature matrix for one day: drops motes with coverage below
/// `min_coverage`, then resamples each survivor onto `cols` uniformly spaced
/// times (cell centres across the day). Interior times interpolate linearly
/// between the bracketing readings; times before the first or after the last
/// reading take that reading's value.
pub fn build_readings_matrix(records: &[SensorRecord], day: NaiveDate, cols: usize, min_coverage: f64) -> Result<DatasetSlice> {
    if records.is_empty() {
        return Err(Error::Data("no records".into()));
    }
    if cols == 0 {
        return param_err("need at least one column");
    }
    let expected = (SECONDS_PER_DAY / READING_PERIOD_S).floor();

    let mut by_mote: std::collections::BTreeMap<u32, Vec<(u64, f64, f64)>> = Default::default();
    for r in records.iter().filter(|r| r.date == day) {
        if let Some(t) = r.temperature {
            by_mote.entry(r.mote_id).or_default().push((r.epoch, r.seconds(), t));
        }
    }

    let mut coverage = Vec::new();
    let mut node_ids = Vec::new();
    let mut rows = Vec::new();
    for (mote, mut readings) in by_mote {
        readings.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        readings.dedup_by_key(|r| r.0);
        let fraction = (readings.len() as f64 / expected).min(1.0);
        let kept = fraction >= min_coverage;
        coverage.push(CoverageEntry { mote_id: mote, readings: readings.len(), fraction, kept });
        if kept {
            let series: Vec<(f64, f64)> = readings.iter().map(|r| (r.1, r.2)).collect();
            rows.push(resample(series, cols));
            node_ids.push(mote);
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("no mote on {day} reaches coverage {min_coverage}")));
    }
    let warning = (node_ids.len() != EXPECTED_INTEL_NODES)
        .then(|| format!("{} nodes survive the coverage filter (expected {EXPECTED_INTEL_NODES})", node_ids.len()));
    Ok(DatasetSlice { node_ids, day, matrix: ReadingsMatrix::from_rows(&rows)?, coverage, warning })
}

// Linear interpolation of (time, value) samples at cell-centre times.
fn resample(mut series: Vec<(f64, f64)>, cols: usize) -> Vec<f64> {
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Merge readings that share a timestamp.
    let mut merged: Vec<(f64, f64, usize)> = Vec::with_capacity(series.len());
    for (t, v) in series {
        match merged.last_mut() {
            Some(last) if last.0 == t => {
                last.1 += v;
                last.2 += 1;
            }
            _ => merged.push((t, v, 1)),
        }
    }
    let pts: Vec<(f64, f64)> = merged.into_iter().map(|(t, s, c)| (t, s / c as f64)).collect();
    (0..cols)
        .map(|j| {
            let t = (j as f64 + 0.5) * SECONDS_PER_DAY / cols as f64;
            let k = pts.partition_point(|p| p.0 <= t);
            if k == 0 {
                pts[0].1
            } else if k == pts.len() {
                pts[k - 1].1
            } else {
                let (t0, v0) = pts[k - 1];
                let (t1, v1) = pts[k];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        })
        .collect()
}

/// Day the Intel slice is cut from.
pub fn intel_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2004, 3, 1).expect("valid date")
}

/// Default coverage threshold for keeping a mote.
pub const DEFAULT_MIN_COVERAGE: f64 = 0.5;

/// Reads an uncompressed Intel Lab log and builds the temperature matrix.
pub fn load_intel_slice(path: &Path, day: NaiveDate, cols: usize, min_coverage: f64) -> Result<DatasetSlice> {
    if path.extension().is_some_and(|e| e == "gz") {
        return Err(Error::Data(format!("{} is compressed; decompress it first (gunzip)", path.display())));
    }
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}; the log is available from {INTEL_DATA_URL}", path.display())))?;
    let log = parse_intel_log(BufReader::new(file))?;
    build_readings_matrix(&log.records, day, cols, min_coverage)
}

/// Writes a matrix as CSV: one line per row, comma separated.
pub fn write_matrix_csv<W: Write>(m: &ReadingsMatrix, mut out: W) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Settings of a synthetic world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Number of low-frequency DCT modes each temporal profile mixes.
    pub smoothness: usize,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
}

/// `X = Σ_k u_k v_kᵀ + σ·E` with Gaussian `u_k` and `E`, and each `v_k` a
/// random mix of the first `smoothness` orthonormal DCT-II modes of length
/// `cols`. Without noise every row has at most `smoothness` nonzero DCT
/// coefficients and the matrix has rank `min(rank, smoothness)`.
pub fn synth_low_rank_smooth(spec: &SyntheticSpec, seed: Seed) -> Result<ReadingsMatrix> {
    let SyntheticSpec { rows, cols, rank, smoothness, noise } = *spec;
    if rows == 0 || cols == 0 {
        return param_err("synthetic world needs positive dimensions");
    }
    if rank == 0 || rank > rows.min(cols) {
        return param_err(format!("rank {rank} must lie in 1..={}", rows.min(cols)));
    }
    if smoothness == 0 || smoothness > cols {
        return param_err(format!("smoothness {smoothness} must lie in 1..={cols}"));
    }
    if !(noise >= 0.0) {
        return param_err("noise level must be non-negative");
    }
    let mut rng = seed.rng();
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let n = cols as f64;
    let mode = |m: usize, t: usize| {
        let scale = if m == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        scale * (std::f64::consts::PI * (2 * t + 1) as f64 * m as f64 / (2.0 * n)).cos()
    };
    let mut x = DMatrix::zeros(rows, cols);
    for _ in 0..rank {
        let u: Vec<f64> = (0..rows).map(|_| gauss()).collect();
        let a: Vec<f64> = (0..smoothness).map(|_| gauss()).collect();
        let v: Vec<f64> = (0..cols).map(|t| a.iter().enumerate().map(|(m, am)| am * mode(m, t)).sum::<f64>()).collect();
        let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..rows {
            for t in 0..cols {
                x[(i, t)] += u[i] * v[t] / v_norm * n.sqrt();
            }
        }
    }
    if noise > 0.0 {
        for v in x.iter_mut() {
            *v += noise * gauss();
        }
    }
    ReadingsMatrix::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "2004-03-01 00:59:16.02785 2820 10 19.871 38.4 45.08 2.68742";

    #[test]
    fn parses_literal_line() {
        let r = SensorRecord::parse_line(LINE).unwrap();
        assert_eq!(r.mote_id, 10);
        assert_eq!(r.epoch, 2820);
        assert_eq!(r.temperature, Some(19.871));
        assert_eq!(r.date, NaiveDate::from_ymd_opt(2004, 3, 1).unwrap());
        assert!((r.seconds() - (59.0 * 60.0 + 16.02785)).abs() < 1e-9);
    }

    #[test]
    fn empty_and_malformed() {
        let log = parse_intel_log("".as_bytes()).unwrap();
        assert!(log.records.is_empty());
        let text = format!("{LINE}\n{LINE}\n2004-03-01 01:00:00.0 2821 10 19.9 38.4 45.08\n");
        let log = parse_intel_log(text.as_bytes()).unwrap();
        assert_eq!((log.records.len(), log.malformed), (2, 1));
        let bad = "a b c\nd e f\n".to_string() + LINE;
        assert!(matches!(parse_intel_log(bad.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn missing_temperature_is_flagged() {
        let log = parse_intel_log("2004-03-01 00:59:16.02785 2820 10 NaN 38.4 45.08 2.68742\n".as_bytes()).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.missing_temperature, 1);
        assert_eq!(log.records[0].temperature, None);
    }

    #[test]
    fn display_round_trip() {
        let r = SensorRecord::parse_line(LINE).unwrap();
        assert_eq!(SensorRecord::parse_line(&r.to_string()).unwrap(), r);
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2004, 3, 1).unwrap()
    }

    fn record(mote: u32, epoch: u64, secs: f64, temp: f64) -> SensorRecord {
        let whole = secs.floor() as u32;
        let nanos = ((secs - secs.floor()) * 1e9).round() as u32;
        SensorRecord {
            date: day(),
            time: NaiveTime::from_num_seconds_from_midnight_opt(whole, nanos).unwrap(),
            epoch,
            mote_id: mote,
            temperature: Some(temp),
            humidity: None,
            light: None,
            voltage: None,
        }
    }

    #[test]
    fn full_day_motes_resample_to_linear_values() {
        // Three motes each reporting a linear ramp every 31 s all day.
        let mut records = Vec::new();
        for mote in 1..=3u32 {
            for e in 0..2787u64 {
                let t = e as f64 * 31.0;
                records.push(record(mote, e, t, mote as f64 * 10.0 + t / 3600.0));
            }
        }
        let slice = build_readings_matrix(&records, day(), 250, 0.5).unwrap();
        assert_eq!(slice.node_ids, vec![1, 2, 3]);
        assert_eq!(slice.matrix.rows(), 3);
        assert_eq!(slice.matrix.cols(), 250);
        assert!(slice.warning.is_some());
        for i in 0..3 {
            for j in 0..250 {
                let t = (j as f64 + 0.5) * 86400.0 / 250.0;
                let last = 2786.0 * 31.0;
                let expect = (i + 1) as f64 * 10.0 + t.min(last) / 3600.0;
                assert!((slice.matrix.as_matrix()[(i, j)] - expect).abs() < 1e-9, "({i},{j})");
            }
        }
    }

    #[test]
    fn sparse_mote_is_dropped() {
        let mut records = Vec::new();
        for e in 0..2787u64 {
            records.push(record(1, e, e as f64 * 31.0, 20.0));
        }
        for e in 0..55u64 {
            records.push(record(2, e, e as f64 * 31.0, 21.0));
        }
        let slice = build_readings_matrix(&records, day(), 250, 0.5).unwrap();
        assert_eq!(slice.node_ids, vec![1]);
        let dropped = slice.coverage.iter().find(|c| c.mote_id == 2).unwrap();
        assert!(!dropped.kept);
        assert!(dropped.fraction < 0.03);
    }

    #[test]
    fn resampling_clamps_at_ends_and_brackets_inside() {
        let records = vec![record(4, 0, 10_000.0, 10.0), record(4, 1, 20_000.0, 30.0), record(4, 2, 60_000.0, 20.0)];
        let slice = build_readings_matrix(&records, day(), 10, 0.0).unwrap();
        let row = slice.matrix.row(0);
        assert_eq!(row[0], 10.0);
        assert_eq!(row[9], 20.0);
        for v in &row {
            assert!((10.0..=30.0).contains(v));
        }
    }

    #[test]
    fn no_survivors_is_an_error() {
        let records = vec![record(1, 0, 0.0, 20.0)];
        assert!(matches!(build_readings_matrix(&records, day(), 250, 0.5), Err(Error::Data(_))));
        assert!(matches!(build_readings_matrix(&[], day(), 250, 0.5), Err(Error::Data(_))));
    }

    #[test]
    fn synthetic_rank_one() {
        let spec = SyntheticSpec { rows: 10, cols: 40, rank: 1, smoothness: 4, noise: 0.0 };
        let x = synth_low_rank_smooth(&spec, Seed(1)).unwrap();
        assert!(crate::mc_solver::rank1_approx_ratio(x.as_matrix()).unwrap() < 1e-10);
    }

    #[test]
    fn synthetic_rank_three_has_three_singular_values() {
        let spec = SyntheticSpec { rows: 50, cols: 250, rank: 3, smoothness: 10, noise: 0.0 };
        let x = synth_low_rank_smooth(&spec, Seed(2)).unwrap();
        let s = crate::linalg::svd(x.as_matrix()).unwrap().s;
        assert!(s[2] > 1e-6 * s[0]);
        assert!(s[3..].iter().all(|&v| v < 1e-9 * s[0]));
    }

    #[test]
    fn synthetic_rows_are_dct_sparse() {
        let spec = SyntheticSpec { rows: 20, cols: 250, rank: 3, smoothness: 10, noise: 0.0 };
        let x = synth_low_rank_smooth(&spec, Seed(3)).unwrap();
        let basis = crate::transform::TransformBasis::dct(250).unwrap();
        for i in 0..20 {
            let row = x.row(i);
            let c = basis.forward(&row).unwrap();
            let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(crate::transform::sparsity_profile(&c, 1e-9 * peak) <= 10 * 3);
        }
    }

    #[test]
    fn synthetic_errors() {
        let spec = SyntheticSpec { rows: 3, cols: 5, rank: 4, smoothness: 2, noise: 0.0 };
        assert!(matches!(synth_low_rank_smooth(&spec, Seed(0)), Err(Error::Param(_))));
    }

    #[test]
    fn matrix_csv_lines() {
        let m = ReadingsMatrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,2.5\n-3,0\n");
    }
}
