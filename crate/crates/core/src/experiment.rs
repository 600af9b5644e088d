//! Seeded Monte-Carlo sweeps comparing MCCS against MC-only gathering, with
//! CSV and SVG output and a dataset analysis report.

use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use chrono::NaiveDate;

use crate::cs_solver::{BasisPursuitConfig, SparsityDomain};
use crate::dataset::{
    intel_day, load_intel_slice, synth_low_rank_smooth, CoverageEntry, SyntheticSpec, DEFAULT_MIN_COVERAGE,
};
use crate::encoder::Encoder;
use crate::error::{param_err, Error, Result};
use crate::mc_solver::{rank1_approx_ratio, CompletionConfig};
use crate::model::{generate_sampling_mask, PipelineParams, SamplingMask, Seed, DEFAULT_COLUMN_WEIGHT};
use crate::pipeline::{encode_readings, mc_only_baseline, ReadingsMatrix, Sink};
use crate::transform::{sparsity_profile, TransformBasis, TransformKind};

/// CSV header written by [`emit_csv`].
pub const CSV_HEADER: &str = "method,I,h,d,trials,mean_rel_err,std_rel_err,mean_iterations,wall_seconds";

/// Columns of the Intel slice.
pub const INTEL_COLUMNS: usize = 250;

// Seed streams outside the trial-index range.
const SENSING_STREAM: u64 = u64::MAX;
const WORLD_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Mc,
    Mccs,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mc => "MC",
            Method::Mccs => "MCCS",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MC" => Ok(Method::Mc),
            "MCCS" => Ok(Method::Mccs),
            other => Err(Error::Format(format!("unknown method {other:?}"))),
        }
    }
}

/// Where the ground-truth matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Intel { path: PathBuf, day: NaiveDate, min_coverage: f64 },
    /// The world is drawn from a stream of the master seed.
    Synthetic(SyntheticSpec),
}

impl DataSource {
    pub fn intel(path: impl Into<PathBuf>) -> Self {
        DataSource::Intel { path: path.into(), day: intel_day(), min_coverage: DEFAULT_MIN_COVERAGE }
    }

    pub fn load(&self, master: Seed) -> Result<ReadingsMatrix> {
        match self {
            DataSource::Intel { path, day, min_coverage } => Ok(load_intel_slice(path, *day, INTEL_COLUMNS, *min_coverage)?.matrix),
            DataSource::Synthetic(spec) => synth_low_rank_smooth(spec, master.derive(WORLD_STREAM)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    /// Sample ratios `I`, in output order.
    pub sample_ratios: Vec<f64>,
    /// CS ratios `h` for the MCCS rows.
    pub cs_ratios: Vec<f64>,
    pub methods: Vec<Method>,
    pub d: usize,
    pub trials: usize,
    pub seed: Seed,
    pub basis: TransformKind,
    pub domain: SparsityDomain,
    pub cs: BasisPursuitConfig,
    pub mc: CompletionConfig,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Record wall-clock time per cell. Off by default so output bytes
    /// depend only on the inputs.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(source: DataSource) -> Self {
        ExperimentConfig {
            source,
            sample_ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            cs_ratios: vec![0.4],
            methods: vec![Method::Mc, Method::Mccs],
            d: DEFAULT_COLUMN_WEIGHT,
            trials: 100,
            seed: Seed(0),
            basis: TransformKind::Dct,
            domain: SparsityDomain::default(),
            cs: BasisPursuitConfig::default(),
            mc: CompletionConfig::default(),
            workers: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return param_err("trials must be at least 1");
        }
        if self.sample_ratios.is_empty() || self.methods.is_empty() {
            return param_err("nothing to run: no sample ratios or no methods");
        }
        if self.methods.contains(&Method::Mccs) && self.cs_ratios.is_empty() {
            return param_err("MCCS needs at least one CS ratio");
        }
        for &r in self.sample_ratios.iter().chain(&self.cs_ratios) {
            if !(r > 0.0 && r <= 1.0) {
                return param_err(format!("ratio {r} outside (0, 1]"));
            }
        }
        if self.workers == Some(0) {
            return param_err("workers must be at least 1");
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &i in &self.sample_ratios {
            for &method in &self.methods {
                match method {
                    Method::Mc => cells.push(Cell { method, i, h: 1.0 }),
                    Method::Mccs => cells.extend(self.cs_ratios.iter().map(|&h| Cell { method, i, h })),
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: Method,
    i: f64,
    h: f64,
}

/// Aggregate of one (method, I, h) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub method: Method,
    pub sample_ratio: f64,
    /// 1.0 for MC rows.
    pub cs_ratio: f64,
    pub d: usize,
    /// Trials that completed.
    pub trials: usize,
    pub mean_rel_err: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std_rel_err: f64,
    /// Mean SVT iterations.
    pub mean_iterations: f64,
    /// Summed trial time, or 0 unless timing was requested.
    pub wall_seconds: f64,
    /// Trials that failed and were left out. Not part of the CSV.
    pub failures: usize,
}

struct TrialOutcome {
    rel_err: f64,
    iterations: usize,
    seconds: f64,
}

/// Runs every cell of the sweep. Trial `t` draws node masks from
/// `seed.derive(t)`, so MC and MCCS at the same `I` see identical masks.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<StatsRow>> {
    config.validate()?;
    let truth = config.source.load(config.seed)?;
    run_on_matrix(config, &truth)
}

/// [`run_experiment`] against an already loaded matrix.
pub fn run_on_matrix(config: &ExperimentConfig, truth: &ReadingsMatrix) -> Result<Vec<StatsRow>> {
    config.validate()?;
    let (j, n) = (truth.rows(), truth.cols());
    let sensing_seed = config.seed.derive(SENSING_STREAM);
    let cells = config.cells();

    struct Prepared {
        params: PipelineParams,
        pipeline: Option<(Encoder, Sink)>,
    }
    let mut prepared = Vec::with_capacity(cells.len());
    for cell in &cells {
        let params = PipelineParams::from_ratios(n, cell.i, cell.h, config.d, j)?;
        let pipeline = match cell.method {
            Method::Mc => None,
            Method::Mccs => {
                let len = match config.domain {
                    SparsityDomain::Partial => params.q,
                    SparsityDomain::Frame => params.n,
                };
                let basis = TransformBasis::new(config.basis, len)?;
                Some((Encoder::new(params, sensing_seed)?, Sink::new(params, sensing_seed, basis, config.cs, config.mc)?))
            }
        };
        prepared.push(Prepared { params, pipeline });
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..config.trials).map(move |t| (c, t))).collect();
    let run_job = |&(c, t): &(usize, usize)| -> Result<TrialOutcome> {
        let started = Instant::now();
        let frame_seed = config.seed.derive(t as u64);
        let prep = &prepared[c];
        let (rel_err, iterations) = match &prep.pipeline {
            None => {
                let masks = node_masks(frame_seed, &prep.params)?;
                let r = mc_only_baseline(truth, &masks, &config.mc)?;
                (r.relative_error.unwrap_or(f64::NAN), r.completion.iterations)
            }
            Some((encoder, sink)) => {
                let packets = encode_readings(encoder, truth, t as u32, frame_seed)?;
                let r = sink.recover(&packets)?.score(truth)?;
                (r.relative_error.unwrap_or(f64::NAN), r.completion.iterations)
            }
        };
        Ok(TrialOutcome { rel_err, iterations, seconds: started.elapsed().as_secs_f64() })
    };
    let outcomes = dispatch(&jobs, config.workers, run_job)?;

    let mut rows = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let slice = &outcomes[c * config.trials..(c + 1) * config.trials];
        let ok: Vec<&TrialOutcome> = slice.iter().filter_map(|r| r.as_ref().ok()).collect();
        let failures = slice.len() - ok.len();
        if failures * 5 > config.trials || ok.is_empty() {
            let first = slice.iter().find_map(|r| r.as_ref().err()).map(|e| e.to_string()).unwrap_or_default();
            return Err(Error::Numerical(format!(
                "{} I={} h={}: {failures} of {} trials failed (first: {first})",
                cell.method, cell.i, cell.h, config.trials
            )));
        }
        let errs: Vec<f64> = ok.iter().map(|o| o.rel_err).collect();
        let (mean, std) = mean_std(&errs);
        let mean_iterations = ok.iter().map(|o| o.iterations as f64).sum::<f64>() / ok.len() as f64;
        let wall_seconds = if config.timing { ok.iter().map(|o| o.seconds).sum() } else { 0.0 };
        rows.push(StatsRow {
            method: cell.method,
            sample_ratio: cell.i,
            cs_ratio: cell.h,
            d: config.d,
            trials: ok.len(),
            mean_rel_err: mean,
            std_rel_err: std,
            mean_iterations,
            wall_seconds,
            failures,
        });
    }
    Ok(rows)
}

fn node_masks(frame_seed: Seed, params: &PipelineParams) -> Result<Vec<SamplingMask>> {
    (0..params.j)
        .map(|i| generate_sampling_mask(crate::encoder::mask_seed(frame_seed, i), params.n, params.q))
        .collect()
}

/// Sample mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(feature = "parallel")]
fn dispatch<T: Sync, R: Send>(jobs: &[T], workers: Option<usize>, f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    match workers {
        None => Ok(crate::pipeline::par_map(jobs, f)),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Param(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(|| crate::pipeline::par_map(jobs, f)))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn dispatch<T: Sync, R: Send>(jobs: &[T], _workers: Option<usize>, f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    Ok(jobs.iter().map(f).collect())
}

/// Formats `v` with six significant digits, dropping trailing zeros.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// CSV text for `rows`, header first, LF line endings.
pub fn csv_string(rows: &[StatsRow]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.method.to_string(),
            format_sig6(r.sample_ratio),
            format_sig6(r.cs_ratio),
            r.d.to_string(),
            r.trials.to_string(),
            format_sig6(r.mean_rel_err),
            format_sig6(r.std_rel_err),
            format_sig6(r.mean_iterations),
            format_sig6(r.wall_seconds),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn emit_csv(rows: &[StatsRow], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, csv_string(rows))?;
    Ok(())
}

/// Parses text produced by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<StatsRow>> {
    let format = |e: csv::Error| Error::Format(e.to_string());
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(format)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number {s:?}")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad integer {s:?}")));
    reader
        .records()
        .map(|rec| {
            let f = rec.map_err(format)?;
            Ok(StatsRow {
                method: f[0].parse()?,
                sample_ratio: num(&f[1])?,
                cs_ratio: num(&f[2])?,
                d: int(&f[3])?,
                trials: int(&f[4])?,
                mean_rel_err: num(&f[5])?,
                std_rel_err: num(&f[6])?,
                mean_iterations: num(&f[7])?,
                wall_seconds: num(&f[8])?,
                failures: 0,
            })
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// SVG plot of mean error against `I` with ±1 std bars, one series per
/// method and CS ratio. Output depends only on `rows`.
pub fn plot_svg(rows: &[StatsRow]) -> Result<String> {
    if rows.is_empty() {
        return param_err("nothing to plot");
    }
    let mut series: Vec<(Method, u64, Vec<&StatsRow>)> = Vec::new();
    for r in rows {
        let key = (r.method, r.cs_ratio.to_bits());
        match series.iter_mut().find(|s| (s.0, s.1) == key) {
            Some(s) => s.2.push(r),
            None => series.push((r.method, key.1, vec![r])),
        }
    }
    for s in &mut series {
        s.2.sort_by(|a, b| a.sample_ratio.total_cmp(&b.sample_ratio));
    }

    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 150.0, 30.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xmin = rows.iter().map(|r| r.sample_ratio).fold(f64::INFINITY, f64::min);
    let xmax = rows.iter().map(|r| r.sample_ratio).fold(f64::NEG_INFINITY, f64::max);
    let (xmin, xmax) = if xmax > xmin { (xmin, xmax) } else { (xmin - 0.05, xmax + 0.05) };
    let ymax = rows.iter().map(|r| r.mean_rel_err + r.std_rel_err.max(0.0)).fold(0.0, f64::max);
    let ymax = if ymax > 0.0 && ymax.is_finite() { ymax * 1.1 } else { 1.0 };
    let px = |x: f64| left + (x - xmin) / (xmax - xmin) * pw;
    let py = |y: f64| top + ph - y.max(0.0) / ymax * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<g stroke="#000" fill="none"><line x1="{left}" y1="{0}" x2="{1}" y2="{0}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{0}"/></g>"##,
        top + ph,
        left + pw
    );
    let mut xs: Vec<f64> = rows.iter().map(|r| r.sample_ratio).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    s.push_str(r#"<g font-family="sans-serif" font-size="11" text-anchor="middle">"#);
    s.push('\n');
    for &x in &xs {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, px(x), top + ph + 16.0, format_sig6(x));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">sample ratio I</text>"#, left + pw / 2.0, h - 12.0);
    s.push_str("</g>\n");
    s.push_str(r#"<g font-family="sans-serif" font-size="11" text-anchor="end">"#);
    s.push('\n');
    for k in 0..=4 {
        let y = ymax * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, left - 6.0, py(y) + 4.0, format_sig6(y));
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<text font-family="sans-serif" font-size="11" transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">relative error</text>"#,
        top + ph / 2.0
    );

    for (k, (method, h_bits, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let label = match method {
            Method::Mc => "MC".to_string(),
            Method::Mccs => format!("MCCS h={}", format_sig6(f64::from_bits(*h_bits))),
        };
        let _ = writeln!(s, r#"<g stroke="{color}" fill="{color}">"#);
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", px(r.sample_ratio), py(r.mean_rel_err))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" points="{}"/>"#, path.join(" "));
        }
        for r in pts {
            let (x, y) = (px(r.sample_ratio), py(r.mean_rel_err));
            let (lo, hi) = (py(r.mean_rel_err - r.std_rel_err), py(r.mean_rel_err + r.std_rel_err));
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}"/>"#);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}"/>"#, x - 4.0, x + 4.0);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}"/>"#, x - 4.0, x + 4.0);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5"/>"#);
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="10" height="10"/>"#, left + pw + 16.0, ly - 9.0);
        let _ = writeln!(
            s,
            r#"<text stroke="none" fill="black" font-family="sans-serif" font-size="11" x="{:.2}" y="{ly:.2}">{label}</text>"#,
            left + pw + 32.0
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(rows: &[StatsRow], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, plot_svg(rows)?)?;
    Ok(())
}

/// Coefficient counts of one row after max-abs normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSparsity {
    pub row: usize,
    /// Mote id for Intel data.
    pub label: Option<u32>,
    pub wavelet: usize,
    pub dct: usize,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub rows: usize,
    pub cols: usize,
    pub rank1_ratio: f64,
    pub threshold: f64,
    pub wavelet_levels: usize,
    pub sparsity: Vec<RowSparsity>,
    pub coverage: Vec<CoverageEntry>,
    pub warning: Option<String>,
}

/// Coefficients of `x` whose magnitude exceeds `threshold · max|c|`.
pub fn normalized_sparsity(basis: &TransformBasis, x: &[f64], threshold: f64) -> Result<usize> {
    let c = basis.forward(x)?;
    let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(0);
    }
    Ok(sparsity_profile(&c, threshold * peak))
}

/// Low-rank and sparsity summary of a readings matrix.
pub fn analyze(x: &ReadingsMatrix, labels: Option<&[u32]>, threshold: f64) -> Result<AnalysisReport> {
    if !(threshold >= 0.0) {
        return param_err("threshold must be non-negative");
    }
    let cols = x.cols();
    let wavelet = TransformBasis::new(TransformKind::Wavelet97, cols)?;
    let dct = TransformBasis::dct(cols)?;
    let sparsity = (0..x.rows())
        .map(|i| {
            let row = x.row(i);
            Ok(RowSparsity {
                row: i,
                label: labels.and_then(|l| l.get(i).copied()),
                wavelet: normalized_sparsity(&wavelet, &row, threshold)?,
                dct: normalized_sparsity(&dct, &row, threshold)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        rows: x.rows(),
        cols,
        rank1_ratio: rank1_approx_ratio(x.as_matrix())?,
        threshold,
        wavelet_levels: wavelet.levels(),
        sparsity,
        coverage: Vec::new(),
        warning: None,
    })
}

/// Loads the source and analyzes it, attaching the Intel coverage report.
pub fn analyze_source(source: &DataSource, master: Seed, threshold: f64) -> Result<AnalysisReport> {
    match source {
        DataSource::Intel { path, day, min_coverage } => {
            let slice = load_intel_slice(path, *day, INTEL_COLUMNS, *min_coverage)?;
            let mut report = analyze(&slice.matrix, Some(&slice.node_ids), threshold)?;
            report.coverage = slice.coverage;
            report.warning = slice.warning;
            Ok(report)
        }
        DataSource::Synthetic(_) => analyze(&source.load(master)?, None, threshold),
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "J = {}, N = {}", self.rows, self.cols)?;
        writeln!(f, "rank-1 ratio = {}", format_sig6(self.rank1_ratio))?;
        if let Some(w) = &self.warning {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(
            f,
            "coefficients above {} of peak (9/7 wavelet, {} levels; DCT):",
            format_sig6(self.threshold),
            self.wavelet_levels
        )?;
        writeln!(f, "  row  node  wavelet  dct")?;
        for s in &self.sparsity {
            let label = s.label.map_or_else(|| "-".to_string(), |l| l.to_string());
            writeln!(f, "  {:>3}  {:>4}  {:>7}  {:>3}", s.row, label, s.wavelet, s.dct)?;
        }
        if !self.coverage.is_empty() {
            writeln!(f, "coverage:")?;
            writeln!(f, "  mote  readings  fraction  kept")?;
            for c in &self.coverage {
                writeln!(f, "  {:>4}  {:>8}  {:>8.3}  {}", c.mote_id, c.readings, c.fraction, if c.kept { "yes" } else { "no" })?;
            }
        }
        Ok(())
    }
}
