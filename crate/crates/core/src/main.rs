use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mccs::cs_solver::SparsityDomain;
use mccs::dataset::{intel_day, write_matrix_csv, SyntheticSpec, INTEL_DATA_URL};
use mccs::experiment::{
    analyze_source, emit_csv, emit_plot, parse_csv, run_experiment, DataSource, ExperimentConfig, Method, INTEL_COLUMNS,
};
use mccs::model::{Seed, DEFAULT_COLUMN_WEIGHT};
use mccs::transform::TransformKind;
use mccs::{Error, Result};

/// Sensor-network data gathering by matrix completion and compressive sensing.
#[derive(Parser)]
#[command(name = "mccs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report rank-1 ratio, per-node sparsity and coverage of a dataset.
    Analyze {
        #[command(flatten)]
        source: SourceArgs,
        /// Relative threshold for counting significant coefficients.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        /// Also write the readings matrix as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep and write results.csv and results.svg.
    Run(RunArgs),
    /// Render a results CSV as an SVG plot.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Intel Lab log (uncompressed data.txt).
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic world as J,N,rank,smoothness,sigma.
    #[arg(long, value_parser = parse_synthetic)]
    synthetic: Option<SyntheticSpec>,
    /// Minimum day coverage for an Intel mote to be kept.
    #[arg(long, default_value_t = 0.5)]
    min_coverage: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SourceArgs {
    fn source(&self) -> Result<DataSource> {
        match (&self.data, self.synthetic) {
            (Some(path), _) => {
                Ok(DataSource::Intel { path: path.clone(), day: intel_day(), min_coverage: self.min_coverage })
            }
            (None, Some(spec)) => Ok(DataSource::Synthetic(spec)),
            (None, None) => Err(Error::Param(format!(
                "give --data <log> or --synthetic J,N,r,s,sigma; the Intel Lab log is at {INTEL_DATA_URL}"
            ))),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Sample ratios I, comma separated.
    #[arg(long = "I", value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5])]
    sample_ratios: Vec<f64>,
    /// CS ratios h for MCCS, comma separated.
    #[arg(long = "h", value_delimiter = ',', default_values_t = [0.4])]
    cs_ratios: Vec<f64>,
    /// Ones per column of the sensing matrix.
    #[arg(long, default_value_t = DEFAULT_COLUMN_WEIGHT)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value = "dct")]
    basis: TransformKind,
    /// Sparsity domain for CS recovery: frame or partial.
    #[arg(long, default_value = "frame")]
    domain: SparsityDomain,
    /// Methods to run, comma separated (MC, MCCS).
    #[arg(long, value_delimiter = ',', default_values_t = [Method::Mc, Method::Mccs])]
    methods: Vec<Method>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Record wall-clock seconds in the CSV.
    #[arg(long)]
    timing: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_synthetic(s: &str) -> std::result::Result<SyntheticSpec, String> {
    let f: Vec<&str> = s.split(',').map(str::trim).collect();
    if f.len() != 5 {
        return Err("expected J,N,rank,smoothness,sigma".into());
    }
    let int = |v: &str| v.parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok(SyntheticSpec {
        rows: int(f[0])?,
        cols: int(f[1])?,
        rank: int(f[2])?,
        smoothness: int(f[3])?,
        noise: f[4].parse().map_err(|e| format!("{:?}: {e}", f[4]))?,
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { source, threshold, dump } => {
            let src = source.source()?;
            let seed = Seed(source.seed);
            let report = analyze_source(&src, seed, threshold)?;
            print!("{report}");
            if let Some(path) = dump {
                let matrix = match &src {
                    DataSource::Intel { path, day, min_coverage } => {
                        mccs::dataset::load_intel_slice(path, *day, INTEL_COLUMNS, *min_coverage)?.matrix
                    }
                    DataSource::Synthetic(_) => src.load(seed)?,
                };
                write_matrix_csv(&matrix, std::io::BufWriter::new(std::fs::File::create(path)?))?;
            }
            Ok(())
        }
        Command::Run(args) => {
            let mut config = ExperimentConfig::new(args.source.source()?);
            config.sample_ratios = args.sample_ratios;
            config.cs_ratios = args.cs_ratios;
            config.methods = args.methods;
            config.d = args.d;
            config.trials = args.trials;
            config.seed = Seed(args.source.seed);
            config.basis = args.basis;
            config.domain = args.domain;
            config.workers = args.workers;
            config.timing = args.timing;
            let rows = run_experiment(&config)?;
            std::fs::create_dir_all(&args.out)?;
            let csv = args.out.join("results.csv");
            let svg = args.out.join("results.svg");
            emit_csv(&rows, &csv)?;
            emit_plot(&rows, &svg)?;
            print!("{}", mccs::experiment::csv_string(&rows));
            for r in rows.iter().filter(|r| r.failures > 0) {
                eprintln!("{} I={} h={}: {} failed trials excluded", r.method, r.sample_ratio, r.cs_ratio, r.failures);
            }
            eprintln!("wrote {} and {}", csv.display(), svg.display());
            Ok(())
        }
        Command::Plot { csv, out } => {
            let rows = parse_csv(&std::fs::read_to_string(&csv)?)?;
            emit_plot(&rows, &out)
        }
    }
}
