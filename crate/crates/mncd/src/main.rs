//! Command-line front end for compression-based pixel classification.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::warn;

use mncd::compressors::{Backend, Compressor};
use mncd::dataset::{load_dataset, Dataset};
use mncd::distance::DistanceMode;
use mncd::error::Result;
use mncd::run::{
    self, evaluate, fewshot, sweep_alphabet, sweep_compressor, sweep_csv, write_report_json,
    ExtremaSource, RunConfig, SweepReport,
};

#[derive(Parser)]
#[command(
    name = "mncd",
    version,
    about = "Classify multichannel pixel time series by compression distance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single train/test evaluation with a full JSON report.
    Evaluate(EvaluateArgs),
    /// Accuracy at several per-class training sizes over repeated trials.
    Fewshot(FewshotArgs),
    /// Accuracy across alphabet lengths under the subsample protocol.
    SweepAlphabet(SweepAlphabetArgs),
    /// Accuracy across compression backends under the subsample protocol.
    SweepCompressor(SweepCompressorArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// PTS-CSV dataset file.
    #[arg(long)]
    data: PathBuf,

    /// JSON manifest with dimensions and class names.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Alphabet length, 2 to 52.
    #[arg(long, default_value_t = 22)]
    alphabet_len: usize,

    /// Neighbors consulted per prediction.
    #[arg(short, long, default_value_t = 2)]
    k: usize,

    /// Compression backend: gzip, bz2, or zstd.
    #[arg(long, default_value = "gzip")]
    compressor: String,

    /// Compression level; defaults to the backend's standard level.
    #[arg(long)]
    level: Option<u32>,

    /// Distance mode: multiscale or whole.
    #[arg(long, default_value = "multiscale")]
    distance: String,

    /// Pixels defining the quantization range: all or train.
    #[arg(long, default_value = "all")]
    extrema: String,

    /// Seed for the train/test split.
    #[arg(long, default_value_t = 32)]
    seed: u64,

    /// Fraction of each class assigned to training.
    #[arg(long, default_value_t = 0.2)]
    train_fraction: f64,

    /// Drop classes with fewer samples than this; 0 keeps everything.
    #[arg(long, default_value_t = 5)]
    min_class_size: usize,

    /// Rayon worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the test-by-train distance matrix to this file (evaluate only).
    #[arg(long)]
    save_distances: Option<PathBuf>,
}

impl CommonArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let backend: Backend = self.compressor.parse()?;
        let compressor = match self.level {
            Some(level) => Compressor::new(backend, level)?,
            None => Compressor::with_default_level(backend),
        };
        let mode: DistanceMode = self.distance.parse()?;
        let extrema: ExtremaSource = self.extrema.parse()?;
        Ok(RunConfig {
            alphabet_len: self.alphabet_len,
            k: self.k,
            compressor,
            mode,
            seed: self.seed,
            train_fraction: self.train_fraction,
            min_class_size: self.min_class_size,
            extrema,
            workers: self.workers,
            save_distances: self.save_distances.clone(),
        })
    }

    fn load(&self) -> Result<Dataset> {
        load_dataset(&self.data, self.manifest.as_deref()).map_err(|e| e.in_stage("load"))
    }

    fn warn_if_save_distances(&self, command: &str) {
        if self.save_distances.is_some() {
            warn!("--save-distances only applies to evaluate; {command} ignores it");
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct FewshotArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Per-class training sizes to try.
    #[arg(long, value_delimiter = ',', default_values_t = run::DEFAULT_FEWSHOT_SHOTS)]
    shots: Vec<usize>,

    /// Seeds, one trial each; at least two.
    #[arg(long, value_delimiter = ',', default_values_t = run::DEFAULT_TRIAL_SEEDS)]
    trial_seeds: Vec<u64>,
}

#[derive(Args)]
struct SweepAlphabetArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Alphabet lengths to score.
    #[arg(long, value_delimiter = ',', default_values_t = run::DEFAULT_SWEEP_LENGTHS)]
    lengths: Vec<usize>,

    /// Seeds, one trial each; at least two.
    #[arg(long, value_delimiter = ',', default_values_t = run::DEFAULT_TRIAL_SEEDS)]
    trial_seeds: Vec<u64>,

    /// Fraction of each class drawn before the 50/50 trial split.
    #[arg(long, default_value_t = run::DEFAULT_SUBSAMPLE_FRACTION)]
    subsample_fraction: f64,

    /// Also write the sweep table as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCompressorArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Backends to score, each at its default level.
    #[arg(long, value_delimiter = ',', default_values = ["gzip", "bzip2", "zstd"])]
    backends: Vec<String>,

    /// Seeds, one trial each; at least two.
    #[arg(long, value_delimiter = ',', default_values_t = run::DEFAULT_TRIAL_SEEDS)]
    trial_seeds: Vec<u64>,

    /// Fraction of each class drawn before the 50/50 trial split.
    #[arg(long, default_value_t = run::DEFAULT_SUBSAMPLE_FRACTION)]
    subsample_fraction: f64,

    /// Also write the sweep table as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn write_sweep_outputs(
    report: &SweepReport,
    out: Option<&PathBuf>,
    csv: Option<&PathBuf>,
) -> Result<()> {
    write_report_json(out.map(|p| p.as_path()), report)?;
    if let Some(path) = csv {
        std::fs::write(path, sweep_csv(report)).map_err(|source| mncd::error::Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Evaluate(args) => {
            let config = args.common.run_config()?;
            let dataset = args.common.load()?;
            let report = evaluate(&dataset, &config)?;
            write_report_json(args.common.out.as_deref(), &report)
        }
        Command::Fewshot(args) => {
            args.common.warn_if_save_distances("fewshot");
            let config = args.common.run_config()?;
            let dataset = args.common.load()?;
            let report = fewshot(&dataset, &config, &args.shots, &args.trial_seeds)?;
            write_report_json(args.common.out.as_deref(), &report)
        }
        Command::SweepAlphabet(args) => {
            args.common.warn_if_save_distances("sweep-alphabet");
            let config = args.common.run_config()?;
            let dataset = args.common.load()?;
            let report = sweep_alphabet(
                &dataset,
                &config,
                &args.lengths,
                &args.trial_seeds,
                args.subsample_fraction,
            )?;
            write_sweep_outputs(&report, args.common.out.as_ref(), args.csv.as_ref())
        }
        Command::SweepCompressor(mut args) => {
            args.common.warn_if_save_distances("sweep-compressor");
            if args.common.level.take().is_some() {
                warn!("sweep-compressor scores each backend at its default level; --level ignored");
            }
            let config = args.common.run_config()?;
            let backends = args
                .backends
                .iter()
                .map(|b| b.parse::<Backend>())
                .collect::<Result<Vec<_>>>()?;
            let dataset = args.common.load()?;
            let report = sweep_compressor(
                &dataset,
                &config,
                &backends,
                &args.trial_seeds,
                args.subsample_fraction,
            )?;
            write_sweep_outputs(&report, args.common.out.as_ref(), args.csv.as_ref())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = real_main() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
