//! End-to-end evaluation pipelines: single runs, few-shot trials, and
//! parameter sweeps, with JSON reports.
//!
//! Every pipeline is deterministic for a given configuration: splits are
//! seeded, distances are exact, and voting breaks ties by position. Two
//! runs with the same inputs produce identical reports except for
//! `runtime_seconds`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{classify_all, knn_predict, Prediction};
use crate::compressors::{Backend, Compressor, LengthCache};
use crate::dataset::{
    extrema_of_indices, filter_min_class_size, global_extrema, sample_few_shot,
    split_stratified, subsample_protocol, Dataset, Split,
};
use crate::distance::{
    distance_matrix, prepare_pixel, prepared_distance, save_distance_matrix, DistanceMode,
};
use crate::embedding::{cross_transform, SymbolicEmbedding};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_trials, ConfusionMatrix, TrialAggregate};
use crate::symbolic::{build_breakpoints, symbolize_all, Alphabet, MAX_ALPHABET_LEN, MIN_ALPHABET_LEN};

/// Trial seeds used by few-shot runs and sweeps unless overridden.
pub const DEFAULT_TRIAL_SEEDS: [u64; 5] = [2024, 21, 32, 400, 47];

/// Per-class training sizes tried by few-shot runs unless overridden.
pub const DEFAULT_FEWSHOT_SHOTS: [usize; 4] = [50, 20, 10, 5];

/// Alphabet lengths swept unless overridden: 2 through 52 in steps of 5.
pub const DEFAULT_SWEEP_LENGTHS: [usize; 11] = [2, 7, 12, 17, 22, 27, 32, 37, 42, 47, 52];

/// Fraction of each class drawn by the sweep subsampling protocol.
pub const DEFAULT_SUBSAMPLE_FRACTION: f64 = 0.2;

/// Which pixels define the quantization range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtremaSource {
    /// Global minimum and maximum over the whole dataset.
    #[default]
    All,
    /// Extrema of the training side only; out-of-range test values clamp
    /// to the end symbols.
    Train,
}

impl ExtremaSource {
    pub fn id(self) -> &'static str {
        match self {
            ExtremaSource::All => "all",
            ExtremaSource::Train => "train",
        }
    }
}

impl std::fmt::Display for ExtremaSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExtremaSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(ExtremaSource::All),
            "train" => Ok(ExtremaSource::Train),
            other => Err(Error::Argument(format!(
                "unknown extrema policy `{other}`; supported: all, train"
            ))),
        }
    }
}

/// Everything a single evaluation needs beyond the dataset itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alphabet_len: usize,
    pub k: usize,
    pub compressor: Compressor,
    pub mode: DistanceMode,
    pub seed: u64,
    pub train_fraction: f64,
    pub min_class_size: usize,
    pub extrema: ExtremaSource,
    /// Rayon worker count; `None` uses the global default pool.
    pub workers: Option<usize>,
    /// When set, the full test-by-train matrix is materialized and written
    /// here; otherwise rows are classified as they are computed.
    pub save_distances: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alphabet_len: 22,
            k: 2,
            compressor: Compressor::with_default_level(Backend::Gzip),
            mode: DistanceMode::MultiScale,
            seed: 32,
            train_fraction: 0.2,
            min_class_size: 5,
            extrema: ExtremaSource::All,
            workers: None,
            save_distances: None,
        }
    }
}

/// Configuration echo embedded in every report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReportConfig {
    pub alphabet_len: usize,
    pub k: usize,
    pub compressor: String,
    pub level: u32,
    pub distance: String,
    pub extrema: String,
    pub seed: u64,
    pub train_fraction: f64,
    pub min_class_size: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub data_min: f64,
    pub data_max: f64,
    pub classes: Vec<u32>,
}

/// Scores and provenance of one evaluation.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EvaluationReport {
    pub oa: f64,
    pub aa: f64,
    pub miou: f64,
    pub per_class_iou: BTreeMap<u32, f64>,
    pub confusion: Vec<Vec<u64>>,
    pub config: ReportConfig,
    pub runtime_seconds: f64,
}

/// One metric aggregated over trial seeds: mean, 95% CI half-width, and
/// the per-seed values in seed order.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci95_half_width: f64,
    pub per_seed: Vec<f64>,
}

impl From<TrialAggregate> for MetricSummary {
    fn from(agg: TrialAggregate) -> Self {
        MetricSummary {
            mean: agg.mean,
            ci95_half_width: agg.half_width,
            per_seed: agg.values,
        }
    }
}

/// One few-shot setting aggregated over trial seeds.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FewShotRow {
    pub shots: usize,
    pub oa: MetricSummary,
    pub aa: MetricSummary,
    pub miou: MetricSummary,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FewShotReport {
    pub rows: Vec<FewShotRow>,
    pub seeds: Vec<u64>,
    pub config: ReportConfig,
    pub runtime_seconds: f64,
}

/// One swept parameter value aggregated over trial seeds.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub parameter: String,
    pub level: u32,
    pub oa: MetricSummary,
    pub aa: MetricSummary,
    pub miou: MetricSummary,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepReport {
    pub sweep: String,
    pub rows: Vec<SweepRow>,
    pub seeds: Vec<u64>,
    pub subsample_fraction: f64,
    pub config: ReportConfig,
    pub runtime_seconds: f64,
}

/// Runs `f` on a dedicated rayon pool of `workers` threads, or on the
/// global pool when `workers` is `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            if n == 0 {
                return Err(Error::Argument("worker count must be >= 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Validation(format!("building thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn resolve_extrema(
    dataset: &Dataset,
    source: ExtremaSource,
    train_indices: &[usize],
) -> Result<(f64, f64)> {
    match source {
        ExtremaSource::All => global_extrema(dataset),
        ExtremaSource::Train => extrema_of_indices(dataset, train_indices),
    }
    .map_err(|e| e.in_stage("quantize"))
}

/// Symbolizes and cross-transforms every pixel of a dataset.
fn embed_all(
    dataset: &Dataset,
    alphabet_len: usize,
    extrema: (f64, f64),
) -> Result<Vec<SymbolicEmbedding>> {
    let alphabet = Alphabet::new(alphabet_len).map_err(|e| e.in_stage("quantize"))?;
    let breakpoints = build_breakpoints(extrema.0, extrema.1, alphabet_len)
        .map_err(|e| e.in_stage("quantize"))?;
    let refs: Vec<&crate::dataset::Pixel> = dataset.pixels().iter().collect();
    let symbolic = symbolize_all(&refs, &breakpoints, &alphabet);
    symbolic
        .par_iter()
        .map(cross_transform)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("embed"))
}

/// Classifies `test_indices` against `train_indices`, row-parallel. Each
/// pixel's per-part compressed lengths are computed through the shared
/// cache, so repeated trials only pay for joint compressions.
fn classify_indices(
    embeddings: &[SymbolicEmbedding],
    labels: &[u32],
    test_indices: &[usize],
    train_indices: &[usize],
    comp: &Compressor,
    mode: DistanceMode,
    k: usize,
    cache: &LengthCache,
) -> Result<Vec<Prediction>> {
    let train_prepared = train_indices
        .par_iter()
        .map(|&i| prepare_pixel(mode, comp, Some(cache), &embeddings[i]))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("distance"))?;
    let train_labels: Vec<u32> = train_indices.iter().map(|&i| labels[i]).collect();
    test_indices
        .par_iter()
        .map(|&ti| {
            let test_prepared = prepare_pixel(mode, comp, Some(cache), &embeddings[ti])
                .map_err(|e| e.in_stage("distance"))?;
            let row = train_prepared
                .iter()
                .map(|tr| prepared_distance(comp, &test_prepared, tr))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| e.in_stage("distance"))?;
            knn_predict(&row, &train_labels, k).map_err(|e| e.in_stage("classify"))
        })
        .collect()
}

/// Per-trial scores used by few-shot runs and sweeps.
#[derive(Debug, Clone, Copy)]
struct TrialScores {
    oa: f64,
    aa: f64,
    miou: f64,
}

fn score_indices(
    embeddings: &[SymbolicEmbedding],
    labels: &[u32],
    test_indices: &[usize],
    train_indices: &[usize],
    comp: &Compressor,
    mode: DistanceMode,
    k: usize,
    cache: &LengthCache,
) -> Result<TrialScores> {
    let predictions =
        classify_indices(embeddings, labels, test_indices, train_indices, comp, mode, k, cache)?;
    let truth: Vec<u32> = test_indices.iter().map(|&i| labels[i]).collect();
    let predicted: Vec<u32> = predictions.iter().map(|p| p.label).collect();
    let confusion =
        ConfusionMatrix::from_labels(&truth, &predicted).map_err(|e| e.in_stage("score"))?;
    Ok(TrialScores {
        oa: confusion.overall_accuracy(),
        aa: confusion.average_accuracy(),
        miou: confusion.mean_iou(),
    })
}

/// Aggregates per-trial scores into (OA, AA, mIoU) summaries.
fn summarize(trials: &[TrialScores]) -> Result<(MetricSummary, MetricSummary, MetricSummary)> {
    let collect = |f: fn(&TrialScores) -> f64| -> Vec<f64> { trials.iter().map(f).collect() };
    let oa = aggregate_trials(&collect(|t| t.oa)).map_err(|e| e.in_stage("score"))?;
    let aa = aggregate_trials(&collect(|t| t.aa)).map_err(|e| e.in_stage("score"))?;
    let miou = aggregate_trials(&collect(|t| t.miou)).map_err(|e| e.in_stage("score"))?;
    Ok((oa.into(), aa.into(), miou.into()))
}

fn report_config(
    config: &RunConfig,
    dataset: &Dataset,
    n_train: usize,
    n_test: usize,
    extrema: (f64, f64),
) -> ReportConfig {
    ReportConfig {
        alphabet_len: config.alphabet_len,
        k: config.k,
        compressor: config.compressor.backend().id().to_string(),
        level: config.compressor.level(),
        distance: config.mode.id().to_string(),
        extrema: config.extrema.id().to_string(),
        seed: config.seed,
        train_fraction: config.train_fraction,
        min_class_size: config.min_class_size,
        n_train,
        n_test,
        data_min: extrema.0,
        data_max: extrema.1,
        classes: dataset.class_ids(),
    }
}

/// Splits, symbolizes, classifies, and scores one dataset under `config`.
pub fn evaluate(dataset: &Dataset, config: &RunConfig) -> Result<EvaluationReport> {
    let start = Instant::now();
    let dataset = filter_min_class_size(dataset.clone(), config.min_class_size)
        .map_err(|e| e.in_stage("filter"))?;
    let split = split_stratified(&dataset, config.train_fraction, config.seed)
        .map_err(|e| e.in_stage("split"))?;
    let extrema = resolve_extrema(&dataset, config.extrema, &split.train_indices)?;
    info!(
        "evaluating {} train / {} test pixels, {} classes",
        split.train_indices.len(),
        split.test_indices.len(),
        dataset.class_ids().len()
    );

    let config_echo = report_config(
        config,
        &dataset,
        split.train_indices.len(),
        split.test_indices.len(),
        extrema,
    );
    let predictions = with_workers(config.workers, || -> Result<Vec<Prediction>> {
        let embeddings = embed_all(&dataset, config.alphabet_len, extrema)?;
        let cache = LengthCache::new();
        if let Some(matrix_path) = &config.save_distances {
            let test: Vec<SymbolicEmbedding> = split
                .test_indices
                .iter()
                .map(|&i| embeddings[i].clone())
                .collect();
            let train: Vec<SymbolicEmbedding> = split
                .train_indices
                .iter()
                .map(|&i| embeddings[i].clone())
                .collect();
            let matrix =
                distance_matrix(config.mode, &config.compressor, Some(&cache), &test, &train)
                    .map_err(|e| e.in_stage("distance"))?;
            save_distance_matrix(matrix_path, &matrix).map_err(|e| e.in_stage("write"))?;
            info!(
                "wrote {} x {} distances to {}",
                matrix.n_test(),
                matrix.n_train(),
                matrix_path.display()
            );
            classify_all(&matrix, config.k).map_err(|e| e.in_stage("classify"))
        } else {
            classify_indices(
                &embeddings,
                &dataset.labels(),
                &split.test_indices,
                &split.train_indices,
                &config.compressor,
                config.mode,
                config.k,
                &cache,
            )
        }
    })??;

    let ties = predictions.iter().filter(|p| p.tie_broken).count();
    if ties > 0 {
        info!("{ties} of {} predictions needed the tie-break", predictions.len());
    }
    let truth: Vec<u32> = split
        .test_indices
        .iter()
        .map(|&i| dataset.pixel(i).label())
        .collect();
    let predicted: Vec<u32> = predictions.iter().map(|p| p.label).collect();
    let confusion =
        ConfusionMatrix::from_labels(&truth, &predicted).map_err(|e| e.in_stage("score"))?;
    let per_class_iou: BTreeMap<u32, f64> = confusion
        .classes()
        .iter()
        .copied()
        .zip(confusion.per_class_iou())
        .collect();

    Ok(EvaluationReport {
        oa: confusion.overall_accuracy(),
        aa: confusion.average_accuracy(),
        miou: confusion.mean_iou(),
        per_class_iou,
        confusion: confusion.rows(),
        config: config_echo,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Few-shot evaluation: for each per-class training size, draws that many
/// samples per class from the stratified train pool under each trial seed
/// and scores the fixed test side, reporting mean and 95% CI per size.
pub fn fewshot(
    dataset: &Dataset,
    config: &RunConfig,
    shots: &[usize],
    seeds: &[u64],
) -> Result<FewShotReport> {
    let start = Instant::now();
    if shots.is_empty() {
        return Err(Error::Argument("few-shot needs at least one shot count".into()));
    }
    if seeds.len() < 2 {
        return Err(Error::Argument(
            "few-shot needs at least two seeds to form confidence intervals".into(),
        ));
    }
    let dataset = filter_min_class_size(dataset.clone(), config.min_class_size)
        .map_err(|e| e.in_stage("filter"))?;
    let split = split_stratified(&dataset, config.train_fraction, config.seed)
        .map_err(|e| e.in_stage("split"))?;
    let extrema = resolve_extrema(&dataset, config.extrema, &split.train_indices)?;
    let config_echo = report_config(
        config,
        &dataset,
        split.train_indices.len(),
        split.test_indices.len(),
        extrema,
    );

    let rows = with_workers(config.workers, || -> Result<Vec<FewShotRow>> {
        let embeddings = embed_all(&dataset, config.alphabet_len, extrema)?;
        let cache = LengthCache::new();
        let labels = dataset.labels();
        let mut rows = Vec::with_capacity(shots.len());
        for &n in shots {
            let mut trials = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let chosen = sample_few_shot(&dataset, &split.train_indices, n, seed)
                    .map_err(|e| e.in_stage("split"))?;
                trials.push(score_indices(
                    &embeddings,
                    &labels,
                    &split.test_indices,
                    &chosen,
                    &config.compressor,
                    config.mode,
                    config.k,
                    &cache,
                )?);
            }
            let (oa, aa, miou) = summarize(&trials)?;
            info!(
                "shots {n}: OA {:.2} +/- {:.2} over {} trials",
                oa.mean,
                oa.ci95_half_width,
                seeds.len()
            );
            rows.push(FewShotRow { shots: n, oa, aa, miou });
        }
        Ok(rows)
    })??;

    Ok(FewShotReport {
        rows,
        seeds: seeds.to_vec(),
        config: config_echo,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Per-seed splits for the sweep protocol: subsample each class, then
/// divide the draw evenly into train and test.
fn sweep_splits(dataset: &Dataset, fraction: f64, seeds: &[u64]) -> Result<Vec<Split>> {
    if seeds.len() < 2 {
        return Err(Error::Argument(
            "sweeps need at least two seeds to form confidence intervals".into(),
        ));
    }
    seeds
        .iter()
        .map(|&seed| subsample_protocol(dataset, fraction, seed).map_err(|e| e.in_stage("split")))
        .collect()
}

/// Embeddings backing each split's trial: one shared set under the global
/// extrema policy, or one set per split under the train policy.
fn embeddings_per_split(
    dataset: &Dataset,
    alphabet_len: usize,
    source: ExtremaSource,
    splits: &[Split],
    global: (f64, f64),
) -> Result<Vec<Arc<Vec<SymbolicEmbedding>>>> {
    match source {
        ExtremaSource::All => {
            let shared = Arc::new(embed_all(dataset, alphabet_len, global)?);
            Ok(splits.iter().map(|_| Arc::clone(&shared)).collect())
        }
        ExtremaSource::Train => splits
            .iter()
            .map(|split| {
                let extrema = extrema_of_indices(dataset, &split.train_indices)
                    .map_err(|e| e.in_stage("quantize"))?;
                Ok(Arc::new(embed_all(dataset, alphabet_len, extrema)?))
            })
            .collect(),
    }
}

/// Sweeps the alphabet length, scoring each value over the seeded
/// subsample splits.
pub fn sweep_alphabet(
    dataset: &Dataset,
    config: &RunConfig,
    lengths: &[usize],
    seeds: &[u64],
    subsample_fraction: f64,
) -> Result<SweepReport> {
    let start = Instant::now();
    if lengths.is_empty() {
        return Err(Error::Argument("sweep needs at least one alphabet length".into()));
    }
    if let Some(&bad) = lengths
        .iter()
        .find(|&&l| !(MIN_ALPHABET_LEN..=MAX_ALPHABET_LEN).contains(&l))
    {
        return Err(Error::Argument(format!(
            "alphabet length {bad} outside [{MIN_ALPHABET_LEN}, {MAX_ALPHABET_LEN}]"
        )));
    }
    let dataset = filter_min_class_size(dataset.clone(), config.min_class_size)
        .map_err(|e| e.in_stage("filter"))?;
    let global = global_extrema(&dataset).map_err(|e| e.in_stage("quantize"))?;
    let splits = sweep_splits(&dataset, subsample_fraction, seeds)?;
    let config_echo = report_config(config, &dataset, 0, 0, global);

    let rows = with_workers(config.workers, || -> Result<Vec<SweepRow>> {
        let labels = dataset.labels();
        let mut rows = Vec::with_capacity(lengths.len());
        for &len in lengths {
            let embeddings =
                embeddings_per_split(&dataset, len, config.extrema, &splits, global)?;
            let cache = LengthCache::new();
            let mut trials = Vec::with_capacity(splits.len());
            for (split, emb) in splits.iter().zip(&embeddings) {
                trials.push(score_indices(
                    emb,
                    &labels,
                    &split.test_indices,
                    &split.train_indices,
                    &config.compressor,
                    config.mode,
                    config.k,
                    &cache,
                )?);
            }
            let (oa, aa, miou) = summarize(&trials)?;
            info!("alphabet {len}: mIoU {:.2} +/- {:.2}", miou.mean, miou.ci95_half_width);
            rows.push(SweepRow {
                parameter: len.to_string(),
                level: config.compressor.level(),
                oa,
                aa,
                miou,
            });
        }
        Ok(rows)
    })??;

    Ok(SweepReport {
        sweep: "alphabet-len".into(),
        rows,
        seeds: seeds.to_vec(),
        subsample_fraction,
        config: config_echo,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Sweeps the compression backend at its default level, scoring each over
/// the seeded subsample splits.
pub fn sweep_compressor(
    dataset: &Dataset,
    config: &RunConfig,
    backends: &[Backend],
    seeds: &[u64],
    subsample_fraction: f64,
) -> Result<SweepReport> {
    let start = Instant::now();
    if backends.is_empty() {
        return Err(Error::Argument("sweep needs at least one backend".into()));
    }
    let dataset = filter_min_class_size(dataset.clone(), config.min_class_size)
        .map_err(|e| e.in_stage("filter"))?;
    let global = global_extrema(&dataset).map_err(|e| e.in_stage("quantize"))?;
    let splits = sweep_splits(&dataset, subsample_fraction, seeds)?;
    let config_echo = report_config(config, &dataset, 0, 0, global);

    let rows = with_workers(config.workers, || -> Result<Vec<SweepRow>> {
        let embeddings =
            embeddings_per_split(&dataset, config.alphabet_len, config.extrema, &splits, global)?;
        let labels = dataset.labels();
        let mut rows = Vec::with_capacity(backends.len());
        for &backend in backends {
            let comp = Compressor::with_default_level(backend);
            let cache = LengthCache::new();
            let mut trials = Vec::with_capacity(splits.len());
            for (split, emb) in splits.iter().zip(&embeddings) {
                trials.push(score_indices(
                    emb,
                    &labels,
                    &split.test_indices,
                    &split.train_indices,
                    &comp,
                    config.mode,
                    config.k,
                    &cache,
                )?);
            }
            let (oa, aa, miou) = summarize(&trials)?;
            info!(
                "compressor {backend}: mIoU {:.2} +/- {:.2}",
                miou.mean, miou.ci95_half_width
            );
            rows.push(SweepRow {
                parameter: backend.id().to_string(),
                level: comp.level(),
                oa,
                aa,
                miou,
            });
        }
        Ok(rows)
    })??;

    Ok(SweepReport {
        sweep: "compressor".into(),
        rows,
        seeds: seeds.to_vec(),
        subsample_fraction,
        config: config_echo,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Renders a sweep as a CSV table, one row per swept value.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "parameter,level,mean_oa,ci95_oa,mean_aa,ci95_aa,mean_miou,ci95_miou\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.parameter,
            row.level,
            row.oa.mean,
            row.oa.ci95_half_width,
            row.aa.mean,
            row.aa.ci95_half_width,
            row.miou.mean,
            row.miou.ci95_half_width,
        ));
    }
    out
}

/// Serializes a report as pretty JSON to `path`, or to stdout when `path`
/// is `None`.
pub fn write_report_json<T: Serialize>(path: Option<&Path>, report: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Validation(format!("serializing report: {e}")))?;
    match path {
        Some(p) => std::fs::write(p, json + "\n").map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}
