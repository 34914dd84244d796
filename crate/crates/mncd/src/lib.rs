//! Compression-based classification of multichannel pixel time series.
//!
//! The pipeline turns each pixel — a `t x c` grid of reflectivity values —
//! into short symbolic strings and classifies it by how well it compresses
//! together with labeled training pixels, entirely without model fitting:
//!
//! 1. **Quantize** ([`symbolic`]): global-extrema breakpoints map every
//!    value to a letter from a configurable alphabet.
//! 2. **Cross-transform** ([`embedding`]): the symbol grid is read twice,
//!    once per channel over time and once per timestep across channels.
//! 3. **Compare** ([`distance`]): the normalized compression distance of
//!    each component pair is averaged into a multiscale distance
//!    (or computed once over the flattened grid).
//! 4. **Vote** ([`classifier`]): k-nearest neighbors with deterministic
//!    tie-breaking.
//! 5. **Score** ([`metrics`]): overall/average accuracy, mean IoU, and
//!    confidence intervals over repeated trials.
//!
//! [`run`] wires the stages into evaluation, few-shot, and sweep pipelines
//! behind seeded, reproducible sampling ([`dataset`]); the `mncd` binary
//! exposes them on the command line.

pub mod classifier;
pub mod compressors;
pub mod dataset;
pub mod distance;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod run;
pub mod symbolic;

pub use classifier::{classify_all, knn_predict, Prediction};
pub use compressors::{Backend, Compressor, LengthCache};
pub use dataset::{load_dataset, split_stratified, Dataset, Pixel, Split};
pub use distance::{distance_matrix, mncd, ncd, whole_ncd, DistanceMatrix, DistanceMode};
pub use embedding::{cross_transform, SymbolicEmbedding};
pub use error::{Error, Result};
pub use metrics::{aggregate_trials, ConfusionMatrix, TrialAggregate};
pub use run::{
    evaluate, fewshot, sweep_alphabet, sweep_compressor, sweep_csv, EvaluationReport,
    ExtremaSource, RunConfig,
};
pub use symbolic::{build_breakpoints, symbolize_pixel, Alphabet, Breakpoints, SymbolicPixel};
