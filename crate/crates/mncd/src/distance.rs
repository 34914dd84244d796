//! Compression-based distances between symbolic pixels.
//!
//! The core quantity is the normalized compression distance between two
//! byte sequences `a` and `b`:
//!
//! ```text
//! ncd(a, b) = (C(a || b) - min(C(a), C(b))) / max(C(a), C(b))
//! ```
//!
//! where `C` is a compressed length and `||` is concatenation in the order
//! given (first argument, then second). Real compressors are not perfectly
//! idempotent, so values are kept as computed: slightly above 1 or below 0
//! is possible and is not clamped.
//!
//! Two pixel distances are built on it:
//! * **multiscale** — the mean of per-component distances over all `c + t`
//!   components of the cross-transformed embedding, so channel-level and
//!   timestep-level structure both contribute;
//! * **whole** — one distance over the flattened embedding.
//!
//! Distance matrices are computed row-parallel with rayon; each row is
//! independent and deterministic, so results are bit-identical regardless
//! of worker count.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::compressors::{Compressor, LengthCache};
use crate::embedding::SymbolicEmbedding;
use crate::error::{Error, Result};

/// How two pixels are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Mean of per-component distances over the `c + t` embedding
    /// components.
    MultiScale,
    /// Single distance over the flattened embedding.
    Whole,
}

impl DistanceMode {
    pub fn id(self) -> &'static str {
        match self {
            DistanceMode::MultiScale => "multiscale",
            DistanceMode::Whole => "whole",
        }
    }
}

impl std::fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multiscale" => Ok(DistanceMode::MultiScale),
            "whole" => Ok(DistanceMode::Whole),
            other => Err(Error::Argument(format!(
                "unknown distance mode `{other}`; supported: multiscale, whole"
            ))),
        }
    }
}

/// Normalized compression distance between two byte sequences, concatenated
/// as `a || b`. Per-sequence lengths go through the cache when one is
/// given; the joint length is always computed fresh.
pub fn ncd(
    comp: &Compressor,
    cache: Option<&LengthCache>,
    a: &[u8],
    b: &[u8],
) -> Result<f64> {
    let len = |data: &[u8]| match cache {
        Some(c) => c.compressed_len(comp, data),
        None => comp.compressed_len(data),
    };
    let ca = len(a)? as f64;
    let cb = len(b)? as f64;
    let mut joint = Vec::with_capacity(a.len() + b.len());
    joint.extend_from_slice(a);
    joint.extend_from_slice(b);
    let cab = comp.compressed_len(&joint)? as f64;
    Ok((cab - ca.min(cb)) / ca.max(cb))
}

fn check_dims(a: &SymbolicEmbedding, b: &SymbolicEmbedding) -> Result<()> {
    if a.timesteps() != b.timesteps() || a.channels() != b.channels() {
        return Err(Error::Dimension(format!(
            "embeddings are {} x {} and {} x {}",
            a.timesteps(),
            a.channels(),
            b.timesteps(),
            b.channels()
        )));
    }
    Ok(())
}

/// Multiscale distance: mean of per-component [`ncd`] values over the
/// `c + t` components, pairing component `k` of `a` with component `k`
/// of `b`.
pub fn mncd(
    comp: &Compressor,
    cache: Option<&LengthCache>,
    a: &SymbolicEmbedding,
    b: &SymbolicEmbedding,
) -> Result<f64> {
    check_dims(a, b)?;
    let mut sum = 0.0;
    for (x, y) in a.components().iter().zip(b.components()) {
        sum += ncd(comp, cache, x, y)?;
    }
    Ok(sum / a.components().len() as f64)
}

/// Whole-pixel distance: [`ncd`] over the flattened embeddings.
pub fn whole_ncd(
    comp: &Compressor,
    cache: Option<&LengthCache>,
    a: &SymbolicEmbedding,
    b: &SymbolicEmbedding,
) -> Result<f64> {
    check_dims(a, b)?;
    ncd(comp, cache, &a.flatten(), &b.flatten())
}

/// Distance between two pixels under the given mode.
pub fn pixel_distance(
    mode: DistanceMode,
    comp: &Compressor,
    cache: Option<&LengthCache>,
    a: &SymbolicEmbedding,
    b: &SymbolicEmbedding,
) -> Result<f64> {
    match mode {
        DistanceMode::MultiScale => mncd(comp, cache, a, b),
        DistanceMode::Whole => whole_ncd(comp, cache, a, b),
    }
}

/// One side of a pixel comparison with its per-part compressed lengths
/// already known. Multiscale pixels carry `c + t` parts, whole pixels a
/// single flattened part, which lets both modes share the row loop.
#[derive(Debug, Clone)]
pub struct PreparedPixel {
    parts: Vec<Vec<u8>>,
    lengths: Vec<f64>,
}

/// Precomputes the compressed length of every part of `embedding` under
/// `mode`, so repeated comparisons only pay for joint compressions.
pub fn prepare_pixel(
    mode: DistanceMode,
    comp: &Compressor,
    cache: Option<&LengthCache>,
    embedding: &SymbolicEmbedding,
) -> Result<PreparedPixel> {
    let parts: Vec<Vec<u8>> = match mode {
        DistanceMode::MultiScale => embedding.components().to_vec(),
        DistanceMode::Whole => vec![embedding.flatten()],
    };
    let lengths = parts
        .iter()
        .map(|p| {
            let len = match cache {
                Some(c) => c.compressed_len(comp, p)?,
                None => comp.compressed_len(p)?,
            };
            Ok(len as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PreparedPixel { parts, lengths })
}

/// Distance between two prepared pixels: mean over parts of the
/// per-part distance, with the joint sequence built as `a || b` part by
/// part.
pub fn prepared_distance(
    comp: &Compressor,
    a: &PreparedPixel,
    b: &PreparedPixel,
) -> Result<f64> {
    debug_assert_eq!(a.parts.len(), b.parts.len());
    let mut sum = 0.0;
    for k in 0..a.parts.len() {
        let (x, y) = (&a.parts[k], &b.parts[k]);
        let (ca, cb) = (a.lengths[k], b.lengths[k]);
        let mut joint = Vec::with_capacity(x.len() + y.len());
        joint.extend_from_slice(x);
        joint.extend_from_slice(y);
        let cab = comp.compressed_len(&joint)? as f64;
        sum += (cab - ca.min(cb)) / ca.max(cb);
    }
    Ok(sum / a.parts.len() as f64)
}

/// Dense test-by-train distance matrix, row-major, with the train labels
/// aligned to its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Vec<f64>,
    train_labels: Vec<u32>,
    n_test: usize,
    mode: DistanceMode,
}

impl DistanceMatrix {
    pub fn get(&self, test: usize, train: usize) -> f64 {
        self.values[test * self.n_train() + train]
    }

    /// Distances from test pixel `test` to every train pixel.
    pub fn row(&self, test: usize) -> &[f64] {
        let n = self.n_train();
        &self.values[test * n..(test + 1) * n]
    }

    pub fn n_test(&self) -> usize {
        self.n_test
    }

    pub fn n_train(&self) -> usize {
        self.train_labels.len()
    }

    /// Class labels of the train pixels, aligned to columns.
    pub fn train_labels(&self) -> &[u32] {
        &self.train_labels
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Logs when distances exceed the loose upper bound real compressors can
/// hit; anything far above it usually means degenerate inputs.
fn warn_soft_bound(values: &[f64]) {
    let over: Vec<f64> = values.iter().copied().filter(|&d| d > 1.25).collect();
    if !over.is_empty() {
        let max = over.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        warn!(
            "{} distance(s) exceed 1.25 (max {max:.4}); inputs may be degenerate",
            over.len()
        );
    }
}

/// Computes all pairwise distances from `test` to `train` pixels.
///
/// Train pixels are prepared once; rows are computed in parallel and each
/// row prepares its test pixel once, so per-sequence compressions are never
/// repeated within the call. Output order is row-major and independent of
/// the rayon worker count.
pub fn distance_matrix(
    mode: DistanceMode,
    comp: &Compressor,
    cache: Option<&LengthCache>,
    test: &[SymbolicEmbedding],
    train: &[SymbolicEmbedding],
) -> Result<DistanceMatrix> {
    if test.is_empty() || train.is_empty() {
        return Err(Error::Validation(
            "distance matrix needs at least one test and one train pixel".into(),
        ));
    }
    for e in test.iter().chain(train) {
        check_dims(&test[0], e)?;
    }
    let train_prepared = train
        .iter()
        .map(|e| prepare_pixel(mode, comp, cache, e))
        .collect::<Result<Vec<_>>>()?;
    let rows = test
        .par_iter()
        .map(|row_embedding| {
            let row_prepared = prepare_pixel(mode, comp, cache, row_embedding)?;
            train_prepared
                .iter()
                .map(|tr| prepared_distance(comp, &row_prepared, tr))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    warn_soft_bound(&values);
    Ok(DistanceMatrix {
        values,
        train_labels: train.iter().map(|e| e.label()).collect(),
        n_test: test.len(),
        mode,
    })
}

const MAGIC: &[u8; 8] = b"MNCDDM01";

/// Writes a matrix as little-endian binary: an 8-byte magic, a mode byte,
/// two `u64` dimensions, the `u32` train labels, then row-major `f64`
/// values. Labels ride along so a saved matrix can be re-classified at a
/// different `k` without the original dataset.
pub fn save_distance_matrix(path: &Path, matrix: &DistanceMatrix) -> Result<()> {
    let mut out =
        Vec::with_capacity(25 + 4 * matrix.train_labels.len() + 8 * matrix.values.len());
    out.extend_from_slice(MAGIC);
    out.push(match matrix.mode {
        DistanceMode::MultiScale => 0,
        DistanceMode::Whole => 1,
    });
    out.extend_from_slice(&(matrix.n_test as u64).to_le_bytes());
    out.extend_from_slice(&(matrix.n_train() as u64).to_le_bytes());
    for label in &matrix.train_labels {
        out.extend_from_slice(&label.to_le_bytes());
    }
    for v in &matrix.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a matrix written by [`save_distance_matrix`], byte-exact.
pub fn load_distance_matrix(path: &Path) -> Result<DistanceMatrix> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let fail = |message: String| Error::Validation(format!("{}: {message}", path.display()));
    if bytes.len() < 25 {
        return Err(fail("file too short for a distance matrix header".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(fail("bad magic; not a distance matrix file".into()));
    }
    let mode = match bytes[8] {
        0 => DistanceMode::MultiScale,
        1 => DistanceMode::Whole,
        m => return Err(fail(format!("unknown mode byte {m}"))),
    };
    let n_test = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
    let n_train = u64::from_le_bytes(bytes[17..25].try_into().unwrap()) as usize;
    let expected = 25 + 4 * n_train + 8 * n_test * n_train;
    if bytes.len() != expected {
        return Err(fail(format!(
            "expected {expected} bytes for {n_test} x {n_train}, found {}",
            bytes.len()
        )));
    }
    let labels_end = 25 + 4 * n_train;
    let train_labels: Vec<u32> = bytes[25..labels_end]
        .chunks_exact(4)
        .map(|chunk| u32::from_le_bytes(chunk.try_into().unwrap()))
        .collect();
    let values: Vec<f64> = bytes[labels_end..]
        .chunks_exact(8)
        .map(|chunk| f64::from_le_bytes(chunk.try_into().unwrap()))
        .collect();
    Ok(DistanceMatrix {
        values,
        train_labels,
        n_test,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::Backend;
    use crate::dataset::Pixel;
    use crate::embedding::cross_transform;
    use crate::symbolic::{build_breakpoints, symbolize_pixel, Alphabet};

    use proptest::prelude::*;
    use tempfile::NamedTempFile;

    fn gzip9() -> Compressor {
        Compressor::with_default_level(Backend::Gzip)
    }

    /// Reference arithmetic computed straight from compressor output,
    /// bypassing `ncd`.
    fn ncd_oracle(comp: &Compressor, a: &[u8], b: &[u8]) -> f64 {
        let ca = comp.compress(a).unwrap().len() as f64;
        let cb = comp.compress(b).unwrap().len() as f64;
        let joint: Vec<u8> = a.iter().chain(b).copied().collect();
        let cab = comp.compress(&joint).unwrap().len() as f64;
        (cab - ca.min(cb)) / ca.max(cb)
    }

    fn embed_labeled(values: &[f64], t: usize, c: usize, label: u32) -> SymbolicEmbedding {
        let pixel = Pixel::new(values.to_vec(), t, c, label).unwrap();
        let alphabet = Alphabet::new(4).unwrap();
        let bp = build_breakpoints(0.0, 1.0, 4).unwrap();
        let symbolic = symbolize_pixel(&pixel, &bp, &alphabet);
        cross_transform(&symbolic).unwrap()
    }

    fn embed(values: &[f64], t: usize, c: usize) -> SymbolicEmbedding {
        embed_labeled(values, t, c, 0)
    }

    /// Uniform-random symbol string over a 22-letter alphabet.
    fn random_symbols(rng: &mut impl rand::Rng, len: usize) -> Vec<u8> {
        (0..len).map(|_| b'a' + rng.random_range(0..22u8)).collect()
    }

    #[test]
    fn ncd_matches_reference_arithmetic() {
        let comp = gzip9();
        let cases: [(&[u8], &[u8]); 4] = [
            (b"cdcdcbc", b"bababaa"),
            (b"aaaaaaaaaaaaaaaa", b"aaaaaaaaaaaaaaaa"),
            (b"abcdabcdabcd", b"zzzzyyyyxxxx"),
            (b"a", b"abababababababababab"),
        ];
        for (a, b) in cases {
            assert_eq!(ncd(&comp, None, a, b).unwrap(), ncd_oracle(&comp, a, b));
        }
    }

    #[test]
    fn ncd_of_identical_long_strings_is_small() {
        let comp = gzip9();
        let s = vec![b'a'; 200];
        let d = ncd(&comp, None, &s, &s).unwrap();
        assert!(d < 0.3, "identical strings gave {d}");
        let mut other = Vec::new();
        for i in 0..200u32 {
            other.push(b'a' + (i * 7 % 22) as u8);
        }
        let far = ncd(&comp, None, &s, &other).unwrap();
        assert!(far > d, "dissimilar {far} not above identical {d}");
    }

    #[test]
    fn self_ncd_of_repeated_pattern_is_near_zero() {
        // "ab" repeated 100 times compresses almost as well alone as
        // doubled, so the self-distance sits near the bottom of the range.
        let comp = gzip9();
        let m: Vec<u8> = b"ab".iter().copied().cycle().take(200).collect();
        let d = ncd(&comp, None, &m, &m).unwrap();
        assert!((0.0..=0.2).contains(&d), "self-NCD {d} outside [0, 0.2]");
    }

    #[test]
    fn ncd_of_independent_random_strings_is_near_one() {
        // Independent uniform strings over the same alphabet share only
        // their symbol statistics, so each pair lands well above the
        // self-distance range and the average sits near 1. (Shared
        // entropy-coding tables keep the joint slightly below the sum,
        // which is why individual pairs can dip to ~0.75.)
        use rand::SeedableRng;
        let comp = gzip9();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut sum = 0.0;
        for _ in 0..20 {
            let m = random_symbols(&mut rng, 200);
            let n = random_symbols(&mut rng, 200);
            let d = ncd(&comp, None, &m, &n).unwrap();
            assert!((0.6..=1.15).contains(&d), "random-pair NCD {d} outside [0.6, 1.15]");
            sum += d;
        }
        let mean = sum / 20.0;
        assert!(mean >= 0.7, "mean random-pair NCD {mean} below 0.7");
    }

    #[test]
    fn ncd_asymmetry_stays_small_on_long_strings() {
        // Only the concatenation order distinguishes ncd(m, n) from
        // ncd(n, m); on 200+ symbol strings the gap stays under 0.05.
        use rand::SeedableRng;
        let comp = gzip9();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for i in 0..100 {
            let m = random_symbols(&mut rng, 200 + (i % 5) * 40);
            let n = random_symbols(&mut rng, 200 + (i % 7) * 30);
            let forward = ncd(&comp, None, &m, &n).unwrap();
            let reverse = ncd(&comp, None, &n, &m).unwrap();
            assert!(
                (forward - reverse).abs() < 0.05,
                "asymmetry {} on pair {i}",
                (forward - reverse).abs()
            );
        }
    }

    #[test]
    fn ncd_cached_equals_uncached() {
        let comp = gzip9();
        let cache = LengthCache::new();
        let (a, b) = (b"cdcdcbc".as_slice(), b"bababaa".as_slice());
        let plain = ncd(&comp, None, a, b).unwrap();
        let cached = ncd(&comp, Some(&cache), a, b).unwrap();
        let cached_again = ncd(&comp, Some(&cache), a, b).unwrap();
        assert_eq!(plain, cached);
        assert_eq!(plain, cached_again);
        // Only the two single sequences land in the cache, never the joint.
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn mncd_is_mean_of_component_distances() {
        let comp = gzip9();
        let a = embed(&[0.1, 0.3, 0.6, 0.9], 2, 2);
        let b = embed(&[0.9, 0.6, 0.3, 0.1], 2, 2);
        let per_component: Vec<f64> = a
            .components()
            .iter()
            .zip(b.components())
            .map(|(x, y)| ncd(&comp, None, x, y).unwrap())
            .collect();
        let mean = per_component.iter().sum::<f64>() / per_component.len() as f64;
        assert_eq!(mncd(&comp, None, &a, &b).unwrap(), mean);
    }

    #[test]
    fn mncd_discriminates() {
        let comp = gzip9();
        let low: Vec<f64> = (0..32).map(|i| 0.1 + 0.01 * (i % 3) as f64).collect();
        let low2: Vec<f64> = (0..32).map(|i| 0.1 + 0.01 * ((i + 1) % 3) as f64).collect();
        let high: Vec<f64> = (0..32).map(|i| 0.8 + 0.01 * (i % 5) as f64).collect();
        let (a, b, far) = (embed(&low, 8, 4), embed(&low2, 8, 4), embed(&high, 8, 4));
        let near_d = mncd(&comp, None, &a, &b).unwrap();
        let far_d = mncd(&comp, None, &a, &far).unwrap();
        assert!(near_d < far_d, "near {near_d} not below far {far_d}");
    }

    #[test]
    fn mncd_rejects_dimension_mismatch() {
        let comp = gzip9();
        let a = embed(&[0.1, 0.2, 0.3, 0.4], 2, 2);
        let b = embed(&[0.1, 0.2, 0.3, 0.4], 4, 1);
        assert!(mncd(&comp, None, &a, &b).is_err());
    }

    #[test]
    fn whole_mode_matches_flattened_ncd() {
        let comp = gzip9();
        let a = embed(&[0.1, 0.3, 0.6, 0.9], 2, 2);
        let b = embed(&[0.9, 0.6, 0.3, 0.1], 2, 2);
        let direct = ncd(&comp, None, &a.flatten(), &b.flatten()).unwrap();
        assert_eq!(whole_ncd(&comp, None, &a, &b).unwrap(), direct);
        assert_eq!(
            pixel_distance(DistanceMode::Whole, &comp, None, &a, &b).unwrap(),
            direct
        );
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let comp = gzip9();
        let pixels: Vec<SymbolicEmbedding> = (0..5)
            .map(|k| {
                let vals: Vec<f64> = (0..12).map(|i| ((i + k) % 4) as f64 * 0.25).collect();
                embed(&vals, 4, 3)
            })
            .collect();
        let (test, train) = (&pixels[..2], &pixels[2..]);
        for mode in [DistanceMode::MultiScale, DistanceMode::Whole] {
            let matrix = distance_matrix(mode, &comp, None, test, train).unwrap();
            assert_eq!((matrix.n_test(), matrix.n_train()), (2, 3));
            for (i, te) in test.iter().enumerate() {
                for (j, tr) in train.iter().enumerate() {
                    let expected = pixel_distance(mode, &comp, None, te, tr).unwrap();
                    assert_eq!(matrix.get(i, j), expected, "mode {mode} entry ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn matrix_is_identical_across_worker_counts() {
        let comp = gzip9();
        let pixels: Vec<SymbolicEmbedding> = (0..6)
            .map(|k| {
                let vals: Vec<f64> = (0..12).map(|i| ((i * k + 1) % 5) as f64 * 0.2).collect();
                embed(&vals, 4, 3)
            })
            .collect();
        let (test, train) = (&pixels[..3], &pixels[3..]);
        let run_with = |workers: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap()
                .install(|| {
                    distance_matrix(DistanceMode::MultiScale, &comp, None, test, train).unwrap()
                })
        };
        let single = run_with(1);
        let quad = run_with(4);
        assert_eq!(single.values(), quad.values());
    }

    #[test]
    fn matrix_uses_cache_for_singles() {
        let comp = gzip9();
        let cache = LengthCache::new();
        let pixels: Vec<SymbolicEmbedding> = (0..4)
            .map(|k| {
                let vals: Vec<f64> = (0..8).map(|i| ((i + k) % 4) as f64 * 0.25).collect();
                embed(&vals, 4, 2)
            })
            .collect();
        let (test, train) = (&pixels[..2], &pixels[2..]);
        let with_cache =
            distance_matrix(DistanceMode::MultiScale, &comp, Some(&cache), test, train).unwrap();
        let without =
            distance_matrix(DistanceMode::MultiScale, &comp, None, test, train).unwrap();
        assert_eq!(with_cache.values(), without.values());
        assert!(cache.len() > 0);
    }

    #[test]
    fn matrix_rejects_empty_sides() {
        let comp = gzip9();
        let a = vec![embed(&[0.1, 0.2, 0.3, 0.4], 2, 2)];
        assert!(distance_matrix(DistanceMode::Whole, &comp, None, &a, &[]).is_err());
        assert!(distance_matrix(DistanceMode::Whole, &comp, None, &[], &a).is_err());
    }

    #[test]
    fn matrix_aligns_train_labels_to_columns() {
        let comp = gzip9();
        let test = vec![embed(&[0.1, 0.2, 0.3, 0.4], 2, 2)];
        let train: Vec<SymbolicEmbedding> = [9u32, 4, 7]
            .iter()
            .map(|&label| embed_labeled(&[0.1, 0.2, 0.3, 0.4], 2, 2, label))
            .collect();
        let matrix = distance_matrix(DistanceMode::Whole, &comp, None, &test, &train).unwrap();
        assert_eq!(matrix.train_labels(), &[9, 4, 7]);
    }

    #[test]
    fn save_load_round_trips_exactly() {
        let comp = gzip9();
        let pixels: Vec<SymbolicEmbedding> = (0..4)
            .map(|k| {
                let vals: Vec<f64> = (0..8).map(|i| ((i + 2 * k) % 4) as f64 * 0.33).collect();
                embed_labeled(&vals, 2, 4, k)
            })
            .collect();
        let matrix =
            distance_matrix(DistanceMode::Whole, &comp, None, &pixels[..2], &pixels[2..]).unwrap();
        let file = NamedTempFile::new().unwrap();
        save_distance_matrix(file.path(), &matrix).unwrap();
        let loaded = load_distance_matrix(file.path()).unwrap();
        assert_eq!(loaded, matrix);
        assert_eq!(loaded.train_labels(), &[2, 3]);
        for (a, b) in matrix.values().iter().zip(loaded.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn load_rejects_corrupt_files() {
        let file = NamedTempFile::new().unwrap();
        std::fs::write(file.path(), b"not a matrix").unwrap();
        assert!(load_distance_matrix(file.path()).is_err());
        std::fs::write(file.path(), b"MNCDDM01\x07rest-too-short-and-bad-mode").unwrap();
        assert!(load_distance_matrix(file.path()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn ncd_matches_oracle_on_symbol_strings(
            a in proptest::collection::vec(b'a'..=b'v', 1..40),
            b in proptest::collection::vec(b'a'..=b'v', 1..40),
        ) {
            let comp = gzip9();
            prop_assert_eq!(ncd(&comp, None, &a, &b).unwrap(), ncd_oracle(&comp, &a, &b));
        }

        #[test]
        fn prepared_distance_equals_direct(
            raw_a in proptest::collection::vec(0u8..4, 12),
            raw_b in proptest::collection::vec(0u8..4, 12),
        ) {
            let to_vals = |raw: &[u8]| raw.iter().map(|&i| i as f64 * 0.25).collect::<Vec<f64>>();
            let a = embed(&to_vals(&raw_a), 4, 3);
            let b = embed(&to_vals(&raw_b), 4, 3);
            let comp = gzip9();
            for mode in [DistanceMode::MultiScale, DistanceMode::Whole] {
                let pa = prepare_pixel(mode, &comp, None, &a).unwrap();
                let pb = prepare_pixel(mode, &comp, None, &b).unwrap();
                prop_assert_eq!(
                    prepared_distance(&comp, &pa, &pb).unwrap(),
                    pixel_distance(mode, &comp, None, &a, &b).unwrap()
                );
            }
        }
    }
}
