//! Pixel time-series datasets: file ingestion, extrema, and seeded splits.
//!
//! Datasets are read from PTS-CSV files: a header `label,v1,...,v{t*c}`
//! followed by one row per pixel, each holding an integer class label and
//! `t * c` reals in time-major order (timestep `i`, channel `j` at column
//! `1 + i*c + j`). Dimensions come from a companion JSON manifest
//! `{"t": .., "c": .., "classes": {..}}` or from a `# t=<int> c=<int>`
//! line preceding the header.
//!
//! All sampling uses ChaCha8 seeded from the caller's `u64` seed, so splits
//! are reproducible across runs and platforms.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

/// One sample: a `t x c` grid of reflectivity values plus a class label.
/// Values are stored row-major (time-major): timestep `i`, channel `j` at
/// index `i * c + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pixel {
    values: Vec<f64>,
    t: usize,
    c: usize,
    label: u32,
}

impl Pixel {
    /// Builds a pixel from row-major values; every value must be finite.
    pub fn new(values: Vec<f64>, t: usize, c: usize, label: u32) -> Result<Self> {
        if t == 0 || c == 0 {
            return Err(Error::Dimension(format!(
                "pixel needs t >= 1 and c >= 1, got {t} x {c}"
            )));
        }
        if values.len() != t * c {
            return Err(Error::Dimension(format!(
                "pixel has {} values, expected {t} x {c} = {}",
                values.len(),
                t * c
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "pixel contains non-finite value {bad}"
            )));
        }
        Ok(Pixel { values, t, c, label })
    }

    /// Value at timestep `i`, channel `j` (0-based).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.c + j]
    }

    /// All values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timesteps(&self) -> usize {
        self.t
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn label(&self) -> u32 {
        self.label
    }
}

/// An ordered collection of pixels sharing the same `t x c` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pixels: Vec<Pixel>,
    t: usize,
    c: usize,
    class_names: BTreeMap<u32, String>,
}

impl Dataset {
    /// Builds a dataset, checking that all pixels share the same dimensions.
    pub fn new(pixels: Vec<Pixel>, class_names: BTreeMap<u32, String>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::Validation("dataset has no pixels".into()));
        }
        let (t, c) = (pixels[0].timesteps(), pixels[0].channels());
        for (i, p) in pixels.iter().enumerate() {
            if p.timesteps() != t || p.channels() != c {
                return Err(Error::Dimension(format!(
                    "pixel {i} is {} x {}, expected {t} x {c}",
                    p.timesteps(),
                    p.channels()
                )));
            }
        }
        Ok(Dataset {
            pixels,
            t,
            c,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn pixel(&self, index: usize) -> &Pixel {
        &self.pixels[index]
    }

    pub fn timesteps(&self) -> usize {
        self.t
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    /// Optional display names by class id.
    pub fn class_names(&self) -> &BTreeMap<u32, String> {
        &self.class_names
    }

    /// Distinct class ids present, ascending.
    pub fn class_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.pixels.iter().map(|p| p.label()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Labels of all pixels, in dataset order.
    pub fn labels(&self) -> Vec<u32> {
        self.pixels.iter().map(|p| p.label()).collect()
    }

    /// Indices grouped by class, ascending class id, ascending index.
    pub fn indices_by_class(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.pixels.iter().enumerate() {
            groups.entry(p.label()).or_default().push(i);
        }
        groups
    }
}

/// Disjoint train/test index lists into a dataset, tagged with the seed that
/// produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    t: usize,
    c: usize,
    #[serde(default)]
    classes: BTreeMap<String, String>,
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse {
            row: 0,
            message: format!("manifest {}: {e}", path.display()),
        })
}

/// Parses a `# t=<int> c=<int>` dimension line.
fn parse_dim_line(line: &str) -> Result<(usize, usize)> {
    let mut t = None;
    let mut c = None;
    for token in line.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("t=") {
            t = v.parse::<usize>().ok();
        } else if let Some(v) = token.strip_prefix("c=") {
            c = v.parse::<usize>().ok();
        }
    }
    match (t, c) {
        (Some(t), Some(c)) if t >= 1 && c >= 1 => Ok((t, c)),
        _ => Err(Error::Parse {
            row: 0,
            message: format!("dimension line must be `# t=<int> c=<int>`, got `{line}`"),
        }),
    }
}

/// Loads a PTS-CSV dataset.
///
/// Dimensions are read from the manifest when given, otherwise from the
/// `# t=<int> c=<int>` line; both present must agree. Data-row errors name
/// the 1-based data-row index.
pub fn load_dataset(path: &Path, manifest_path: Option<&Path>) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest = manifest_path.map(read_manifest).transpose()?;

    let mut lines = text.lines().peekable();
    let mut dims_from_file = None;
    if let Some(first) = lines.peek() {
        if first.trim_start().starts_with('#') {
            dims_from_file = Some(parse_dim_line(first)?);
            lines.next();
        }
    }

    let header = lines
        .next()
        .ok_or_else(|| Error::Validation(format!("{}: file has no header line", path.display())))?;
    let header_cols = header.split(',').count();
    if header_cols < 2 {
        return Err(Error::Parse {
            row: 0,
            message: format!("header must be `label,v1,...`, got `{header}`"),
        });
    }
    let header_values = header_cols - 1;

    let (t, c) = match (&manifest, dims_from_file) {
        (Some(m), Some((t, c))) if (m.t, m.c) != (t, c) => {
            return Err(Error::Validation(format!(
                "manifest says {} x {} but file says {t} x {c}",
                m.t, m.c
            )));
        }
        (Some(m), _) => (m.t, m.c),
        (None, Some(dims)) => dims,
        (None, None) => {
            return Err(Error::Validation(format!(
                "{}: dimensions unknown; provide a manifest or a `# t=<int> c=<int>` line",
                path.display()
            )));
        }
    };
    if t == 0 || c == 0 {
        return Err(Error::Dimension(format!(
            "dimensions must satisfy t >= 1 and c >= 1, got {t} x {c}"
        )));
    }
    if header_values != t * c {
        return Err(Error::Dimension(format!(
            "header declares {header_values} values per row, expected t*c = {}",
            t * c
        )));
    }

    let mut pixels = Vec::new();
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let row = row + 1;
        let mut fields = line.split(',');
        let label_text = fields.next().unwrap_or("").trim();
        let label: u32 = label_text.parse().map_err(|_| Error::Parse {
            row,
            message: format!("label `{label_text}` is not a non-negative integer"),
        })?;
        let mut values = Vec::with_capacity(t * c);
        for field in fields {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("`{field}` is not a real number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "row {row}: non-finite value `{field}`"
                )));
            }
            values.push(v);
        }
        if values.len() != t * c {
            return Err(Error::Dimension(format!(
                "row {row}: expected {} values, found {}",
                t * c,
                values.len()
            )));
        }
        pixels.push(Pixel { values, t, c, label });
    }

    let class_names = manifest
        .map(|m| {
            m.classes
                .into_iter()
                .map(|(id, name)| {
                    id.parse::<u32>()
                        .map(|id| (id, name))
                        .map_err(|_| Error::Parse {
                            row: 0,
                            message: format!("manifest class id `{id}` is not an integer"),
                        })
                })
                .collect::<Result<BTreeMap<u32, String>>>()
        })
        .transpose()?
        .unwrap_or_default();

    Dataset::new(pixels, class_names)
}

/// Writes a dataset as PTS-CSV with a `# t=<int> c=<int>` line, the inverse
/// of [`load_dataset`] without a manifest.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let (t, c) = (dataset.timesteps(), dataset.channels());
    let mut out = String::new();
    out.push_str(&format!("# t={t} c={c}\n"));
    out.push_str("label");
    for i in 1..=t * c {
        out.push_str(&format!(",v{i}"));
    }
    out.push('\n');
    for pixel in dataset.pixels() {
        out.push_str(&pixel.label().to_string());
        for v in pixel.values() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Smallest and largest reflectivity over all pixels, timesteps, and
/// channels.
pub fn global_extrema(dataset: &Dataset) -> Result<(f64, f64)> {
    extrema_of(dataset.pixels().iter())
}

/// Extrema restricted to the pixels at `indices`.
pub fn extrema_of_indices(dataset: &Dataset, indices: &[usize]) -> Result<(f64, f64)> {
    extrema_of(indices.iter().map(|&i| dataset.pixel(i)))
}

fn extrema_of<'a>(pixels: impl Iterator<Item = &'a Pixel>) -> Result<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut seen = false;
    for p in pixels {
        for &v in p.values() {
            min = min.min(v);
            max = max.max(v);
        }
        seen = true;
    }
    if !seen {
        return Err(Error::Validation("extrema of an empty pixel set".into()));
    }
    Ok((min, max))
}

/// `ceil(fraction * count)` with rational fractions snapped to the exact
/// integer when floating rounding lands within 1e-9 of it.
fn ceil_share(fraction: f64, count: usize) -> usize {
    let scaled = fraction * count as f64;
    let share = if (scaled - scaled.round()).abs() < 1e-9 {
        scaled.round()
    } else {
        scaled.ceil()
    };
    (share as usize).clamp(1, count)
}

/// Draws `amount` distinct positions from `pool`, ascending.
fn sample_sorted(rng: &mut ChaCha8Rng, pool: &[usize], amount: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, pool.len(), amount)
        .into_iter()
        .map(|pos| pool[pos])
        .collect();
    chosen.sort_unstable();
    chosen
}

/// Splits a dataset per class: `ceil(fraction * count)` indices (at least 1)
/// go to train, the rest to test. Deterministic for a given seed; classes
/// are processed in ascending id order.
pub fn split_stratified(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, indices) in dataset.indices_by_class() {
        let n_train = ceil_share(train_fraction, indices.len());
        let chosen = sample_sorted(&mut rng, &indices, n_train);
        let mut it = chosen.iter().peekable();
        for &idx in &indices {
            if it.peek() == Some(&&idx) {
                train.push(idx);
                it.next();
            } else {
                test.push(idx);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

/// Samples up to `n` indices per class from `train_pool` without
/// replacement. Classes smaller than `n` contribute all their samples and
/// log a warning. Output is ascending and deterministic for a given seed.
pub fn sample_few_shot(
    dataset: &Dataset,
    train_pool: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if n < 1 {
        return Err(Error::Argument(format!("shot count must be >= 1, got {n}")));
    }
    if train_pool.is_empty() {
        return Err(Error::Argument("few-shot sampling from an empty pool".into()));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &idx in train_pool {
        by_class.entry(dataset.pixel(idx).label()).or_default().push(idx);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::new();
    for (class, mut indices) in by_class {
        indices.sort_unstable();
        let take = if indices.len() < n {
            warn!(
                "class {class} has only {} samples in the pool; requested {n} per class",
                indices.len()
            );
            indices.len()
        } else {
            n
        };
        chosen.extend(sample_sorted(&mut rng, &indices, take));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Stratified subsampling followed by a 50/50 per-class split of the
/// subsample: `fraction` of each class is drawn, half of the draw goes to
/// train and the other half to test.
pub fn subsample_protocol(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!(
            "subsample fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, indices) in dataset.indices_by_class() {
        let subset_size = ceil_share(fraction, indices.len());
        let subset = sample_sorted(&mut rng, &indices, subset_size);
        let n_train = ceil_share(0.5, subset.len());
        let chosen = sample_sorted(&mut rng, &subset, n_train);
        let mut it = chosen.iter().peekable();
        for &idx in &subset {
            if it.peek() == Some(&&idx) {
                train.push(idx);
                it.next();
            } else {
                test.push(idx);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

/// Drops classes with fewer than `min` samples, logging what was removed.
/// `min <= 1` keeps everything.
pub fn filter_min_class_size(dataset: Dataset, min: usize) -> Result<Dataset> {
    if min <= 1 {
        return Ok(dataset);
    }
    let counts = dataset.indices_by_class();
    let dropped: Vec<u32> = counts
        .iter()
        .filter(|(_, idxs)| idxs.len() < min)
        .map(|(&class, _)| class)
        .collect();
    if dropped.is_empty() {
        return Ok(dataset);
    }
    warn!("dropping {} class(es) with fewer than {min} samples: {dropped:?}", dropped.len());
    let class_names = dataset.class_names.clone();
    let pixels: Vec<Pixel> = dataset
        .pixels
        .into_iter()
        .filter(|p| !dropped.contains(&p.label()))
        .collect();
    if pixels.is_empty() {
        return Err(Error::Validation(format!(
            "all classes have fewer than {min} samples"
        )));
    }
    Dataset::new(pixels, class_names)
}
