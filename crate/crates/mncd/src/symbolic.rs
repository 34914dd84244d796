//! Symbolic quantization of real-valued series.
//!
//! The value range `[min, max]` of a dataset is divided into `l` equal-width
//! intervals and every reflectivity is mapped to the letter of the interval
//! it falls in. Letters are drawn from the fixed order `a..z` then `A..Z`,
//! so two alphabets of different lengths always agree on a shared prefix.

use log::warn;
use rayon::prelude::*;

use crate::dataset::Pixel;
use crate::error::{Error, Result};

/// The fixed symbol order: 26 lowercase letters followed by 26 uppercase.
pub const SYMBOL_TABLE: &[u8; 52] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Smallest usable alphabet. A single letter would map every value to the
/// same symbol and destroy all information.
pub const MIN_ALPHABET_LEN: usize = 2;
/// Largest usable alphabet (all 52 letters).
pub const MAX_ALPHABET_LEN: usize = 52;

/// An ordered symbol set: the first `len` letters of [`SYMBOL_TABLE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    len: usize,
}

impl Alphabet {
    /// Creates an alphabet of `len` symbols, `len` in `[2, 52]`.
    pub fn new(len: usize) -> Result<Self> {
        if !(MIN_ALPHABET_LEN..=MAX_ALPHABET_LEN).contains(&len) {
            return Err(Error::Argument(format!(
                "alphabet length must be in [{MIN_ALPHABET_LEN}, {MAX_ALPHABET_LEN}], got {len}"
            )));
        }
        Ok(Alphabet { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The symbols of this alphabet, in order.
    pub fn symbols(&self) -> &'static [u8] {
        &SYMBOL_TABLE[..self.len]
    }

    /// The symbol at 0-based `index`. Panics if `index >= len`.
    pub fn symbol(&self, index: usize) -> u8 {
        assert!(index < self.len, "symbol index {index} out of range");
        SYMBOL_TABLE[index]
    }

    /// First symbol (`'a'`).
    pub fn first_symbol(&self) -> u8 {
        SYMBOL_TABLE[0]
    }

    /// Last symbol of this alphabet.
    pub fn last_symbol(&self) -> u8 {
        SYMBOL_TABLE[self.len - 1]
    }

    /// 0-based position of `symbol` in this alphabet, if it belongs to it.
    pub fn index_of(&self, symbol: u8) -> Option<usize> {
        self.symbols().iter().position(|&s| s == symbol)
    }

    /// Whether `symbol` belongs to this alphabet.
    pub fn contains(&self, symbol: u8) -> bool {
        self.index_of(symbol).is_some()
    }
}

/// `l + 1` equally spaced thresholds partitioning `[min, max]` into `l`
/// intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    betas: Vec<f64>,
}

impl Breakpoints {
    /// All thresholds, ascending. First is `min`, last is `max`.
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Number of intervals (= alphabet length this was built for).
    pub fn intervals(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn min(&self) -> f64 {
        self.betas[0]
    }

    pub fn max(&self) -> f64 {
        self.betas[self.betas.len() - 1]
    }
}

/// Builds the `l + 1` breakpoints dividing `[min, max]` into `l` equal
/// intervals: `beta_i = min + i * (max - min) / l`.
///
/// `min == max` yields degenerate all-equal breakpoints with a warning.
pub fn build_breakpoints(min: f64, max: f64, l: usize) -> Result<Breakpoints> {
    if !(MIN_ALPHABET_LEN..=MAX_ALPHABET_LEN).contains(&l) {
        return Err(Error::Argument(format!(
            "interval count must be in [{MIN_ALPHABET_LEN}, {MAX_ALPHABET_LEN}], got {l}"
        )));
    }
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::Argument(format!(
            "extrema must be finite, got ({min}, {max})"
        )));
    }
    if min > max {
        return Err(Error::Argument(format!(
            "min must not exceed max, got ({min}, {max})"
        )));
    }
    if min == max {
        warn!("degenerate extrema (min == max == {min}); all values quantize to one symbol");
    }
    let span = max - min;
    let mut betas = Vec::with_capacity(l + 1);
    betas.push(min);
    for i in 1..l {
        // Monotone in i; clamped so rounding never pushes past max.
        betas.push((min + (i as f64) * span / (l as f64)).min(max));
    }
    betas.push(max);
    Ok(Breakpoints { betas })
}

/// Outcome of mapping one value to an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clamp {
    None,
    BelowMin,
    AboveMax,
}

/// Interval lookup without logging; returns the 0-based symbol index.
fn quantize_index(x: f64, breakpoints: &Breakpoints) -> (usize, Clamp) {
    let betas = breakpoints.betas();
    let l = breakpoints.intervals();
    if x < betas[0] {
        return (0, Clamp::BelowMin);
    }
    if x >= betas[l] {
        let clamp = if x > betas[l] { Clamp::AboveMax } else { Clamp::None };
        return (l - 1, clamp);
    }
    // Binary search for the largest i with beta_i <= x. Bit-identical to a
    // linear scan because betas are non-decreasing.
    let after = betas.partition_point(|&b| b <= x);
    ((after - 1).min(l - 1), Clamp::None)
}

/// Maps a value to the symbol of the interval containing it:
/// `alpha_k` where `beta_k <= x < beta_{k+1}`.
///
/// `x == max` clamps to the last symbol. Values outside `[min, max]` clamp
/// to the end symbols with a warning.
pub fn quantize_value(x: f64, breakpoints: &Breakpoints, alphabet: &Alphabet) -> u8 {
    assert_eq!(
        breakpoints.intervals(),
        alphabet.len(),
        "breakpoints and alphabet disagree on interval count"
    );
    let (index, clamp) = quantize_index(x, breakpoints);
    match clamp {
        Clamp::BelowMin => warn!(
            "value {x} below quantization range [{}, {}]; clamped to first symbol",
            breakpoints.min(),
            breakpoints.max()
        ),
        Clamp::AboveMax => warn!(
            "value {x} above quantization range [{}, {}]; clamped to last symbol",
            breakpoints.min(),
            breakpoints.max()
        ),
        Clamp::None => {}
    }
    alphabet.symbol(index)
}

/// A pixel after quantization: a `t x c` grid of alphabet symbols plus the
/// class label carried over from the source pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPixel {
    grid: Vec<u8>,
    t: usize,
    c: usize,
    label: u32,
}

impl SymbolicPixel {
    /// Builds a symbolic pixel from a row-major `t x c` symbol grid.
    pub fn from_grid(grid: Vec<u8>, t: usize, c: usize, label: u32) -> Result<Self> {
        if t == 0 || c == 0 {
            return Err(Error::Dimension(format!(
                "symbolic pixel needs t >= 1 and c >= 1, got {t} x {c}"
            )));
        }
        if grid.len() != t * c {
            return Err(Error::Dimension(format!(
                "symbol grid has {} cells, expected {t} x {c} = {}",
                grid.len(),
                t * c
            )));
        }
        if let Some(&bad) = grid.iter().find(|&&s| !SYMBOL_TABLE.contains(&s)) {
            return Err(Error::Validation(format!(
                "symbol {:?} is not in the a..zA..Z table",
                bad as char
            )));
        }
        Ok(SymbolicPixel { grid, t, c, label })
    }

    /// Symbol at timestep `i`, channel `j` (0-based).
    pub fn symbol(&self, i: usize, j: usize) -> u8 {
        self.grid[i * self.c + j]
    }

    /// The row-major symbol grid.
    pub fn grid(&self) -> &[u8] {
        &self.grid
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

/// Quantizes every cell of a pixel, preserving its label.
///
/// Out-of-range cells clamp to the end symbols; one warning is logged per
/// pixel with the clamped-cell count.
pub fn symbolize_pixel(pixel: &Pixel, breakpoints: &Breakpoints, alphabet: &Alphabet) -> SymbolicPixel {
    assert_eq!(
        breakpoints.intervals(),
        alphabet.len(),
        "breakpoints and alphabet disagree on interval count"
    );
    let mut clamped = 0usize;
    let grid: Vec<u8> = pixel
        .values()
        .iter()
        .map(|&x| {
            let (index, clamp) = quantize_index(x, breakpoints);
            if clamp != Clamp::None {
                clamped += 1;
            }
            alphabet.symbol(index)
        })
        .collect();
    if clamped > 0 {
        warn!(
            "{clamped} of {} values fell outside [{}, {}] and were clamped",
            grid.len(),
            breakpoints.min(),
            breakpoints.max()
        );
    }
    SymbolicPixel {
        grid,
        t: pixel.timesteps(),
        c: pixel.channels(),
        label: pixel.label(),
    }
}

/// Quantizes a batch of pixels in parallel, logging one aggregate warning
/// for all clamped values.
pub fn symbolize_all(pixels: &[&Pixel], breakpoints: &Breakpoints, alphabet: &Alphabet) -> Vec<SymbolicPixel> {
    let results: Vec<(SymbolicPixel, usize)> = pixels
        .par_iter()
        .map(|pixel| {
            let mut clamped = 0usize;
            let grid: Vec<u8> = pixel
                .values()
                .iter()
                .map(|&x| {
                    let (index, clamp) = quantize_index(x, breakpoints);
                    if clamp != Clamp::None {
                        clamped += 1;
                    }
                    alphabet.symbol(index)
                })
                .collect();
            (
                SymbolicPixel {
                    grid,
                    t: pixel.timesteps(),
                    c: pixel.channels(),
                    label: pixel.label(),
                },
                clamped,
            )
        })
        .collect();
    let clamped: usize = results.iter().map(|(_, n)| n).sum();
    if clamped > 0 {
        warn!(
            "{clamped} values across {} pixels fell outside [{}, {}] and were clamped",
            pixels.len(),
            breakpoints.min(),
            breakpoints.max()
        );
    }
    results.into_iter().map(|(sp, _)| sp).collect()
}
