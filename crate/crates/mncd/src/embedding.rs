//! Cross-transformation of a symbolic pixel into channel and time views.
//!
//! A `t x c` symbol grid is decomposed twice: once by column (each channel's
//! series over time, length `t`) and once by row (each timestep's slice
//! across channels, length `c`). The channel series come first, then the
//! time slices, giving `c + t` components that together spell every symbol
//! exactly twice.

use crate::error::{Error, Result};
use crate::symbolic::SymbolicPixel;

/// The `c + t` symbolic components of one pixel: channel series (length
/// `t` each) followed by time slices (length `c` each). Carries the
/// pixel's class label so distance matrices can align labels to columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicEmbedding {
    components: Vec<Vec<u8>>,
    t: usize,
    c: usize,
    label: u32,
}

impl SymbolicEmbedding {
    /// All components in order: `c` channel series, then `t` time slices.
    pub fn components(&self) -> &[Vec<u8>] {
        &self.components
    }

    /// Channel `j`'s series over time, length `t`.
    pub fn channel_series(&self, j: usize) -> &[u8] {
        &self.components[j]
    }

    /// Timestep `i`'s slice across channels, length `c`.
    pub fn time_slice(&self, i: usize) -> &[u8] {
        &self.components[self.c + i]
    }

    pub fn timesteps(&self) -> usize {
        self.t
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    /// Class label inherited from the source pixel.
    pub fn label(&self) -> u32 {
        self.label
    }

    /// Separator-free concatenation of all components, length `2 * t * c`.
    pub fn flatten(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * self.t * self.c);
        for comp in &self.components {
            out.extend_from_slice(comp);
        }
        out
    }
}

/// Decomposes a symbolic pixel into its channel series and time slices.
pub fn cross_transform(pixel: &SymbolicPixel) -> Result<SymbolicEmbedding> {
    let (t, c) = (pixel.timesteps(), pixel.channels());
    if t == 0 || c == 0 {
        return Err(Error::Dimension(format!(
            "cross-transform needs t >= 1 and c >= 1, got {t} x {c}"
        )));
    }
    let mut components = Vec::with_capacity(c + t);
    for j in 0..c {
        let mut series = Vec::with_capacity(t);
        for i in 0..t {
            series.push(pixel.symbol(i, j));
        }
        components.push(series);
    }
    for i in 0..t {
        let mut slice = Vec::with_capacity(c);
        for j in 0..c {
            slice.push(pixel.symbol(i, j));
        }
        components.push(slice);
    }
    Ok(SymbolicEmbedding {
        components,
        t,
        c,
        label: pixel.label(),
    })
}
