//! Shared synthetic data for integration tests: seeded, separable
//! multichannel time series with controllable noise.

// Each integration-test binary compiles its own copy of this module and
// uses a different subset of it.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use mncd::dataset::{Dataset, Pixel};

/// Parameters of a synthetic corpus. Class `k`, channel `j` has mean
/// `class_gap * (k + 0.05 j)`; each series is a low-amplitude sinusoid
/// with a class-specific phase plus Gaussian noise.
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub t: usize,
    pub c: usize,
    pub noise_sd: f64,
    /// Distance between adjacent class means; shrink it to make classes
    /// harder to tell apart under coarse quantization.
    pub class_gap: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 3,
            per_class: 100,
            t: 24,
            c: 6,
            noise_sd: 0.2,
            class_gap: 1.0,
            seed: 9,
        }
    }
}

/// Builds a labeled corpus where adjacent class means sit `class_gap`
/// apart — several intra-class standard deviations for the defaults.
pub fn synthetic_dataset(spec: &SyntheticSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd).expect("valid noise sd");
    let amplitude = 0.1;
    let mut pixels = Vec::with_capacity(spec.classes * spec.per_class);
    for class in 0..spec.classes {
        let phase = class as f64 * std::f64::consts::FRAC_PI_3;
        for _ in 0..spec.per_class {
            let mut values = Vec::with_capacity(spec.t * spec.c);
            for i in 0..spec.t {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / spec.t as f64 + phase;
                for j in 0..spec.c {
                    let mean = spec.class_gap * (class as f64 + 0.05 * j as f64);
                    values.push(mean + amplitude * angle.sin() + noise.sample(&mut rng));
                }
            }
            pixels.push(Pixel::new(values, spec.t, spec.c, class as u32).expect("finite values"));
        }
    }
    Dataset::new(pixels, BTreeMap::new()).expect("consistent dimensions")
}

/// Intra-class standard deviation of a synthetic corpus, estimated over
/// all values of one class after removing each pixel's channel means.
/// Used to verify that class separation exceeds twice this figure.
pub fn intra_class_sd(dataset: &Dataset, class: u32) -> f64 {
    let mut deviations = Vec::new();
    for pixel in dataset.pixels().iter().filter(|p| p.label() == class) {
        for j in 0..pixel.channels() {
            let series: Vec<f64> = (0..pixel.timesteps()).map(|i| pixel.value(i, j)).collect();
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            deviations.extend(series.iter().map(|v| v - mean));
        }
    }
    let n = deviations.len() as f64;
    let var = deviations.iter().map(|d| d * d).sum::<f64>() / (n - 1.0);
    var.sqrt()
}
