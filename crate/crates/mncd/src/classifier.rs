//! k-nearest-neighbor voting over a distance row.
//!
//! Neighbors are ordered by `(distance, train index)` ascending, which makes
//! every prediction deterministic: equal distances are resolved by position
//! in the training set, never by iteration order of a hash map or by an
//! unstable sort. Votes among the top `k` are counted per label; when two or
//! more labels share the top count, the winner is the label of the nearest
//! neighbor that carries one of the tied labels, and the prediction is
//! flagged as tie-broken.

use std::collections::BTreeMap;

use log::warn;

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

/// A classification outcome: the winning label, the consulted neighbors in
/// ascending-distance order, and whether the vote needed the
/// nearest-neighbor tie-break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub label: u32,
    /// The `min(k, |train|)` nearest train indices, ordered by
    /// `(distance, train index)` ascending.
    pub neighbor_indices: Vec<usize>,
    pub tie_broken: bool,
}

/// Predicts a label from one row of distances to the training set.
///
/// `k` larger than the training set is clamped with a warning; `k = 0`,
/// length mismatches, and non-finite distances are errors.
pub fn knn_predict(distances: &[f64], train_labels: &[u32], k: usize) -> Result<Prediction> {
    if k == 0 {
        return Err(Error::Argument("k must be >= 1".into()));
    }
    if distances.len() != train_labels.len() {
        return Err(Error::Dimension(format!(
            "{} distances but {} train labels",
            distances.len(),
            train_labels.len()
        )));
    }
    if distances.is_empty() {
        return Err(Error::Validation("no training neighbors to vote".into()));
    }
    if let Some(bad) = distances.iter().find(|d| !d.is_finite()) {
        return Err(Error::Validation(format!("non-finite distance {bad}")));
    }
    let k = if k > distances.len() {
        warn!(
            "k = {k} exceeds the training set size {}; clamping",
            distances.len()
        );
        distances.len()
    } else {
        k
    };

    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| {
        distances[a]
            .total_cmp(&distances[b])
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k);
    let nearest = order;

    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &idx in &nearest {
        *counts.entry(train_labels[idx]).or_default() += 1;
    }
    let top = *counts.values().max().expect("k >= 1 neighbors");
    let tied: Vec<u32> = counts
        .iter()
        .filter(|(_, &count)| count == top)
        .map(|(&label, _)| label)
        .collect();
    if tied.len() == 1 {
        return Ok(Prediction {
            label: tied[0],
            neighbor_indices: nearest,
            tie_broken: false,
        });
    }
    let label = nearest
        .iter()
        .map(|&idx| train_labels[idx])
        .find(|l| tied.contains(l))
        .expect("tied labels come from the nearest neighbors");
    Ok(Prediction {
        label,
        neighbor_indices: nearest,
        tie_broken: true,
    })
}

/// Classifies every test row of a distance matrix against its own train
/// labels; output order matches test order.
pub fn classify_all(matrix: &DistanceMatrix, k: usize) -> Result<Vec<Prediction>> {
    (0..matrix.n_test())
        .map(|i| knn_predict(matrix.row(i), matrix.train_labels(), k))
        .collect()
}
