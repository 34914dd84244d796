//! Classification metrics: confusion matrix, accuracies, IoU, and
//! confidence intervals over repeated trials.
//!
//! All percentages are on a 0–100 scale. The confusion matrix is square
//! over the sorted union of truth and predicted class ids, with rows
//! indexed by truth and columns by prediction.

use std::collections::BTreeSet;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Square confusion matrix; `count(i, j)` is the number of samples of
/// truth class `classes[i]` predicted as `classes[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    classes: Vec<u32>,
}

impl ConfusionMatrix {
    /// Builds a matrix from explicit counts; `classes[i]` names row and
    /// column `i`. Classes may have all-zero rows and columns (never
    /// observed), which [`Self::mean_iou`] and [`Self::average_accuracy`]
    /// skip.
    pub fn from_counts(rows: Vec<Vec<u64>>, classes: Vec<u32>) -> Result<Self> {
        let n = classes.len();
        if n == 0 {
            return Err(Error::Validation("confusion matrix has no classes".into()));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "counts must form a {n} x {n} grid to match the class list"
            )));
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("class ids must be strictly ascending".into()));
        }
        let counts: Vec<u64> = rows.into_iter().flatten().collect();
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::Validation("confusion matrix counts no samples".into()));
        }
        Ok(ConfusionMatrix { counts, classes })
    }

    /// Tallies paired truth/prediction labels.
    pub fn from_labels(truth: &[u32], predicted: &[u32]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension(format!(
                "{} truth labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::Validation("no samples to score".into()));
        }
        let classes: Vec<u32> = truth
            .iter()
            .chain(predicted)
            .copied()
            .collect::<BTreeSet<u32>>()
            .into_iter()
            .collect();
        let n = classes.len();
        let index = |label: u32| classes.binary_search(&label).expect("label in class list");
        let mut counts = vec![0u64; n * n];
        for (&t, &p) in truth.iter().zip(predicted) {
            counts[index(t) * n + index(p)] += 1;
        }
        Ok(ConfusionMatrix { counts, classes })
    }

    /// Sorted class ids covered by the matrix.
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn size(&self) -> usize {
        self.classes.len()
    }

    /// Count at truth row `i`, prediction column `j`.
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.classes.len() + j]
    }

    /// Matrix as nested rows, truth-major, for serialization.
    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks_exact(self.classes.len())
            .map(|row| row.to_vec())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        (0..self.classes.len()).map(|j| self.count(i, j)).sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..self.classes.len()).map(|i| self.count(i, j)).sum()
    }

    /// Overall accuracy: percent of samples on the diagonal.
    pub fn overall_accuracy(&self) -> f64 {
        let trace: u64 = (0..self.classes.len()).map(|i| self.count(i, i)).sum();
        100.0 * trace as f64 / self.total() as f64
    }

    /// Average accuracy: mean per-class recall over classes that have at
    /// least one truth sample.
    pub fn average_accuracy(&self) -> f64 {
        let mut sum = 0.0;
        let mut scored = 0usize;
        for i in 0..self.classes.len() {
            let row = self.row_sum(i);
            if row > 0 {
                sum += self.count(i, i) as f64 / row as f64;
                scored += 1;
            }
        }
        100.0 * sum / scored as f64
    }

    /// Per-class intersection over union, percent, in `classes()` order.
    /// The union of a class is its row sum plus column sum minus the
    /// diagonal; classes can only enter the matrix by appearing in truth or
    /// prediction, so the union is always positive.
    pub fn per_class_iou(&self) -> Vec<f64> {
        (0..self.classes.len())
            .map(|i| {
                let diag = self.count(i, i);
                let union = self.row_sum(i) + self.col_sum(i) - diag;
                if union == 0 {
                    0.0
                } else {
                    100.0 * diag as f64 / union as f64
                }
            })
            .collect()
    }

    /// Mean intersection over union across classes with nonzero union.
    pub fn mean_iou(&self) -> f64 {
        let mut sum = 0.0;
        let mut scored = 0usize;
        for i in 0..self.classes.len() {
            let diag = self.count(i, i);
            let union = self.row_sum(i) + self.col_sum(i) - diag;
            if union > 0 {
                sum += diag as f64 / union as f64;
                scored += 1;
            }
        }
        100.0 * sum / scored as f64
    }
}

/// Mean and 95% confidence half-width over repeated trials, keeping the
/// per-trial values for provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialAggregate {
    pub mean: f64,
    pub half_width: f64,
    pub values: Vec<f64>,
}

impl TrialAggregate {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Aggregates per-trial scores as `mean ± t* · sd / sqrt(n)` where `sd` is
/// the sample standard deviation and `t*` the two-sided 95% Student-t
/// quantile at `n - 1` degrees of freedom (2.776 for five trials). A
/// confidence interval needs at least two values.
pub fn aggregate_trials(values: &[f64]) -> Result<TrialAggregate> {
    if values.len() < 2 {
        return Err(Error::Validation(format!(
            "confidence intervals need at least 2 trial values, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("non-finite trial value {bad}")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = variance.sqrt();
    let t_star = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid Student-t parameters")
        .inverse_cdf(0.975);
    Ok(TrialAggregate {
        mean,
        half_width: t_star * sd / (n as f64).sqrt(),
        values: values.to_vec(),
    })
}
