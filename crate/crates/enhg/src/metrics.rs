//! Partition and classification quality: clustering accuracy under the
//! optimal one-to-one cluster-to-class matching, normalized mutual
//! information, and plain accuracy on an evaluation mask.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datio::LabelVector;
use crate::{Error, Result};

/// Joint counts of predicted clusters against true classes.
///
/// Built over the samples where both labels are known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ContingencyTable {
    pub fn from_labels(pred: &LabelVector, truth: &LabelVector) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
        }
        let k_pred = pred.class_count();
        let k_true = truth.class_count();
        let mut counts = vec![vec![0u64; k_true]; k_pred];
        let mut n = 0u64;
        for i in 0..pred.len() {
            if pred.mask()[i] && truth.mask()[i] {
                counts[pred.labels()[i]][truth.labels()[i]] += 1;
                n += 1;
            }
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    fn row_marginals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_marginals(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, |r| r.len());
        (0..cols)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

/// Minimum-cost assignment on a square cost matrix (Hungarian algorithm with
/// potentials, O(n^3)). Returns the column chosen for each row.
fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // row matched to column (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] > 0 {
            assignment[matched_row[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy: matched fraction under the best one-to-one map from
/// predicted clusters to true classes. Differing cluster counts are handled
/// by padding the assignment problem with zero-count dummies.
pub fn clustering_accuracy(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let table = ContingencyTable::from_labels(pred, truth)?;
    if table.n == 0 {
        return Err(Error::EmptyMask);
    }
    let k = table.counts.len().max(table.counts.first().map_or(0, |r| r.len()));
    let mut cost = vec![vec![0i64; k]; k];
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            cost[i][j] = -(c as i64);
        }
    }
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = (0..k).map(|i| -cost[i][assignment[i]]).sum();
    Ok(matched as f64 / table.n as f64)
}

/// Which mean normalizes the mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    /// `MI / sqrt(H_pred * H_true)`.
    #[default]
    GeometricMean,
    /// `2 MI / (H_pred + H_true)`.
    ArithmeticMean,
}

/// Normalized mutual information with natural logarithms; the `0 log 0` and
/// `0 / 0` conventions both resolve to zero.
pub fn nmi(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::GeometricMean)
}

pub fn nmi_with(
    pred: &LabelVector,
    truth: &LabelVector,
    normalization: NmiNormalization,
) -> Result<f64> {
    let table = ContingencyTable::from_labels(pred, truth)?;
    if table.n == 0 {
        return Err(Error::EmptyMask);
    }
    let n = table.n as f64;
    let rows = table.row_marginals();
    let cols = table.col_marginals();
    let entropy = |marginals: &[u64]| -> f64 {
        marginals
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(&rows);
    let h_true = entropy(&cols);
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let pij = c as f64 / n;
            let pi = rows[i] as f64 / n;
            let qj = cols[j] as f64 / n;
            mi += pij * (pij / (pi * qj)).ln();
        }
    }
    let denom = match normalization {
        NmiNormalization::GeometricMean => (h_pred * h_true).sqrt(),
        NmiNormalization::ArithmeticMean => 0.5 * (h_pred + h_true),
    };
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Fraction of mask-selected samples whose predicted label equals the truth.
pub fn classification_accuracy(
    pred: &LabelVector,
    truth: &LabelVector,
    eval_mask: &[bool],
) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    if eval_mask.len() != pred.len() {
        return Err(Error::LengthMismatch { left: eval_mask.len(), right: pred.len() });
    }
    let selected: Vec<usize> = (0..pred.len()).filter(|&i| eval_mask[i]).collect();
    if selected.is_empty() {
        return Err(Error::EmptyMask);
    }
    let correct = selected
        .iter()
        .filter(|&&i| pred.labels()[i] == truth.labels()[i])
        .count();
    Ok(correct as f64 / selected.len() as f64)
}

/// One metric observation, emitted as JSON and appended to the CSV ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub n: usize,
    pub seed: Option<u64>,
}

impl MetricReport {
    pub fn new(metric: impl Into<String>, value: f64, n: usize, seed: Option<u64>) -> Self {
        Self { metric: metric.into(), value, n, seed }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metric report serializes")
    }

    /// Append to a CSV ledger, writing the header on first use.
    pub fn append_to_ledger(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let wrap = |source| Error::Io { path: path.to_path_buf(), source };
        let fresh = !path.exists()
            || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(wrap)?;
        if fresh {
            writeln!(file, "metric,value,n,seed").map_err(wrap)?;
        }
        let seed = self.seed.map_or(String::new(), |s| s.to_string());
        writeln!(file, "{},{},{},{}", self.metric, self.value, self.n, seed).map_err(wrap)?;
        Ok(())
    }
}
