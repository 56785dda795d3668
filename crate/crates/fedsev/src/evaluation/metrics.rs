//! Confusion-matrix metrics: weighted/macro F1, multiclass MCC, Cohen's
//! kappa, and the geometric mean of per-class recalls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix with true classes on rows and predictions on
/// columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} truth labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut counts = vec![vec![0u64; n_classes]; n_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::Data(format!(
                    "label pair ({t}, {p}) outside [0, {n_classes})"
                )));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Row sums: per-class true counts.
    pub fn support(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Column sums: per-class predicted counts.
    pub fn predicted_counts(&self) -> Vec<u64> {
        (0..self.n_classes())
            .map(|c| self.counts.iter().map(|row| row[c]).sum())
            .collect()
    }

    pub fn diagonal_sum(&self) -> u64 {
        (0..self.n_classes()).map(|c| self.counts[c][c]).sum()
    }
}

/// Support-weighted mean of per-class F1 scores; a class with zero
/// precision-plus-recall contributes 0.
pub fn f1_weighted(cm: &ConfusionMatrix) -> f64 {
    f1_averaged(cm, true)
}

/// Unweighted mean of per-class F1 over classes with support.
pub fn f1_macro(cm: &ConfusionMatrix) -> f64 {
    f1_averaged(cm, false)
}

fn f1_averaged(cm: &ConfusionMatrix, weighted: bool) -> f64 {
    let support = cm.support();
    let predicted = cm.predicted_counts();
    let total: u64 = support.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut weight_sum = 0.0;
    for c in 0..cm.n_classes() {
        if support[c] == 0 {
            continue; // zero-support class carries weight 0
        }
        let tp = cm.counts[c][c] as f64;
        let precision = if predicted[c] > 0 {
            tp / predicted[c] as f64
        } else {
            0.0
        };
        let recall = tp / support[c] as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let weight = if weighted { support[c] as f64 } else { 1.0 };
        sum += weight * f1;
        weight_sum += weight;
    }
    if weight_sum > 0.0 {
        sum / weight_sum
    } else {
        0.0
    }
}

/// Multiclass Matthews correlation coefficient
/// `(c s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))`,
/// defined as 0 when the denominator vanishes.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    if s == 0.0 {
        return 0.0;
    }
    let c = cm.diagonal_sum() as f64;
    let t: Vec<f64> = cm.support().iter().map(|&v| v as f64).collect();
    let p: Vec<f64> = cm.predicted_counts().iter().map(|&v| v as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let denom = ((s * s - pp) * (s * s - tt)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (c * s - pt) / denom
    }
}

/// Cohen's kappa `(p_o - p_e) / (1 - p_e)`; when expected agreement is 1,
/// returns 1 for perfect observed agreement and 0 otherwise.
pub fn cohens_kappa(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    if s == 0.0 {
        return 0.0;
    }
    let p_o = cm.diagonal_sum() as f64 / s;
    let p_e: f64 = cm
        .support()
        .iter()
        .zip(cm.predicted_counts().iter())
        .map(|(&t, &p)| (t as f64) * (p as f64))
        .sum::<f64>()
        / (s * s);
    if p_e >= 1.0 {
        return if p_o >= 1.0 { 1.0 } else { 0.0 };
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Geometric mean of per-class recalls. Classes with zero support are
/// excluded from the product; any included class with zero recall gives 0.
pub fn gmean(cm: &ConfusionMatrix) -> f64 {
    let support = cm.support();
    let mut log_sum = 0.0;
    let mut included = 0usize;
    for (c, &count) in support.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let recall = cm.counts[c][c] as f64 / count as f64;
        if recall == 0.0 {
            return 0.0;
        }
        log_sum += recall.ln();
        included += 1;
    }
    if included == 0 {
        0.0
    } else {
        (log_sum / included as f64).exp()
    }
}
