//! Multiclass classifiers with a shared train/predict/export contract.

mod boosted;
mod linear;

pub use boosted::{
    accumulate_node_histogram, best_split, leaf_weight, split_gain, sum_histograms, train_boosted,
    BinMapper, BoostedHyper, BoostedTreesState, FeatureHistogram, NodeHistogram, NodeOutcome,
    SplitDecision, Tree, TreeBuilder, TreeNode,
};
pub(crate) use boosted::{compute_grad_hess, partition_rows};
pub use linear::{
    export_params, import_params, LinearHyper, LinearKind, LinearModelState, PacTrainer, SvmTrainer,
};

use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flattened model parameters plus the producing client's row count, the
/// only model artifact that crosses the client/server boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub shape: Vec<usize>,
    /// Row count of the producing client; used as the FedAvg weight.
    pub sample_weight: usize,
}

impl ParamVector {
    pub fn validate(&self) -> Result<()> {
        let expected: usize = self.shape.iter().product();
        if expected != self.values.len() {
            return Err(Error::Shape(format!(
                "param vector has {} values but shape {:?} implies {}",
                self.values.len(),
                self.shape,
                expected
            )));
        }
        Ok(())
    }
}

/// Index of the largest score; ties resolve to the lowest class index.
pub fn argmax_tie_low(scores: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Softmax gradient and hessian of the log-loss with respect to the raw
/// scores: g_c = p_c - [y = c], h_c = p_c (1 - p_c).
pub fn softmax_grad_hess(scores: &[f64], label: usize, grad: &mut [f64], hess: &mut [f64]) {
    crate::stats::softmax_row(scores, grad);
    for (c, h) in hess.iter_mut().enumerate() {
        let p = grad[c];
        *h = p * (1.0 - p);
    }
    grad[label] -= 1.0;
}

/// A trained classifier of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelState {
    Linear(LinearModelState),
    Boosted(BoostedTreesState),
}

impl ModelState {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        match self {
            ModelState::Linear(m) => m.predict(x),
            ModelState::Boosted(m) => m.predict(x),
        }
    }
}

/// Versioned checkpoint envelope.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub schema_version: u32,
    pub model: ModelState,
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

pub fn save_model<P: AsRef<Path>>(path: P, model: &ModelState) -> Result<()> {
    let checkpoint = ModelCheckpoint {
        schema_version: MODEL_SCHEMA_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&checkpoint)
        .map_err(|e| Error::Data(format!("serialize model: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model<P: AsRef<Path>>(path: P) -> Result<ModelState> {
    let json = std::fs::read_to_string(path)?;
    let checkpoint: ModelCheckpoint =
        serde_json::from_str(&json).map_err(|e| Error::Data(format!("parse model: {e}")))?;
    if checkpoint.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::Data(format!(
            "unsupported model schema version {}",
            checkpoint.schema_version
        )));
    }
    Ok(checkpoint.model)
}
