//! Stratified k-fold cross-validation runner.

use serde::{Deserialize, Serialize};

use super::metrics::{cohens_kappa, f1_macro, f1_weighted, gmean, mcc, ConfusionMatrix};
use crate::data::{make_stratified_folds, Dataset};
use crate::error::Result;
use crate::seed::{derive_seed, derive_seed_indexed};

/// One fold's view of the experiment, handed to the trainer.
pub struct FoldContext<'a> {
    pub fold: usize,
    pub dataset: &'a Dataset,
    pub train_indices: &'a [usize],
    pub test_indices: &'a [usize],
    /// Fold-specific child seed; derive further per-purpose seeds from it.
    pub seed: u64,
}

/// Trains on a fold's training split and predicts its held-out rows.
///
/// Implementations must only fit on `train_indices`; the runner hands the
/// test rows over solely for prediction.
pub trait FoldTrainer {
    fn fit_predict(&self, ctx: &FoldContext<'_>) -> Result<Vec<usize>>;
}

impl<F> FoldTrainer for F
where
    F: Fn(&FoldContext<'_>) -> Result<Vec<usize>>,
{
    fn fit_predict(&self, ctx: &FoldContext<'_>) -> Result<Vec<usize>> {
        self(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub gmean: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub f1_weighted: f64,
    pub f1_macro: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub gmean: f64,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Per-fold metrics plus their mean and sample standard deviation, with a
/// full configuration echo sufficient to re-run the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub config: serde_json::Value,
    pub folds: Vec<FoldMetrics>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
}

fn summarize(folds: &[FoldMetrics]) -> (MetricSummary, MetricSummary) {
    let n = folds.len() as f64;
    let mean_of = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let mean = MetricSummary {
        f1_weighted: mean_of(|m| m.f1_weighted),
        f1_macro: mean_of(|m| m.f1_macro),
        mcc: mean_of(|m| m.mcc),
        kappa: mean_of(|m| m.kappa),
        gmean: mean_of(|m| m.gmean),
    };
    let std_of = |f: fn(&FoldMetrics) -> f64, mean: f64| {
        if folds.len() < 2 {
            0.0
        } else {
            (folds.iter().map(|m| (f(m) - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        }
    };
    let std = MetricSummary {
        f1_weighted: std_of(|m| m.f1_weighted, mean.f1_weighted),
        f1_macro: std_of(|m| m.f1_macro, mean.f1_macro),
        mcc: std_of(|m| m.mcc, mean.mcc),
        kappa: std_of(|m| m.kappa, mean.kappa),
        gmean: std_of(|m| m.gmean, mean.gmean),
    };
    (mean, std)
}

/// Run stratified k-fold cross-validation: per fold, the trainer fits on
/// the training split only and predicts the held-out rows; the four
/// metrics are computed on each held-out fold and averaged.
///
/// `config_echo` is embedded verbatim in the report so a run can be
/// reproduced from its output alone.
pub fn run_cv(
    ds: &Dataset,
    trainer: &dyn FoldTrainer,
    k: usize,
    master_seed: u64,
    config_echo: serde_json::Value,
) -> Result<MetricsReport> {
    let plan = make_stratified_folds(ds, k, derive_seed(master_seed, "folds"))?;
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let train_indices = plan.train_indices(fold);
        let test_indices = plan.test_indices(fold);
        let ctx = FoldContext {
            fold,
            dataset: ds,
            train_indices: &train_indices,
            test_indices: &test_indices,
            seed: derive_seed_indexed(master_seed, "fold", fold as u64),
        };
        let predicted = trainer
            .fit_predict(&ctx)
            .map_err(|e| e.with_context(&format!("fold {fold}")))?;
        if predicted.len() != test_indices.len() {
            return Err(crate::error::Error::Shape(format!(
                "fold {fold}: trainer returned {} predictions for {} test rows",
                predicted.len(),
                test_indices.len()
            )));
        }
        let truth: Vec<usize> = test_indices.iter().map(|&i| ds.labels()[i]).collect();
        let cm = ConfusionMatrix::from_labels(&truth, &predicted, ds.n_classes())?;
        folds.push(FoldMetrics {
            fold,
            f1_weighted: f1_weighted(&cm),
            f1_macro: f1_macro(&cm),
            mcc: mcc(&cm),
            kappa: cohens_kappa(&cm),
            gmean: gmean(&cm),
            confusion: cm,
        });
    }
    let (mean, std) = summarize(&folds);
    Ok(MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config_echo,
        folds,
        mean,
        std,
    })
}
