//! Gaussian-copula synthetic tabular data generation.
//!
//! One copula per class: empirical marginals coupled through the Pearson
//! correlation of rank-based normal scores. Sampling draws correlated
//! normals through the Cholesky factor, maps them to uniforms, and inverts
//! each marginal's empirical CDF by linear interpolation, so synthetic
//! values always stay inside the training range.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::{
    apportion, average_ranks, correlation_matrix, ks_statistic, normal_cdf, normal_inverse_cdf,
    quantile_sorted,
};

/// Smallest eigenvalue kept when repairing a correlation matrix.
pub const EIGENVALUE_FLOOR: f64 = 1e-6;

/// Copula state for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCopula {
    /// Sorted training values per feature: the empirical CDF support.
    pub marginals: Vec<Vec<f64>>,
    /// Regularized normal-score correlation matrix.
    pub correlation: Array2<f64>,
    /// Lower Cholesky factor of the correlation.
    pub cholesky: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub per_class: Vec<ClassCopula>,
    /// Empirical training class proportions; sampling reproduces them by
    /// largest-remainder rounding.
    pub class_proportions: Vec<f64>,
    pub feature_names: Vec<String>,
    pub seed: u64,
}

impl CopulaModel {
    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Clip eigenvalues at [`EIGENVALUE_FLOOR`], renormalize the diagonal to 1,
/// and return the repaired matrix with its lower Cholesky factor.
fn regularize_correlation(corr: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = corr.nrows();
    let m = DMatrix::from_fn(d, d, |i, j| corr[(i, j)]);
    let eigen = m.symmetric_eigen();
    let clipped = DVector::from_iterator(
        d,
        eigen.eigenvalues.iter().map(|&v| v.max(EIGENVALUE_FLOOR)),
    );
    let rebuilt =
        &eigen.eigenvectors * DMatrix::from_diagonal(&clipped) * eigen.eigenvectors.transpose();
    let mut repaired = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            repaired[(i, j)] = rebuilt[(i, j)] / (rebuilt[(i, i)] * rebuilt[(j, j)]).sqrt();
        }
    }
    // exact symmetry and unit diagonal survive the renormalization up to
    // rounding; force them so the Cholesky sees a clean input
    for i in 0..d {
        repaired[(i, i)] = 1.0;
        for j in 0..i {
            let avg = 0.5 * (repaired[(i, j)] + repaired[(j, i)]);
            repaired[(i, j)] = avg;
            repaired[(j, i)] = avg;
        }
    }
    let chol = repaired
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("correlation matrix not positive definite".into()))?;
    let l = chol.l();
    let corr_nd = Array2::from_shape_fn((d, d), |(i, j)| repaired[(i, j)]);
    let chol_nd = Array2::from_shape_fn((d, d), |(i, j)| l[(i, j)]);
    Ok((corr_nd, chol_nd))
}

/// Fit one Gaussian copula per class.
///
/// Normal scores use average ranks: `z = phi^-1(rank / (n + 1))`. A
/// constant feature gets all-zero scores and therefore zero correlation
/// with everything else.
pub fn fit_copula(train: &Dataset, seed: u64) -> Result<CopulaModel> {
    if train.n_features() == 0 {
        return Err(Error::Data("copula needs at least one feature".into()));
    }
    let counts = train.class_counts();
    let mut per_class = Vec::with_capacity(train.n_classes());
    for (class, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::Data(format!(
                "class {class} has {count} rows; copula fitting needs at least 2"
            )));
        }
        let rows: Vec<usize> = train
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        let (x, _) = train.select_rows(&rows);
        let n = x.nrows();
        let d = x.ncols();
        let mut marginals = Vec::with_capacity(d);
        let mut scores = Array2::zeros((n, d));
        for j in 0..d {
            let col: Vec<f64> = x.column(j).to_vec();
            let ranks = average_ranks(&col);
            for (i, &r) in ranks.iter().enumerate() {
                scores[(i, j)] = normal_inverse_cdf(r / (n as f64 + 1.0));
            }
            let mut sorted = col;
            sorted.sort_by(f64::total_cmp);
            marginals.push(sorted);
        }
        let raw = correlation_matrix(&scores);
        let (correlation, cholesky) = regularize_correlation(&raw)?;
        per_class.push(ClassCopula {
            marginals,
            correlation,
            cholesky,
        });
    }
    let total = train.n_rows() as f64;
    let class_proportions = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(CopulaModel {
        per_class,
        class_proportions,
        feature_names: train.feature_names().to_vec(),
        seed,
    })
}

/// Sample a synthetic dataset of `n` rows.
///
/// Class counts follow largest-remainder rounding of the training
/// proportions; rows of each class are generated in class order from one
/// seeded stream, so output is deterministic per `(model, n, seed)`.
pub fn sample_copula(model: &CopulaModel, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let counts = apportion(n, &model.class_proportions);
    let d = model.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut row_out = 0usize;
    let mut eps = vec![0.0f64; d];
    for (class, &count) in counts.iter().enumerate() {
        let copula = &model.per_class[class];
        for _ in 0..count {
            for e in eps.iter_mut() {
                *e = normal.sample(&mut rng);
            }
            for j in 0..d {
                // z_j = (L eps)_j, correlated standard normal
                let mut z = 0.0;
                for (k, &e) in eps.iter().enumerate().take(j + 1) {
                    z += copula.cholesky[(j, k)] * e;
                }
                let u = normal_cdf(z);
                features[(row_out, j)] = quantile_sorted(&copula.marginals[j], u);
            }
            labels.push(class);
            row_out += 1;
        }
    }
    Dataset::new(
        features,
        labels,
        model.feature_names.clone(),
        model.n_classes(),
    )
}

/// Marginal and dependence fidelity of a synthetic dataset against the
/// real one it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Two-sample KS statistic per feature, pooled over classes.
    pub ks_per_feature: Vec<f64>,
    pub max_ks: f64,
    /// Largest absolute difference between pairwise Pearson correlations.
    pub max_correlation_diff: f64,
    /// L1 distance between class proportions.
    pub class_proportion_l1: f64,
}

pub fn fidelity_report(real: &Dataset, synth: &Dataset) -> Result<FidelityReport> {
    if real.n_features() != synth.n_features() {
        return Err(Error::Shape(format!(
            "real data has {} features, synthetic has {}",
            real.n_features(),
            synth.n_features()
        )));
    }
    let d = real.n_features();
    let mut ks_per_feature = Vec::with_capacity(d);
    for j in 0..d {
        let a: Vec<f64> = real.features().column(j).to_vec();
        let b: Vec<f64> = synth.features().column(j).to_vec();
        ks_per_feature.push(ks_statistic(&a, &b));
    }
    let max_ks = ks_per_feature.iter().copied().fold(0.0, f64::max);

    let corr_real = correlation_matrix(real.features());
    let corr_synth = correlation_matrix(synth.features());
    let mut max_correlation_diff = 0.0f64;
    for i in 0..d {
        for j in (i + 1)..d {
            max_correlation_diff =
                max_correlation_diff.max((corr_real[(i, j)] - corr_synth[(i, j)]).abs());
        }
    }

    let classes = real.n_classes().max(synth.n_classes());
    let proportions = |ds: &Dataset| -> Vec<f64> {
        let mut p = vec![0.0; classes];
        for &y in ds.labels() {
            p[y] += 1.0 / ds.n_rows() as f64;
        }
        p
    };
    let (pr, ps) = (proportions(real), proportions(synth));
    let class_proportion_l1 = pr.iter().zip(&ps).map(|(a, b)| (a - b).abs()).sum();

    Ok(FidelityReport {
        ks_per_feature,
        max_ks,
        max_correlation_diff,
        class_proportion_l1,
    })
}
