//! Fitted preprocessing for the metrics branch: median/IQR scaling, top-k
//! univariate feature selection by ANOVA F-score, and polynomial expansion.

use itertools::Itertools;
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Frozen preprocessing state, fitted on a training split only.
///
/// Applying [`FittedPipeline::transform`] scales each column by
/// `(x - median) / iqr` (an IQR of zero divides by one instead), keeps the
/// `selected` columns, and expands them into all monomials of total degree
/// 1 through `degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub medians: Vec<f64>,
    /// Raw interquartile ranges (Q3 - Q1, linear-interpolation quantiles).
    pub iqrs: Vec<f64>,
    /// Kept feature indices, strictly increasing.
    pub selected: Vec<usize>,
    pub k: usize,
    pub degree: usize,
    pub include_bias: bool,
    pub expanded_dim: usize,
}

/// Monomials of total degree 1..=degree in `k` variables, each given as a
/// multiset of variable indices, ordered by total degree then
/// lexicographically.
pub fn monomial_exponents(k: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut monomials = Vec::new();
    for d in 1..=degree {
        for combo in (0..k).combinations_with_replacement(d) {
            monomials.push(combo);
        }
    }
    monomials
}

/// Number of monomials of total degree 1..=degree in `k` variables:
/// C(k + degree, degree) - 1.
pub fn expanded_dim(k: usize, degree: usize) -> usize {
    let mut binom = 1usize;
    for i in 1..=degree {
        binom = binom * (k + i) / i;
    }
    binom - 1
}

/// One-way ANOVA F-statistic of every column of `x` against the labels.
///
/// F = (between-group SS / (C - 1)) / (within-group SS / (N - C)). A column
/// with zero variance everywhere scores 0; a perfect separator (zero
/// within-group variance, positive between-group variance) maps to the
/// largest finite value so ranking stays total.
pub fn anova_f_scores(x: ArrayView2<'_, f64>, y: &[usize]) -> Result<Vec<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    let n = y.len();
    let n_classes = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    for &label in y {
        counts[label] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data(
            "ANOVA F-score needs at least two classes present".into(),
        ));
    }

    let mut scores = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let mut class_sum = vec![0.0f64; n_classes];
        let mut total_sum = 0.0f64;
        for (&v, &label) in col.iter().zip(y) {
            class_sum[label] += v;
            total_sum += v;
        }
        let grand_mean = total_sum / n as f64;
        let mut ss_between = 0.0;
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let mean_c = class_sum[c] / count as f64;
            ss_between += count as f64 * (mean_c - grand_mean).powi(2);
        }
        let mut ss_within = 0.0;
        for (&v, &label) in col.iter().zip(y) {
            let mean_c = class_sum[label] / counts[label] as f64;
            ss_within += (v - mean_c).powi(2);
        }
        let df_between = (present - 1) as f64;
        let df_within = (n - present) as f64;
        let score = if ss_within <= 0.0 {
            if ss_between <= 0.0 {
                0.0
            } else {
                f64::MAX
            }
        } else {
            (ss_between / df_between) / (ss_within / df_within)
        };
        scores.push(score);
    }
    Ok(scores)
}

/// Fit the scale -> select(k) -> polynomial(degree) pipeline on a training
/// split.
pub fn fit_pipeline(
    train: ArrayView2<'_, f64>,
    labels: &[usize],
    k: usize,
    degree: usize,
) -> Result<FittedPipeline> {
    if train.nrows() == 0 {
        return Err(Error::Data("cannot fit a pipeline on zero rows".into()));
    }
    if k == 0 || k > train.ncols() {
        return Err(Error::Config(format!(
            "selector k={k} out of range for {} features",
            train.ncols()
        )));
    }
    if degree == 0 {
        return Err(Error::Config("polynomial degree must be at least 1".into()));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    if let Some(class) = counts.iter().position(|&c| c == 1) {
        return Err(Error::Data(format!(
            "class {class} has a single member; F-statistic undefined"
        )));
    }

    let mut medians = Vec::with_capacity(train.ncols());
    let mut iqrs = Vec::with_capacity(train.ncols());
    for col in train.columns() {
        let mut sorted: Vec<f64> = col.to_vec();
        sorted.sort_by(f64::total_cmp);
        medians.push(quantile_sorted(&sorted, 0.5));
        iqrs.push(quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25));
    }

    let mut scaled = train.to_owned();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let div = if iqrs[j] == 0.0 { 1.0 } else { iqrs[j] };
        col.mapv_inplace(|v| (v - medians[j]) / div);
    }

    let scores = anova_f_scores(scaled.view(), labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // highest score first, ties broken by lower column index
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected: Vec<usize> = order[..k].to_vec();
    selected.sort_unstable();

    Ok(FittedPipeline {
        medians,
        iqrs,
        selected,
        k,
        degree,
        include_bias: false,
        expanded_dim: expanded_dim(k, degree),
    })
}

impl FittedPipeline {
    pub fn n_features(&self) -> usize {
        self.medians.len()
    }

    /// Scale, select, and polynomially expand a feature matrix.
    ///
    /// Output columns are the monomials from [`monomial_exponents`], so the
    /// first `k` columns are the scaled selected features themselves.
    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "pipeline fitted on {} features, input has {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let monomials = monomial_exponents(self.k, self.degree);
        debug_assert_eq!(monomials.len(), self.expanded_dim);
        let mut out = Array2::zeros((x.nrows(), self.expanded_dim));
        let mut scaled = vec![0.0f64; self.k];
        for (i, row) in x.rows().into_iter().enumerate() {
            for (slot, &j) in scaled.iter_mut().zip(&self.selected) {
                let div = if self.iqrs[j] == 0.0 {
                    1.0
                } else {
                    self.iqrs[j]
                };
                *slot = (row[j] - self.medians[j]) / div;
            }
            for (m, combo) in monomials.iter().enumerate() {
                out[(i, m)] = combo.iter().map(|&v| scaled[v]).product();
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn scaler_matches_interpolated_quantiles() {
        // column 1..5: median 3, Q1 2, Q3 4, IQR 2
        let x = array![[1.0], [2.0], [3.0], [4.0], [5.0]];
        let y = vec![0, 0, 1, 1, 1];
        let p = fit_pipeline(x.view(), &y, 1, 1).unwrap();
        assert_eq!(p.medians, vec![3.0]);
        assert_eq!(p.iqrs, vec![2.0]);
        let t = p.transform(x.view()).unwrap();
        let expected = [-1.0, -0.5, 0.0, 0.5, 1.0];
        for (i, &e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(t[(i, 0)], e, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let x = array![[7.0], [7.0], [7.0], [7.0]];
        let y = vec![0, 0, 1, 1];
        let p = fit_pipeline(x.view(), &y, 1, 1).unwrap();
        assert_eq!(p.iqrs, vec![0.0]);
        let t = p.transform(x.view()).unwrap();
        assert!(t.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn label_copy_feature_ranks_first() {
        // a feature equal to the class label has maximal between-group
        // variance relative to noise features
        let mut rng_state = 12345u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64 - 0.5
        };
        let n = 40;
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let mut x = Array2::zeros((n, 3));
        for i in 0..n {
            x[(i, 0)] = next();
            x[(i, 1)] = labels[i] as f64 + 0.01 * next();
            x[(i, 2)] = next();
        }
        let scores = anova_f_scores(x.view(), &labels).unwrap();
        assert!(scores[1] > scores[0] && scores[1] > scores[2], "{scores:?}");
        let p = fit_pipeline(x.view(), &labels, 1, 1).unwrap();
        assert_eq!(p.selected, vec![1]);
    }

    #[test]
    fn constant_feature_scores_zero() {
        let x = array![[1.0, 5.0], [1.0, 6.0], [1.0, 7.0], [1.0, 8.0]];
        let y = vec![0, 0, 1, 1];
        let scores = anova_f_scores(x.view(), &y).unwrap();
        assert_eq!(scores[0], 0.0);
        assert!(scores[1] > 0.0);
    }

    #[test]
    fn perfect_separator_maps_to_largest_finite() {
        let x = array![[0.0], [0.0], [1.0], [1.0]];
        let y = vec![0, 0, 1, 1];
        let scores = anova_f_scores(x.view(), &y).unwrap();
        assert_eq!(scores[0], f64::MAX);
    }

    #[test]
    fn f_scores_match_brute_force_group_sums() {
        // independent oracle: explicit group means and squared deviations
        let mut state = 99u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let n = 40;
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 4).collect();
        let mut x = Array2::zeros((n, 5));
        for i in 0..n {
            for j in 0..5 {
                x[(i, j)] = next() + (labels[i] as f64) * (j as f64) * 0.2;
            }
        }
        let scores = anova_f_scores(x.view(), &labels).unwrap();
        for (j, &score) in scores.iter().enumerate() {
            let col: Vec<f64> = x.column(j).to_vec();
            let classes: Vec<usize> = (0..4).collect();
            let grand = col.iter().sum::<f64>() / n as f64;
            let mut ssb = 0.0;
            let mut ssw = 0.0;
            for &c in &classes {
                let members: Vec<f64> = col
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(&v, _)| v)
                    .collect();
                let mean_c = members.iter().sum::<f64>() / members.len() as f64;
                ssb += members.len() as f64 * (mean_c - grand).powi(2);
                ssw += members.iter().map(|v| (v - mean_c).powi(2)).sum::<f64>();
            }
            let expected = (ssb / 3.0) / (ssw / (n - 4) as f64);
            assert_abs_diff_eq!(score, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn expansion_width_and_order() {
        assert_eq!(expanded_dim(9, 3), 219);
        assert_eq!(monomial_exponents(9, 3).len(), 219);
        assert_eq!(expanded_dim(2, 2), 5);

        // degree-2 expansion of (a, b) with identity scaling
        let x = array![[2.0, 3.0], [0.0, 0.0]];
        let p = FittedPipeline {
            medians: vec![0.0, 0.0],
            iqrs: vec![1.0, 1.0],
            selected: vec![0, 1],
            k: 2,
            degree: 2,
            include_bias: false,
            expanded_dim: expanded_dim(2, 2),
        };
        let t = p.transform(x.view()).unwrap();
        assert_eq!(t.ncols(), 5);
        // (a, b, a^2, ab, b^2)
        assert_eq!(t.row(0).to_vec(), vec![2.0, 3.0, 4.0, 6.0, 9.0]);
        // zero row stays zero: no bias column
        assert!(t.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn selected_column_median_is_zero_after_fit() {
        let mut state = 4242u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64 * 10.0
        };
        let n = 101;
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let mut x = Array2::zeros((n, 6));
        for i in 0..n {
            for j in 0..6 {
                x[(i, j)] = next() + labels[i] as f64 * 0.3;
            }
        }
        let p = fit_pipeline(x.view(), &labels, 4, 3).unwrap();
        let t = p.transform(x.view()).unwrap();
        // degree-1 monomials come first: scaled selected columns
        for j in 0..4 {
            let mut col: Vec<f64> = t.column(j).to_vec();
            col.sort_by(f64::total_cmp);
            let median = quantile_sorted(&col, 0.5);
            assert!(median.abs() < 1e-9, "column {j} median {median}");
        }
    }

    #[test]
    fn error_paths() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [4.0, 5.0], [6.0, 7.0]];
        let y = vec![0, 0, 1, 1];
        assert!(fit_pipeline(x.view(), &y, 3, 2).is_err()); // k > n_features
        let single = vec![0, 0, 0, 0];
        assert!(anova_f_scores(x.view(), &single).is_err());
        let lonely = vec![0, 0, 0, 1];
        let err = fit_pipeline(x.view(), &lonely, 1, 1).unwrap_err();
        assert!(err.to_string().contains("class 1"), "{err}");
        // transform width mismatch
        let p = fit_pipeline(x.view(), &y, 2, 2).unwrap();
        let narrow = array![[1.0]];
        assert!(p.transform(narrow.view()).is_err());
    }

    #[test]
    fn f_ranking_invariant_to_affine_scaling() {
        let x = array![
            [1.0, 100.0],
            [2.0, 220.0],
            [1.5, 130.0],
            [4.0, 400.0],
            [5.0, 530.0],
            [4.5, 410.0]
        ];
        let y = vec![0, 0, 0, 1, 1, 1];
        let raw = anova_f_scores(x.view(), &y).unwrap();
        let mut scaled = x.clone();
        scaled.column_mut(1).mapv_inplace(|v| (v - 250.0) / 170.0);
        let after = anova_f_scores(scaled.view(), &y).unwrap();
        assert_abs_diff_eq!(raw[1], after[1], epsilon = 1e-9);
    }

    #[test]
    fn pipeline_json_round_trip() {
        let x = array![[1.0, 9.0], [2.0, 8.5], [3.0, 7.0], [4.0, 6.5]];
        let y = vec![0, 0, 1, 1];
        let p = fit_pipeline(x.view(), &y, 2, 2).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: FittedPipeline = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
        assert_eq!(
            p.transform(x.view()).unwrap(),
            back.transform(x.view()).unwrap()
        );
    }
}
