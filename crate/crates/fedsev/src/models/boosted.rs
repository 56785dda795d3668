//! Histogram-based gradient-boosted trees with a softmax objective.
//!
//! Split finding works on per-feature gradient/hessian histograms over
//! quantile bins fitted once on the training features. The same
//! [`TreeBuilder`] drives growth whether the histograms come from a single
//! in-process pass (centralized training) or from summing per-client
//! histograms (federated training), so the two paths differ only in where
//! the numbers are accumulated.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{argmax_tie_low, softmax_grad_hess};
use crate::error::{Error, Result};
use crate::stats::{quantile_sorted, softmax_row};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedHyper {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_bins: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for BoostedHyper {
    fn default() -> Self {
        BoostedHyper {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            n_bins: 256,
            lambda: 1.0,
            seed: 0,
        }
    }
}

impl BoostedHyper {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 || self.n_bins > u16::MAX as usize + 1 {
            return Err(Error::Config(format!(
                "n_bins {} out of range 2..=65536",
                self.n_bins
            )));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Per-feature quantile bin edges shared by every participant of a
/// training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    /// Ascending cut values per feature; bin `b` holds values in
    /// `(cuts[b-1], cuts[b]]`, with the last bin open above.
    pub cuts: Vec<Vec<f64>>,
}

impl BinMapper {
    fn cuts_for_sorted(sorted: &[f64], n_bins: usize) -> Vec<f64> {
        if sorted.is_empty() {
            return Vec::new();
        }
        let max = sorted[sorted.len() - 1];
        let mut cuts = Vec::with_capacity(n_bins - 1);
        for i in 1..n_bins {
            let q = quantile_sorted(sorted, i as f64 / n_bins as f64);
            // a cut at the column maximum can never separate rows
            if q < max && cuts.last().is_none_or(|&last| q > last) {
                cuts.push(q);
            }
        }
        cuts
    }

    /// Fit bin edges from the quantiles of each feature column.
    pub fn fit(x: ArrayView2<'_, f64>, n_bins: usize) -> Self {
        let cuts = x
            .columns()
            .into_iter()
            .map(|col| {
                let mut sorted = col.to_vec();
                sorted.sort_by(f64::total_cmp);
                Self::cuts_for_sorted(&sorted, n_bins)
            })
            .collect();
        BinMapper { cuts }
    }

    /// Fit bin edges from already-pooled per-feature value points, as the
    /// aggregation server does with merged client sketches.
    pub fn from_points(mut points: Vec<Vec<f64>>, n_bins: usize) -> Self {
        let cuts = points
            .iter_mut()
            .map(|column| {
                column.sort_by(f64::total_cmp);
                Self::cuts_for_sorted(column, n_bins)
            })
            .collect();
        BinMapper { cuts }
    }

    pub fn n_features(&self) -> usize {
        self.cuts.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    pub fn bins_per_feature(&self) -> Vec<usize> {
        (0..self.n_features()).map(|f| self.n_bins(f)).collect()
    }

    pub fn bin(&self, feature: usize, value: f64) -> u16 {
        self.cuts[feature].partition_point(|&c| c < value) as u16
    }

    pub fn bin_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array2<u16>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "bin mapper fitted on {} features, input has {}",
                self.n_features(),
                x.ncols()
            )));
        }
        Ok(Array2::from_shape_fn((x.nrows(), x.ncols()), |(i, j)| {
            self.bin(j, x[(i, j)])
        }))
    }
}

/// Gradient, hessian, and count sums per bin of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub count: Vec<u32>,
}

impl FeatureHistogram {
    fn zeros(n_bins: usize) -> Self {
        FeatureHistogram {
            grad: vec![0.0; n_bins],
            hess: vec![0.0; n_bins],
            count: vec![0; n_bins],
        }
    }
}

/// Histograms for every feature at one tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeHistogram {
    pub features: Vec<FeatureHistogram>,
}

impl NodeHistogram {
    /// Node totals (identical across features; feature 0 is the
    /// convention on both the centralized and the server path).
    pub fn totals(&self) -> (f64, f64, u64) {
        let f = &self.features[0];
        let g = f.grad.iter().sum();
        let h = f.hess.iter().sum();
        let c = f.count.iter().map(|&v| u64::from(v)).sum();
        (g, h, c)
    }
}

/// Accumulate per-bin gradient/hessian sums for the given rows.
pub fn accumulate_node_histogram(
    binned: &Array2<u16>,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    bins_per_feature: &[usize],
) -> NodeHistogram {
    let mut features: Vec<FeatureHistogram> = bins_per_feature
        .iter()
        .map(|&n| FeatureHistogram::zeros(n))
        .collect();
    for &i in rows {
        let row = binned.row(i);
        let (g, h) = (grad[i], hess[i]);
        for (f, hist) in features.iter_mut().enumerate() {
            let b = row[f] as usize;
            hist.grad[b] += g;
            hist.hess[b] += h;
            hist.count[b] += 1;
        }
    }
    NodeHistogram { features }
}

/// Sum client histograms in fixed client-index order.
pub fn sum_histograms(parts: &[NodeHistogram]) -> Result<NodeHistogram> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Data("no histograms to sum".into()))?;
    let mut out = first.clone();
    for part in &parts[1..] {
        if part.features.len() != out.features.len() {
            return Err(Error::Shape(format!(
                "histogram has {} features, expected {}",
                part.features.len(),
                out.features.len()
            )));
        }
        for (acc, next) in out.features.iter_mut().zip(&part.features) {
            if next.grad.len() != acc.grad.len() {
                return Err(Error::Shape(format!(
                    "client histogram length {} does not match the shared bin count {}",
                    next.grad.len(),
                    acc.grad.len()
                )));
            }
            for (a, b) in acc.grad.iter_mut().zip(&next.grad) {
                *a += b;
            }
            for (a, b) in acc.hess.iter_mut().zip(&next.hess) {
                *a += b;
            }
            for (a, b) in acc.count.iter_mut().zip(&next.count) {
                *a += b;
            }
        }
    }
    Ok(out)
}

/// Split gain `0.5 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)]`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    let term = |g: f64, h: f64| {
        let d = h + lambda;
        if d > 0.0 {
            g * g / d
        } else {
            0.0
        }
    };
    0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr))
}

/// Leaf weight `-G/(H+l)` scaled by the learning rate.
pub fn leaf_weight(g: f64, h: f64, lambda: f64, learning_rate: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        -g / d * learning_rate
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub feature: usize,
    /// Left side takes bins `0..=bin`.
    pub bin: u16,
    /// Raw-value threshold equivalent to `bin`: left iff `x <= threshold`.
    pub threshold: f64,
    pub gain: f64,
}

/// Pick the best split over all features and bin boundaries; ties keep the
/// first candidate in (feature, bin) order. Returns `None` when no split
/// has positive gain.
pub fn best_split(hist: &NodeHistogram, bins: &BinMapper, lambda: f64) -> Option<SplitDecision> {
    let (g_total, h_total, count_total) = hist.totals();
    let mut best: Option<SplitDecision> = None;
    let mut best_gain = 0.0f64;
    for (feature, fh) in hist.features.iter().enumerate() {
        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut cl = 0u64;
        // the last bin has no cut above it, so it is never a left boundary
        for bin in 0..fh.grad.len().saturating_sub(1) {
            gl += fh.grad[bin];
            hl += fh.hess[bin];
            cl += u64::from(fh.count[bin]);
            if cl == 0 || cl == count_total {
                continue;
            }
            let gain = split_gain(gl, hl, g_total - gl, h_total - hl, lambda);
            if gain > best_gain {
                best_gain = gain;
                best = Some(SplitDecision {
                    feature,
                    bin: bin as u16,
                    threshold: bins.cuts[feature][bin],
                    gain,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: usize,
    pub threshold: f64,
    pub split_bin: u16,
    pub left: usize,
    pub right: usize,
    pub value: f64,
    pub is_leaf: bool,
}

impl TreeNode {
    fn open() -> Self {
        TreeNode {
            feature: 0,
            threshold: 0.0,
            split_bin: 0,
            left: 0,
            right: 0,
            value: 0.0,
            is_leaf: true,
        }
    }
}

/// A regression tree for one class of one boosting round. Leaf values are
/// already scaled by the learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut node = &self.nodes[0];
        while !node.is_leaf {
            node = if row[node.feature] <= node.threshold {
                &self.nodes[node.left]
            } else {
                &self.nodes[node.right]
            };
        }
        node.value
    }

    /// Traverse with pre-binned features; equivalent to [`Tree::predict_row`]
    /// for rows binned with the training mapper.
    pub fn predict_binned(&self, row: ArrayView1<'_, u16>) -> f64 {
        let mut node = &self.nodes[0];
        while !node.is_leaf {
            node = if row[node.feature] <= node.split_bin {
                &self.nodes[node.left]
            } else {
                &self.nodes[node.right]
            };
        }
        node.value
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf)
            .map(|n| n.value)
            .collect()
    }
}

/// Outcome of resolving one open node against its aggregated histogram.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeOutcome {
    Leaf {
        node: usize,
        value: f64,
    },
    Split {
        node: usize,
        decision: SplitDecision,
        left: usize,
        right: usize,
    },
}

/// Breadth-first, depth-limited tree growth driven by whoever owns the
/// histograms. Node ids are allocated in creation order on every
/// participant, so a server and its clients stay aligned.
#[derive(Debug)]
pub struct TreeBuilder {
    nodes: Vec<TreeNode>,
    open: VecDeque<(usize, usize)>,
    max_depth: usize,
    lambda: f64,
    learning_rate: f64,
}

impl TreeBuilder {
    pub fn new(max_depth: usize, lambda: f64, learning_rate: f64) -> Self {
        let mut open = VecDeque::new();
        open.push_back((0, 0));
        TreeBuilder {
            nodes: vec![TreeNode::open()],
            open,
            max_depth,
            lambda,
            learning_rate,
        }
    }

    /// Next node awaiting a histogram, as `(node_id, depth)`.
    pub fn next_open(&mut self) -> Option<(usize, usize)> {
        self.open.pop_front()
    }

    /// Decide a node from its aggregated histogram: either finalize it as a
    /// leaf or split it and enqueue the two children.
    pub fn resolve(
        &mut self,
        node: usize,
        depth: usize,
        hist: &NodeHistogram,
        bins: &BinMapper,
    ) -> NodeOutcome {
        let (g, h, _) = hist.totals();
        let decision = if depth < self.max_depth {
            best_split(hist, bins, self.lambda)
        } else {
            None
        };
        match decision {
            None => {
                let value = leaf_weight(g, h, self.lambda, self.learning_rate);
                self.nodes[node].is_leaf = true;
                self.nodes[node].value = value;
                NodeOutcome::Leaf { node, value }
            }
            Some(decision) => {
                let left = self.nodes.len();
                let right = left + 1;
                self.nodes.push(TreeNode::open());
                self.nodes.push(TreeNode::open());
                let entry = &mut self.nodes[node];
                entry.is_leaf = false;
                entry.feature = decision.feature;
                entry.threshold = decision.threshold;
                entry.split_bin = decision.bin;
                entry.left = left;
                entry.right = right;
                self.open.push_back((left, depth + 1));
                self.open.push_back((right, depth + 1));
                NodeOutcome::Split {
                    node,
                    decision,
                    left,
                    right,
                }
            }
        }
    }

    pub fn finish(self) -> Tree {
        debug_assert!(self.open.is_empty(), "unresolved open nodes");
        Tree { nodes: self.nodes }
    }
}

/// Split a node's rows by a decision, preserving order.
pub(crate) fn partition_rows(
    binned: &Array2<u16>,
    rows: &[usize],
    feature: usize,
    bin: u16,
) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&i| binned[(i, feature)] <= bin)
}

/// Trained boosted-trees model: `trees[round][class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTreesState {
    pub trees: Vec<Vec<Tree>>,
    pub hyper: BoostedHyper,
    pub base_score: Vec<f64>,
    pub n_classes: usize,
    pub n_features: usize,
    pub bins: BinMapper,
}

impl BoostedTreesState {
    /// Raw per-class scores: base score plus all leaf values on the row's
    /// path through every tree.
    pub fn decision_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Shape(format!(
                "model trained on {} features, input has {}",
                self.n_features,
                x.ncols()
            )));
        }
        let mut scores = Array2::zeros((x.nrows(), self.n_classes));
        for (i, row) in x.rows().into_iter().enumerate() {
            for c in 0..self.n_classes {
                scores[(i, c)] = self.base_score[c];
            }
            for round in &self.trees {
                for (c, tree) in round.iter().enumerate() {
                    scores[(i, c)] += tree.predict_row(row);
                }
            }
        }
        Ok(scores)
    }

    /// Row-stochastic class probabilities via softmax over the scores.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let scores = self.decision_scores(x)?;
        let mut proba = Array2::zeros(scores.raw_dim());
        let mut buf = vec![0.0; self.n_classes];
        for (mut out, row) in proba.rows_mut().into_iter().zip(scores.rows()) {
            softmax_row(row.as_slice().expect("contiguous"), &mut buf);
            for (o, &p) in out.iter_mut().zip(&buf) {
                *o = p;
            }
        }
        Ok(proba)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let scores = self.decision_scores(x)?;
        Ok(scores
            .rows()
            .into_iter()
            .map(|r| argmax_tie_low(r.as_slice().expect("contiguous")))
            .collect())
    }
}

/// Per-round, per-class gradients and hessians at the current scores.
pub(crate) fn compute_grad_hess(
    scores: &Array2<f64>,
    labels: &[usize],
    n_classes: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = labels.len();
    let mut grad = vec![vec![0.0; n]; n_classes];
    let mut hess = vec![vec![0.0; n]; n_classes];
    let mut g_row = vec![0.0; n_classes];
    let mut h_row = vec![0.0; n_classes];
    for (i, &label) in labels.iter().enumerate() {
        softmax_grad_hess(
            scores.row(i).as_slice().expect("contiguous"),
            label,
            &mut g_row,
            &mut h_row,
        );
        for c in 0..n_classes {
            grad[c][i] = g_row[c];
            hess[c][i] = h_row[c];
        }
    }
    (grad, hess)
}

/// Grow one tree on locally owned rows.
pub(crate) fn grow_tree(
    binned: &Array2<u16>,
    bins: &BinMapper,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    hyper: &BoostedHyper,
) -> Tree {
    let bins_per_feature = bins.bins_per_feature();
    let mut builder = TreeBuilder::new(hyper.max_depth, hyper.lambda, hyper.learning_rate);
    let mut node_rows: Vec<Vec<usize>> = vec![rows.to_vec()];
    while let Some((node, depth)) = builder.next_open() {
        let rows = std::mem::take(&mut node_rows[node]);
        let hist = accumulate_node_histogram(binned, &rows, grad, hess, &bins_per_feature);
        match builder.resolve(node, depth, &hist, bins) {
            NodeOutcome::Leaf { .. } => {}
            NodeOutcome::Split {
                decision,
                left,
                right,
                ..
            } => {
                let (l, r) = partition_rows(binned, &rows, decision.feature, decision.bin);
                node_rows.resize(right + 1, Vec::new());
                node_rows[left] = l;
                node_rows[right] = r;
            }
        }
    }
    builder.finish()
}

/// Centralized histogram training on pooled data.
pub fn train_boosted(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    hyper: &BoostedHyper,
) -> Result<BoostedTreesState> {
    hyper.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    {
        let first = y.first().copied();
        if y.iter().all(|&v| Some(v) == first) {
            return Err(Error::Data("training labels contain a single class".into()));
        }
    }

    let bins = BinMapper::fit(x, hyper.n_bins);
    let binned = bins.bin_matrix(x)?;
    let all_rows: Vec<usize> = (0..x.nrows()).collect();
    let base_score = vec![0.0; n_classes];
    let mut scores = Array2::zeros((x.nrows(), n_classes));
    let mut trees: Vec<Vec<Tree>> = Vec::with_capacity(hyper.n_rounds);

    for _ in 0..hyper.n_rounds {
        let (grad, hess) = compute_grad_hess(&scores, y, n_classes);
        let round: Vec<Tree> = (0..n_classes)
            .map(|c| grow_tree(&binned, &bins, &all_rows, &grad[c], &hess[c], hyper))
            .collect();
        for (c, tree) in round.iter().enumerate() {
            for i in 0..x.nrows() {
                scores[(i, c)] += tree.predict_binned(binned.row(i));
            }
        }
        trees.push(round);
    }

    Ok(BoostedTreesState {
        trees,
        hyper: *hyper,
        base_score,
        n_classes,
        n_features: x.ncols(),
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn toy(n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let mut x = Array2::zeros((n, 3));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 4;
            x[(i, 0)] = next() + c as f64 * 0.8;
            x[(i, 1)] = next();
            x[(i, 2)] = next() * (1.0 + c as f64 * 0.1);
            y.push(c);
        }
        (x, y)
    }

    fn log_loss(state: &BoostedTreesState, x: ArrayView2<'_, f64>, y: &[usize]) -> f64 {
        let proba = state.predict_proba(x).unwrap();
        let mut total = 0.0;
        for (i, &label) in y.iter().enumerate() {
            total -= proba[(i, label)].max(1e-15).ln();
        }
        total / y.len() as f64
    }

    #[test]
    fn bin_mapper_quantile_cuts() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let bins = BinMapper::fit(x.view(), 2);
        // single cut at the median of 1..4 = 2.5
        assert_eq!(bins.cuts[0], vec![2.5]);
        assert_eq!(bins.bin(0, 2.5), 0);
        assert_eq!(bins.bin(0, 2.6), 1);
        assert_eq!(bins.n_bins(0), 2);
    }

    #[test]
    fn bin_mapper_constant_column_single_bin() {
        let x = array![[5.0], [5.0], [5.0]];
        let bins = BinMapper::fit(x.view(), 8);
        assert!(bins.cuts[0].is_empty());
        assert_eq!(bins.n_bins(0), 1);
    }

    #[test]
    fn zero_rounds_gives_uniform_probabilities() {
        let (x, y) = toy(40, 1);
        let hyper = BoostedHyper {
            n_rounds: 0,
            ..BoostedHyper::default()
        };
        let state = train_boosted(x.view(), &y, 4, &hyper).unwrap();
        let proba = state.predict_proba(x.view()).unwrap();
        for row in proba.rows() {
            for &p in row {
                assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
            }
        }
        assert_eq!(state.predict(x.view()).unwrap()[0], 0);
    }

    #[test]
    fn perfect_split_feature_is_chosen_and_loss_drops() {
        // feature 0 alone separates the two classes
        let mut x = Array2::zeros((20, 2));
        let mut y = Vec::new();
        for i in 0..20 {
            x[(i, 0)] = if i < 10 { 0.0 } else { 1.0 };
            x[(i, 1)] = (i % 5) as f64;
            y.push(usize::from(i >= 10));
        }
        let hyper = BoostedHyper {
            n_rounds: 1,
            max_depth: 2,
            n_bins: 16,
            ..BoostedHyper::default()
        };
        let state = train_boosted(x.view(), &y, 2, &hyper).unwrap();
        let root = &state.trees[0][0].nodes[0];
        assert!(!root.is_leaf);
        assert_eq!(root.feature, 0);

        let zero_rounds = train_boosted(
            x.view(),
            &y,
            2,
            &BoostedHyper {
                n_rounds: 0,
                ..hyper
            },
        )
        .unwrap();
        assert!(
            log_loss(&state, x.view(), &y) < log_loss(&zero_rounds, x.view(), &y),
            "training log-loss did not decrease"
        );
    }

    #[test]
    fn log_loss_decreases_over_rounds() {
        let (x, y) = toy(120, 9);
        let mut previous = f64::INFINITY;
        for rounds in [0, 1, 3, 8] {
            let hyper = BoostedHyper {
                n_rounds: rounds,
                max_depth: 3,
                n_bins: 32,
                ..BoostedHyper::default()
            };
            let state = train_boosted(x.view(), &y, 4, &hyper).unwrap();
            let loss = log_loss(&state, x.view(), &y);
            assert!(loss < previous + 1e-12, "loss {loss} after {rounds} rounds");
            previous = loss;
        }
    }

    #[test]
    fn huge_lambda_freezes_predictions_at_base_score() {
        let (x, y) = toy(60, 4);
        let hyper = BoostedHyper {
            n_rounds: 5,
            lambda: 1e12,
            n_bins: 16,
            ..BoostedHyper::default()
        };
        let state = train_boosted(x.view(), &y, 4, &hyper).unwrap();
        for round in &state.trees {
            for tree in round {
                for v in tree.leaf_values() {
                    assert!(v.abs() < 1e-9, "leaf weight {v}");
                }
            }
        }
        let proba = state.predict_proba(x.view()).unwrap();
        for row in proba.rows() {
            for &p in row {
                assert_abs_diff_eq!(p, 0.25, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn probability_rows_sum_to_one() {
        let (x, y) = toy(100, 12);
        let hyper = BoostedHyper {
            n_rounds: 10,
            max_depth: 4,
            n_bins: 64,
            ..BoostedHyper::default()
        };
        let state = train_boosted(x.view(), &y, 4, &hyper).unwrap();
        let proba = state.predict_proba(x.view()).unwrap();
        for row in proba.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn binned_and_raw_prediction_agree_on_training_rows() {
        let (x, y) = toy(80, 21);
        let hyper = BoostedHyper {
            n_rounds: 4,
            max_depth: 3,
            n_bins: 32,
            ..BoostedHyper::default()
        };
        let state = train_boosted(x.view(), &y, 4, &hyper).unwrap();
        let binned = state.bins.bin_matrix(x.view()).unwrap();
        for round in &state.trees {
            for tree in round {
                for i in 0..x.nrows() {
                    assert_eq!(
                        tree.predict_row(x.row(i)),
                        tree.predict_binned(binned.row(i))
                    );
                }
            }
        }
    }

    #[test]
    fn histogram_sum_rejects_length_mismatch() {
        let a = NodeHistogram {
            features: vec![FeatureHistogram::zeros(4)],
        };
        let b = NodeHistogram {
            features: vec![FeatureHistogram::zeros(5)],
        };
        assert!(sum_histograms(&[a.clone(), b]).is_err());
        assert!(sum_histograms(&[a.clone(), a]).is_ok());
    }

    #[test]
    fn split_gain_zero_when_sides_equal() {
        // unpenalized gain vanishes when both sides carry the same
        // gradient/hessian density; with lambda > 0 the per-leaf penalty
        // makes an uninformative split strictly negative
        let gain = split_gain(-1.0, 0.5, -1.0, 0.5, 0.0);
        assert!(gain.abs() < 1e-12);
        assert!(split_gain(-1.0, 0.5, -1.0, 0.5, 1.0) < 0.0);
        // one-sided concentration has positive gain
        assert!(split_gain(-2.0, 0.5, 2.0, 0.5, 1.0) > 0.0);
    }

    #[test]
    fn non_finite_features_rejected() {
        let x = array![[1.0], [f64::INFINITY]];
        assert!(train_boosted(x.view(), &[0, 1], 2, &BoostedHyper::default()).is_err());
    }

    #[test]
    fn model_checkpoint_round_trip() {
        let (x, y) = toy(40, 3);
        let hyper = BoostedHyper {
            n_rounds: 2,
            n_bins: 8,
            ..BoostedHyper::default()
        };
        let state = train_boosted(x.view(), &y, 4, &hyper).unwrap();
        let json = serde_json::to_string(&state).unwrap();
        let back: BoostedTreesState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, state);
        assert_eq!(
            back.predict(x.view()).unwrap(),
            state.predict(x.view()).unwrap()
        );
    }
}
