//! Federated gradient boosting by histogram aggregation.
//!
//! Clients never ship rows: round 0 exchanges per-feature quantile
//! sketches so the server can derive shared bin edges, and every tree node
//! is decided from the sum of per-client gradient/hessian histograms. With
//! shared bins the resulting ensemble matches centralized training on the
//! pooled data up to floating-point reassociation of the histogram sums.

use ndarray::{Array2, ArrayView2};

use super::{
    param_checksum, partition_for_plan, select_rows, AggregationServer, ClientMessage,
    FederatedRun, FederationPlan, HistogramUpload, QuantileSketch, RoundLog,
};
use crate::error::{Error, Result};
use crate::models::{
    accumulate_node_histogram, compute_grad_hess, partition_rows, BoostedHyper, BoostedTreesState,
    NodeOutcome, Tree, TreeBuilder,
};

/// Maximum points per feature a client sends in its round-0 sketch; the
/// sketch is the exact sorted column below this, quantile-compressed above.
pub const SKETCH_CAPACITY: usize = 4096;

struct ClientNode {
    x: Array2<f64>,
    y: Vec<usize>,
    binned: Array2<u16>,
    scores: Array2<f64>,
    grad: Vec<Vec<f64>>,
    hess: Vec<Vec<f64>>,
    node_rows: Vec<Vec<usize>>,
}

impl ClientNode {
    fn sketch(x: &Array2<f64>) -> QuantileSketch {
        let points = x
            .columns()
            .into_iter()
            .map(|col| {
                let mut sorted = col.to_vec();
                sorted.sort_by(f64::total_cmp);
                if sorted.len() <= SKETCH_CAPACITY {
                    sorted
                } else {
                    (0..SKETCH_CAPACITY)
                        .map(|i| {
                            crate::stats::quantile_sorted(
                                &sorted,
                                i as f64 / (SKETCH_CAPACITY - 1) as f64,
                            )
                        })
                        .collect()
                }
            })
            .collect();
        QuantileSketch {
            n_rows: x.nrows(),
            points,
        }
    }

    fn start_tree(&mut self) {
        self.node_rows = vec![(0..self.x.nrows()).collect()];
    }

    fn histogram_for(
        &self,
        node: usize,
        class: usize,
        bins_per_feature: &[usize],
    ) -> HistogramUpload {
        HistogramUpload {
            node,
            class,
            histogram: accumulate_node_histogram(
                &self.binned,
                &self.node_rows[node],
                &self.grad[class],
                &self.hess[class],
                bins_per_feature,
            ),
        }
    }

    fn apply_outcome(&mut self, outcome: &NodeOutcome) {
        if let NodeOutcome::Split {
            node,
            decision,
            left,
            right,
        } = outcome
        {
            let rows = std::mem::take(&mut self.node_rows[*node]);
            let (l, r) = partition_rows(&self.binned, &rows, decision.feature, decision.bin);
            if self.node_rows.len() <= *right {
                self.node_rows.resize(right + 1, Vec::new());
            }
            self.node_rows[*left] = l;
            self.node_rows[*right] = r;
        }
    }

    fn apply_round_trees(&mut self, trees: &[Tree]) {
        for (c, tree) in trees.iter().enumerate() {
            for i in 0..self.x.nrows() {
                self.scores[(i, c)] += tree.predict_binned(self.binned.row(i));
            }
        }
    }
}

/// Train boosted trees across federated clients.
///
/// Runs `hyper.n_rounds` boosting rounds, one aggregation round each;
/// `plan.rounds` does not apply to histogram aggregation. Returns the
/// global ensemble, one log entry per boosting round, and the server's
/// message audit.
pub fn run_federated_boosted(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    plan: &FederationPlan,
    hyper: &BoostedHyper,
) -> Result<FederatedRun<BoostedTreesState>> {
    plan.validate()?;
    hyper.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let partition = partition_for_plan(&rows, y, plan)?;
    let client_samples = partition.client_sizes();
    let mut server = AggregationServer::new();

    // round 0: negotiate shared bin edges from client sketches
    let mut pending: Vec<(Array2<f64>, Vec<usize>)> = partition
        .row_indices
        .iter()
        .map(|rows| {
            let cx = select_rows(x, rows);
            let cy: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
            (cx, cy)
        })
        .collect();
    let sketch_messages: Vec<ClientMessage> = pending
        .iter()
        .map(|(cx, _)| ClientMessage::Sketch(ClientNode::sketch(cx)))
        .collect();
    let bins = server.merge_sketches(&sketch_messages, hyper.n_bins)?;
    let bins_per_feature = bins.bins_per_feature();

    let mut clients: Vec<ClientNode> = pending
        .drain(..)
        .map(|(cx, cy)| {
            let binned = bins.bin_matrix(cx.view())?;
            let scores = Array2::zeros((cx.nrows(), n_classes));
            Ok(ClientNode {
                x: cx,
                y: cy,
                binned,
                scores,
                grad: Vec::new(),
                hess: Vec::new(),
                node_rows: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    let mut trees: Vec<Vec<Tree>> = Vec::with_capacity(hyper.n_rounds);
    let mut logs = Vec::with_capacity(hyper.n_rounds);

    for round in 0..hyper.n_rounds {
        for client in &mut clients {
            let (g, h) = compute_grad_hess(&client.scores, &client.y, n_classes);
            client.grad = g;
            client.hess = h;
        }
        let mut round_trees = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            let mut builder = TreeBuilder::new(hyper.max_depth, hyper.lambda, hyper.learning_rate);
            for client in &mut clients {
                client.start_tree();
            }
            while let Some((node, depth)) = builder.next_open() {
                let messages: Vec<ClientMessage> = clients
                    .iter()
                    .map(|c| {
                        ClientMessage::Histograms(c.histogram_for(node, class, &bins_per_feature))
                    })
                    .collect();
                let aggregated = server.aggregate_histograms(&messages, &bins, node, class)?;
                let outcome = builder.resolve(node, depth, &aggregated, &bins);
                for client in &mut clients {
                    client.apply_outcome(&outcome);
                }
            }
            round_trees.push(builder.finish());
        }
        for client in &mut clients {
            client.apply_round_trees(&round_trees);
        }
        let leaf_values: Vec<f64> = round_trees.iter().flat_map(Tree::leaf_values).collect();
        logs.push(RoundLog {
            round,
            client_samples: client_samples.clone(),
            param_checksum: param_checksum(&leaf_values),
            eval: None,
        });
        trees.push(round_trees);
    }

    let model = BoostedTreesState {
        trees,
        hyper: *hyper,
        base_score: vec![0.0; n_classes],
        n_classes,
        n_features: x.ncols(),
        bins,
    };
    Ok(FederatedRun {
        model,
        logs,
        audit: server.audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PartitionScheme;
    use crate::federation::AggregationStrategy;
    use crate::models::{train_boosted, BinMapper, FeatureHistogram, NodeHistogram};

    fn toy(n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let mut x = Array2::zeros((n, 4));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 3;
            x[(i, 0)] = next() + c as f64;
            x[(i, 1)] = next() * 2.0 - c as f64 * 0.5;
            x[(i, 2)] = next();
            x[(i, 3)] = next() + f64::from(c == 1) * 0.7;
            y.push(c);
        }
        (x, y)
    }

    fn plan(n_clients: usize) -> FederationPlan {
        FederationPlan {
            n_clients,
            rounds: 1,
            local_epochs: 1,
            scheme: PartitionScheme::Iid,
            alpha: 1.0,
            aggregation: AggregationStrategy::HistogramSum,
            seed: 77,
        }
    }

    fn hyper() -> BoostedHyper {
        BoostedHyper {
            n_rounds: 15,
            max_depth: 4,
            n_bins: 32,
            ..BoostedHyper::default()
        }
    }

    fn max_leaf_diff(a: &BoostedTreesState, b: &BoostedTreesState) -> f64 {
        let mut max = 0.0f64;
        for (ra, rb) in a.trees.iter().zip(&b.trees) {
            for (ta, tb) in ra.iter().zip(rb) {
                assert_eq!(ta.nodes.len(), tb.nodes.len(), "tree shapes differ");
                for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                    assert_eq!(na.is_leaf, nb.is_leaf);
                    if na.is_leaf {
                        max = max.max((na.value - nb.value).abs());
                    } else {
                        assert_eq!(na.feature, nb.feature);
                        assert_eq!(na.split_bin, nb.split_bin);
                    }
                }
            }
        }
        max
    }

    #[test]
    fn single_client_matches_centralized() {
        let (x, y) = toy(150, 5);
        let h = hyper();
        let centralized = train_boosted(x.view(), &y, 3, &h).unwrap();
        let run = run_federated_boosted(x.view(), &y, 3, &plan(1), &h).unwrap();
        assert_eq!(run.logs.len(), h.n_rounds);
        assert_eq!(centralized.bins, run.model.bins);
        assert!(max_leaf_diff(&centralized, &run.model) < 1e-9);
    }

    #[test]
    fn two_disjoint_clients_match_pooled_histograms() {
        let (x, y) = toy(200, 6);
        let h = hyper();
        let centralized = train_boosted(x.view(), &y, 3, &h).unwrap();
        let run = run_federated_boosted(x.view(), &y, 3, &plan(2), &h).unwrap();
        assert_eq!(centralized.bins, run.model.bins, "shared bins must match");
        assert!(max_leaf_diff(&centralized, &run.model) < 1e-9);
        // logit-level agreement on fresh rows
        let (probe, _) = toy(50, 99);
        let sc = centralized.decision_scores(probe.view()).unwrap();
        let sf = run.model.decision_scores(probe.view()).unwrap();
        for (a, b) in sc.iter().zip(sf.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn mismatched_histogram_length_is_rejected() {
        let mut server = AggregationServer::new();
        let bins = BinMapper {
            cuts: vec![vec![0.5, 1.0]],
        };
        let bad = HistogramUpload {
            node: 0,
            class: 0,
            histogram: NodeHistogram {
                features: vec![FeatureHistogram {
                    grad: vec![0.0; 7],
                    hess: vec![0.0; 7],
                    count: vec![0; 7],
                }],
            },
        };
        let err = server
            .aggregate_histograms(&[ClientMessage::Histograms(bad)], &bins, 0, 0)
            .unwrap_err();
        assert!(err.to_string().contains("does not match"), "{err}");
    }

    #[test]
    fn audit_shows_only_sketches_and_histograms() {
        let (x, y) = toy(90, 14);
        let h = BoostedHyper {
            n_rounds: 3,
            max_depth: 2,
            n_bins: 16,
            ..BoostedHyper::default()
        };
        let run = run_federated_boosted(x.view(), &y, 3, &plan(3), &h).unwrap();
        assert_eq!(run.audit.params, 0);
        assert_eq!(run.audit.sketches, 3);
        assert!(run.audit.histograms > 0);
        // every open node requested one histogram per client
        assert_eq!(run.audit.histograms % 3, 0);
    }
}
