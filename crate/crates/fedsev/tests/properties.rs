//! Property tests for the structural invariants: fold stratification,
//! partition conservation, FedAvg convexity, probability normalization,
//! and transform determinism.

use std::collections::HashSet;

use ndarray::Array2;
use proptest::prelude::*;

use fedsev::data::{make_stratified_folds, partition_dirichlet, partition_iid, Dataset};
use fedsev::federation::fedavg;
use fedsev::models::{train_boosted, BoostedHyper, ParamVector};
use fedsev::preprocess::fit_pipeline;

fn dataset_from_counts(counts: &[usize]) -> Dataset {
    let n: usize = counts.iter().sum();
    let mut labels = Vec::with_capacity(n);
    for (c, &k) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(c, k));
    }
    let features = Array2::from_shape_fn((n, 2), |(i, j)| ((i * 31 + j * 17) % 19) as f64);
    Dataset::new(features, labels, vec!["a".into(), "b".into()], counts.len()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_stratify_and_cover(
        counts in prop::collection::vec(5usize..60, 2..5),
        k in 2usize..5,
        seed in any::<u64>(),
    ) {
        let ds = dataset_from_counts(&counts);
        let plan = make_stratified_folds(&ds, k, seed).unwrap();
        // cover: every row in exactly one test fold
        let mut seen = HashSet::new();
        for fold in 0..k {
            for i in plan.test_indices(fold) {
                prop_assert!(seen.insert(i));
            }
        }
        prop_assert_eq!(seen.len(), ds.n_rows());
        // per-class counts differ by at most one across folds
        for class in 0..counts.len() {
            let per_fold: Vec<usize> = (0..k)
                .map(|f| {
                    plan.test_indices(f)
                        .iter()
                        .filter(|&&i| ds.labels()[i] == class)
                        .count()
                })
                .collect();
            let max = *per_fold.iter().max().unwrap();
            let min = *per_fold.iter().min().unwrap();
            prop_assert!(max - min <= 1, "class {} spread {:?}", class, per_fold);
        }
        // determinism
        let again = make_stratified_folds(&ds, k, seed).unwrap();
        prop_assert_eq!(plan, again);
    }

    #[test]
    fn partitions_conserve_classes(
        counts in prop::collection::vec(4usize..40, 2..4),
        n_clients in 1usize..5,
        alpha in 0.1f64..10.0,
        seed in any::<u64>(),
    ) {
        let ds = dataset_from_counts(&counts);
        let rows: Vec<usize> = (0..ds.n_rows()).collect();
        prop_assume!(n_clients <= rows.len());
        for partition in [
            partition_iid(&rows, ds.labels(), n_clients, seed).unwrap(),
            partition_dirichlet(&rows, ds.labels(), n_clients, alpha, seed).unwrap(),
        ] {
            let mut seen = HashSet::new();
            for client in &partition.row_indices {
                prop_assert!(!client.is_empty());
                for &r in client {
                    prop_assert!(seen.insert(r));
                }
            }
            prop_assert_eq!(seen.len(), rows.len());
            let table = partition.class_table(ds.labels(), counts.len());
            for (class, &count) in counts.iter().enumerate() {
                let total: usize = table.iter().map(|t| t[class]).sum();
                prop_assert_eq!(total, count);
            }
        }
        // IID size balance
        let iid = partition_iid(&rows, ds.labels(), n_clients, seed).unwrap();
        let sizes = iid.client_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn fedavg_is_a_convex_combination(
        a in prop::collection::vec(-100.0f64..100.0, 1..8),
        scale in -100.0f64..100.0,
        wa in 1usize..1000,
        wb in 1usize..1000,
    ) {
        let b: Vec<f64> = a.iter().map(|v| v + scale).collect();
        let shape = vec![a.len()];
        let avg = fedavg(&[
            ParamVector { values: a.clone(), shape: shape.clone(), sample_weight: wa },
            ParamVector { values: b.clone(), shape, sample_weight: wb },
        ])
        .unwrap();
        for ((&x, &y), &m) in a.iter().zip(&b).zip(&avg.values) {
            let (lo, hi) = (x.min(y), x.max(y));
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9, "{m} outside [{lo}, {hi}]");
        }
        prop_assert_eq!(avg.sample_weight, wa + wb);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn boosted_probabilities_normalize(seed in any::<u64>(), rounds in 1usize..5) {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let n = 60;
        let x = Array2::from_shape_fn((n, 3), |_| next());
        let y: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let hyper = BoostedHyper {
            n_rounds: rounds,
            max_depth: 3,
            n_bins: 16,
            ..BoostedHyper::default()
        };
        let model = train_boosted(x.view(), &y, 3, &hyper).unwrap();
        let proba = model.predict_proba(x.view()).unwrap();
        for row in proba.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            for &p in row {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn transform_is_bit_deterministic(seed in any::<u64>()) {
        let mut state = seed | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64 * 20.0 - 10.0
        };
        let n = 40;
        let x = Array2::from_shape_fn((n, 5), |_| next());
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let pipeline = fit_pipeline(x.view(), &y, 3, 3).unwrap();
        let a = pipeline.transform(x.view()).unwrap();
        let b = pipeline.transform(x.view()).unwrap();
        prop_assert_eq!(a.shape(), &[n, pipeline.expanded_dim]);
        for (u, v) in a.iter().zip(b.iter()) {
            prop_assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}
