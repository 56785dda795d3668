//! Federated training on the smoke data: FedAvg for a linear model and
//! histogram aggregation for boosted trees, under IID and Dirichlet client
//! partitions.
//!
//! Run with: cargo run --release --example train_federated

use fedsev::data::{CsvOptions, Dataset, PartitionScheme};
use fedsev::federation::{
    run_federated_boosted, run_federated_linear, AggregationStrategy, FederationPlan,
};
use fedsev::models::{BoostedHyper, LinearHyper, LinearKind};
use fedsev::preprocess::fit_pipeline;

fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    predicted.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

fn main() -> fedsev::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv");
    let ds = Dataset::from_csv(path, &CsvOptions::default())?;

    // one shared pipeline over the pooled training data
    let pipeline = fit_pipeline(ds.features().view(), ds.labels(), 9, 3)?;
    let x = pipeline.transform(ds.features().view())?;
    let y = ds.labels().to_vec();

    for scheme in [PartitionScheme::Iid, PartitionScheme::Dirichlet] {
        println!("=== scheme: {scheme:?} (3 clients) ===");
        let plan = FederationPlan {
            n_clients: 3,
            rounds: 20,
            local_epochs: 50,
            scheme,
            alpha: 1.0,
            aggregation: AggregationStrategy::FedAvgParams,
            seed: 11,
        };

        let run = run_federated_linear(
            x.view(),
            &y,
            ds.n_classes(),
            &plan,
            LinearKind::SquaredHingeSvm,
            LinearHyper::svm_default(3),
        )?;
        println!(
            "linear svm: {} rounds, client sizes {:?}, train accuracy {:.3}",
            run.logs.len(),
            run.logs[0].client_samples,
            accuracy(&run.model.predict(x.view())?, &y)
        );
        println!(
            "  first/last round checksums: {:016x} / {:016x}",
            run.logs[0].param_checksum,
            run.logs.last().unwrap().param_checksum
        );
        println!(
            "  messages seen by the server: {} params, {} histograms, {} sketches",
            run.audit.params, run.audit.histograms, run.audit.sketches
        );

        let boosted_plan = FederationPlan {
            aggregation: AggregationStrategy::HistogramSum,
            ..plan
        };
        let hyper = BoostedHyper {
            n_rounds: 30,
            ..BoostedHyper::default()
        };
        let run = run_federated_boosted(x.view(), &y, ds.n_classes(), &boosted_plan, &hyper)?;
        println!(
            "boosted:    {} boosting rounds, train accuracy {:.3}",
            run.logs.len(),
            accuracy(&run.model.predict(x.view())?, &y)
        );
        println!(
            "  messages seen by the server: {} params, {} histograms, {} sketches",
            run.audit.params, run.audit.histograms, run.audit.sketches
        );
        println!();
    }
    Ok(())
}
