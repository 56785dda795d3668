//! Train all three classifiers centrally on the smoke data under 5-fold
//! cross-validation and print the metric suite.
//!
//! Run with: cargo run --release --example train_centralized

use std::path::PathBuf;

use fedsev::data::{CsvOptions, Dataset};
use fedsev::experiment::{load_config, run_experiment, ModelName};
use serde_json::json;

fn main() -> fedsev::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv");
    let ds = Dataset::from_csv(path, &CsvOptions::default())?;

    println!(
        "{:<8} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "model", "f1_weighted", "f1_macro", "mcc", "kappa", "gmean"
    );
    for model in [ModelName::Svm, ModelName::Pac, ModelName::Boosted] {
        let config = load_config(
            None,
            &[
                ("data", json!(PathBuf::from(path))),
                ("model", json!(model.as_str())),
                ("regime", json!("centralized")),
                ("seed", json!(42)),
            ],
        )?;
        let outcome = run_experiment(&ds, &config)?;
        let m = &outcome.report.mean;
        let s = &outcome.report.std;
        println!(
            "{:<8} {:>7.3}±{:.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            model.as_str(),
            m.f1_weighted,
            s.f1_weighted,
            m.f1_macro,
            m.mcc,
            m.kappa,
            m.gmean
        );
    }
    Ok(())
}
