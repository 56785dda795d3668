//! The full comparison on the smoke data: three models by three training
//! regimes, 5-fold cross-validated, rendered as one table.
//!
//! Run with: cargo run --release --example compare_regimes

use std::path::PathBuf;

use fedsev::data::{CsvOptions, Dataset};
use fedsev::experiment::{cmd_table, load_config, run_experiment, BaselineRow};
use serde_json::json;

fn main() -> fedsev::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv");
    let ds = Dataset::from_csv(path, &CsvOptions::default())?;
    let out_dir = std::env::temp_dir().join("fedsev_compare_regimes");
    std::fs::create_dir_all(&out_dir)?;

    let mut report_paths: Vec<PathBuf> = Vec::new();
    for model in ["svm", "pac", "boosted"] {
        for regime in ["centralized", "federated", "synthetic"] {
            let config = load_config(
                None,
                &[
                    ("data", json!(PathBuf::from(path))),
                    ("model", json!(model)),
                    ("regime", json!(regime)),
                    ("seed", json!(42)),
                    ("out_dir", json!(out_dir)),
                ],
            )?;
            eprintln!("running {model} / {regime} ...");
            let outcome = run_experiment(&ds, &config)?;
            let report_path = out_dir.join(format!("{model}_{regime}_report.json"));
            std::fs::write(
                &report_path,
                serde_json::to_string_pretty(&outcome.report).unwrap(),
            )?;
            report_paths.push(report_path);
        }
    }

    // a literal row makes an external comparison point visible in the table
    let baseline = BaselineRow::parse("reference,0.54,0.21")?;
    let table = cmd_table(&report_paths, Some(&baseline))?;
    println!("\n{table}");
    println!("reports under {}", out_dir.display());
    Ok(())
}
