//! Fit the preprocessing pipeline and inspect what it learned: robust
//! scaling state, ANOVA-F feature ranking, and the polynomial expansion.
//!
//! Run with: cargo run --example preprocess_pipeline

use fedsev::data::{CsvOptions, Dataset};
use fedsev::preprocess::{anova_f_scores, expanded_dim, fit_pipeline};

fn main() -> fedsev::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv");
    let ds = Dataset::from_csv(path, &CsvOptions::default())?;

    let pipeline = fit_pipeline(ds.features().view(), ds.labels(), 9, 3)?;
    println!("selector_k = {}, degree = {}", pipeline.k, pipeline.degree);
    println!(
        "expanded width = {} (C({}+{}, {}) - 1 = {})",
        pipeline.expanded_dim,
        pipeline.k,
        pipeline.degree,
        pipeline.degree,
        expanded_dim(pipeline.k, pipeline.degree)
    );

    println!("\nper-feature scaling state:");
    for (j, name) in ds.feature_names().iter().enumerate() {
        println!(
            "  {name:<16} median {:>10.4}  iqr {:>10.4}",
            pipeline.medians[j], pipeline.iqrs[j]
        );
    }

    // recompute the scores the selector saw, for display
    let mut scaled = ds.features().clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let div = if pipeline.iqrs[j] == 0.0 {
            1.0
        } else {
            pipeline.iqrs[j]
        };
        col.mapv_inplace(|v| (v - pipeline.medians[j]) / div);
    }
    let scores = anova_f_scores(scaled.view(), ds.labels())?;
    println!("\nANOVA F-scores (selected features marked *):");
    for (j, name) in ds.feature_names().iter().enumerate() {
        let mark = if pipeline.selected.contains(&j) {
            "*"
        } else {
            " "
        };
        println!("  {mark} {name:<16} F = {:.3}", scores[j]);
    }

    let transformed = pipeline.transform(ds.features().view())?;
    println!(
        "\ntransformed training matrix: {} x {}",
        transformed.nrows(),
        transformed.ncols()
    );
    Ok(())
}
