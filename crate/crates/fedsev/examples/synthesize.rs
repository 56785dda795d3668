//! Fit a Gaussian copula on the smoke data, sample a synthetic dataset of
//! the same size, and check marginal/correlation fidelity.
//!
//! Run with: cargo run --example synthesize

use fedsev::data::{CsvOptions, Dataset};
use fedsev::synthesis::{fidelity_report, fit_copula, sample_copula};

fn main() -> fedsev::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv");
    let ds = Dataset::from_csv(path, &CsvOptions::default())?;

    let model = fit_copula(&ds, 7)?;
    println!(
        "fitted {} per-class copulas over {} features",
        model.n_classes(),
        model.n_features()
    );
    for (class, copula) in model.per_class.iter().enumerate() {
        let d = copula.correlation.nrows();
        let mut strongest = (0usize, 0usize, 0.0f64);
        for i in 0..d {
            for j in (i + 1)..d {
                if copula.correlation[(i, j)].abs() > strongest.2.abs() {
                    strongest = (i, j, copula.correlation[(i, j)]);
                }
            }
        }
        println!(
            "  class {class}: strongest dependence {} ~ {} (rho = {:.3})",
            model.feature_names[strongest.0], model.feature_names[strongest.1], strongest.2
        );
    }

    let synth = sample_copula(&model, ds.n_rows(), 99)?;
    println!(
        "\nsampled {} rows, class counts {:?} (real: {:?})",
        synth.n_rows(),
        synth.class_counts(),
        ds.class_counts()
    );

    let report = fidelity_report(&ds, &synth)?;
    println!("\nfidelity:");
    for (name, ks) in ds.feature_names().iter().zip(&report.ks_per_feature) {
        println!("  KS[{name}] = {ks:.4}");
    }
    println!("  max KS                = {:.4}", report.max_ks);
    println!(
        "  max correlation drift = {:.4}",
        report.max_correlation_diff
    );
    println!(
        "  class proportion L1   = {:.6}",
        report.class_proportion_l1
    );

    let out = std::env::temp_dir().join("fedsev_synthetic_smoke.csv");
    synth.to_csv(&out, "severity")?;
    println!("\nwrote {}", out.display());
    Ok(())
}
