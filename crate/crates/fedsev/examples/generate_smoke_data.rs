//! Regenerate the bundled smoke dataset at `data/smoke.csv`.
//!
//! The file is synthetic: 400 method-level rows with class counts scaled
//! down from the published severity distribution (33/249/35/83), and
//! twelve code-metric-shaped columns whose distributions shift with
//! severity so classifiers have real signal to find. It exists so tests
//! and examples run without any external download; it is NOT the real
//! merged defect dataset.
//!
//! Run with: cargo run --example generate_smoke_data [-- <output.csv>]

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use fedsev::data::Dataset;

const FEATURE_NAMES: [&str; 12] = [
    "loc",
    "statements",
    "cyclomatic",
    "nesting_depth",
    "params",
    "fan_in",
    "fan_out",
    "local_vars",
    "returns",
    "loops",
    "comment_ratio",
    "halstead_volume",
];

/// 400 rows at the published class proportions (275/2082/291/694 scaled
/// by largest remainder).
const CLASS_COUNTS: [usize; 4] = [33, 249, 35, 83];

fn main() -> fedsev::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv").to_string());

    let n: usize = CLASS_COUNTS.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = StandardNormal;
    let mut draw = move || -> f64 { normal.sample(&mut rng) };

    // more critical bugs sit in larger, more tangled methods
    let severity_effect = [2.2, 0.0, 1.2, 0.6];

    let mut features = Array2::zeros((n, FEATURE_NAMES.len()));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0usize;
    for (class, &count) in CLASS_COUNTS.iter().enumerate() {
        let effect = severity_effect[class];
        for _ in 0..count {
            let size = 0.8 * effect + draw();
            let structure = 0.9 * effect + 0.4 * size + 0.6 * draw();
            let interface = 0.4 * effect + draw();

            let loc = (3.0 + 0.7 * size).exp().round().max(3.0);
            let statements = (loc * (0.45 + 0.1 * draw().tanh())).round().max(1.0);
            let cyclomatic = (1.0 + (0.8 + 0.8 * structure).exp()).round();
            let nesting = (1.0 + 0.9 * structure + 0.4 * draw())
                .round()
                .clamp(1.0, 9.0);
            let params = (1.5 + 0.9 * draw()).abs().round();
            let fan_in = (0.9 + 0.6 * interface + 0.4 * draw()).exp().round();
            let fan_out = (1.1 + 0.5 * interface - 0.3 * draw()).exp().round();
            let local_vars = (1.2 + 0.5 * size + 0.3 * draw()).exp().round().max(0.0);
            let returns = 1.0 + (0.8 * draw()).abs().round();
            let loops = (0.7 * structure + 0.5 * draw()).abs().round();
            let comment_ratio = 1.0 / (1.0 + (-(0.5 * draw() - 0.2 * size)).exp());
            let halstead = (4.5 + 0.9 * size + 0.2 * draw()).exp();

            let values = [
                loc,
                statements,
                cyclomatic,
                nesting,
                params,
                fan_in,
                fan_out,
                local_vars,
                returns,
                loops,
                (comment_ratio * 1e4).round() / 1e4,
                (halstead * 1e2).round() / 1e2,
            ];
            for (j, v) in values.into_iter().enumerate() {
                features[(row, j)] = v;
            }
            labels.push(class);
            row += 1;
        }
    }

    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let ds = Dataset::new(features, labels, names, 4)?;
    ds.to_csv(&out, "severity")?;
    println!(
        "wrote {} ({} rows, class counts {:?})",
        out,
        ds.n_rows(),
        ds.class_counts()
    );
    Ok(())
}
