//! Command-line front end: `run`, `synth`, `table`, `inspect`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fedsev::data::{CsvOptions, PartitionScheme};
use fedsev::error::{Error, Result};
use fedsev::experiment::{self, BaselineRow};

#[derive(Parser)]
#[command(
    name = "fedsev",
    version,
    about = "Bug-severity classifiers on code metrics: centralized, federated, and synthetic-data training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cross-validated experiment and write report files.
    Run(RunArgs),
    /// Fit a copula on a CSV and write a synthetic CSV plus fidelity report.
    Synth(SynthArgs),
    /// Merge run reports into one comparison table.
    Table(TableArgs),
    /// Summarize a dataset; optionally emit fold/partition audit JSON.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV with a header row and the label column.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// Reject labels outside 0..=3 at load time.
    #[arg(long)]
    strict_severity: bool,
    /// svm | pac | boosted
    #[arg(long)]
    model: Option<String>,
    /// centralized | federated | synthetic
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    /// Master seed; mandatory (here or in the config file).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    selector_k: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    /// Federated only: number of clients.
    #[arg(long)]
    clients: Option<usize>,
    /// Federated only: aggregation rounds for the linear models.
    #[arg(long)]
    rounds: Option<usize>,
    /// Federated only: local epochs per round.
    #[arg(long)]
    local_epochs: Option<usize>,
    /// Federated only: iid | dirichlet
    #[arg(long)]
    scheme: Option<String>,
    /// Federated only: Dirichlet concentration.
    #[arg(long)]
    alpha: Option<f64>,
    /// Synthetic only: synthetic training-set size.
    #[arg(long)]
    sample_size: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "severity")]
    label_column: String,
    #[arg(long)]
    strict_severity: bool,
    /// Rows to sample; defaults to the input size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    /// Report JSON files produced by `run`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Literal comparison row: name,f1,mcc[,kappa[,gmean]]
    #[arg(long)]
    baseline: Option<String>,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the table as wide CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "severity")]
    label_column: String,
    #[arg(long)]
    strict_severity: bool,
    /// Emit a stratified fold plan as JSON.
    #[arg(long)]
    folds: Option<usize>,
    /// Emit a client partition as JSON.
    #[arg(long)]
    clients: Option<usize>,
    /// iid | dirichlet
    #[arg(long, default_value = "iid")]
    scheme: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_scheme(text: &str) -> Result<PartitionScheme> {
    match text {
        "iid" => Ok(PartitionScheme::Iid),
        "dirichlet" => Ok(PartitionScheme::Dirichlet),
        other => Err(Error::Config(format!(
            "unknown scheme '{other}' (expected iid or dirichlet)"
        ))),
    }
}

fn run_command(args: RunArgs) -> Result<()> {
    // regime-specific flags are only meaningful with their regime
    let federated_flags = args.clients.is_some()
        || args.rounds.is_some()
        || args.local_epochs.is_some()
        || args.scheme.is_some()
        || args.alpha.is_some();
    if federated_flags && args.regime.as_deref() != Some("federated") {
        return Err(Error::Config(
            "--clients/--rounds/--local-epochs/--scheme/--alpha require --regime federated".into(),
        ));
    }
    if args.sample_size.is_some() && args.regime.as_deref() != Some("synthetic") {
        return Err(Error::Config(
            "--sample-size requires --regime synthetic".into(),
        ));
    }

    let mut overrides: Vec<(&str, serde_json::Value)> = Vec::new();
    if let Some(v) = &args.data {
        overrides.push(("data", json!(v)));
    }
    if let Some(v) = &args.label_column {
        overrides.push(("label_column", json!(v)));
    }
    if args.strict_severity {
        overrides.push(("strict_severity", json!(true)));
    }
    if let Some(v) = &args.model {
        overrides.push(("model", json!(v)));
    }
    if let Some(v) = &args.regime {
        overrides.push(("regime", json!(v)));
    }
    if let Some(v) = args.folds {
        overrides.push(("folds", json!(v)));
    }
    if let Some(v) = args.seed {
        overrides.push(("seed", json!(v)));
    }
    if let Some(v) = &args.out_dir {
        overrides.push(("out_dir", json!(v)));
    }
    if let Some(v) = args.selector_k {
        overrides.push(("pipeline.selector_k", json!(v)));
    }
    if let Some(v) = args.degree {
        overrides.push(("pipeline.degree", json!(v)));
    }
    if let Some(v) = args.clients {
        overrides.push(("federation.clients", json!(v)));
    }
    if let Some(v) = args.rounds {
        overrides.push(("federation.rounds", json!(v)));
    }
    if let Some(v) = args.local_epochs {
        overrides.push(("federation.local_epochs", json!(v)));
    }
    if let Some(v) = &args.scheme {
        parse_scheme(v)?;
        overrides.push(("federation.scheme", json!(v)));
    }
    if let Some(v) = args.alpha {
        overrides.push(("federation.alpha", json!(v)));
    }
    if let Some(v) = args.sample_size {
        overrides.push(("synthesis.sample_size", json!(v)));
    }

    let config = experiment::load_config(args.config.as_deref(), &overrides)?;
    let artifacts = experiment::cmd_run(&config)?;
    println!("report: {}", artifacts.report_json.display());
    println!("table:  {}", artifacts.report_txt.display());
    if let Some(rounds) = &artifacts.round_log_jsonl {
        println!("rounds: {}", rounds.display());
    }
    Ok(())
}

fn synth_command(args: SynthArgs) -> Result<()> {
    let options = CsvOptions {
        label_column: args.label_column.clone(),
        strict_severity: args.strict_severity,
    };
    let artifacts = experiment::cmd_synth(&args.data, &options, args.n, args.seed, &args.out)?;
    println!("synthetic: {}", artifacts.csv.display());
    println!("fidelity:  {}", artifacts.fidelity_json.display());
    println!(
        "max KS {:.4}  max corr diff {:.4}  class L1 {:.6}",
        artifacts.fidelity.max_ks,
        artifacts.fidelity.max_correlation_diff,
        artifacts.fidelity.class_proportion_l1
    );
    Ok(())
}

fn table_command(args: TableArgs) -> Result<()> {
    let baseline = args
        .baseline
        .as_deref()
        .map(BaselineRow::parse)
        .transpose()?;
    let table = experiment::cmd_table(&args.reports, baseline.as_ref())?;
    print!("{table}");
    if let Some(out) = &args.out {
        std::fs::write(out, &table)?;
    }
    if let Some(csv) = &args.csv {
        let rendered = experiment::cmd_table_csv(&args.reports, baseline.as_ref())?;
        std::fs::write(csv, rendered)?;
    }
    Ok(())
}

fn inspect_command(args: InspectArgs) -> Result<()> {
    let options = CsvOptions {
        label_column: args.label_column.clone(),
        strict_severity: args.strict_severity,
    };
    let scheme = parse_scheme(&args.scheme)?;
    let summary = experiment::cmd_inspect(
        &args.data,
        &options,
        args.folds,
        args.clients,
        scheme,
        args.alpha,
        args.seed,
    )?;
    print!("{summary}");
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Synth(args) => synth_command(args),
        Command::Table(args) => table_command(args),
        Command::Inspect(args) => inspect_command(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
