//! Experiment front end: configuration, regime wiring, and report files.
//!
//! A run is described by an [`ExperimentConfig`], read from a JSON file
//! with command-line flags overlaid on top (flags win). Reports are
//! byte-identical across identical runs; wall-clock metadata goes to a
//! separate file.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{CsvOptions, Dataset, PartitionScheme};
use crate::error::{Error, Result};
use crate::evaluation::{run_cv, FoldContext, MetricsReport};
use crate::federation::{
    run_federated_boosted, run_federated_linear, AggregationStrategy, FederationPlan, MessageAudit,
    RoundLog,
};
use crate::models::{train_boosted, BoostedHyper, LinearHyper, LinearKind, PacTrainer, SvmTrainer};
use crate::preprocess::fit_pipeline;
use crate::seed::derive_seed;
use crate::synthesis::{fidelity_report, fit_copula, sample_copula, FidelityReport};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "FEDSEV_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Svm,
    Pac,
    Boosted,
}

impl ModelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Svm => "svm",
            ModelName::Pac => "pac",
            ModelName::Boosted => "boosted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeName {
    Centralized,
    Federated,
    Synthetic,
}

impl RegimeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeName::Centralized => "centralized",
            RegimeName::Federated => "federated",
            RegimeName::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_selector_k")]
    pub selector_k: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_selector_k() -> usize {
    9
}
fn default_degree() -> usize {
    3
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            selector_k: default_selector_k(),
            degree: default_degree(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    #[serde(default = "default_clients")]
    pub clients: usize,
    /// Aggregation rounds for the linear models; boosted federation runs
    /// one aggregation round per boosting round instead.
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    #[serde(default = "default_scheme")]
    pub scheme: PartitionScheme,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_clients() -> usize {
    3
}
fn default_rounds() -> usize {
    20
}
// one SVM epoch is a single full-batch gradient step, so clients need a
// real local budget for the 20-round default to approach the centralized
// optimum (20 x 50 = the centralized epoch budget)
fn default_local_epochs() -> usize {
    50
}
fn default_scheme() -> PartitionScheme {
    PartitionScheme::Iid
}
fn default_alpha() -> f64 {
    1.0
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            clients: default_clients(),
            rounds: default_rounds(),
            local_epochs: default_local_epochs(),
            scheme: default_scheme(),
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Synthetic training-set size; defaults to the real training-fold
    /// size so the data source is the only variable.
    #[serde(default)]
    pub sample_size: Option<usize>,
}

/// Linear-model settings; unset fields fall back to the model's defaults
/// (C = 1.0, max_epochs = 1000, tol = 1e-4 for the SVM and 1e-3 for the
/// passive-aggressive classifier).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearConfig {
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_epochs: Option<usize>,
}

impl LinearConfig {
    fn resolve(&self, kind: LinearKind, seed: u64) -> LinearHyper {
        let base = match kind {
            LinearKind::SquaredHingeSvm => LinearHyper::svm_default(seed),
            LinearKind::PassiveAggressive => LinearHyper::pac_default(seed),
        };
        LinearHyper {
            c: self.c.unwrap_or(base.c),
            tol: self.tol.unwrap_or(base.tol),
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedConfig {
    #[serde(default = "default_boosted_rounds")]
    pub rounds: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_boosted_rounds() -> usize {
    100
}
fn default_learning_rate() -> f64 {
    0.3
}
fn default_max_depth() -> usize {
    6
}
fn default_bins() -> usize {
    256
}
fn default_lambda() -> f64 {
    1.0
}

impl Default for BoostedConfig {
    fn default() -> Self {
        BoostedConfig {
            rounds: default_boosted_rounds(),
            learning_rate: default_learning_rate(),
            max_depth: default_max_depth(),
            bins: default_bins(),
            lambda: default_lambda(),
        }
    }
}

impl BoostedConfig {
    fn resolve(&self, seed: u64) -> BoostedHyper {
        BoostedHyper {
            n_rounds: self.rounds,
            learning_rate: self.learning_rate,
            max_depth: self.max_depth,
            n_bins: self.bins,
            lambda: self.lambda,
            seed,
        }
    }
}

/// Complete description of one experiment run. The master seed is
/// mandatory: there is no wall-clock fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default)]
    pub strict_severity: bool,
    pub model: ModelName,
    pub regime: RegimeName,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub federation: FederationConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub svm: LinearConfig,
    #[serde(default)]
    pub pac: LinearConfig,
    #[serde(default)]
    pub boosted: BoostedConfig,
}

fn default_label_column() -> String {
    "severity".to_string()
}
fn default_folds() -> usize {
    5
}
fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.pipeline.selector_k == 0 || self.pipeline.degree == 0 {
            return Err(Error::Config(
                "selector_k and degree must be at least 1".into(),
            ));
        }
        if self.regime == RegimeName::Federated {
            self.federation_plan(0).validate()?;
        }
        Ok(())
    }

    fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_column.clone(),
            strict_severity: self.strict_severity,
        }
    }

    fn federation_plan(&self, seed: u64) -> FederationPlan {
        FederationPlan {
            n_clients: self.federation.clients,
            rounds: self.federation.rounds,
            local_epochs: self.federation.local_epochs,
            scheme: self.federation.scheme,
            alpha: self.federation.alpha,
            aggregation: match self.model {
                ModelName::Boosted => AggregationStrategy::HistogramSum,
                _ => AggregationStrategy::FedAvgParams,
            },
            seed,
        }
    }

    /// Stem for output file names, e.g. `boosted_federated`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.model.as_str(), self.regime.as_str())
    }
}

/// Load a configuration: JSON file (or empty object), then flag overrides
/// applied on top with dotted paths like `federation.alpha`.
pub fn load_config(file: Option<&Path>, overrides: &[(&str, Value)]) -> Result<ExperimentConfig> {
    let mut value = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("invalid config JSON: {e}")))?
        }
        None => Value::Object(serde_json::Map::new()),
    };
    for (path, v) in overrides {
        set_path(&mut value, path, v.clone())?;
    }
    let config: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    config.validate()?;
    Ok(config)
}

fn set_path(root: &mut Value, path: &str, new: Value) -> Result<()> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = cursor
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("config path '{path}' is not an object")))?;
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), new);
            return Ok(());
        }
        cursor = map
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    Ok(())
}

/// A federated round log annotated with its fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRoundLog {
    pub fold: usize,
    #[serde(flatten)]
    pub log: RoundLog,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: MetricsReport,
    /// Per-round logs across folds (federated regime only).
    pub round_logs: Vec<FoldRoundLog>,
    /// Per-fold server message audits (federated regime only).
    pub audits: Vec<MessageAudit>,
}

fn train_predict_centralized(
    config: &ExperimentConfig,
    train_x: &Array2<f64>,
    train_y: &[usize],
    test_x: &Array2<f64>,
    n_classes: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    match config.model {
        ModelName::Svm => {
            let hyper = config.svm.resolve(LinearKind::SquaredHingeSvm, seed);
            let model = SvmTrainer::new(hyper).fit(train_x.view(), train_y, n_classes)?;
            model.predict(test_x.view())
        }
        ModelName::Pac => {
            let hyper = config.pac.resolve(LinearKind::PassiveAggressive, seed);
            let model = PacTrainer::new(hyper).fit(train_x.view(), train_y, n_classes)?;
            model.predict(test_x.view())
        }
        ModelName::Boosted => {
            let hyper = config.boosted.resolve(seed);
            let model = train_boosted(train_x.view(), train_y, n_classes, &hyper)?;
            model.predict(test_x.view())
        }
    }
}

/// Run the configured experiment over stratified k-fold cross-validation.
///
/// Per fold: the preprocessing pipeline is fitted on that fold's training
/// data only (for the synthetic regime, on the sampled data only), the
/// model trains per the regime, and metrics come from the held-out fold.
pub fn run_experiment(ds: &Dataset, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let echo = serde_json::to_value(config)
        .map_err(|e| Error::Config(format!("config echo failed: {e}")))?;
    let round_logs: RefCell<Vec<FoldRoundLog>> = RefCell::new(Vec::new());
    let audits: RefCell<Vec<MessageAudit>> = RefCell::new(Vec::new());
    let n_classes = ds.n_classes();
    let pipe = config.pipeline;

    let fold_trainer = |ctx: &FoldContext<'_>| -> Result<Vec<usize>> {
        let (train_x, train_y) = ds.select_rows(ctx.train_indices);
        let (test_x, _) = ds.select_rows(ctx.test_indices);
        let model_seed = derive_seed(ctx.seed, "model");
        match config.regime {
            RegimeName::Centralized => {
                let pipeline =
                    fit_pipeline(train_x.view(), &train_y, pipe.selector_k, pipe.degree)?;
                let tx = pipeline.transform(train_x.view())?;
                let te = pipeline.transform(test_x.view())?;
                train_predict_centralized(config, &tx, &train_y, &te, n_classes, model_seed)
            }
            RegimeName::Federated => {
                let pipeline =
                    fit_pipeline(train_x.view(), &train_y, pipe.selector_k, pipe.degree)?;
                let tx = pipeline.transform(train_x.view())?;
                let te = pipeline.transform(test_x.view())?;
                let plan = config.federation_plan(derive_seed(ctx.seed, "federation"));
                let (predictions, logs, audit) = match config.model {
                    ModelName::Svm | ModelName::Pac => {
                        let kind = match config.model {
                            ModelName::Svm => LinearKind::SquaredHingeSvm,
                            _ => LinearKind::PassiveAggressive,
                        };
                        let hyper = match config.model {
                            ModelName::Svm => config.svm.resolve(kind, model_seed),
                            _ => config.pac.resolve(kind, model_seed),
                        };
                        let run = run_federated_linear(
                            tx.view(),
                            &train_y,
                            n_classes,
                            &plan,
                            kind,
                            hyper,
                        )?;
                        (run.model.predict(te.view())?, run.logs, run.audit)
                    }
                    ModelName::Boosted => {
                        let hyper = config.boosted.resolve(model_seed);
                        let run =
                            run_federated_boosted(tx.view(), &train_y, n_classes, &plan, &hyper)?;
                        (run.model.predict(te.view())?, run.logs, run.audit)
                    }
                };
                let fold = ctx.fold;
                round_logs
                    .borrow_mut()
                    .extend(logs.into_iter().map(|log| FoldRoundLog { fold, log }));
                audits.borrow_mut().push(audit);
                Ok(predictions)
            }
            RegimeName::Synthetic => {
                let train_ds =
                    Dataset::new(train_x, train_y, ds.feature_names().to_vec(), n_classes)?;
                let copula = fit_copula(&train_ds, derive_seed(ctx.seed, "copula-fit"))?;
                let n = config.synthesis.sample_size.unwrap_or(train_ds.n_rows());
                let synth = sample_copula(&copula, n, derive_seed(ctx.seed, "copula-sample"))?;
                // downstream training sees synthetic rows only
                let pipeline = fit_pipeline(
                    synth.features().view(),
                    synth.labels(),
                    pipe.selector_k,
                    pipe.degree,
                )?;
                let tx = pipeline.transform(synth.features().view())?;
                let te = pipeline.transform(test_x.view())?;
                train_predict_centralized(config, &tx, synth.labels(), &te, n_classes, model_seed)
            }
        }
    };

    let report = run_cv(ds, &fold_trainer, config.folds, config.seed, echo)?;
    Ok(ExperimentOutcome {
        report,
        round_logs: round_logs.into_inner(),
        audits: audits.into_inner(),
    })
}

/// Paths written by [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report_json: PathBuf,
    pub report_txt: PathBuf,
    pub meta_json: PathBuf,
    pub round_log_jsonl: Option<PathBuf>,
}

/// Render one report as an aligned per-fold text table.
pub fn render_report_text(report: &MetricsReport) -> String {
    let mut out = String::new();
    let model = report
        .config
        .get("model")
        .and_then(Value::as_str)
        .unwrap_or("?");
    let regime = report
        .config
        .get("regime")
        .and_then(Value::as_str)
        .unwrap_or("?");
    let seed = report.config.get("seed").and_then(Value::as_u64);
    let _ = writeln!(
        out,
        "model: {model}  regime: {regime}  folds: {}  seed: {}",
        report.folds.len(),
        seed.map_or_else(|| "?".into(), |s| s.to_string()),
    );
    let _ = writeln!(
        out,
        "{:<6} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "fold", "f1_weighted", "f1_macro", "mcc", "kappa", "gmean"
    );
    for fold in &report.folds {
        let _ = writeln!(
            out,
            "{:<6} {:>12.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            fold.fold, fold.f1_weighted, fold.f1_macro, fold.mcc, fold.kappa, fold.gmean
        );
    }
    let _ = writeln!(
        out,
        "{:<6} {:>12.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
        "mean",
        report.mean.f1_weighted,
        report.mean.f1_macro,
        report.mean.mcc,
        report.mean.kappa,
        report.mean.gmean
    );
    let _ = writeln!(
        out,
        "{:<6} {:>12.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
        "std",
        report.std.f1_weighted,
        report.std.f1_macro,
        report.std.mcc,
        report.std.kappa,
        report.std.gmean
    );
    out
}

/// Execute a configured run and write the report JSON, text table,
/// metadata file, and (for federated runs) the round log.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let ds = Dataset::from_csv(&config.data, &config.csv_options())?;
    let outcome = run_experiment(&ds, config)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let stem = config.file_stem();

    let report_json = config.out_dir.join(format!("{stem}_report.json"));
    let json = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| Error::Data(format!("serialize report: {e}")))?;
    std::fs::write(&report_json, json + "\n")?;

    let report_txt = config.out_dir.join(format!("{stem}_report.txt"));
    std::fs::write(&report_txt, render_report_text(&outcome.report))?;

    // wall-clock metadata lives outside the deterministic report
    let meta_json = config.out_dir.join(format!("{stem}_meta.json"));
    let meta = serde_json::json!({
        "written_unix_ms": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "data": config.data,
    });
    std::fs::write(
        &meta_json,
        serde_json::to_string_pretty(&meta).unwrap() + "\n",
    )?;

    let round_log_jsonl = if outcome.round_logs.is_empty() {
        None
    } else {
        let path = config.out_dir.join(format!("{stem}_rounds.jsonl"));
        let mut lines = String::new();
        for entry in &outcome.round_logs {
            lines.push_str(
                &serde_json::to_string(entry)
                    .map_err(|e| Error::Data(format!("serialize round log: {e}")))?,
            );
            lines.push('\n');
        }
        std::fs::write(&path, lines)?;
        Some(path)
    };

    Ok(RunArtifacts {
        report_json,
        report_txt,
        meta_json,
        round_log_jsonl,
    })
}

/// Outputs of the `synth` command.
#[derive(Debug, Clone)]
pub struct SynthArtifacts {
    pub csv: PathBuf,
    pub fidelity_json: PathBuf,
    pub fidelity: FidelityReport,
}

/// Fit a copula on a CSV, sample `n` rows (input size by default), and
/// write the synthetic CSV plus a fidelity report.
pub fn cmd_synth(
    data: &Path,
    options: &CsvOptions,
    n: Option<usize>,
    seed: u64,
    out_csv: &Path,
) -> Result<SynthArtifacts> {
    let ds = Dataset::from_csv(data, options)?;
    let model = fit_copula(&ds, seed)?;
    let n = n.unwrap_or(ds.n_rows());
    let synth = sample_copula(&model, n, derive_seed(seed, "sample"))?;
    if let Some(parent) = out_csv.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    synth.to_csv(out_csv, &options.label_column)?;
    let fidelity = fidelity_report(&ds, &synth)?;
    let fidelity_json = out_csv.with_extension("fidelity.json");
    std::fs::write(
        &fidelity_json,
        serde_json::to_string_pretty(&fidelity)
            .map_err(|e| Error::Data(format!("serialize fidelity: {e}")))?
            + "\n",
    )?;
    Ok(SynthArtifacts {
        csv: out_csv.to_path_buf(),
        fidelity_json,
        fidelity,
    })
}

/// Literal comparison row (e.g. previously published numbers) for
/// side-by-side display in the merged table.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub name: String,
    pub f1: f64,
    pub mcc: f64,
    pub kappa: Option<f64>,
    pub gmean: Option<f64>,
}

impl BaselineRow {
    /// Parse `name,f1,mcc[,kappa[,gmean]]`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() < 3 || parts.len() > 5 {
            return Err(Error::Config(
                "baseline row must be name,f1,mcc[,kappa[,gmean]]".into(),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("baseline value '{s}' is not numeric")))
        };
        Ok(BaselineRow {
            name: parts[0].to_string(),
            f1: num(parts[1])?,
            mcc: num(parts[2])?,
            kappa: parts.get(3).map(|s| num(s)).transpose()?,
            gmean: parts.get(4).map(|s| num(s)).transpose()?,
        })
    }
}

const REGIME_ORDER: [RegimeName; 3] = [
    RegimeName::Centralized,
    RegimeName::Federated,
    RegimeName::Synthetic,
];
const MODEL_ORDER: [ModelName; 3] = [ModelName::Svm, ModelName::Pac, ModelName::Boosted];

type TableCells = BTreeMap<(ModelName, RegimeName), [f64; 4]>;

fn collect_table_cells(paths: &[PathBuf]) -> Result<TableCells> {
    if paths.is_empty() {
        return Err(Error::Config("no report files given".into()));
    }
    let mut cells: TableCells = BTreeMap::new();
    for path in paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
        let report: MetricsReport = serde_json::from_str(&text).map_err(|e| {
            Error::Data(format!(
                "{}: mismatched metric set or schema: {e}",
                path.display()
            ))
        })?;
        if report.schema_version != crate::evaluation::REPORT_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported report schema {}",
                path.display(),
                report.schema_version
            )));
        }
        let model: ModelName =
            serde_json::from_value(report.config.get("model").cloned().ok_or_else(|| {
                Error::Data(format!("{}: config echo lacks model", path.display()))
            })?)
            .map_err(|e| {
                Error::Data(format!("{}: bad model in config echo: {e}", path.display()))
            })?;
        let regime: RegimeName =
            serde_json::from_value(report.config.get("regime").cloned().ok_or_else(|| {
                Error::Data(format!("{}: config echo lacks regime", path.display()))
            })?)
            .map_err(|e| {
                Error::Data(format!(
                    "{}: bad regime in config echo: {e}",
                    path.display()
                ))
            })?;
        let key = (model, regime);
        if cells.contains_key(&key) {
            return Err(Error::Data(format!(
                "duplicate report for {} / {}",
                model.as_str(),
                regime.as_str()
            )));
        }
        cells.insert(
            key,
            [
                report.mean.f1_weighted,
                report.mean.mcc,
                report.mean.kappa,
                report.mean.gmean,
            ],
        );
    }
    Ok(cells)
}

/// Merge several run reports into one comparison table: one row per model,
/// one four-metric column group per regime.
pub fn cmd_table(paths: &[PathBuf], baseline: Option<&BaselineRow>) -> Result<String> {
    let cells = collect_table_cells(paths)?;
    let mut out = String::new();
    let _ = write!(out, "{:<28}", "model");
    for regime in REGIME_ORDER {
        let _ = write!(out, "  {:<28}", regime.as_str());
    }
    out.push('\n');
    let _ = write!(out, "{:<28}", "");
    for _ in REGIME_ORDER {
        let _ = write!(
            out,
            "  {:<6} {:<6} {:<6} {:<6}",
            "F1", "MCC", "Kappa", "GMean"
        );
    }
    out.push('\n');
    for model in MODEL_ORDER {
        if !REGIME_ORDER
            .iter()
            .any(|r| cells.contains_key(&(model, *r)))
        {
            continue;
        }
        let _ = write!(out, "{:<28}", model.as_str());
        for regime in REGIME_ORDER {
            match cells.get(&(model, regime)) {
                Some([f1, mcc, kappa, gmean]) => {
                    let _ = write!(out, "  {f1:<6.2} {mcc:<6.2} {kappa:<6.2} {gmean:<6.2}");
                }
                None => {
                    let _ = write!(out, "  {:<6} {:<6} {:<6} {:<6}", "-", "-", "-", "-");
                }
            }
        }
        out.push('\n');
    }
    if let Some(row) = baseline {
        let _ = write!(out, "{:<28}", row.name);
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let _ = write!(
            out,
            "  {:<6.2} {:<6.2} {:<6} {:<6}",
            row.f1,
            row.mcc,
            fmt(row.kappa),
            fmt(row.gmean)
        );
        for _ in 1..REGIME_ORDER.len() {
            let _ = write!(out, "  {:<6} {:<6} {:<6} {:<6}", "-", "-", "-", "-");
        }
        out.push('\n');
    }
    Ok(out)
}

/// The same comparison as [`cmd_table`] in wide CSV form: one row per
/// model, `<regime>_<metric>` columns.
pub fn cmd_table_csv(paths: &[PathBuf], baseline: Option<&BaselineRow>) -> Result<String> {
    let cells = collect_table_cells(paths)?;
    let mut out = String::from("model");
    for regime in REGIME_ORDER {
        for metric in ["f1", "mcc", "kappa", "gmean"] {
            let _ = write!(out, ",{}_{metric}", regime.as_str());
        }
    }
    out.push('\n');
    for model in MODEL_ORDER {
        if !REGIME_ORDER
            .iter()
            .any(|r| cells.contains_key(&(model, *r)))
        {
            continue;
        }
        out.push_str(model.as_str());
        for regime in REGIME_ORDER {
            match cells.get(&(model, regime)) {
                Some(values) => {
                    for v in values {
                        let _ = write!(out, ",{v}");
                    }
                }
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    if let Some(row) = baseline {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let _ = write!(
            out,
            "{},{},{},{},{}",
            row.name,
            row.f1,
            row.mcc,
            opt(row.kappa),
            opt(row.gmean)
        );
        out.push_str(&",".repeat(4 * (REGIME_ORDER.len() - 1)));
        out.push('\n');
    }
    Ok(out)
}

/// Dataset summary plus optional fold-plan / partition audit JSON.
pub fn cmd_inspect(
    data: &Path,
    options: &CsvOptions,
    folds: Option<usize>,
    clients: Option<usize>,
    scheme: PartitionScheme,
    alpha: f64,
    seed: u64,
) -> Result<String> {
    let ds = Dataset::from_csv(data, options)?;
    let mut out = String::new();
    let _ = writeln!(out, "rows: {}", ds.n_rows());
    let _ = writeln!(out, "features: {}", ds.n_features());
    let _ = writeln!(out, "classes: {}", ds.n_classes());
    let _ = writeln!(out, "class counts: {:?}", ds.class_counts());
    for (j, name) in ds.feature_names().iter().enumerate() {
        let mut col: Vec<f64> = ds.features().column(j).to_vec();
        col.sort_by(f64::total_cmp);
        let _ = writeln!(
            out,
            "  {name}: min {:.4}  median {:.4}  max {:.4}",
            col[0],
            crate::stats::quantile_sorted(&col, 0.5),
            col[col.len() - 1]
        );
    }
    if let Some(k) = folds {
        let plan = crate::data::make_stratified_folds(&ds, k, derive_seed(seed, "folds"))?;
        let _ = writeln!(
            out,
            "fold_plan: {}",
            serde_json::to_string(&plan).map_err(|e| Error::Data(e.to_string()))?
        );
    }
    if let Some(n_clients) = clients {
        let rows: Vec<usize> = (0..ds.n_rows()).collect();
        let partition_seed = derive_seed(seed, "partition");
        let partition = match scheme {
            PartitionScheme::Iid => {
                crate::data::partition_iid(&rows, ds.labels(), n_clients, partition_seed)?
            }
            PartitionScheme::Dirichlet => crate::data::partition_dirichlet(
                &rows,
                ds.labels(),
                n_clients,
                alpha,
                partition_seed,
            )?,
        };
        let _ = writeln!(
            out,
            "client_partition: {}",
            serde_json::to_string(&partition).map_err(|e| Error::Data(e.to_string()))?
        );
    }
    Ok(out)
}
