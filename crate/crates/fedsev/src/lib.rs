//! Method-level bug-severity classification on tabular code metrics under
//! three training regimes: centralized on real data, simulated federated
//! learning, and centralized on copula-synthesized data.
//!
//! The crate is organized around the experiment flow:
//!
//! - [`data`]: CSV ingestion, stratified k-fold plans, IID and Dirichlet
//!   client partitions.
//! - [`preprocess`]: median/IQR scaling, ANOVA-F top-k feature selection,
//!   polynomial expansion.
//! - [`models`]: a squared-hinge linear SVM, a multiclass
//!   passive-aggressive classifier, and histogram gradient-boosted trees,
//!   all behind one train/predict/export contract.
//! - [`federation`]: FedAvg parameter averaging for the linear models and
//!   histogram-sum aggregation for the boosted trees, with an aggregation
//!   server that only ever accepts parameter vectors, histograms, and
//!   quantile sketches.
//! - [`synthesis`]: per-class Gaussian copulas over empirical marginals,
//!   plus a marginal/correlation fidelity report.
//! - [`evaluation`]: weighted F1, multiclass MCC, Cohen's kappa, G-Mean,
//!   and the stratified cross-validation runner.
//! - [`experiment`]: configuration, regime wiring, and report files behind
//!   the `fedsev` command-line front end.
//!
//! See the crate examples for runnable walkthroughs of each capability.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod federation;
pub mod models;
pub mod preprocess;
pub mod seed;
pub mod stats;
pub mod synthesis;

pub use error::{Error, Result};
