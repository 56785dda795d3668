//! Dataset ingestion, stratified folding, and federated client partitioning.

mod dataset;
mod folds;
mod partition;

pub use dataset::{CsvOptions, Dataset};
pub use folds::{make_stratified_folds, FoldPlan};
pub use partition::{partition_dirichlet, partition_iid, ClientPartition, PartitionScheme};
