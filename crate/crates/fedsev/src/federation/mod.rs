//! Simulated federated learning: clients train locally, an aggregation
//! server combines what they send, and a global model redistributes each
//! round.
//!
//! The server boundary is typed: [`AggregationServer`] methods accept only
//! [`ClientMessage`] values, which carry parameter vectors, histograms, or
//! quantile sketches. No server entry point exists for feature rows, so
//! raw data cannot cross from client to server by construction.

mod boosted;
mod linear;

pub use boosted::{run_federated_boosted, SKETCH_CAPACITY};
pub use linear::run_federated_linear;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{partition_dirichlet, partition_iid, ClientPartition, PartitionScheme};
use crate::error::{Error, Result};
use crate::models::{sum_histograms, BinMapper, NodeHistogram, ParamVector};
use crate::seed::derive_seed;

/// How client updates are combined into the global model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationStrategy {
    /// Sample-weighted element-wise averaging of parameter vectors.
    FedAvgParams,
    /// Summing gradient/hessian histograms for joint tree growth.
    HistogramSum,
}

/// Shape of one federated training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FederationPlan {
    pub n_clients: usize,
    /// Aggregation rounds for the linear models; boosted training runs one
    /// server round per boosting round instead.
    pub rounds: usize,
    pub local_epochs: usize,
    pub scheme: PartitionScheme,
    /// Dirichlet concentration; ignored for IID.
    pub alpha: f64,
    pub aggregation: AggregationStrategy,
    pub seed: u64,
}

impl FederationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::Config("n_clients must be at least 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.local_epochs == 0 {
            return Err(Error::Config("local_epochs must be at least 1".into()));
        }
        if self.scheme == PartitionScheme::Dirichlet
            && (!self.alpha.is_finite() || self.alpha <= 0.0)
        {
            return Err(Error::Config(format!(
                "alpha {} must be positive",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Result of a federated training run: the global model, per-round audit
/// logs, and the server's message-kind tally.
#[derive(Debug, Clone)]
pub struct FederatedRun<M> {
    pub model: M,
    pub logs: Vec<RoundLog>,
    pub audit: MessageAudit,
}

/// Audit log entry for one aggregation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub client_samples: Vec<usize>,
    /// FNV-1a checksum over the aggregated parameter bits.
    pub param_checksum: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<serde_json::Value>,
}

/// Per-feature sorted value points standing in for a client's marginal
/// distributions during round-0 bin negotiation. Exact when the client has
/// at most [`SKETCH_CAPACITY`] rows, compressed to quantile points above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSketch {
    pub n_rows: usize,
    pub points: Vec<Vec<f64>>,
}

/// Histograms of one tree node for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramUpload {
    pub node: usize,
    pub class: usize,
    pub histogram: NodeHistogram,
}

/// Everything a client may send to the server. There is intentionally no
/// variant carrying feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClientMessage {
    Params(ParamVector),
    Histograms(HistogramUpload),
    Sketch(QuantileSketch),
}

impl ClientMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            ClientMessage::Params(_) => MessageKind::Params,
            ClientMessage::Histograms(_) => MessageKind::Histograms,
            ClientMessage::Sketch(_) => MessageKind::Sketch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    Params,
    Histograms,
    Sketch,
}

/// Counts of every message kind a server consumed; lets tests verify
/// dynamically that only parameters, histograms, and sketches crossed the
/// boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageAudit {
    pub params: usize,
    pub histograms: usize,
    pub sketches: usize,
}

impl MessageAudit {
    pub fn total(&self) -> usize {
        self.params + self.histograms + self.sketches
    }

    fn record(&mut self, kind: MessageKind) {
        match kind {
            MessageKind::Params => self.params += 1,
            MessageKind::Histograms => self.histograms += 1,
            MessageKind::Sketch => self.sketches += 1,
        }
    }
}

/// Sample-count-weighted element-wise mean of client parameter vectors,
/// summed in client-index order.
pub fn fedavg(params: &[ParamVector]) -> Result<ParamVector> {
    let first = params
        .first()
        .ok_or_else(|| Error::Data("fedavg over zero clients".into()))?;
    first.validate()?;
    let total: usize = params.iter().map(|p| p.sample_weight).sum();
    if total == 0 {
        return Err(Error::Data("total sample weight is zero".into()));
    }
    let mut values: Vec<f64> = {
        let w = first.sample_weight as f64 / total as f64;
        first.values.iter().map(|&v| w * v).collect()
    };
    for p in &params[1..] {
        if p.shape != first.shape {
            return Err(Error::Shape(format!(
                "parameter shape {:?} differs from {:?}",
                p.shape, first.shape
            )));
        }
        p.validate()?;
        let w = p.sample_weight as f64 / total as f64;
        for (acc, &v) in values.iter_mut().zip(&p.values) {
            *acc += w * v;
        }
    }
    Ok(ParamVector {
        values,
        shape: first.shape.clone(),
        sample_weight: total,
    })
}

/// The aggregation side of the simulation. All inputs arrive as
/// [`ClientMessage`]s and are tallied in [`MessageAudit`].
#[derive(Debug, Default)]
pub struct AggregationServer {
    pub audit: MessageAudit,
}

impl AggregationServer {
    pub fn new() -> Self {
        AggregationServer::default()
    }

    fn take_kind<'m, T, F>(
        &mut self,
        messages: &'m [ClientMessage],
        extract: F,
    ) -> Result<Vec<&'m T>>
    where
        F: Fn(&'m ClientMessage) -> Option<&'m T>,
    {
        let mut out = Vec::with_capacity(messages.len());
        for msg in messages {
            self.audit.record(msg.kind());
            match extract(msg) {
                Some(inner) => out.push(inner),
                None => {
                    return Err(Error::Data(format!(
                        "unexpected {:?} message in this aggregation phase",
                        msg.kind()
                    )))
                }
            }
        }
        Ok(out)
    }

    /// FedAvg over parameter messages.
    pub fn aggregate_params(&mut self, messages: &[ClientMessage]) -> Result<ParamVector> {
        let params = self.take_kind(messages, |m| match m {
            ClientMessage::Params(p) => Some(p),
            _ => None,
        })?;
        let owned: Vec<ParamVector> = params.into_iter().cloned().collect();
        fedavg(&owned)
    }

    /// Sum per-client node histograms, validating that every client used
    /// the shared bin layout.
    pub fn aggregate_histograms(
        &mut self,
        messages: &[ClientMessage],
        bins: &BinMapper,
        node: usize,
        class: usize,
    ) -> Result<NodeHistogram> {
        let uploads = self.take_kind(messages, |m| match m {
            ClientMessage::Histograms(h) => Some(h),
            _ => None,
        })?;
        let expected = bins.bins_per_feature();
        let mut parts = Vec::with_capacity(uploads.len());
        for upload in uploads {
            if upload.node != node || upload.class != class {
                return Err(Error::Data(format!(
                    "histogram for node {} class {} arrived while aggregating node {node} class {class}",
                    upload.node, upload.class
                )));
            }
            if upload.histogram.features.len() != expected.len() {
                return Err(Error::Shape(format!(
                    "histogram covers {} features, shared bins cover {}",
                    upload.histogram.features.len(),
                    expected.len()
                )));
            }
            for (f, fh) in upload.histogram.features.iter().enumerate() {
                if fh.grad.len() != expected[f] {
                    return Err(Error::Shape(format!(
                        "feature {f}: client histogram length {} does not match the shared bin count {}",
                        fh.grad.len(),
                        expected[f]
                    )));
                }
            }
            parts.push(upload.histogram.clone());
        }
        sum_histograms(&parts)
    }

    /// Merge round-0 quantile sketches into shared bin edges.
    pub fn merge_sketches(
        &mut self,
        messages: &[ClientMessage],
        n_bins: usize,
    ) -> Result<BinMapper> {
        let sketches = self.take_kind(messages, |m| match m {
            ClientMessage::Sketch(s) => Some(s),
            _ => None,
        })?;
        let first = sketches
            .first()
            .ok_or_else(|| Error::Data("no sketches to merge".into()))?;
        let n_features = first.points.len();
        let mut pooled: Vec<Vec<f64>> = vec![Vec::new(); n_features];
        for sketch in &sketches {
            if sketch.points.len() != n_features {
                return Err(Error::Shape(format!(
                    "sketch covers {} features, expected {n_features}",
                    sketch.points.len()
                )));
            }
            for (f, pts) in sketch.points.iter().enumerate() {
                pooled[f].extend_from_slice(pts);
            }
        }
        Ok(BinMapper::from_points(pooled, n_bins))
    }
}

/// Partition training rows according to the plan's scheme. The partition
/// seed is derived from the plan seed so it is independent of any
/// training-time randomness.
pub fn partition_for_plan(
    rows: &[usize],
    labels: &[usize],
    plan: &FederationPlan,
) -> Result<ClientPartition> {
    let seed = derive_seed(plan.seed, "partition");
    match plan.scheme {
        PartitionScheme::Iid => partition_iid(rows, labels, plan.n_clients, seed),
        PartitionScheme::Dirichlet => {
            partition_dirichlet(rows, labels, plan.n_clients, plan.alpha, seed)
        }
    }
}

/// FNV-1a over the bit patterns of a parameter slice.
pub fn param_checksum(values: &[f64]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub(crate) fn select_rows(x: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (o, &r) in rows.iter().enumerate() {
        out.row_mut(o).assign(&x.row(r));
    }
    out
}
