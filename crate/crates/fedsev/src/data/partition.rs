//! Splitting training rows across simulated federated clients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::apportion;

/// How rows are distributed across clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionScheme {
    /// Every client receives a near-identical class distribution.
    Iid,
    /// Per-class client shares drawn from a symmetric Dirichlet.
    Dirichlet,
}

/// Disjoint row-index lists, one per client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientPartition {
    pub n_clients: usize,
    pub row_indices: Vec<Vec<usize>>,
    pub scheme: PartitionScheme,
    /// Dirichlet concentration; 1.0 and unused for IID.
    pub alpha: f64,
    pub seed: u64,
}

impl ClientPartition {
    pub fn client_sizes(&self) -> Vec<usize> {
        self.row_indices.iter().map(Vec::len).collect()
    }

    /// Per-client, per-class row counts.
    pub fn class_table(&self, labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
        self.row_indices
            .iter()
            .map(|rows| {
                let mut counts = vec![0usize; n_classes];
                for &r in rows {
                    counts[labels[r]] += 1;
                }
                counts
            })
            .collect()
    }
}

fn validate(rows: &[usize], labels: &[usize], n_clients: usize) -> Result<()> {
    if n_clients == 0 {
        return Err(Error::Config("n_clients must be at least 1".into()));
    }
    if rows.is_empty() {
        return Err(Error::Data("cannot partition zero rows".into()));
    }
    if n_clients > rows.len() {
        return Err(Error::Data(format!(
            "{} clients but only {} rows",
            n_clients,
            rows.len()
        )));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= labels.len()) {
        return Err(Error::Shape(format!(
            "row index {bad} out of range for {} labels",
            labels.len()
        )));
    }
    Ok(())
}

fn group_by_class(rows: &[usize], labels: &[usize]) -> Vec<Vec<usize>> {
    let n_classes = rows.iter().map(|&r| labels[r]).max().unwrap() + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for &r in rows {
        by_class[labels[r]].push(r);
    }
    by_class
}

/// Any client left empty steals one row from the currently largest client.
fn repair_empty_clients(indices: &mut [Vec<usize>]) {
    loop {
        let Some(empty) = indices.iter().position(Vec::is_empty) else {
            return;
        };
        let largest = indices
            .iter()
            .enumerate()
            .max_by(|(ai, a), (bi, b)| a.len().cmp(&b.len()).then(bi.cmp(ai)))
            .map(|(i, _)| i)
            .expect("at least one client");
        let moved = indices[largest].pop().expect("largest client is nonempty");
        indices[empty].push(moved);
    }
}

/// Partition rows so every client's per-class counts differ by at most one.
///
/// Rows of each class are shuffled and dealt round-robin onto a client
/// cursor carried across classes, which bounds the client size spread to
/// one row overall. A single client receives the rows unshuffled.
pub fn partition_iid(
    rows: &[usize],
    labels: &[usize],
    n_clients: usize,
    seed: u64,
) -> Result<ClientPartition> {
    validate(rows, labels, n_clients)?;
    if n_clients == 1 {
        return Ok(ClientPartition {
            n_clients,
            row_indices: vec![rows.to_vec()],
            scheme: PartitionScheme::Iid,
            alpha: 1.0,
            seed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
    let mut cursor = 0usize;
    for mut class_rows in group_by_class(rows, labels) {
        class_rows.shuffle(&mut rng);
        for row in class_rows {
            indices[cursor].push(row);
            cursor = (cursor + 1) % n_clients;
        }
    }
    repair_empty_clients(&mut indices);
    Ok(ClientPartition {
        n_clients,
        row_indices: indices,
        scheme: PartitionScheme::Iid,
        alpha: 1.0,
        seed,
    })
}

/// Partition rows with per-class client proportions drawn from a symmetric
/// Dirichlet with concentration `alpha`.
///
/// For each class the drawn proportions are converted to counts by
/// largest-remainder rounding, so class totals are conserved exactly.
/// Clients left empty are repaired by stealing one row from the largest
/// client. Deterministic for a fixed seed.
pub fn partition_dirichlet(
    rows: &[usize],
    labels: &[usize],
    n_clients: usize,
    alpha: f64,
    seed: u64,
) -> Result<ClientPartition> {
    validate(rows, labels, n_clients)?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config(format!("alpha {alpha} must be positive")));
    }
    if n_clients == 1 {
        return Ok(ClientPartition {
            n_clients,
            row_indices: vec![rows.to_vec()],
            scheme: PartitionScheme::Dirichlet,
            alpha,
            seed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| Error::Config(format!("invalid Dirichlet alpha {alpha}: {e}")))?;
    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); n_clients];
    for mut class_rows in group_by_class(rows, labels) {
        if class_rows.is_empty() {
            continue;
        }
        class_rows.shuffle(&mut rng);
        // symmetric Dirichlet draw as normalized Gamma(alpha, 1) samples
        let mut draws: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        if total <= 0.0 {
            draws = vec![1.0; n_clients];
        }
        let counts = apportion(class_rows.len(), &draws);
        let mut offset = 0usize;
        for (client, &count) in counts.iter().enumerate() {
            indices[client].extend_from_slice(&class_rows[offset..offset + count]);
            offset += count;
        }
    }
    repair_empty_clients(&mut indices);
    Ok(ClientPartition {
        n_clients,
        row_indices: indices,
        scheme: PartitionScheme::Dirichlet,
        alpha,
        seed,
    })
}
