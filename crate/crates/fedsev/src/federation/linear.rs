//! FedAvg training loop for the linear models.

use ndarray::ArrayView2;

use super::{
    param_checksum, partition_for_plan, select_rows, AggregationServer, ClientMessage,
    FederatedRun, FederationPlan, RoundLog,
};
use crate::error::Result;
use crate::models::{
    export_params, import_params, LinearHyper, LinearKind, LinearModelState, PacTrainer, SvmTrainer,
};

/// Run `plan.rounds` rounds of FedAvg: every round, each client starts from
/// the current global parameters, trains `plan.local_epochs` epochs on its
/// own partition, and exports its parameters; the server averages them by
/// sample count into the next global model.
///
/// Deterministic for a fixed plan seed and hyperparameter seed. Clients
/// holding a single class locally are fine: one-vs-rest and
/// passive-aggressive updates stay defined.
pub fn run_federated_linear(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    plan: &FederationPlan,
    kind: LinearKind,
    hyper: LinearHyper,
) -> Result<FederatedRun<LinearModelState>> {
    plan.validate()?;
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let partition = partition_for_plan(&rows, y, plan)?;
    let clients: Vec<(ndarray::Array2<f64>, Vec<usize>)> = partition
        .row_indices
        .iter()
        .map(|rows| {
            let cx = select_rows(x, rows);
            let cy: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
            (cx, cy)
        })
        .collect();
    let client_samples: Vec<usize> = clients.iter().map(|(_, cy)| cy.len()).collect();

    let mut server = AggregationServer::new();
    let mut global = LinearModelState::zeros(n_classes, x.ncols(), kind, hyper);
    let mut logs = Vec::with_capacity(plan.rounds);

    for round in 0..plan.rounds {
        let mut messages = Vec::with_capacity(clients.len());
        for (cx, cy) in &clients {
            let local = match kind {
                LinearKind::SquaredHingeSvm => {
                    SvmTrainer::new(hyper).fit_from(&global, cx.view(), cy, plan.local_epochs)?
                }
                LinearKind::PassiveAggressive => PacTrainer::new(hyper).fit_from(
                    &global,
                    cx.view(),
                    cy,
                    plan.local_epochs,
                    hyper.seed,
                )?,
            };
            messages.push(ClientMessage::Params(export_params(&local, cy.len())));
        }
        let aggregated = server.aggregate_params(&messages)?;
        global = import_params(&global, &aggregated)?;
        logs.push(RoundLog {
            round,
            client_samples: client_samples.clone(),
            param_checksum: param_checksum(&aggregated.values),
            eval: None,
        });
    }
    Ok(FederatedRun {
        model: global,
        logs,
        audit: server.audit,
    })
}
