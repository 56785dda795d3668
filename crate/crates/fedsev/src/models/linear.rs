//! Linear classifiers: one-vs-rest squared-hinge SVM trained by full-batch
//! gradient descent with backtracking, and the multiclass passive-aggressive
//! classifier (PA-I).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_tie_low, ParamVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    SquaredHingeSvm,
    PassiveAggressive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    /// Regularization / aggressiveness constant.
    pub c: f64,
    /// Stopping tolerance on the per-epoch objective (SVM) or mean hinge
    /// loss change (PAC).
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl LinearHyper {
    pub fn svm_default(seed: u64) -> Self {
        LinearHyper {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
            seed,
        }
    }

    pub fn pac_default(seed: u64) -> Self {
        LinearHyper {
            c: 1.0,
            tol: 1e-3,
            max_epochs: 1000,
            seed,
        }
    }
}

/// Weights, intercepts, and training diagnostics of a linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModelState {
    /// Weight matrix, one row per class.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub kind: LinearKind,
    pub hyper: LinearHyper,
    /// Per-epoch objective per class (SVM) or a single row of mean epoch
    /// hinge losses (PAC).
    #[serde(default)]
    pub trace: Vec<Vec<f64>>,
    /// Updates skipped because the example row was all zeros.
    #[serde(default)]
    pub zero_row_skips: usize,
}

impl LinearModelState {
    pub fn zeros(
        n_classes: usize,
        n_features: usize,
        kind: LinearKind,
        hyper: LinearHyper,
    ) -> Self {
        LinearModelState {
            w: Array2::zeros((n_classes, n_features)),
            b: Array1::zeros(n_classes),
            kind,
            hyper,
            trace: Vec::new(),
            zero_row_skips: 0,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.w.ncols()
    }

    /// Raw per-class decision scores W x + b.
    pub fn decision_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "model trained on {} features, input has {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let mut scores = x.dot(&self.w.t());
        for mut row in scores.rows_mut() {
            row += &self.b;
        }
        Ok(scores)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let scores = self.decision_scores(x)?;
        Ok(scores
            .rows()
            .into_iter()
            .map(|r| argmax_tie_low(r.as_slice().expect("contiguous score row")))
            .collect())
    }
}

/// Flatten weights and intercepts into a parameter vector with shape
/// `[n_classes, n_features + 1]` (intercept last per row).
pub fn export_params(state: &LinearModelState, sample_weight: usize) -> ParamVector {
    let (k, d) = (state.n_classes(), state.n_features());
    let mut values = Vec::with_capacity(k * (d + 1));
    for c in 0..k {
        values.extend(state.w.row(c).iter().copied());
        values.push(state.b[c]);
    }
    ParamVector {
        values,
        shape: vec![k, d + 1],
        sample_weight,
    }
}

/// Rebuild a model from a parameter vector, keeping kind, hyperparameters,
/// and diagnostics from the template state.
pub fn import_params(
    template: &LinearModelState,
    params: &ParamVector,
) -> Result<LinearModelState> {
    params.validate()?;
    let (k, d) = (template.n_classes(), template.n_features());
    if params.shape != [k, d + 1] {
        return Err(Error::Shape(format!(
            "expected shape [{k}, {}], got {:?}",
            d + 1,
            params.shape
        )));
    }
    let mut state = template.clone();
    for c in 0..k {
        let row = &params.values[c * (d + 1)..(c + 1) * (d + 1)];
        state.w.row_mut(c).assign(&ArrayView1::from(&row[..d]));
        state.b[c] = row[d];
    }
    Ok(state)
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }
    Ok(())
}

fn check_two_classes(y: &[usize]) -> Result<()> {
    let first = y.first().copied();
    if y.iter().all(|&v| Some(v) == first) {
        return Err(Error::Data("training labels contain a single class".into()));
    }
    Ok(())
}

/// One-vs-rest linear SVM with L2 penalty and squared hinge loss.
///
/// Each class minimizes `0.5 ||w||^2 + C sum max(0, 1 - t f)^2` by
/// full-batch gradient descent from a zero (or supplied) start, with an
/// Armijo backtracking line search so the objective never increases. An
/// epoch budget and the objective-decrease tolerance both stop training.
#[derive(Debug, Clone)]
pub struct SvmTrainer {
    pub hyper: LinearHyper,
}

impl SvmTrainer {
    pub fn new(hyper: LinearHyper) -> Self {
        SvmTrainer { hyper }
    }

    pub fn fit(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        n_classes: usize,
    ) -> Result<LinearModelState> {
        check_two_classes(y)?;
        let init = LinearModelState::zeros(
            n_classes,
            x.ncols(),
            LinearKind::SquaredHingeSvm,
            self.hyper,
        );
        self.fit_from(&init, x, y, self.hyper.max_epochs)
    }

    /// Continue training from existing parameters for up to `epochs`
    /// epochs. Used by federated clients; local data may hold one class.
    pub fn fit_from(
        &self,
        init: &LinearModelState,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        epochs: usize,
    ) -> Result<LinearModelState> {
        check_finite(x)?;
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != init.n_features() {
            return Err(Error::Shape("initial state width mismatch".into()));
        }
        let mut state = init.clone();
        state.trace = Vec::new();
        let c_reg = self.hyper.c;
        for class in 0..state.n_classes() {
            let targets: Vec<f64> = y
                .iter()
                .map(|&v| if v == class { 1.0 } else { -1.0 })
                .collect();
            let mut w = state.w.row(class).to_owned();
            let mut b = state.b[class];
            let mut trace = Vec::new();

            let objective_grad = |w: &Array1<f64>, b: f64| -> (f64, Array1<f64>, f64) {
                let margins = x.dot(w) + b;
                let mut obj = 0.5 * w.dot(w);
                let mut gw = w.clone();
                let mut gb = 0.0;
                for ((&m, &t), row) in margins.iter().zip(&targets).zip(x.rows()) {
                    let slack = 1.0 - t * m;
                    if slack > 0.0 {
                        obj += c_reg * slack * slack;
                        let coeff = -2.0 * c_reg * slack * t;
                        gw.scaled_add(coeff, &row);
                        gb += coeff;
                    }
                }
                (obj, gw, gb)
            };

            let (mut obj, mut gw, mut gb) = objective_grad(&w, b);
            let mut eta = 1.0f64;
            for _ in 0..epochs {
                let g_norm2 = gw.dot(&gw) + gb * gb;
                if g_norm2 == 0.0 {
                    break;
                }
                let mut step = eta;
                let mut accepted = None;
                while step >= 1e-18 {
                    let w_new = &w - &(step * &gw);
                    let b_new = b - step * gb;
                    let (obj_new, gw_new, gb_new) = objective_grad(&w_new, b_new);
                    if obj_new <= obj - 1e-4 * step * g_norm2 {
                        accepted = Some((w_new, b_new, obj_new, gw_new, gb_new));
                        break;
                    }
                    step *= 0.5;
                }
                let Some((w_new, b_new, obj_new, gw_new, gb_new)) = accepted else {
                    break; // no descent step representable
                };
                let decrease = obj - obj_new;
                w = w_new;
                b = b_new;
                obj = obj_new;
                gw = gw_new;
                gb = gb_new;
                eta = (step * 2.0).min(1.0);
                trace.push(obj);
                if decrease < self.hyper.tol {
                    break;
                }
            }
            state.w.row_mut(class).assign(&w);
            state.b[class] = b;
            state.trace.push(trace);
        }
        Ok(state)
    }
}

/// Multiclass passive-aggressive classifier, PA-I variant.
///
/// Visits examples in a seeded shuffled order. For a margin violation
/// `l = max(0, 1 - (f_true - f_best_other))` the step is
/// `tau = min(C, l / (2 ||x||^2))`, added to the true-class row and
/// subtracted from the offending row. Epochs repeat until the mean epoch
/// loss change drops below `tol` or the budget runs out.
#[derive(Debug, Clone)]
pub struct PacTrainer {
    pub hyper: LinearHyper,
}

impl PacTrainer {
    pub fn new(hyper: LinearHyper) -> Self {
        PacTrainer { hyper }
    }

    pub fn fit(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        n_classes: usize,
    ) -> Result<LinearModelState> {
        check_two_classes(y)?;
        let init = LinearModelState::zeros(
            n_classes,
            x.ncols(),
            LinearKind::PassiveAggressive,
            self.hyper,
        );
        self.fit_from(&init, x, y, self.hyper.max_epochs, self.hyper.seed)
    }

    /// Continue training from existing parameters. The intercept is not
    /// part of the passive-aggressive update and stays as initialized.
    pub fn fit_from(
        &self,
        init: &LinearModelState,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        epochs: usize,
        seed: u64,
    ) -> Result<LinearModelState> {
        check_finite(x)?;
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() != init.n_features() {
            return Err(Error::Shape("initial state width mismatch".into()));
        }
        let mut state = init.clone();
        state.trace = Vec::new();
        state.zero_row_skips = 0;
        let n_classes = state.n_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        let mut losses = Vec::new();
        let mut scores = vec![0.0f64; n_classes];

        for _ in 0..epochs {
            order.shuffle(&mut rng);
            let mut total_loss = 0.0;
            for &i in &order {
                let row = x.row(i);
                for (c, s) in scores.iter_mut().enumerate() {
                    *s = state.w.row(c).dot(&row) + state.b[c];
                }
                let truth = y[i];
                let mut offender = usize::MAX;
                let mut best_other = f64::NEG_INFINITY;
                for (c, &s) in scores.iter().enumerate() {
                    if c != truth && s > best_other {
                        best_other = s;
                        offender = c;
                    }
                }
                let loss = (1.0 - (scores[truth] - best_other)).max(0.0);
                total_loss += loss;
                if loss > 0.0 {
                    let sq = row.dot(&row);
                    if sq == 0.0 {
                        state.zero_row_skips += 1;
                        continue;
                    }
                    let tau = (loss / (2.0 * sq)).min(self.hyper.c);
                    state.w.row_mut(truth).scaled_add(tau, &row);
                    state.w.row_mut(offender).scaled_add(-tau, &row);
                }
            }
            let avg = total_loss / x.nrows().max(1) as f64;
            if let Some(&prev) = losses.last() {
                losses.push(avg);
                if (prev - avg).abs() < self.hyper.tol {
                    break;
                }
            } else {
                losses.push(avg);
            }
        }
        state.trace = vec![losses];
        Ok(state)
    }
}
