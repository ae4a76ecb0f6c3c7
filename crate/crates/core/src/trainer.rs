//! Full-batch gradient descent on the pairwise objective.
//!
//! Each epoch runs a forward pass over every sample, records the objective,
//! forms `dJ/dy_i` for all samples, backpropagates and sums the per-sample
//! parameter gradients (as one batched pass), then takes one step `alpha <- alpha - step_size * dJ/dalpha`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{enumerate_ordered_pairs, enumerate_pairs, LabeledDataset};
use crate::linalg::Matrix;
use crate::loss::{dml_objective_and_grad, gdt_loss_and_grad, LossConfig, PairTarget};
use crate::network::{FeedForwardNet, Gradients};
use crate::{Error, Result};

/// How the pair sum runs over the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSummation {
    /// Each pair `i < j` once.
    #[default]
    Unordered,
    /// Both `(i, j)` and `(j, i)`; doubles the objective and its gradient.
    Ordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub step_size: f64,
    pub max_epochs: usize,
    pub rel_tol: f64,
    pub patience_window: usize,
    pub pairs: PairSummation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossConfig::default(),
            step_size: 0.002,
            max_epochs: 5000,
            rel_tol: 1e-5,
            patience_window: 10,
            pairs: PairSummation::Unordered,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step_size must be finite and non-negative, got {}",
                self.step_size
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.patience_window == 0 {
            return Err(Error::InvalidConfig("patience_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Objective at the start of every epoch.
    pub objective_history: Vec<f64>,
    pub epochs_run: usize,
    pub converged: bool,
    pub final_net: FeedForwardNet,
}

impl TrainReport {
    /// `epoch,J` rows with a header, epochs counted from 1.
    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "epoch,J")?;
        for (k, j) in self.objective_history.iter().enumerate() {
            writeln!(out, "{},{}", k + 1, j)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Stopping test on the objective history.
///
/// Stable once `|J_t - J_{t-w}| / max(J_{t-w}, 1e-12) < rel_tol`.
pub fn is_stable(history: &[f64], window: usize, rel_tol: f64) -> bool {
    let t = history.len();
    if t <= window {
        return false;
    }
    let (now, then) = (history[t - 1], history[t - 1 - window]);
    (now - then).abs() / then.max(1e-12) < rel_tol
}

/// Objective and its gradient for the current parameters, without updating.
pub fn objective_and_gradient(
    net: &FeedForwardNet,
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(f64, Gradients)> {
    let pairs = build_pairs(dataset, cfg)?;
    let inputs = Matrix::from_rows(dataset.features())?;
    epoch_gradient(net, &inputs, &pairs, cfg)
}

fn build_pairs(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<Vec<PairTarget>> {
    let lambda = cfg.loss.effective_lambda();
    match cfg.pairs {
        PairSummation::Unordered => enumerate_pairs(dataset, lambda),
        PairSummation::Ordered => enumerate_ordered_pairs(dataset, lambda),
    }
}

fn epoch_gradient(
    net: &FeedForwardNet,
    inputs: &Matrix,
    pairs: &[PairTarget],
    cfg: &TrainConfig,
) -> Result<(f64, Gradients)> {
    let trace = net.forward_batch(inputs)?;
    let out = trace.output();
    let ys: Vec<Vec<f64>> = (0..out.rows()).map(|i| out.row(i).to_vec()).collect();
    let (objective, upstream) = match cfg.loss.dml_variant() {
        Some(v) => dml_objective_and_grad(&ys, pairs, v)?,
        None => gdt_loss_and_grad(&ys, pairs)?,
    };
    // The batched reduction runs in a fixed order, so training is bit-reproducible.
    let grads = net.backward_batch(&trace, &Matrix::from_rows(&upstream)?)?;
    Ok((objective, grads))
}

pub fn train(net: &FeedForwardNet, dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if dataset.len() < 2 || dataset.class_count() < 2 {
        return Err(Error::InvalidInput(
            "training needs at least 2 samples spanning at least 2 classes".into(),
        ));
    }
    if dataset.dim() != net.input_dim() {
        return Err(Error::Shape(format!(
            "dataset dim {} but network input dim {}",
            dataset.dim(),
            net.input_dim()
        )));
    }
    let pairs = build_pairs(dataset, cfg)?;
    let inputs = Matrix::from_rows(dataset.features())?;
    let mut net = net.clone();
    let mut history = Vec::new();
    let mut converged = false;

    for epoch in 1..=cfg.max_epochs {
        let (objective, grads) = epoch_gradient(&net, &inputs, &pairs, cfg).map_err(|e| match e {
            Error::DegenerateVector { .. } => Error::Diverged {
                epoch,
                reason: e.to_string(),
            },
            other => other,
        })?;
        if !objective.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: format!("objective is {objective}"),
            });
        }
        history.push(objective);
        if is_stable(&history, cfg.patience_window, cfg.rel_tol) {
            converged = true;
            break;
        }
        if grads.values().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                reason: "non-finite gradient".into(),
            });
        }
        net.apply_update(&grads, cfg.step_size)?;
    }

    Ok(TrainReport {
        epochs_run: history.len(),
        objective_history: history,
        converged,
        final_net: net,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossMode;

    fn toy() -> LabeledDataset {
        LabeledDataset::new(
            vec![
                vec![1.0, 0.2, -0.3],
                vec![0.8, -0.1, 0.4],
                vec![-0.5, 1.0, 0.3],
                vec![-0.2, 0.7, -0.9],
            ],
            vec![1, 1, 2, 2],
        )
        .unwrap()
    }

    #[test]
    fn stability_rule() {
        assert!(!is_stable(&[1.0, 1.0], 2, 1e-5));
        assert!(is_stable(&[1.0, 1.0, 1.0], 2, 1e-5));
        assert!(!is_stable(&[1.0, 0.5, 0.5], 2, 1e-5));
        assert!(is_stable(&[0.0, 0.0], 1, 1e-5));
    }

    #[test]
    fn zero_step_is_constant_and_converges_after_window() {
        let net = FeedForwardNet::init(&[3, 4, 3], 1, 0.5).unwrap();
        let cfg = TrainConfig {
            step_size: 0.0,
            patience_window: 4,
            ..Default::default()
        };
        let report = train(&net, &toy(), &cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.epochs_run, cfg.patience_window + 1);
        assert_eq!(report.objective_history.len(), report.epochs_run);
        let j0 = report.objective_history[0];
        assert!(report.objective_history.iter().all(|&j| j == j0));
        assert_eq!(report.final_net, net);
    }

    #[test]
    fn small_steps_reduce_the_objective() {
        let data = LabeledDataset::new(vec![vec![1.0, 0.3], vec![0.6, 0.9]], vec![1, 2]).unwrap();
        let net = FeedForwardNet::init(&[2, 3, 2], 8, 0.5).unwrap();
        let cfg = TrainConfig {
            step_size: 0.01,
            max_epochs: 200,
            ..Default::default()
        };
        let r = train(&net, &data, &cfg).unwrap();
        assert!(r.objective_history.last().unwrap() <= &r.objective_history[0]);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let net = FeedForwardNet::init(&[3, 5, 4], 2, 0.5).unwrap();
        let cfg = TrainConfig {
            step_size: 0.1,
            max_epochs: 50,
            ..Default::default()
        };
        let a = train(&net, &toy(), &cfg).unwrap();
        let b = train(&net, &toy(), &cfg).unwrap();
        assert_eq!(a.final_net, b.final_net);
        assert_eq!(a.objective_history, b.objective_history);
    }

    #[test]
    fn rejects_unusable_inputs() {
        let net = FeedForwardNet::init(&[3, 3], 2, 0.5).unwrap();
        let one_class = toy().subset(&[0, 1]);
        assert!(matches!(
            train(&net, &one_class, &TrainConfig::default()),
            Err(Error::InvalidInput(_))
        ));
        let wide = FeedForwardNet::init(&[4, 3], 2, 0.5).unwrap();
        assert!(matches!(
            train(&wide, &toy(), &TrainConfig::default()),
            Err(Error::Shape(_))
        ));
        let bad = TrainConfig {
            max_epochs: 0,
            ..Default::default()
        };
        assert!(matches!(train(&net, &toy(), &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn degenerate_output_is_reported_as_divergence() {
        // All-zero weights send every sample to y = 0.
        let net = FeedForwardNet::init(&[3, 3], 2, 0.0).unwrap();
        match train(&net, &toy(), &TrainConfig::default()) {
            Err(Error::Diverged { epoch: 1, .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn huge_step_diverges_or_stays_finite() {
        let net = FeedForwardNet::init(&[3, 4, 3], 3, 0.5).unwrap();
        let cfg = TrainConfig {
            step_size: 1e300,
            max_epochs: 20,
            ..Default::default()
        };
        match train(&net, &toy(), &cfg) {
            Ok(r) => assert!(r.objective_history.iter().all(|j| j.is_finite())),
            Err(Error::Diverged { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn dml_modes_train() {
        let net = FeedForwardNet::init(&[3, 4, 3], 3, 0.5).unwrap();
        for mode in [LossMode::HingeDml, LossMode::SmoothedDml] {
            let cfg = TrainConfig {
                loss: LossConfig { lambda: 0.0, mode },
                step_size: 0.002,
                max_epochs: 100,
                ..Default::default()
            };
            let r = train(&net, &toy(), &cfg).unwrap();
            assert!(r.objective_history.last().unwrap() <= &r.objective_history[0]);
        }
    }
}
