//! Experiment configuration.
//!
//! Configs are flat key/value files with dotted section keys (valid TOML):
//!
//! ```text
//! task = "synthetic"
//! seed = 1
//! synthetic.train_per_class = 40
//! train.lambda = 0.4
//! sweep.lambdas = [0.0, 0.5, 1.0]
//! ```
//!
//! `--set key=value` overrides are applied on top of the file before validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::loss::{LossConfig, LossMode};
use crate::robustness::Metric;
use crate::trainer::{PairSummation, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[default]
    Synthetic,
    IdxSubset,
    CsvDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub embed_dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self {
            embed_dim: 100,
            train_per_class: 40,
            test_per_class: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdxSection {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub per_class: usize,
    /// Cap on test samples per class; the whole test file when absent.
    pub test_per_class: Option<usize>,
    /// Subtract the training-subset mean image from train and test samples.
    pub center: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSection {
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSection {
    /// Output width of every layer; defaults to two square layers of the input dim.
    pub layers: Option<Vec<usize>>,
    pub init_scale: f64,
}

impl Default for NetSection {
    fn default() -> Self {
        Self {
            layers: None,
            init_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lambda: f64,
    pub mode: LossMode,
    pub step_size: f64,
    pub max_epochs: usize,
    pub rel_tol: f64,
    pub patience_window: usize,
    pub pairs: PairSummation,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lambda: t.loss.lambda,
            mode: t.loss.mode,
            step_size: t.step_size,
            max_epochs: t.max_epochs,
            rel_tol: t.rel_tol,
            patience_window: t.patience_window,
            pairs: t.pairs,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: LossConfig {
                lambda: self.lambda,
                mode: self.mode,
            },
            step_size: self.step_size,
            max_epochs: self.max_epochs,
            rel_tol: self.rel_tol,
            patience_window: self.patience_window,
            pairs: self.pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Positive and negative verification pairs drawn from the test set (each);
    /// 0 disables the ROC.
    pub verification_pairs: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            verification_pairs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSection {
    pub gamma: f64,
    pub metric: Metric,
    /// Lipschitz bound of the pair loss; chosen from the loss mode when absent.
    pub lipschitz_a: Option<f64>,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            metric: Metric::Angular,
            lipschitz_a: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Training samples per class; the task's own size when empty.
    pub sizes: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            seeds: vec![1, 2, 3, 4, 5],
            sizes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub synthetic: SyntheticSection,
    pub idx: IdxSection,
    pub csv: CsvSection,
    pub net: NetSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub robustness: RobustnessSection,
    pub sweep: SweepSection,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_owned(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses config text, applies `key=value` overrides, and validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_error("<file>", e.to_string().trim().to_owned()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
            .map_err(|e| config_error(&e.path().to_string(), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let lambda_ok = |l: f64| (0.0..=1.0).contains(&l);
        if !lambda_ok(self.train.lambda) {
            return Err(config_error(
                "train.lambda",
                format!("must lie in [0, 1], got {}", self.train.lambda),
            ));
        }
        self.train
            .to_train_config()
            .validate()
            .map_err(|e| config_error("train", e.to_string()))?;
        if let Some(l) = self.sweep.lambdas.iter().find(|&&l| !lambda_ok(l)) {
            return Err(config_error("sweep.lambdas", format!("{l} is outside [0, 1]")));
        }
        if self.sweep.lambdas.is_empty() {
            return Err(config_error("sweep.lambdas", "must not be empty"));
        }
        if self.sweep.seeds.is_empty() {
            return Err(config_error("sweep.seeds", "must not be empty"));
        }
        if self.sweep.sizes.contains(&0) {
            return Err(config_error("sweep.sizes", "sizes must be positive"));
        }
        if !(self.net.init_scale >= 0.0 && self.net.init_scale.is_finite()) {
            return Err(config_error("net.init_scale", "must be finite and non-negative"));
        }
        if let Some(layers) = &self.net.layers {
            if layers.is_empty() || layers.contains(&0) {
                return Err(config_error("net.layers", "needs at least one positive width"));
            }
        }
        if !(self.robustness.gamma > 0.0 && self.robustness.gamma.is_finite()) {
            return Err(config_error("robustness.gamma", "must be positive"));
        }
        if let Some(a) = self.robustness.lipschitz_a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(config_error("robustness.lipschitz_a", "must be positive"));
            }
        }
        match self.task {
            Task::Synthetic => {
                if self.synthetic.embed_dim < 3 {
                    return Err(config_error("synthetic.embed_dim", "must be at least 3"));
                }
                if self.synthetic.train_per_class == 0 || self.synthetic.test_per_class == 0 {
                    return Err(config_error("synthetic", "per-class sizes must be positive"));
                }
            }
            Task::IdxSubset => {
                for (key, p) in [
                    ("idx.train_images", &self.idx.train_images),
                    ("idx.train_labels", &self.idx.train_labels),
                    ("idx.test_images", &self.idx.test_images),
                    ("idx.test_labels", &self.idx.test_labels),
                ] {
                    if p.as_os_str().is_empty() {
                        return Err(config_error(key, "path is required for task idx-subset"));
                    }
                }
                if self.idx.per_class == 0 {
                    return Err(config_error("idx.per_class", "must be positive"));
                }
            }
            Task::CsvDataset => {
                if self.csv.train.as_os_str().is_empty() || self.csv.test.as_os_str().is_empty() {
                    return Err(config_error("csv", "train and test paths are required"));
                }
                if !self.sweep.sizes.is_empty() {
                    return Err(config_error("sweep.sizes", "not supported for task csv-dataset"));
                }
            }
        }
        Ok(())
    }

    /// Lipschitz constant used in the robustness report.
    pub fn lipschitz_a(&self) -> f64 {
        self.robustness
            .lipschitz_a
            .unwrap_or_else(|| self.train.to_train_config().loss.lipschitz_bound())
    }
}

/// Inserts `value` at a dotted `key` path. The value is read as a TOML literal,
/// falling back to a bare string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_error(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(config_error(key, "empty key segment"));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cursor = table;
    for (depth, part) in parts.iter().enumerate() {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| config_error(&parts[..=depth].join("."), "is not a section"))?;
    }
    cursor.insert(last.to_owned(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::parse("", &[]).unwrap();
        assert_eq!(cfg.task, Task::Synthetic);
        assert_eq!(cfg.train.step_size, 0.002);
        assert_eq!(cfg.train.max_epochs, 5000);
        assert_eq!(cfg.train.patience_window, 10);
        assert_eq!(cfg.train.rel_tol, 1e-5);
        assert_eq!(cfg.synthetic.embed_dim, 100);
        assert_eq!(cfg.lipschitz_a(), 4.0);
    }

    #[test]
    fn dotted_keys_and_overrides() {
        let text = "task = \"synthetic\"\ntrain.lambda = 0.4\nsweep.lambdas = [0.0, 1.0]\n";
        let cfg = ExperimentConfig::parse(
            text,
            &[
                "train.lambda=0.7".into(),
                "synthetic.embed_dim=20".into(),
                "train.mode=hinge-dml".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.train.lambda, 0.7);
        assert_eq!(cfg.synthetic.embed_dim, 20);
        assert_eq!(cfg.sweep.lambdas, vec![0.0, 1.0]);
        assert_eq!(cfg.train.mode, LossMode::HingeDml);
        assert_eq!(cfg.lipschitz_a(), 1.0);
    }

    #[test]
    fn bad_lambda_names_the_field() {
        match ExperimentConfig::parse("train.lambda = 1.5", &[]) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "train.lambda"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("", &["sweep.lambdas=[0.5, 2.0]".into()]) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "sweep.lambdas"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_carry_the_path() {
        match ExperimentConfig::parse("train.max_epochs = \"many\"", &[]) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "train.max_epochs"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("train.bogus = 1", &[]) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("train"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_override() {
        assert!(ExperimentConfig::parse("", &["train.lambda".into()]).is_err());
        assert!(ExperimentConfig::parse("", &["train..lambda=1".into()]).is_err());
        assert!(ExperimentConfig::parse("", &["seed.x=1".into()]).is_err());
    }

    #[test]
    fn idx_task_requires_paths() {
        match ExperimentConfig::parse("task = \"idx-subset\"", &[]) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "idx.train_images"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shipped_configs_parse() {
        let syn = ExperimentConfig::parse(include_str!("../../../configs/synthetic.toml"), &[]).unwrap();
        assert_eq!(syn.sweep.sizes, vec![40, 100]);
        let digits = ExperimentConfig::parse(include_str!("../../../configs/digits.toml"), &[]).unwrap();
        assert_eq!(digits.task, Task::IdxSubset);
        assert!(digits.idx.center);
    }
}
