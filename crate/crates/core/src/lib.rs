//! Pairwise cosine-similarity feature transforms with a geometry-preserving
//! regularizer, trained by full-batch gradient descent through a small tanh
//! network, plus covering-number robustness diagnostics.

// `!(x > 0.0)` checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linalg;
pub mod loss;
pub mod network;
pub mod robustness;
pub mod trainer;

pub use config::ExperimentConfig;
pub use data::{LabeledDataset, SyntheticConfig};
pub use error::{Error, Result};
pub use eval::{EvalReport, Roc};
pub use loss::{LossConfig, LossMode, PairLabel, PairTarget};
pub use network::{FeatureMap, FeedForwardNet, ForwardTrace, Gradients};
pub use robustness::{Metric, RobustnessReport};
pub use trainer::{train, TrainConfig, TrainReport};
