//! Experiment runner behind the CLI: single runs and lambda/seed/size sweeps.
//!
//! All randomness derives from the configured seeds, so re-running a config
//! reproduces every output file byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Task};
use crate::data::{gen_two_plane_dataset, load_idx, sample_verification_pairs, LabeledDataset, SyntheticConfig};
use crate::eval::{generalization_gap, knn_accuracy, verification_roc, EvalReport, Roc, VerificationPair};
use crate::network::FeedForwardNet;
use crate::robustness::{diagnose, RobustnessReport};
use crate::trainer::{train, TrainReport};
use crate::{Error, Result};

pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const NET_FILE: &str = "net.json";
pub const EVAL_FILE: &str = "eval_report.json";
pub const ROC_FILE: &str = "roc.csv";
pub const ROBUSTNESS_FILE: &str = "robustness_report.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "sweep_summary.csv";

const NET_SEED: u64 = 1;
const SUBSET_SEED: u64 = 2;
const PAIRS_SEED: u64 = 3;

/// Independent seed for one purpose, via the splitmix64 finalizer.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct TaskData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Training samples per class the task uses when no size override is given.
pub fn default_size(cfg: &ExperimentConfig) -> Option<usize> {
    match cfg.task {
        Task::Synthetic => Some(cfg.synthetic.train_per_class),
        Task::IdxSubset => Some(cfg.idx.per_class),
        Task::CsvDataset => None,
    }
}

/// Loads or generates the train/test split for `seed`, optionally overriding the
/// training samples per class.
pub fn load_task_data(cfg: &ExperimentConfig, seed: u64, per_class: Option<usize>) -> Result<TaskData> {
    match cfg.task {
        Task::Synthetic => {
            let s = gen_two_plane_dataset(&SyntheticConfig {
                embed_dim: cfg.synthetic.embed_dim,
                n_train_per_class: per_class.unwrap_or(cfg.synthetic.train_per_class),
                n_test_per_class: cfg.synthetic.test_per_class,
                seed,
            })?;
            Ok(TaskData {
                train: s.train,
                test: s.test,
            })
        }
        Task::IdxSubset => {
            let subset_seed = derive_seed(seed, SUBSET_SEED);
            let train = load_idx(&cfg.idx.train_images, &cfg.idx.train_labels)?
                .sample_per_class(per_class.unwrap_or(cfg.idx.per_class), subset_seed)?;
            let test = load_idx(&cfg.idx.test_images, &cfg.idx.test_labels)?;
            let test = match cfg.idx.test_per_class {
                Some(k) => test.sample_per_class(k, subset_seed)?,
                None => test,
            };
            if cfg.idx.center {
                let mean = train.feature_mean();
                return Ok(TaskData {
                    train: train.shifted(&mean)?,
                    test: test.shifted(&mean)?,
                });
            }
            Ok(TaskData { train, test })
        }
        Task::CsvDataset => Ok(TaskData {
            train: LabeledDataset::load_csv(&cfg.csv.train)?,
            test: LabeledDataset::load_csv(&cfg.csv.test)?,
        }),
    }
}

pub fn network_dims(cfg: &ExperimentConfig, input_dim: usize) -> Vec<usize> {
    let layers = cfg.net.layers.clone().unwrap_or_else(|| vec![input_dim, input_dim]);
    std::iter::once(input_dim).chain(layers).collect()
}

pub fn init_network(cfg: &ExperimentConfig, input_dim: usize, seed: u64) -> Result<FeedForwardNet> {
    FeedForwardNet::init(
        &network_dims(cfg, input_dim),
        derive_seed(seed, NET_SEED),
        cfg.net.init_scale,
    )
}

/// Loss gap, 1-NN accuracy, and (when configured) verification ROC on the test set.
pub fn evaluate(
    cfg: &ExperimentConfig,
    net: &FeedForwardNet,
    data: &TaskData,
    seed: u64,
) -> Result<(EvalReport, Option<Roc>)> {
    let gap = generalization_gap(net, &data.train, &data.test)?;
    let knn = knn_accuracy(net, &data.train, &data.test)?;
    let roc = if cfg.eval.verification_pairs > 0 {
        let idx = sample_verification_pairs(
            &data.test,
            cfg.eval.verification_pairs,
            cfg.eval.verification_pairs,
            derive_seed(seed, PAIRS_SEED),
        )?;
        Some(verification_roc(
            net,
            &VerificationPair::from_indices(&data.test, &idx),
        )?)
    } else {
        None
    };
    Ok((
        EvalReport {
            r_emp: gap.r_emp,
            r_hat: gap.r_hat,
            gap: gap.gap,
            knn_accuracy: knn,
            auc: roc.as_ref().map(|r| r.auc),
        },
        roc,
    ))
}

pub fn robustness(cfg: &ExperimentConfig, net: &FeedForwardNet, train: &LabeledDataset) -> Result<RobustnessReport> {
    let (_, report) = diagnose(
        net,
        train,
        cfg.robustness.gamma,
        cfg.robustness.metric,
        cfg.lipschitz_a(),
    )?;
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Writes `train.csv` and `test.csv` for the configured task.
pub fn gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<TaskData> {
    cfg.validate()?;
    let data = load_task_data(cfg, cfg.seed, None)?;
    fs::create_dir_all(out)?;
    data.train.save_csv(&out.join("train.csv"))?;
    data.test.save_csv(&out.join("test.csv"))?;
    Ok(data)
}

/// Trains a network for `cfg.seed` and writes the net and the training log.
pub fn train_only(cfg: &ExperimentConfig, out: &Path) -> Result<TrainReport> {
    cfg.validate()?;
    let data = load_task_data(cfg, cfg.seed, None)?;
    let net = init_network(cfg, data.train.dim(), cfg.seed)?;
    let report = train(&net, &data.train, &cfg.train.to_train_config())?;
    fs::create_dir_all(out)?;
    report.final_net.save(&out.join(NET_FILE))?;
    report.write_log_csv(&out.join(TRAIN_LOG_FILE))?;
    Ok(report)
}

/// Evaluates a saved network and writes the eval report (and ROC).
pub fn eval_only(cfg: &ExperimentConfig, net_path: &Path, out: &Path) -> Result<EvalReport> {
    cfg.validate()?;
    let net = FeedForwardNet::load(net_path)?;
    let data = load_task_data(cfg, cfg.seed, None)?;
    let (report, roc) = evaluate(cfg, &net, &data, cfg.seed)?;
    fs::create_dir_all(out)?;
    write_json(&out.join(EVAL_FILE), &report)?;
    if let Some(roc) = roc {
        roc.write_csv(&out.join(ROC_FILE))?;
    }
    Ok(report)
}

/// Runs the robustness diagnostics for a saved network on the training split.
pub fn robustness_only(cfg: &ExperimentConfig, net_path: &Path, out: &Path) -> Result<RobustnessReport> {
    cfg.validate()?;
    let net = FeedForwardNet::load(net_path)?;
    let data = load_task_data(cfg, cfg.seed, None)?;
    let report = robustness(cfg, &net, &data.train)?;
    fs::create_dir_all(out)?;
    write_json(&out.join(ROBUSTNESS_FILE), &report)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub train: TrainReport,
    pub eval: EvalReport,
    pub robustness: RobustnessReport,
}

fn run_into(cfg: &ExperimentConfig, seed: u64, per_class: Option<usize>, out: &Path) -> Result<RunOutcome> {
    let data = load_task_data(cfg, seed, per_class)?;
    let net = init_network(cfg, data.train.dim(), seed)?;
    let trained = train(&net, &data.train, &cfg.train.to_train_config())?;
    let (eval, roc) = evaluate(cfg, &trained.final_net, &data, seed)?;
    let rob = robustness(cfg, &trained.final_net, &data.train)?;
    fs::create_dir_all(out)?;
    trained.write_log_csv(&out.join(TRAIN_LOG_FILE))?;
    trained.final_net.save(&out.join(NET_FILE))?;
    write_json(&out.join(EVAL_FILE), &eval)?;
    if let Some(roc) = roc {
        roc.write_csv(&out.join(ROC_FILE))?;
    }
    write_json(&out.join(ROBUSTNESS_FILE), &rob)?;
    Ok(RunOutcome {
        train: trained,
        eval,
        robustness: rob,
    })
}

/// Data, training, evaluation and robustness for `cfg.seed`; writes the training
/// log, network, eval report, ROC and robustness report into `out`.
///
/// Nothing is written unless the config validates and training succeeds.
pub fn run_single(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    run_into(cfg, cfg.seed, None, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Diverged,
}

/// One sweep cell. Metric fields are empty for diverged cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    pub n_per_class: usize,
    pub r_emp: Option<f64>,
    pub r_hat: Option<f64>,
    pub gap: Option<f64>,
    pub knn_accuracy: Option<f64>,
    pub delta_hat: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub status: CellStatus,
}

/// Mean and sample standard deviation over the seeds of one `(lambda, size)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub lambda: f64,
    pub n_per_class: usize,
    pub n_seeds: usize,
    pub n_ok: usize,
    pub r_emp_mean: Option<f64>,
    pub r_emp_std: Option<f64>,
    pub r_hat_mean: Option<f64>,
    pub r_hat_std: Option<f64>,
    pub gap_mean: Option<f64>,
    pub gap_std: Option<f64>,
    pub abs_gap_mean: Option<f64>,
    pub abs_gap_std: Option<f64>,
    pub knn_accuracy_mean: Option<f64>,
    pub knn_accuracy_std: Option<f64>,
    pub delta_hat_mean: Option<f64>,
    pub delta_hat_std: Option<f64>,
    #[serde(rename = "K_mean")]
    pub k_mean: Option<f64>,
    #[serde(rename = "K_std")]
    pub k_std: Option<f64>,
    pub epsilon_mean: Option<f64>,
    pub epsilon_std: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

impl SweepOutcome {
    pub fn summary_for(&self, lambda: f64, n_per_class: usize) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.lambda == lambda && s.n_per_class == n_per_class)
    }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std =
        (values.len() > 1).then(|| (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

fn summarize(lambda: f64, n_per_class: usize, rows: &[&SweepRow]) -> SummaryRow {
    let ok: Vec<&&SweepRow> = rows.iter().filter(|r| r.status == CellStatus::Ok).collect();
    let col = |f: &dyn Fn(&SweepRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let (r_emp_mean, r_emp_std) = mean_std(&col(&|r| r.r_emp));
    let (r_hat_mean, r_hat_std) = mean_std(&col(&|r| r.r_hat));
    let (gap_mean, gap_std) = mean_std(&col(&|r| r.gap));
    let (abs_gap_mean, abs_gap_std) = mean_std(&col(&|r| r.gap.map(f64::abs)));
    let (knn_accuracy_mean, knn_accuracy_std) = mean_std(&col(&|r| r.knn_accuracy));
    let (delta_hat_mean, delta_hat_std) = mean_std(&col(&|r| r.delta_hat));
    let (k_mean, k_std) = mean_std(&col(&|r| r.k.map(|k| k as f64)));
    let (epsilon_mean, epsilon_std) = mean_std(&col(&|r| r.epsilon));
    SummaryRow {
        lambda,
        n_per_class,
        n_seeds: rows.len(),
        n_ok: ok.len(),
        r_emp_mean,
        r_emp_std,
        r_hat_mean,
        r_hat_std,
        gap_mean,
        gap_std,
        abs_gap_mean,
        abs_gap_std,
        knn_accuracy_mean,
        knn_accuracy_std,
        delta_hat_mean,
        delta_hat_std,
        k_mean,
        k_std,
        epsilon_mean,
        epsilon_std,
    }
}

fn format_lambda(l: f64) -> String {
    format!("{l}")
}

pub fn cell_dir(out: &Path, lambda: f64, seed: u64, n_per_class: usize) -> PathBuf {
    out.join("cells")
        .join(format!("lambda-{}_seed-{seed}_n-{n_per_class}", format_lambda(lambda)))
}

fn run_cell(cfg: &ExperimentConfig, lambda: f64, seed: u64, size: Option<usize>, out: &Path) -> Result<SweepRow> {
    let mut cell_cfg = cfg.clone();
    cell_cfg.train.lambda = lambda;
    let n_per_class = match size.or_else(|| default_size(cfg)) {
        Some(n) => n,
        None => load_task_data(cfg, seed, None)?
            .train
            .class_sizes()
            .into_values()
            .min()
            .unwrap_or(0),
    };
    let dir = cell_dir(out, lambda, seed, n_per_class);
    let blank = |status| SweepRow {
        lambda,
        seed,
        n_per_class,
        r_emp: None,
        r_hat: None,
        gap: None,
        knn_accuracy: None,
        delta_hat: None,
        k: None,
        epsilon: None,
        status,
    };
    match run_into(&cell_cfg, seed, size, &dir) {
        Ok(o) => Ok(SweepRow {
            r_emp: Some(o.eval.r_emp),
            r_hat: Some(o.eval.r_hat),
            gap: Some(o.eval.gap),
            knn_accuracy: Some(o.eval.knn_accuracy),
            delta_hat: Some(o.robustness.delta_hat),
            k: Some(o.robustness.k),
            epsilon: Some(o.robustness.epsilon),
            ..blank(CellStatus::Ok)
        }),
        Err(Error::Diverged { .. }) => Ok(blank(CellStatus::Diverged)),
        Err(e) => Err(e),
    }
}

/// Every `(lambda, seed, size)` combination, run on `jobs` worker threads.
///
/// Writes `sweep.csv` (one row per cell), `sweep_summary.csv` (one row per
/// `(lambda, size)`), and per-cell artifacts under `cells/`.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<SweepOutcome> {
    cfg.validate()?;
    let sizes: Vec<Option<usize>> = if cfg.sweep.sizes.is_empty() {
        vec![None]
    } else {
        cfg.sweep.sizes.iter().copied().map(Some).collect()
    };
    let mut grid = Vec::new();
    for &size in &sizes {
        for &lambda in &cfg.sweep.lambdas {
            for &seed in &cfg.sweep.seeds {
                grid.push((lambda, seed, size));
            }
        }
    }
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        grid.par_iter()
            .map(|&(lambda, seed, size)| run_cell(cfg, lambda, seed, size, out))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut summary = Vec::new();
    for &size in &sizes {
        for &lambda in &cfg.sweep.lambdas {
            let group: Vec<&SweepRow> = rows
                .iter()
                .zip(&grid)
                .filter(|(_, g)| g.0 == lambda && g.2 == size)
                .map(|(r, _)| r)
                .collect();
            if let Some(first) = group.first() {
                summary.push(summarize(lambda, first.n_per_class, &group));
            }
        }
    }

    let mut w = csv::Writer::from_path(out.join(SWEEP_FILE))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join(SUMMARY_FILE))?;
    for s in &summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(SweepOutcome { rows, summary })
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_purpose() {
        assert_ne!(derive_seed(1, NET_SEED), derive_seed(1, SUBSET_SEED));
        assert_ne!(derive_seed(1, NET_SEED), derive_seed(2, NET_SEED));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, Some(2.0));
        assert_eq!(s, Some(1.0));
        assert_eq!(mean_std(&[4.0]), (Some(4.0), None));
        assert_eq!(mean_std(&[]), (None, None));
    }

    #[test]
    fn default_network_is_two_square_layers() {
        let cfg = ExperimentConfig::default();
        assert_eq!(network_dims(&cfg, 100), vec![100, 100, 100]);
        let mut cfg = ExperimentConfig::default();
        cfg.net.layers = Some(vec![8, 4]);
        assert_eq!(network_dims(&cfg, 10), vec![10, 8, 4]);
    }

    #[test]
    fn summary_skips_diverged_cells() {
        let ok = SweepRow {
            lambda: 0.5,
            seed: 1,
            n_per_class: 4,
            r_emp: Some(0.2),
            r_hat: Some(0.4),
            gap: Some(-0.2),
            knn_accuracy: Some(0.9),
            delta_hat: Some(0.1),
            k: Some(3),
            epsilon: Some(1.0),
            status: CellStatus::Ok,
        };
        let bad = SweepRow {
            seed: 2,
            r_emp: None,
            r_hat: None,
            gap: None,
            knn_accuracy: None,
            delta_hat: None,
            k: None,
            epsilon: None,
            status: CellStatus::Diverged,
            ..ok.clone()
        };
        let s = summarize(0.5, 4, &[&ok, &bad]);
        assert_eq!((s.n_seeds, s.n_ok), (2, 1));
        assert_eq!(s.abs_gap_mean, Some(0.2));
        assert_eq!(s.gap_std, None);
    }
}
