use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use gdt::experiment;
use gdt::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "gdt",
    version,
    about = "Train and diagnose cosine-similarity feature transforms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.lambda=0.4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the train and test splits as CSV.
    GenData(Common),
    /// Train a network and write it with its training log.
    Train(Common),
    /// Evaluate a saved network.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Network JSON written by `train`.
        #[arg(long)]
        net: PathBuf,
    },
    /// Robustness diagnostics for a saved network.
    Robustness {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        net: PathBuf,
    },
    /// Train, evaluate and diagnose in one go.
    Run(Common),
    /// Run the lambda x seed x size grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn setup(common: &Common) -> anyhow::Result<(ExperimentConfig, PathBuf)> {
    let cfg =
        ExperimentConfig::load(common.config.as_deref(), &common.overrides).with_context(|| match &common.config {
            Some(p) => format!("loading config {}", p.display()),
            None => "building config".to_owned(),
        })?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn report(out: &Path) {
    eprintln!("wrote outputs to {}", out.display());
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData(c) => {
            let (cfg, out) = setup(&c)?;
            let data = experiment::gen_data(&cfg, &out)?;
            eprintln!("train: {} samples, test: {} samples", data.train.len(), data.test.len());
            report(&out);
        }
        Command::Train(c) => {
            let (cfg, out) = setup(&c)?;
            let r = experiment::train_only(&cfg, &out)?;
            eprintln!(
                "epochs: {}, converged: {}, J: {}",
                r.epochs_run,
                r.converged,
                r.objective_history.last().copied().unwrap_or(f64::NAN)
            );
            report(&out);
        }
        Command::Eval { common, net } => {
            let (cfg, out) = setup(&common)?;
            let r = experiment::eval_only(&cfg, &net, &out)?;
            println!("{}", r.to_json());
            report(&out);
        }
        Command::Robustness { common, net } => {
            let (cfg, out) = setup(&common)?;
            let r = experiment::robustness_only(&cfg, &net, &out)?;
            println!("{}", r.to_json());
            report(&out);
        }
        Command::Run(c) => {
            let (cfg, out) = setup(&c)?;
            let r = experiment::run_single(&cfg, &out)?;
            println!("{}", r.eval.to_json());
            report(&out);
        }
        Command::Sweep { common, jobs } => {
            let (cfg, out) = setup(&common)?;
            let r = experiment::run_sweep(&cfg, &out, jobs)?;
            let diverged = r
                .rows
                .iter()
                .filter(|row| row.status == experiment::CellStatus::Diverged)
                .count();
            eprintln!("{} cells, {} diverged", r.rows.len(), diverged);
            report(&out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
