use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use mpcstream::generate::{generate, GenParams, Kind};
use mpcstream::runner::{run, RunConfig, RunError};
use mpcstream::workload::{Mode, Workload};
use mpcstream_core::mpc_engine::AccountingMode;

const EXIT_ACCOUNTING: u8 = 2;
const EXIT_ORACLE: u8 = 3;

#[derive(Parser)]
#[command(name = "mpcstream", version, about = "Run and generate dynamic graph workloads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Accounting {
    Idealized,
    Strict,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a workload file and check each queried state.
    Run {
        #[arg(long)]
        workload: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        phi: f64,
        #[arg(long, value_enum, default_value = "idealized")]
        accounting: Accounting,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, value_enum, default_value = "on")]
        oracle: Switch,
        /// Write JSON lines here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Words per machine; overrides n^phi slots.
        #[arg(long)]
        local_memory: Option<u64>,
        #[arg(long)]
        k_max: Option<usize>,
        /// Largest tolerated fraction of failed checks.
        #[arg(long, default_value_t = 0.01)]
        failure_budget: f64,
    },
    /// Write a seeded workload file.
    Generate {
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        batches: usize,
        #[arg(long)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = 100.0)]
        max_weight: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
        #[arg(long)]
        planted: Option<usize>,
        /// Percentage of updates that delete.
        #[arg(long, default_value_t = 30)]
        delete_share: u32,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let accounting = e.downcast_ref::<RunError>().is_some_and(|r| matches!(r, RunError::Accounting { .. }));
            ExitCode::from(if accounting { EXIT_ACCOUNTING } else { 1 })
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { workload, phi, accounting, seed, epsilon, alpha, kappa, oracle, report, local_memory, k_max, failure_budget } => {
            let w = Workload::load(&workload).with_context(|| format!("loading {}", workload.display()))?;
            let cfg = RunConfig {
                phi,
                accounting: match accounting {
                    Accounting::Idealized => AccountingMode::Idealized,
                    Accounting::Strict => AccountingMode::Strict,
                },
                seed,
                epsilon,
                alpha,
                kappa,
                oracle: matches!(oracle, Switch::On),
                local_memory,
                k_max,
                failure_budget,
            };
            let r = run(&w, &cfg)?;
            match report {
                Some(path) => {
                    fs::write(&path, r.to_json_lines()).with_context(|| format!("writing {}", path.display()))?;
                    print!("{}", r.table());
                }
                None => {
                    print!("{}", r.to_json_lines());
                    eprint!("{}", r.table());
                }
            }
            Ok(if r.summary.within_budget { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ORACLE) })
        }
        Command::Generate { kind, n, batches, batch_size, seed, output, mode, max_weight, epsilon, alpha, planted, delete_share } => {
            let params = GenParams { mode, max_weight, epsilon, alpha, planted, delete_share, ..GenParams::new(kind, n, batches, batch_size, seed) };
            let w = generate(&params)?;
            w.save(&output).with_context(|| format!("writing {}", output.display()))?;
            eprintln!("wrote {} batches, {} updates to {}", w.batches.len(), w.update_count(), output.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
