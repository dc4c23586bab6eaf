//! Command-line runner for the maxlab numerical lab: run configuration,
//! the `verify` suite, and report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use config::{GridScale, Resolved, RunConfig};
pub use error::CliError;

use clap::{Parser, Subcommand};
use maxlab::maximal::Operator;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "maxlab",
    version,
    about = "Maximal operators, Orlicz norms and Lipschitz characterization on grids"
)]
pub struct Cli {
    /// Run configuration (TOML). Built-in 1-D Euclidean defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the operator kernels.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = GridScale::Default)]
    pub grid_scale: GridScale,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every identity and inequality check; exit 1 if any fails.
    Verify,
    /// Luxemburg (or weak) Orlicz norm of one field.
    Norm {
        /// Generator tag or field CSV path.
        #[arg(long)]
        field: String,
        #[arg(long, default_value = "power(2)")]
        young: String,
        #[arg(long)]
        weak: bool,
    },
    /// Apply an operator and write the result as a field CSV.
    Op {
        /// maxal, sharp, maxcomm, comm-max or comm-sharp.
        #[arg(long)]
        operator: Operator,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Input field: generator tag or field CSV path.
        #[arg(long)]
        f: String,
        /// Symbol for the commutator operators.
        #[arg(long)]
        b: Option<String>,
    },
    /// Characterization report for one symbol.
    Charac {
        /// Symbol: generator tag or field CSV path.
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value = "power(1.5)")]
        young: String,
    },
    /// Time fast kernels against the oracle and compare checksums.
    Bench {
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Calibrate the group constants c1 and c0.
    Calibrate {
        /// Quadrature cells per axis; the config value when absent.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let (mut config, base) = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok((config, base))
}

/// Runs one invocation and returns the process exit code. Messages go to
/// stdout; outputs are written only once every result is in hand.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let (config, base) = load_config(cli)?;
    let out_dir = config.output_dir.clone();
    if let Command::Calibrate { resolution } = &cli.command {
        let group = commands::run_calibrate(
            &config.group,
            resolution.unwrap_or(config.calibration_resolution),
        )?;
        let bytes = commands::json(&group);
        commands::write_outputs(&out_dir, &[("group.json".into(), bytes.clone())])?;
        print!("{}", String::from_utf8_lossy(&bytes));
        return Ok(0);
    }
    let resolved = Resolved::new(config, base, cli.grid_scale)?;
    match &cli.command {
        Command::Verify => {
            let report = verify::run_verify(&resolved)?;
            commands::write_outputs(
                &out_dir,
                &[("verify_report.json".into(), commands::json(&report))],
            )?;
            for c in &report.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                println!(
                    "{status} {} (measured {:.3e}, tolerance {:.1e}): {}",
                    c.name, c.measured, c.tolerance, c.detail
                );
            }
            println!("verify: {} passed, {} failed", report.passed, report.failed);
            Ok(if report.failed == 0 { 0 } else { 1 })
        }
        Command::Norm { field, young, weak } => {
            let result = commands::run_norm(&resolved, field, young, *weak)?;
            let bytes = commands::json(&result);
            commands::write_outputs(&out_dir, &[("norm.json".into(), bytes.clone())])?;
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(if result.converged { 0 } else { 1 })
        }
        Command::Op {
            operator,
            alpha,
            f,
            b,
        } => {
            let out = commands::run_op(&resolved, *operator, *alpha, f, b.as_deref())?;
            let name = format!("op_{operator}.csv");
            commands::write_outputs(&out_dir, &[(name.clone(), commands::field_csv(&out)?)])?;
            println!("wrote {}", out_dir.join(name).display());
            Ok(0)
        }
        Command::Charac { b, beta, young } => {
            let report = commands::run_charac(&resolved, b, *beta, young)?;
            let outputs = commands::charac_outputs(&report, b, resolved.grid.dim())?;
            commands::write_outputs(&out_dir, &outputs)?;
            for note in &report.verdict_notes {
                println!("{note}");
            }
            Ok(0)
        }
        Command::Bench { alpha } => {
            let run = commands::run_bench(&resolved, *alpha)?;
            commands::write_outputs(
                &out_dir,
                &[("bench.csv".into(), commands::bench_csv(&run.rows)?)],
            )?;
            for row in &run.rows {
                println!(
                    "{:<6} {:<10} {:>9.4} s {:>12.0} nodes/s checksum {:e}",
                    row.kernel, row.operator, row.wall_time, row.node_throughput, row.checksum
                );
            }
            if run.oracle_skipped {
                println!(
                    "oracle skipped: work estimate above {:e}",
                    commands::ORACLE_WORK_LIMIT
                );
            }
            if run.mismatches.is_empty() {
                Ok(0)
            } else {
                Err(CliError::Failed(format!(
                    "checksum mismatch for {}",
                    run.mismatches.join(", ")
                )))
            }
        }
        Command::Calibrate { .. } => unreachable!("handled above"),
    }
}
