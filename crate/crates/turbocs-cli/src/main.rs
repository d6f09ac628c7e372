//! Command-line front end: Monte-Carlo recovery experiments, predictor
//! curves, and fixed-point diagnostics, emitted as CSV plus a short
//! human-readable summary.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O
//! failure, 3 numerical failure.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use turbocs_cli::config::{merge, parse_config_file, resolve, PartialConfig, ResolvedConfig};
use turbocs_cli::csv::{write_compare_csv, write_compare_csv_file, write_csv, write_csv_file};
use turbocs_cli::experiment::{
    run_experiment, se_only, Algorithm, ExperimentResult, ExperimentSpec, SE_MAX_ITERS, SE_TOL,
};
use turbocs_cli::{to_db, HarnessError, Result};
use turbocs_core::model::SystemConfig;
use turbocs_core::state_evolution::{fixed_point_residual, replica_solution, se_run};

#[derive(Parser)]
#[command(
    name = "turbocs",
    version,
    about = "Sparse recovery from noisy partial-DFT measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte-Carlo trials and emit per-iteration MSE as CSV.
    Run(CommonArgs),
    /// Emit the scalar predictor curve only, without simulating.
    Se(CommonArgs),
    /// Compare the iterative predictor fixed point with the closed-form root.
    FixedPoint(CommonArgs),
    /// Run every algorithm on identical instances and emit a joint CSV.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file with `key = value` lines; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Signal dimension [default: 4096].
    #[arg(long)]
    n: Option<usize>,
    /// Number of measurements, at most n [default: 2867].
    #[arg(long)]
    m: Option<usize>,
    /// Expected fraction of nonzero coefficients, in (0, 1] [default: 0.4].
    #[arg(long)]
    lambda: Option<f64>,
    /// Signal-to-noise ratio in dB [default: 50].
    #[arg(long)]
    snr_db: Option<f64>,
    /// Number of Monte-Carlo trials [default: 200].
    #[arg(long)]
    trials: Option<usize>,
    /// Iteration cap per trial [default: 50].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative-change stopping tolerance per trial [default: 1e-6].
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Base seed; each trial derives an independent stream from it [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Algorithm: turbo, amp_dft, or amp_gauss. Ignored by `compare`.
    #[arg(long)]
    algo: Option<String>,
    /// Write the CSV to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the trial loop; output bytes do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn to_partial(&self) -> Result<PartialConfig> {
        let algo = match &self.algo {
            Some(s) => Some(Algorithm::parse(s).ok_or_else(|| {
                HarnessError::Config(format!(
                    "unknown algorithm {s:?} (expected turbo, amp_dft, or amp_gauss)"
                ))
            })?),
            None => None,
        };
        Ok(PartialConfig {
            n: self.n,
            m: self.m,
            lambda: self.lambda,
            snr_db: self.snr_db,
            trials: self.trials,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed: self.seed,
            algo,
            out: self.out.clone(),
            threads: self.threads,
        })
    }
}

/// Layers file config under CLI flags and fills remaining defaults.
fn resolve_args(args: &CommonArgs) -> Result<ResolvedConfig> {
    let file_layer = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => PartialConfig::default(),
    };
    Ok(resolve(merge(args.to_partial()?, file_layer)))
}

fn system_config(cfg: &ResolvedConfig) -> Result<SystemConfig> {
    SystemConfig::new(cfg.n, cfg.m, cfg.lambda, cfg.snr_db, cfg.seed).map_err(HarnessError::from)
}

fn experiment_spec(cfg: &ResolvedConfig, algorithm: Algorithm) -> Result<ExperimentSpec> {
    Ok(ExperimentSpec {
        cfg: system_config(cfg)?,
        algorithm,
        trials: cfg.trials,
        max_iters: cfg.max_iters,
        rel_tol: cfg.rel_tol,
        threads: cfg.threads,
    })
}

fn fmt_mse(label: &str, mse: f64) -> String {
    format!("{label} = {mse:.6e} ({:.2} dB)", to_db(mse))
}

fn summary_lines(result: &ExperimentResult) -> Vec<String> {
    let mut lines = vec![format!(
        "algorithm {} finished: {} trials ({} excluded), {} recorded iterations",
        result.metadata.algorithm.name(),
        result.metadata.trials,
        result.metadata.excluded_trials,
        result
            .per_iteration_mse
            .len()
            .max(result.se_prediction.as_ref().map_or(0, Vec::len)),
    )];
    if let Some(&mse) = result.per_iteration_mse.last() {
        let stderr = result.per_iteration_stderr.last().copied().unwrap_or(0.0);
        lines.push(format!("{}, stderr {stderr:.3e}", fmt_mse("final simulated mse", mse)));
    }
    if let Some(&mse) = result.se_prediction.as_ref().and_then(|c| c.last()) {
        lines.push(fmt_mse("final predicted mse", mse));
    }
    lines
}

/// CSV goes to `--out` (summary on stdout) or to stdout (summary on stderr).
fn emit_single(cfg: &ResolvedConfig, result: &ExperimentResult) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            write_csv_file(path, result)?;
            let mut out = io::stdout().lock();
            writeln!(out, "wrote {}", path.display())
                .map_err(|e| HarnessError::Io(e.to_string()))?;
            for line in summary_lines(result) {
                writeln!(out, "{line}").map_err(|e| HarnessError::Io(e.to_string()))?;
            }
        }
        None => {
            let mut out = io::stdout().lock();
            write_csv(&mut out, result).map_err(|e| HarnessError::Io(e.to_string()))?;
            for line in summary_lines(result) {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn emit_compare(cfg: &ResolvedConfig, results: &[ExperimentResult]) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            write_compare_csv_file(path, results)?;
            let mut out = io::stdout().lock();
            writeln!(out, "wrote {}", path.display())
                .map_err(|e| HarnessError::Io(e.to_string()))?;
            for result in results {
                for line in summary_lines(result) {
                    writeln!(out, "{line}").map_err(|e| HarnessError::Io(e.to_string()))?;
                }
            }
        }
        None => {
            let mut out = io::stdout().lock();
            write_compare_csv(&mut out, results).map_err(|e| HarnessError::Io(e.to_string()))?;
            for result in results {
                for line in summary_lines(result) {
                    eprintln!("{line}");
                }
            }
        }
    }
    Ok(())
}

fn cmd_run(cfg: &ResolvedConfig) -> Result<()> {
    let spec = experiment_spec(cfg, cfg.algo)?;
    let result = run_experiment(&spec)?;
    emit_single(cfg, &result)
}

fn cmd_se(cfg: &ResolvedConfig) -> Result<()> {
    let spec = experiment_spec(cfg, cfg.algo)?;
    let result = se_only(&spec)?;
    emit_single(cfg, &result)
}

fn cmd_compare(cfg: &ResolvedConfig) -> Result<()> {
    let mut results = Vec::new();
    for algorithm in [Algorithm::Turbo, Algorithm::AmpDft, Algorithm::AmpGauss] {
        let spec = experiment_spec(cfg, algorithm)?;
        results.push(run_experiment(&spec)?);
    }
    emit_compare(cfg, &results)
}

/// Prints both fixed points as `key=value` lines: the iterated recursion
/// and the closed-form quadratic root, with their residuals.
fn cmd_fixed_point(cfg: &ResolvedConfig) -> Result<()> {
    let sys = system_config(cfg)?;
    let traj = se_run(&sys, 1.0, SE_TOL, SE_MAX_ITERS).map_err(HarnessError::from)?;
    let eta_se = traj.fixed_point_eta.ok_or_else(|| {
        HarnessError::Numerical(format!(
            "predictor recursion did not converge within {SE_MAX_ITERS} iterations"
        ))
    })?;
    let eta_replica = replica_solution(&sys, SE_TOL).map_err(HarnessError::from)?;
    let rel_diff = (eta_se - eta_replica).abs() / eta_replica;
    let residual_se = fixed_point_residual(eta_se, &sys).map_err(HarnessError::from)?;
    let residual_replica = fixed_point_residual(eta_replica, &sys).map_err(HarnessError::from)?;
    let last = traj.states.last().expect("converged trajectory is nonempty");

    let mut lines = Vec::new();
    lines.push(format!("iterations={}", traj.states.len()));
    lines.push(format!("eta_se={eta_se:.16e}"));
    lines.push(format!("eta_replica={eta_replica:.16e}"));
    lines.push(format!("eta_rel_diff={rel_diff:.16e}"));
    lines.push(format!("residual_se={residual_se:.16e}"));
    lines.push(format!("residual_replica={residual_replica:.16e}"));
    lines.push(format!("extrinsic_var={:.16e}", last.v));
    lines.push(format!("mse={:.16e}", last.predicted_mse));
    lines.push(format!("mse_db={:.6}", to_db(last.predicted_mse)));

    match &cfg.out {
        Some(path) => {
            let body = lines.join("\n") + "\n";
            std::fs::write(path, body)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        None => {
            for line in &lines {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(ref args) => {
            let cfg = resolve_args(args)?;
            cmd_run(&cfg)
        }
        Command::Se(ref args) => {
            let cfg = resolve_args(args)?;
            cmd_se(&cfg)
        }
        Command::FixedPoint(ref args) => {
            let cfg = resolve_args(args)?;
            cmd_fixed_point(&cfg)
        }
        Command::Compare(ref args) => {
            let cfg = resolve_args(args)?;
            cmd_compare(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code: u8 = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
