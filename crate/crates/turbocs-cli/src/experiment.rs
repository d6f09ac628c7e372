//! Trial orchestration: samples instances, runs the selected algorithm,
//! averages per-iteration MSE across trials and attaches the matching
//! state-evolution prediction.

use rayon::prelude::*;
use turbocs_core::amp::{amp_run, amp_se_run, sample_gauss_instance, AmpOptions, SensingOperator};
use turbocs_core::model::{sample_instance, SystemConfig};
use turbocs_core::state_evolution::se_run;
use turbocs_core::turbo::{run_turbo, RunOptions};
use turbocs_core::Error as CoreError;

use crate::{HarnessError, Result};

/// Internal tolerance and cap for the predictor curves attached to results.
/// Stopping tolerance for predictor recursions; far below simulation noise.
pub const SE_TOL: f64 = 1e-10;
/// Iteration cap for predictor recursions.
pub const SE_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Turbo recovery on the partial-DFT operator.
    Turbo,
    /// AMP on the partial-DFT operator (no valid SE curve).
    AmpDft,
    /// AMP on an explicit i.i.d. Gaussian matrix.
    AmpGauss,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Turbo => "turbo",
            Algorithm::AmpDft => "amp_dft",
            Algorithm::AmpGauss => "amp_gauss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "turbo" => Some(Algorithm::Turbo),
            "amp_dft" | "amp-dft" => Some(Algorithm::AmpDft),
            "amp_gauss" | "amp-gauss" => Some(Algorithm::AmpGauss),
            _ => None,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub cfg: SystemConfig,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Worker threads for the trial loop; output bytes do not depend on it.
    pub threads: usize,
}

/// Configuration echo carried into the CSV metadata. Thread count is
/// deliberately absent: output bytes must not depend on parallelism.
#[derive(Debug, Clone)]
pub struct ExperimentMetadata {
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub snr_db: f64,
    pub seed: u64,
    pub trials: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub excluded_trials: usize,
    pub version: &'static str,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Mean empirical MSE at iteration t (1-based index t-1), trials that
    /// converged early carry their final value forward.
    pub per_iteration_mse: Vec<f64>,
    /// Standard error of the mean at each iteration (0 for a single trial).
    pub per_iteration_stderr: Vec<f64>,
    /// Aligned state-evolution prediction; None for AMP on partial DFT,
    /// where no valid scalar recursion exists.
    pub se_prediction: Option<Vec<f64>>,
    pub metadata: ExperimentMetadata,
}

fn metadata(spec: &ExperimentSpec, excluded: usize) -> ExperimentMetadata {
    ExperimentMetadata {
        algorithm: spec.algorithm,
        n: spec.cfg.n(),
        m: spec.cfg.m(),
        lambda: spec.cfg.lambda(),
        snr_db: spec.cfg.snr_db(),
        seed: spec.cfg.base_seed(),
        trials: spec.trials,
        max_iters: spec.max_iters,
        rel_tol: spec.rel_tol,
        excluded_trials: excluded,
        version: env!("CARGO_PKG_VERSION"),
    }
}

fn run_trial(spec: &ExperimentSpec, trial: u64) -> std::result::Result<Vec<f64>, CoreError> {
    match spec.algorithm {
        Algorithm::Turbo => {
            let inst = sample_instance(&spec.cfg, trial);
            let opts = RunOptions {
                max_iters: spec.max_iters,
                rel_tol: spec.rel_tol,
                damping: 1.0,
            };
            let (_, trace) = run_turbo(&inst, &spec.cfg, &opts)?;
            Ok(trace.into_iter().map(|r| r.mse_vs_truth).collect())
        }
        Algorithm::AmpDft => {
            let inst = sample_instance(&spec.cfg, trial);
            let op = SensingOperator::PartialDft(inst.selection.clone());
            let opts = AmpOptions {
                max_iters: spec.max_iters,
                rel_tol: spec.rel_tol,
                onsager: true,
            };
            let (_, trace) = amp_run(&inst.y, &op, &inst.x, &spec.cfg, &opts)?;
            Ok(trace.into_iter().map(|r| r.mse_vs_truth).collect())
        }
        Algorithm::AmpGauss => {
            let gi = sample_gauss_instance(&spec.cfg, trial);
            let op = SensingOperator::Dense(gi.a);
            let opts = AmpOptions {
                max_iters: spec.max_iters,
                rel_tol: spec.rel_tol,
                onsager: true,
            };
            let (_, trace) = amp_run(&gi.y, &op, &gi.x, &spec.cfg, &opts)?;
            Ok(trace.into_iter().map(|r| r.mse_vs_truth).collect())
        }
    }
}

/// State-evolution MSE curve for the algorithm, or None when no valid
/// prediction exists.
pub fn se_curve(cfg: &SystemConfig, algorithm: Algorithm) -> Result<Option<Vec<f64>>> {
    match algorithm {
        Algorithm::Turbo => {
            let traj = se_run(cfg, 1.0, SE_TOL, SE_MAX_ITERS)?;
            Ok(Some(traj.states.into_iter().map(|s| s.predicted_mse).collect()))
        }
        Algorithm::AmpGauss => {
            let traj = amp_se_run(cfg, SE_TOL, SE_MAX_ITERS)?;
            Ok(Some(traj.states.into_iter().map(|s| s.predicted_mse).collect()))
        }
        Algorithm::AmpDft => Ok(None),
    }
}

/// Pads or truncates a predictor curve to `len` rows; a converged curve is
/// constant past its last computed point, so padding repeats the final value.
fn align(curve: Vec<f64>, len: usize) -> Vec<f64> {
    let mut out = curve;
    if out.len() > len {
        out.truncate(len);
    } else if let Some(&last) = out.last() {
        while out.len() < len {
            out.push(last);
        }
    }
    out
}

/// Runs `spec.trials` independent trials (per-trial derived seeds, any
/// execution order) and aggregates them. Trials that fail numerically are
/// excluded and counted; if every trial fails the whole experiment is a
/// numerical failure.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    if spec.max_iters == 0 {
        return Err(HarnessError::Config("max_iters must be at least 1".into()));
    }
    if !(spec.rel_tol.is_finite() && spec.rel_tol > 0.0) {
        return Err(HarnessError::Config("rel_tol must be finite and positive".into()));
    }
    if spec.threads == 0 {
        return Err(HarnessError::Config("threads must be at least 1".into()));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<std::result::Result<Vec<f64>, CoreError>> =
        pool.install(|| (0..spec.trials as u64).into_par_iter().map(|t| run_trial(spec, t)).collect());

    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(spec.trials);
    let mut excluded = 0usize;
    for outcome in outcomes {
        match outcome {
            Ok(trace) if !trace.is_empty() => kept.push(trace),
            Ok(_) => excluded += 1,
            Err(CoreError::Numerical { .. }) => excluded += 1,
            Err(other) => return Err(other.into()),
        }
    }
    if kept.is_empty() {
        return Err(HarnessError::Numerical(format!(
            "all {} trials failed numerically",
            spec.trials
        )));
    }

    let t_max = kept.iter().map(Vec::len).max().unwrap_or(0);
    let count = kept.len() as f64;
    let mut per_iteration_mse = Vec::with_capacity(t_max);
    let mut per_iteration_stderr = Vec::with_capacity(t_max);
    for i in 0..t_max {
        let mut sum = 0.0;
        for trace in &kept {
            sum += trace[i.min(trace.len() - 1)];
        }
        let mean = sum / count;
        let stderr = if kept.len() > 1 {
            let mut ss = 0.0;
            for trace in &kept {
                let d = trace[i.min(trace.len() - 1)] - mean;
                ss += d * d;
            }
            (ss / (count - 1.0)).sqrt() / count.sqrt()
        } else {
            0.0
        };
        per_iteration_mse.push(mean);
        per_iteration_stderr.push(stderr);
    }

    let se_prediction = se_curve(&spec.cfg, spec.algorithm)?.map(|c| align(c, t_max));

    Ok(ExperimentResult {
        per_iteration_mse,
        per_iteration_stderr,
        se_prediction,
        metadata: metadata(spec, excluded),
    })
}

/// Prediction-only result (the `se` subcommand): no trials, simulation
/// columns empty, the SE curve at its natural converged length.
pub fn se_only(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let curve = se_curve(&spec.cfg, spec.algorithm)?.ok_or_else(|| {
        HarnessError::Config(format!(
            "no state-evolution prediction exists for algorithm {}",
            spec.algorithm.name()
        ))
    })?;
    Ok(ExperimentResult {
        per_iteration_mse: Vec::new(),
        per_iteration_stderr: Vec::new(),
        se_prediction: Some(curve),
        metadata: metadata(spec, 0),
    })
}
