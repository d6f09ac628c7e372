//! Turbo-style recovery: transform-domain LMMSE against the measurements
//! alternating with the component-wise prior denoiser, exchanging extrinsic
//! Gaussian messages.
//!
//! Each direction carries a mean vector plus one scalar variance. Because the
//! transform is unitary and the selector keeps M of N rows, the LMMSE stage
//! never forms a matrix: observed transform entries are corrected toward the
//! measurement with a scalar gain, and the posterior variance collapses to
//! the closed scalar form `v - (M/N) v^2 / (v + noise_var)`. Each module
//! subtracts its input (extrinsic combining) before handing the message to
//! the peer, and each module ends with exactly one transform: the LMMSE side
//! combines in the transform domain and applies one inverse DFT, the
//! denoiser side combines in the signal domain and applies one forward DFT.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::denoiser::{denoise_vector, BgPrior, DenoiserOutput};
use crate::model::{dft, idft, GaussianMessage, ProblemInstance, SystemConfig};
use crate::{Error, Result, VAR_MAX, VAR_MIN};

/// Stopping and damping controls for [`run_turbo`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Hard iteration cap (at least 1).
    pub max_iters: usize,
    /// Stop once the relative change of the LMMSE prior variance drops
    /// below this.
    pub rel_tol: f64,
    /// Message damping in (0, 1]: 1 means undamped. When below 1, means are
    /// blended linearly and variances geometrically with the previous
    /// message, starting from the second iteration.
    pub damping: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_iters: 50, rel_tol: 1e-6, damping: 1.0 }
    }
}

impl RunOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be finite and positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Messages entering each module. `z_a_pri` feeds the LMMSE stage in the
/// transform domain; `x_b_pri` feeds the denoiser in the signal domain.
#[derive(Debug, Clone)]
pub struct TurboState {
    pub z_a_pri: GaussianMessage,
    pub x_b_pri: GaussianMessage,
    pub iteration: usize,
}

impl TurboState {
    /// Start of iteration 1: zero mean with unit variance toward the LMMSE
    /// stage (the prior power of the unit-power signal) and an uninformative
    /// placeholder toward the denoiser.
    pub fn init(n: usize) -> Self {
        let zeros = alloc::vec![Complex64::new(0.0, 0.0); n];
        TurboState {
            z_a_pri: GaussianMessage::new(zeros.clone(), 1.0).expect("unit variance is valid"),
            x_b_pri: GaussianMessage::new(zeros, VAR_MAX).expect("VAR_MAX is valid"),
            iteration: 0,
        }
    }
}

/// Per-iteration variances and the oracle MSE of the denoiser posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub v_a_pri: f64,
    pub v_a_post: f64,
    pub v_b_pri: f64,
    pub v_b_post: f64,
    /// `||post_mean - x||^2 / N` against the true signal.
    pub mse_vs_truth: f64,
}

/// Gaussian extrinsic combining: removes the prior from a posterior,
/// returning the message `(mean, var)` with `1/var = 1/post_var - 1/pri_var`.
/// A non-informative update (post_var >= pri_var) saturates at [`VAR_MAX`],
/// with the mean still formed by the same linear rule.
pub fn extrinsic_combine(
    post_mean: &[Complex64],
    post_var: f64,
    pri_mean: &[Complex64],
    pri_var: f64,
) -> Result<GaussianMessage> {
    if !(post_var.is_finite() && post_var > 0.0) {
        return Err(Error::InvalidVariance(post_var));
    }
    if !(pri_var.is_finite() && pri_var > 0.0) {
        return Err(Error::InvalidVariance(pri_var));
    }
    if post_mean.len() != pri_mean.len() {
        return Err(Error::Dimension { expected: post_mean.len(), got: pri_mean.len() });
    }
    let precision = 1.0 / post_var - 1.0 / pri_var;
    let var = if precision > 0.0 { (1.0 / precision).clamp(VAR_MIN, VAR_MAX) } else { VAR_MAX };
    let mean: Vec<Complex64> = post_mean
        .iter()
        .zip(pri_mean)
        .map(|(&p, &q)| var * (p / post_var - q / pri_var))
        .collect();
    GaussianMessage::new(mean, var)
}

/// Posterior variance of the transform-domain LMMSE stage,
/// `v - (M/N) v^2 / (v + noise_var)`.
pub fn lmmse_posterior_variance(pri_var: f64, cfg: &SystemConfig) -> f64 {
    let v = pri_var;
    let s2 = cfg.noise_var();
    v - cfg.measurement_ratio() * v * v / (v + s2)
}

/// Transform-domain LMMSE posterior mean: observed entries move toward the
/// measurement with gain `v/(v + noise_var)`, unobserved entries pass through.
pub fn lmmse_posterior_mean(
    z_pri: &[Complex64],
    pri_var: f64,
    inst: &ProblemInstance,
    cfg: &SystemConfig,
) -> Vec<Complex64> {
    let gain = pri_var / (pri_var + cfg.noise_var());
    let mut post = z_pri.to_vec();
    for (k, &i) in inst.selection.indices().iter().enumerate() {
        post[i] += gain * (inst.y[k] - z_pri[i]);
    }
    post
}

fn check_instance(inst: &ProblemInstance, cfg: &SystemConfig) -> Result<()> {
    if inst.x.len() != cfg.n() || inst.z.len() != cfg.n() || inst.selection.n() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: inst.x.len() });
    }
    if inst.y.len() != cfg.m() || inst.selection.m() != cfg.m() {
        return Err(Error::Dimension { expected: cfg.m(), got: inst.y.len() });
    }
    Ok(())
}

/// LMMSE stage: conditions the transform-domain prior on the measurements,
/// strips the prior back out and returns the signal-domain extrinsic message
/// (one inverse transform).
pub fn module_a(
    z_a_pri: &GaussianMessage,
    inst: &ProblemInstance,
    cfg: &SystemConfig,
) -> Result<GaussianMessage> {
    check_instance(inst, cfg)?;
    if z_a_pri.len() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: z_a_pri.len() });
    }
    let v = z_a_pri.variance();
    let post_mean = lmmse_posterior_mean(z_a_pri.mean(), v, inst, cfg);
    let post_var = lmmse_posterior_variance(v, cfg).max(VAR_MIN);
    let ext = extrinsic_combine(&post_mean, post_var, z_a_pri.mean(), v)?;
    let (mean_z, var) = ext.into_parts();
    GaussianMessage::new(idft(&mean_z), var)
}

/// Denoiser stage: component-wise posterior under the sparse prior, extrinsic
/// combining in the signal domain, one forward transform. Also returns the
/// posterior products (the recovery output is their mean).
pub fn module_b(
    x_b_pri: &GaussianMessage,
    prior: &BgPrior,
) -> Result<(GaussianMessage, DenoiserOutput)> {
    let den = denoise_vector(x_b_pri, prior)?;
    let ext = extrinsic_combine(
        &den.post_mean,
        den.avg_post_var.max(VAR_MIN),
        x_b_pri.mean(),
        x_b_pri.variance(),
    )?;
    let (mean_x, var) = ext.into_parts();
    Ok((GaussianMessage::new(dft(&mean_x), var)?, den))
}

fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

fn damp(new: GaussianMessage, old: &GaussianMessage, gamma: f64) -> Result<GaussianMessage> {
    if gamma >= 1.0 {
        return Ok(new);
    }
    let var = libm::exp(gamma * libm::log(new.variance()) + (1.0 - gamma) * libm::log(old.variance()));
    let mean: Vec<Complex64> = new
        .mean()
        .iter()
        .zip(old.mean())
        .map(|(&a, &b)| gamma * a + (1.0 - gamma) * b)
        .collect();
    GaussianMessage::new(mean, var)
}

/// Runs the full turbo loop and returns the final posterior mean estimate of
/// the signal together with the per-iteration trace.
///
/// Stops when the relative change of the LMMSE prior variance falls below
/// `opts.rel_tol` or after `opts.max_iters` iterations. Any non-finite
/// message aborts with a numerical error naming the iteration.
pub fn run_turbo(
    inst: &ProblemInstance,
    cfg: &SystemConfig,
    opts: &RunOptions,
) -> Result<(Vec<Complex64>, Vec<IterationRecord>)> {
    opts.validate()?;
    check_instance(inst, cfg)?;
    let prior = BgPrior::new(cfg.lambda())?;
    let mut state = TurboState::init(cfg.n());
    let mut x_hat = alloc::vec![Complex64::new(0.0, 0.0); cfg.n()];
    let mut trace = Vec::new();

    for t in 1..=opts.max_iters {
        let v_a_pri = state.z_a_pri.variance();

        let raw_x = module_a(&state.z_a_pri, inst, cfg).map_err(|e| tag(e, t))?;
        let x_b_pri = if t > 1 {
            damp(raw_x, &state.x_b_pri, opts.damping).map_err(|e| tag(e, t))?
        } else {
            raw_x
        };
        if !all_finite(x_b_pri.mean()) {
            return Err(Error::Numerical { context: "signal-domain message", iteration: t });
        }

        let (raw_z, den) = module_b(&x_b_pri, &prior).map_err(|e| tag(e, t))?;
        let z_a_next = if t > 1 {
            damp(raw_z, &state.z_a_pri, opts.damping).map_err(|e| tag(e, t))?
        } else {
            raw_z
        };
        if !all_finite(z_a_next.mean()) {
            return Err(Error::Numerical { context: "transform-domain message", iteration: t });
        }

        let mse = crate::model::mse(&den.post_mean, &inst.x);
        trace.push(IterationRecord {
            iteration: t,
            v_a_pri,
            v_a_post: lmmse_posterior_variance(v_a_pri, cfg).max(VAR_MIN),
            v_b_pri: x_b_pri.variance(),
            v_b_post: den.avg_post_var,
            mse_vs_truth: mse,
        });
        x_hat = den.post_mean;

        let rel = (z_a_next.variance() - v_a_pri).abs() / v_a_pri;
        state.z_a_pri = z_a_next;
        state.x_b_pri = x_b_pri;
        state.iteration = t;
        if rel < opts.rel_tol {
            break;
        }
    }
    Ok((x_hat, trace))
}

/// Message construction failures inside the loop surface as numerical
/// failures carrying the iteration number.
fn tag(e: Error, iteration: usize) -> Error {
    match e {
        Error::InvalidVariance(_) => Error::Numerical { context: "message variance", iteration },
        other => other,
    }
}
