//! Scalar state evolution for the turbo recovery and the replica fixed-point
//! equation it lands on.
//!
//! One iteration is summarized by the effective SNR `eta` entering the
//! denoiser and the extrinsic variance `v` returned to the LMMSE stage:
//!
//! ```text
//! eta_{t+1} = 1 / ((N/M) (v_t + noise_var) - v_t)
//! 1/v_{t+1} = 1 / mmse(eta_{t+1}) - eta_{t+1}
//! ```
//!
//! starting from `v_0 = 1`. At a fixed point, eliminating `v` gives the
//! quadratic (in `eta`) residual
//!
//! ```text
//! (N/M) noise_var mmse(eta) eta^2 - (N/M) (mmse(eta) + noise_var) eta + 1
//! ```
//!
//! whose smaller root, solved self-consistently, is the replica prediction
//! of the converged SNR. Both solvers share one memoized `mmse`, so their
//! answers are directly comparable.

use alloc::vec::Vec;

use crate::denoiser::{BgPrior, MmseCache};
use crate::model::SystemConfig;
use crate::{Error, Result, VAR_MAX, VAR_MIN};

/// One state-evolution step: the denoiser-input SNR, the variance handed
/// back to the LMMSE stage and the predicted per-entry MSE `mmse(eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeState {
    pub eta: f64,
    pub v: f64,
    pub predicted_mse: f64,
}

/// Trajectory of [`se_run`]; `fixed_point_eta` is set when the stopping
/// criterion was met before the iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTrajectory {
    pub states: Vec<SeState>,
    pub converged: bool,
    pub fixed_point_eta: Option<f64>,
}

const REPLICA_MAX_ITERS: usize = 1000;

fn step_with_cache(v: f64, cfg: &SystemConfig, cache: &mut MmseCache) -> Result<SeState> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidVariance(v));
    }
    let big_rho = 1.0 / cfg.measurement_ratio(); // N/M >= 1
    let denom = big_rho * (v + cfg.noise_var()) - v;
    // denom = v (N/M - 1) + (N/M) noise_var > 0 whenever noise_var > 0.
    debug_assert!(denom > 0.0);
    let eta = 1.0 / denom;
    let mmse = cache.eval(eta)?;
    let inv_v = 1.0 / mmse - eta; // nonnegative because mmse(eta) <= 1/eta
    let v_next = if inv_v > 0.0 { (1.0 / inv_v).clamp(VAR_MIN, VAR_MAX) } else { VAR_MAX };
    Ok(SeState { eta, v: v_next, predicted_mse: mmse })
}

/// Advances the recursion one step from extrinsic variance `v`.
pub fn se_step(v: f64, cfg: &SystemConfig) -> Result<SeState> {
    let mut cache = MmseCache::new(BgPrior::new(cfg.lambda())?);
    step_with_cache(v, cfg, &mut cache)
}

/// Runs the recursion from `v0` until the relative change of `eta` drops
/// below `tol` or `max_iters` steps have been taken.
pub fn se_run(cfg: &SystemConfig, v0: f64, tol: f64, max_iters: usize) -> Result<SeTrajectory> {
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(Error::InvalidVariance(v0));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be finite and positive"));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1"));
    }
    let mut cache = MmseCache::new(BgPrior::new(cfg.lambda())?);
    let mut states = Vec::new();
    let mut v = v0;
    let mut prev_eta: Option<f64> = None;
    let mut converged = false;
    for _ in 0..max_iters {
        let s = step_with_cache(v, cfg, &mut cache)?;
        v = s.v;
        let eta = s.eta;
        states.push(s);
        if let Some(p) = prev_eta {
            if (eta - p).abs() <= tol * p {
                converged = true;
                break;
            }
        }
        prev_eta = Some(eta);
    }
    let fixed_point_eta = if converged { states.last().map(|s| s.eta) } else { None };
    Ok(SeTrajectory { states, converged, fixed_point_eta })
}

/// Value of the fixed-point quadratic at `eta` (zero at a fixed point).
pub fn fixed_point_residual(eta: f64, cfg: &SystemConfig) -> Result<f64> {
    let mut cache = MmseCache::new(BgPrior::new(cfg.lambda())?);
    residual_with_cache(eta, cfg, &mut cache)
}

fn residual_with_cache(eta: f64, cfg: &SystemConfig, cache: &mut MmseCache) -> Result<f64> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Domain("eta must be finite and positive"));
    }
    let mmse = cache.eval(eta)?;
    let big_rho = 1.0 / cfg.measurement_ratio();
    let s2 = cfg.noise_var();
    Ok(big_rho * s2 * mmse * eta * eta - big_rho * (mmse + s2) * eta + 1.0)
}

/// Both roots of the quadratic with `mmse` frozen at its value for this
/// `eta`: `(smaller, larger)`. Diagnostic only; the self-consistent solution
/// always sits on the smaller root.
pub fn replica_branches(eta: f64, cfg: &SystemConfig) -> Result<(f64, f64)> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Domain("eta must be finite and positive"));
    }
    let mut cache = MmseCache::new(BgPrior::new(cfg.lambda())?);
    let mmse = cache.eval(eta)?;
    Ok(branch_roots(mmse, cfg))
}

/// Roots of `noise_var*mmse*eta^2 - (mmse+noise_var)*eta + M/N = 0`.
/// The smaller root uses the product form to dodge cancellation when the
/// discriminant is close to the squared midpoint.
fn branch_roots(mmse: f64, cfg: &SystemConfig) -> (f64, f64) {
    let s2 = cfg.noise_var();
    let a = s2 * mmse;
    let b = mmse + s2;
    let c = cfg.measurement_ratio();
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let sq = libm::sqrt(disc);
    (2.0 * c / (b + sq), (b + sq) / (2.0 * a))
}

/// Solves the fixed-point equation on the smaller branch: damped
/// self-consistent iteration from `eta = (M/N)/(1 + noise_var)`, with a
/// bisection fallback on the residual if the iteration stalls.
pub fn replica_solution(cfg: &SystemConfig, tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be finite and positive"));
    }
    let mut cache = MmseCache::new(BgPrior::new(cfg.lambda())?);
    let mut eta = cfg.measurement_ratio() / (1.0 + cfg.noise_var());
    let mut prev_delta = 0.0;
    let mut damping = 1.0;
    for _ in 0..REPLICA_MAX_ITERS {
        let mmse = cache.eval(eta)?;
        let target = branch_roots(mmse, cfg).0;
        let delta = target - eta;
        if delta.abs() <= tol * eta {
            return Ok(target);
        }
        if delta * prev_delta < 0.0 {
            // Sign alternation: halve the update from here on.
            damping = 0.5;
        }
        eta += damping * delta;
        prev_delta = delta;
    }
    bisect_residual(cfg, &mut cache, tol)
}

/// Locates the first sign change of the residual on a log grid and bisects.
/// The residual is +1 at eta -> 0, so the first crossing is the smaller root.
fn bisect_residual(cfg: &SystemConfig, cache: &mut MmseCache, tol: f64) -> Result<f64> {
    let hi_limit = 16.0 * (1.0 + 1.0 / cfg.noise_var());
    let steps = 600;
    let log_lo = libm::log(1e-9);
    let log_hi = libm::log(hi_limit);
    let mut prev_eta = libm::exp(log_lo);
    let mut prev_res = residual_with_cache(prev_eta, cfg, cache)?;
    let mut bracket = None;
    for k in 1..=steps {
        let eta = libm::exp(log_lo + (log_hi - log_lo) * k as f64 / steps as f64);
        let res = residual_with_cache(eta, cfg, cache)?;
        if prev_res > 0.0 && res <= 0.0 {
            bracket = Some((prev_eta, eta));
            break;
        }
        prev_eta = eta;
        prev_res = res;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::Numerical {
        context: "replica fixed point bracketing",
        iteration: REPLICA_MAX_ITERS,
    })?;
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if residual_with_cache(mid, cfg, cache)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
