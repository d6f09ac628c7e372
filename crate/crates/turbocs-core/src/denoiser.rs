//! Component-wise Bernoulli-Gaussian MMSE denoiser and the scalar mmse
//! function built on it.
//!
//! The prior for each entry is: zero with probability `1 - lambda`, otherwise
//! CN(0, 1/lambda). Given the pseudo-observation `r = x + w`, `w ~ CN(0, v)`,
//! the posterior is a two-component mixture whose activity probability,
//! mean and variance have closed forms; the activity posterior is computed in
//! the log domain so extreme inputs saturate instead of overflowing.
//!
//! `mmse_of_snr(eta)` is the average posterior variance at noise level
//! `v = 1/eta`. Because the conditional variance depends on `|r|` alone, it
//! reduces to a 1-D radial integral of the posterior variance against the
//! mixture density of `|r|`, evaluated here by adaptive Simpson quadrature
//! on panels matched to the two mixture scales.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::model::GaussianMessage;
use crate::{Error, Result};

/// Bernoulli-Gaussian prior with unit average power: activity rate `lambda`,
/// active-component variance `1/lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct BgPrior {
    lambda: f64,
    active_var: f64,
}

impl BgPrior {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidConfig("lambda must lie in (0, 1]"));
        }
        Ok(BgPrior { lambda, active_var: 1.0 / lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Variance of the active (Gaussian) component, `1/lambda`.
    pub fn active_var(&self) -> f64 {
        self.active_var
    }
}

/// Result of denoising a full vector under a shared noise variance.
#[derive(Debug, Clone)]
pub struct DenoiserOutput {
    pub post_mean: Vec<Complex64>,
    pub post_var: Vec<f64>,
    /// Arithmetic mean of `post_var`, accumulated in index order.
    pub avg_post_var: f64,
}

/// Exponent clamp for the activity posterior; exp(±700) is still finite.
const LOG_ODDS_CLAMP: f64 = 700.0;

fn bg_denoise_unchecked(r: Complex64, v: f64, prior: &BgPrior) -> (Complex64, f64) {
    let sx2 = prior.active_var;
    let total = sx2 + v;
    // log odds of "inactive" against "active"; -inf at lambda = 1 saturates
    // to the clamp and yields activity probability exactly 1.
    let log_odds = libm::log((1.0 - prior.lambda) / prior.lambda)
        + libm::log(total / v)
        - r.norm_sqr() * sx2 / (v * total);
    let clamped = log_odds.clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP);
    let pi = 1.0 / (1.0 + libm::exp(clamped));
    let gain = sx2 / total;
    let active_mean = gain * r;
    let active_var = sx2 * v / total;
    let mean = pi * active_mean;
    // pi*tau + pi*(1-pi)*|mu|^2, written to stay nonnegative in floats.
    let var = pi * active_var + pi * (1.0 - pi) * active_mean.norm_sqr();
    (mean, var.max(0.0))
}

/// Posterior mean and variance of one entry given `r = x + CN(0, v)`.
pub fn bg_denoise(r: Complex64, v: f64, prior: &BgPrior) -> Result<(Complex64, f64)> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidVariance(v));
    }
    Ok(bg_denoise_unchecked(r, v, prior))
}

/// Denoises every entry of a message, returning per-entry posteriors and
/// their average variance.
pub fn denoise_vector(msg: &GaussianMessage, prior: &BgPrior) -> Result<DenoiserOutput> {
    let v = msg.variance();
    let mut post_mean = Vec::with_capacity(msg.len());
    let mut post_var = Vec::with_capacity(msg.len());
    let mut sum = 0.0;
    for &r in msg.mean() {
        let (mean, var) = bg_denoise_unchecked(r, v, prior);
        post_mean.push(mean);
        post_var.push(var);
        sum += var;
    }
    let avg_post_var = if post_var.is_empty() { 0.0 } else { sum / post_var.len() as f64 };
    Ok(DenoiserOutput { post_mean, post_var, avg_post_var })
}

/// MMSE of estimating one prior draw from `x + CN(0, 1/eta)`.
///
/// Strictly decreasing in `eta`, bounded by `min(1, 1/eta)`; for
/// `lambda = 1` it equals `1/(1 + eta)` exactly.
pub fn mmse_of_snr(eta: f64, prior: &BgPrior) -> Result<f64> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Domain("eta must be finite and positive"));
    }
    let v = 1.0 / eta;
    let sx2 = prior.active_var;
    let total = sx2 + v;
    let lambda = prior.lambda;
    // Radial density of |r| under the prior mixture.
    let weight = |t: f64| -> f64 {
        let inactive = (1.0 - lambda) * (2.0 * t / v) * libm::exp(-t * t / v);
        let active = lambda * (2.0 * t / total) * libm::exp(-t * t / total);
        inactive + active
    };
    let integrand =
        |t: f64| -> f64 { bg_denoise_unchecked(Complex64::new(t, 0.0), v, prior).1 * weight(t) };

    let upper = 12.0 * libm::sqrt(total);
    let panels = radial_panels(libm::sqrt(v), libm::sqrt(total), upper);
    // Two passes: a coarse absolute pass sizes the integral, then a second
    // pass tightens each panel to a relative target.
    let coarse = integrate_panels(&integrand, &panels, 1e-9);
    let tol = (coarse.abs() * 1e-11).max(1e-16);
    Ok(integrate_panels(&integrand, &panels, tol))
}

/// Panel breakpoints covering both mixture scales.
fn radial_panels(scale_narrow: f64, scale_wide: f64, upper: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    pts.push(0.0);
    for c in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        pts.push(c * scale_narrow);
    }
    for c in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        pts.push(c * scale_wide);
    }
    pts.push(upper);
    pts.retain(|&t| t <= upper);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * upper);
    pts
}

fn integrate_panels<F: Fn(f64) -> f64>(f: &F, pts: &[f64], tol: f64) -> f64 {
    let per_panel = tol / (pts.len() - 1).max(1) as f64;
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += adaptive_simpson(f, w[0], w[1], per_panel);
    }
    sum
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, m, fm, b, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
}

/// Memoizes `mmse_of_snr` on exact `eta` bit patterns. The predictors
/// re-evaluate the same `eta` many times while polishing fixed points, and
/// bit-exact reuse keeps their results mutually consistent.
#[derive(Debug, Clone)]
pub struct MmseCache {
    prior: BgPrior,
    values: BTreeMap<u64, f64>,
}

impl MmseCache {
    pub fn new(prior: BgPrior) -> Self {
        MmseCache { prior, values: BTreeMap::new() }
    }

    pub fn prior(&self) -> &BgPrior {
        &self.prior
    }

    pub fn eval(&mut self, eta: f64) -> Result<f64> {
        if let Some(&v) = self.values.get(&eta.to_bits()) {
            return Ok(v);
        }
        let v = mmse_of_snr(eta, &self.prior)?;
        self.values.insert(eta.to_bits(), v);
        Ok(v)
    }
}
