//! Problem model: configuration, Gaussian messages and instance sampling.
//!
//! The observation is `y = S F x + n` with `F` the unitary N-point DFT
//! (entry (m, k) equal to exp(-2*pi*j*m*k/N)/sqrt(N)), `S` a row selector
//! keeping M distinct rows, and `n` circular complex Gaussian with per-entry
//! variance `noise_var`. Signal entries are i.i.d. Bernoulli-Gaussian: zero
//! with probability `1 - lambda`, otherwise CN(0, 1/lambda), so every entry
//! has unit average power regardless of the activity rate.
//!
//! Sampling conventions (fixed so that experiments are bit-reproducible):
//!
//! * per-trial seed: splitmix64 finalizer applied to
//!   `base_seed + (trial_index + 1) * 0x9e3779b97f4a7c15`, feeding a ChaCha8
//!   stream; trials can therefore run in any order or in parallel,
//! * CN(0, v) draws use one Box-Muller pair: `(a + j*b) * sqrt(v/2)` with
//!   `a`, `b` standard normal,
//! * per instance the draw order is signal, then row selection, then noise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fft;
use crate::{Error, Result, VAR_MAX, VAR_MIN};

/// Dimensions, sparsity and noise level of one recovery problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    n: usize,
    m: usize,
    lambda: f64,
    snr_db: f64,
    noise_var: f64,
    base_seed: u64,
}

impl SystemConfig {
    /// Validates and builds a configuration. `lambda` must lie in (0, 1],
    /// `m` in 1..=n, and the SNR must map to a positive finite noise
    /// variance via `noise_var = 10^(-snr_db/10)`.
    pub fn new(n: usize, m: usize, lambda: f64, snr_db: f64, base_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1"));
        }
        if m == 0 || m > n {
            return Err(Error::InvalidConfig("m must lie in 1..=n"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidConfig("lambda must lie in (0, 1]"));
        }
        if !snr_db.is_finite() {
            return Err(Error::InvalidConfig("snr_db must be finite"));
        }
        let noise_var = libm::pow(10.0, -snr_db / 10.0);
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(Error::InvalidConfig("snr_db maps to a degenerate noise variance"));
        }
        Ok(SystemConfig { n, m, lambda, snr_db, noise_var, base_seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Activity rate of the Bernoulli-Gaussian prior.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    /// Per-entry noise variance, `10^(-snr_db/10)`.
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    /// M/N.
    pub fn measurement_ratio(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// The M distinct row indices kept by the selector `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionPattern {
    n: usize,
    indices: Vec<usize>,
}

impl SelectionPattern {
    /// Builds a pattern after checking all indices are distinct and below `n`.
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.len() > n {
            return Err(Error::InvalidConfig("selection must keep between 1 and n rows"));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::InvalidConfig("selection index out of range"));
            }
            if seen[i] {
                return Err(Error::InvalidConfig("selection indices must be distinct"));
            }
            seen[i] = true;
        }
        Ok(SelectionPattern { n, indices })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// Gaussian message: a mean vector plus one scalar variance shared by all
/// entries. Construction clamps the variance into [`VAR_MIN`], [`VAR_MAX`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMessage {
    mean: Vec<Complex64>,
    variance: f64,
}

impl GaussianMessage {
    pub fn new(mean: Vec<Complex64>, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidVariance(variance));
        }
        let variance = variance.clamp(VAR_MIN, VAR_MAX);
        Ok(GaussianMessage { mean, variance })
    }

    pub fn mean(&self) -> &[Complex64] {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Complex64>, f64) {
        (self.mean, self.variance)
    }
}

/// One sampled realization of the observation model.
///
/// Built by [`sample_instance`], which guarantees `z = F x`,
/// `y = S z + noise` and `support[j] == (x[j] != 0)`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub x: Vec<Complex64>,
    pub support: Vec<bool>,
    pub z: Vec<Complex64>,
    pub selection: SelectionPattern,
    pub noise: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

/// Forward unitary DFT, `z = F x`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    fft::unitary_dft(x)
}

/// Inverse unitary DFT, `x = F^H z`.
pub fn idft(z: &[Complex64]) -> Vec<Complex64> {
    fft::unitary_idft(z)
}

/// Applies the row selector: `out[k] = z[indices[k]]`.
pub fn select(z: &[Complex64], pattern: &SelectionPattern) -> Result<Vec<Complex64>> {
    if z.len() != pattern.n() {
        return Err(Error::Dimension { expected: pattern.n(), got: z.len() });
    }
    Ok(pattern.indices().iter().map(|&i| z[i]).collect())
}

/// Applies the selector adjoint `S^H`: scatters `v` back to length n,
/// zero-filling the unobserved rows.
pub fn select_adjoint(v: &[Complex64], pattern: &SelectionPattern) -> Result<Vec<Complex64>> {
    if v.len() != pattern.m() {
        return Err(Error::Dimension { expected: pattern.m(), got: v.len() });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); pattern.n()];
    for (&i, &val) in pattern.indices().iter().zip(v) {
        out[i] = val;
    }
    Ok(out)
}

/// Mean squared error per entry, `||a - b||^2 / len`.
pub fn mse(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum();
    sum / a.len() as f64
}

const SPLITMIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer over `(base_seed, trial_index)`; pure, so trials may
/// be generated in any order.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(trial_index.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One CN(0, `variance`) draw via a Box-Muller pair.
pub fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1], keeps the log finite
    let u2: f64 = rng.gen();
    let radius = libm::sqrt(-2.0 * libm::log(u1));
    let (s, c) = libm::sincos(2.0 * PI * u2);
    let scale = libm::sqrt(variance / 2.0);
    Complex64::new(radius * c * scale, radius * s * scale)
}

/// Draws a Bernoulli-Gaussian signal and its support mask.
pub fn sample_signal<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> (Vec<Complex64>, Vec<bool>) {
    let mut x = vec![Complex64::new(0.0, 0.0); cfg.n()];
    let mut support = vec![false; cfg.n()];
    let active_var = 1.0 / cfg.lambda();
    for j in 0..cfg.n() {
        if rng.gen::<f64>() < cfg.lambda() {
            support[j] = true;
            x[j] = complex_gaussian(rng, active_var);
        }
    }
    (x, support)
}

/// Draws M distinct row indices uniformly without replacement.
pub fn sample_selection<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> SelectionPattern {
    let picked = rand::seq::index::sample(rng, cfg.n(), cfg.m()).into_vec();
    // Distinctness and range come from the sampler; skip revalidation.
    SelectionPattern { n: cfg.n(), indices: picked }
}

/// Draws the CN(0, noise_var) measurement noise vector.
pub fn sample_noise<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> Vec<Complex64> {
    (0..cfg.m()).map(|_| complex_gaussian(rng, cfg.noise_var())).collect()
}

/// Samples a full problem instance for the given trial index.
///
/// Infallible: every configuration a [`SystemConfig`] can represent is
/// sampleable (in particular `lambda > 0` is enforced at construction).
pub fn sample_instance(cfg: &SystemConfig, trial_index: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.base_seed(), trial_index));
    let (x, support) = sample_signal(cfg, &mut rng);
    let selection = sample_selection(cfg, &mut rng);
    let noise = sample_noise(cfg, &mut rng);
    let z = dft(&x);
    let y: Vec<Complex64> = selection
        .indices()
        .iter()
        .zip(&noise)
        .map(|(&i, &w)| z[i] + w)
        .collect();
    ProblemInstance { x, support, z, selection, noise, y }
}
