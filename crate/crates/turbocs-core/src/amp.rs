//! AMP baseline with the same Bernoulli-Gaussian denoiser, runnable on the
//! partial-DFT operator or an explicit i.i.d. Gaussian matrix.
//!
//! Both operators follow the unit-row normalization of the observation model
//! (per-entry variance 1/N for the Gaussian matrix, so column norms are
//! M/N). Vanilla AMP is stated for unit-norm columns; the iteration below is
//! that algorithm after the exact change of variables `sqrt(N/M)`, expressed
//! in original units:
//!
//! ```text
//! r_t       = x_t + (N/M) A^H s_t
//! x_{t+1}   = denoise(r_t, tau_t^2),  vbar_{t+1} = avg posterior variance
//! s_{t+1}   = y - A x_{t+1} + (N/M) (vbar_{t+1} / tau_t^2) s_t
//! tau_{t+1}^2 = (N/M) (noise_var + vbar_{t+1})
//! ```
//!
//! with `x_0 = 0`, `s_0 = y`, `tau_0^2 = (N/M)(noise_var + 1)`. The matching
//! state evolution `tau^2 -> (N/M)(noise_var + mmse(1/tau^2))` is exact for
//! large i.i.d. Gaussian matrices only; it is NOT valid for the partial-DFT
//! operator, which is precisely the regime where the turbo recovery wins.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::denoiser::{denoise_vector, BgPrior, MmseCache};
use crate::model::{
    complex_gaussian, dft, idft, mse, sample_noise, sample_signal, select, select_adjoint,
    trial_seed, GaussianMessage, SelectionPattern, SystemConfig,
};
use crate::{Error, Result, VAR_MAX, VAR_MIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    /// `A x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension { expected: self.cols, got: x.len() });
        }
        let mut out = Vec::with_capacity(self.rows);
        for row in self.data.chunks_exact(self.cols) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&a, &v) in row.iter().zip(x) {
                acc += a * v;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `A^H s`.
    pub fn apply_adjoint(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        if s.len() != self.rows {
            return Err(Error::Dimension { expected: self.rows, got: s.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (row, &si) in self.data.chunks_exact(self.cols).zip(s) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a.conj() * si;
            }
        }
        Ok(out)
    }

    /// M x N matrix with i.i.d. CN(0, 1/cols) entries.
    pub fn sample_iid_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let var = 1.0 / cols as f64;
        let data = (0..rows * cols).map(|_| complex_gaussian(rng, var)).collect();
        DenseMatrix { rows, cols, data }
    }
}

/// Measurement operator: either the implicit partial DFT (transform plus
/// row selection, O(N log N) per application) or an explicit matrix.
#[derive(Debug, Clone)]
pub enum SensingOperator {
    PartialDft(SelectionPattern),
    Dense(DenseMatrix),
}

impl SensingOperator {
    pub fn rows(&self) -> usize {
        match self {
            SensingOperator::PartialDft(p) => p.m(),
            SensingOperator::Dense(a) => a.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            SensingOperator::PartialDft(p) => p.n(),
            SensingOperator::Dense(a) => a.cols(),
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            SensingOperator::PartialDft(p) => select(&dft(x), p),
            SensingOperator::Dense(a) => a.apply(x),
        }
    }

    pub fn apply_adjoint(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            SensingOperator::PartialDft(p) => Ok(idft(&select_adjoint(s, p)?)),
            SensingOperator::Dense(a) => a.apply_adjoint(s),
        }
    }
}

/// Iterate state: current estimate, corrected residual and pseudo-data
/// noise variance.
#[derive(Debug, Clone)]
pub struct AmpState {
    pub x_hat: Vec<Complex64>,
    pub residual: Vec<Complex64>,
    pub tau_sq: f64,
}

/// Stopping controls; `onsager: false` drops the residual correction term
/// (diagnostic only, the algorithm is then plain iterative thresholding).
#[derive(Debug, Clone, PartialEq)]
pub struct AmpOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub onsager: bool,
}

impl Default for AmpOptions {
    fn default() -> Self {
        AmpOptions { max_iters: 50, rel_tol: 1e-6, onsager: true }
    }
}

/// Per-iteration record: the pseudo-data variance entering the denoiser,
/// the resulting average posterior variance and the oracle MSE.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpRecord {
    pub iteration: usize,
    pub tau_sq: f64,
    pub avg_post_var: f64,
    pub mse_vs_truth: f64,
}

fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Runs AMP on `y = op(x) + noise` and returns the final estimate with the
/// per-iteration trace.
pub fn amp_run(
    y: &[Complex64],
    op: &SensingOperator,
    truth: &[Complex64],
    cfg: &SystemConfig,
    opts: &AmpOptions,
) -> Result<(Vec<Complex64>, Vec<AmpRecord>)> {
    if opts.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1"));
    }
    if !(opts.rel_tol.is_finite() && opts.rel_tol > 0.0) {
        return Err(Error::InvalidConfig("rel_tol must be finite and positive"));
    }
    if op.cols() != cfg.n() || truth.len() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: op.cols().min(truth.len()) });
    }
    if op.rows() != cfg.m() || y.len() != cfg.m() {
        return Err(Error::Dimension { expected: cfg.m(), got: y.len() });
    }
    let prior = BgPrior::new(cfg.lambda())?;
    let big_rho = 1.0 / cfg.measurement_ratio(); // N/M
    let s2 = cfg.noise_var();

    let mut state = AmpState {
        x_hat: vec![Complex64::new(0.0, 0.0); cfg.n()],
        residual: y.to_vec(),
        tau_sq: (big_rho * (s2 + 1.0)).clamp(VAR_MIN, VAR_MAX),
    };
    let mut trace = Vec::new();

    for t in 1..=opts.max_iters {
        let adj = op.apply_adjoint(&state.residual)?;
        let r: Vec<Complex64> = state
            .x_hat
            .iter()
            .zip(&adj)
            .map(|(&x, &a)| x + big_rho * a)
            .collect();
        if !all_finite(&r) {
            return Err(Error::Numerical { context: "pseudo-data", iteration: t });
        }
        let msg = GaussianMessage::new(r, state.tau_sq)
            .map_err(|_| Error::Numerical { context: "pseudo-data variance", iteration: t })?;
        let den = denoise_vector(&msg, &prior)?;
        let vbar = den.avg_post_var;

        let predicted = op.apply(&den.post_mean)?;
        let onsager_gain =
            if opts.onsager { big_rho * vbar / state.tau_sq } else { 0.0 };
        let residual: Vec<Complex64> = y
            .iter()
            .zip(&predicted)
            .zip(&state.residual)
            .map(|((&yi, &pi), &si)| yi - pi + onsager_gain * si)
            .collect();
        if !all_finite(&residual) {
            return Err(Error::Numerical { context: "residual", iteration: t });
        }

        trace.push(AmpRecord {
            iteration: t,
            tau_sq: state.tau_sq,
            avg_post_var: vbar,
            mse_vs_truth: mse(&den.post_mean, truth),
        });

        let tau_next = (big_rho * (s2 + vbar)).clamp(VAR_MIN, VAR_MAX);
        let rel = (tau_next - state.tau_sq).abs() / state.tau_sq;
        state = AmpState { x_hat: den.post_mean, residual, tau_sq: tau_next };
        if rel < opts.rel_tol {
            break;
        }
    }
    Ok((state.x_hat, trace))
}

/// One sampled instance with an explicit i.i.d. Gaussian matrix. The signal
/// uses the same leading RNG draws as the partial-DFT sampler, so trial `k`
/// recovers the same `x` under either operator.
#[derive(Debug, Clone)]
pub struct GaussInstance {
    pub a: DenseMatrix,
    pub x: Vec<Complex64>,
    pub support: Vec<bool>,
    pub noise: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

pub fn sample_gauss_instance(cfg: &SystemConfig, trial_index: u64) -> GaussInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.base_seed(), trial_index));
    let (x, support) = sample_signal(cfg, &mut rng);
    let a = DenseMatrix::sample_iid_gaussian(cfg.m(), cfg.n(), &mut rng);
    let noise = sample_noise(cfg, &mut rng);
    let y: Vec<Complex64> = a
        .apply(&x)
        .expect("dimensions fixed by construction")
        .into_iter()
        .zip(&noise)
        .map(|(s, &w)| s + w)
        .collect();
    GaussInstance { a, x, support, noise, y }
}

/// State-evolution point for the i.i.d. Gaussian case: the pseudo-data
/// variance entering an iteration and the MSE it predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpSeState {
    pub tau_sq: f64,
    pub predicted_mse: f64,
}

/// i.i.d.-Gaussian AMP state evolution trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpSeTrajectory {
    pub states: Vec<AmpSeState>,
    pub converged: bool,
}

/// Runs `tau^2 -> (N/M)(noise_var + mmse(1/tau^2))` from the prior power.
/// Valid for large i.i.d. Gaussian matrices only; documented as inaccurate
/// for partial-DFT operators.
pub fn amp_se_run(cfg: &SystemConfig, tol: f64, max_iters: usize) -> Result<AmpSeTrajectory> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be finite and positive"));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1"));
    }
    let mut cache = MmseCache::new(BgPrior::new(cfg.lambda())?);
    let big_rho = 1.0 / cfg.measurement_ratio();
    let s2 = cfg.noise_var();
    let mut tau_sq = (big_rho * (s2 + 1.0)).clamp(VAR_MIN, VAR_MAX);
    let mut states = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let predicted_mse = cache.eval(1.0 / tau_sq)?;
        states.push(AmpSeState { tau_sq, predicted_mse });
        let tau_next = (big_rho * (s2 + predicted_mse)).clamp(VAR_MIN, VAR_MAX);
        let rel = (tau_next - tau_sq).abs() / tau_sq;
        tau_sq = tau_next;
        if rel < tol {
            converged = true;
            break;
        }
    }
    Ok(AmpSeTrajectory { states, converged })
}
