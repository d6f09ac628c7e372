//! Shared oracles for the integration suites: dense reference linear
//! algebra, numeric-integration posteriors and Monte Carlo estimators,
//! implemented independently of the library internals they cross-check.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use turbocs_core::denoiser::{bg_denoise, BgPrior};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// ---------- dense complex linear algebra ----------

/// Row-major dense complex matrix with naive reference operations.
#[derive(Clone)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Dense::zeros(n, n);
        for i in 0..n {
            *a.at_mut(i, i) = Complex64::new(1.0, 0.0);
        }
        a
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows);
        let mut out = Dense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.at(i, k);
                for j in 0..other.cols {
                    *out.at_mut(i, j) += aik * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Dense {
        let mut out = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).conj();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Dense {
        Dense { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, other: &Dense) -> Dense {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Dense) -> Dense {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

/// Explicit unitary transform matrix, entry (m, k) = exp(-2 pi i m k / n) / sqrt(n).
pub fn dense_dft(n: usize) -> Dense {
    let mut f = Dense::zeros(n, n);
    let scale = 1.0 / (n as f64).sqrt();
    for m in 0..n {
        for k in 0..n {
            let phase = -2.0 * PI * (m as f64) * (k as f64) / (n as f64);
            *f.at_mut(m, k) = Complex64::from_polar(scale, phase);
        }
    }
    f
}

/// 0/1 selection matrix whose k-th row is the unit vector at indices[k].
pub fn dense_selection(indices: &[usize], n: usize) -> Dense {
    let mut s = Dense::zeros(indices.len(), n);
    for (k, &i) in indices.iter().enumerate() {
        *s.at_mut(k, i) = Complex64::new(1.0, 0.0);
    }
    s
}

/// Solves `a x = b` for every column of `b` by Gauss-Jordan elimination
/// with partial pivoting; consumes both operands.
pub fn solve(mut a: Dense, mut b: Dense) -> Dense {
    assert_eq!(a.rows, a.cols);
    assert_eq!(a.rows, b.rows);
    let n = a.rows;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a.at(i, col).norm().total_cmp(&a.at(j, col).norm()))
            .unwrap();
        assert!(a.at(pivot, col).norm() > 0.0, "singular system");
        if pivot != col {
            for j in 0..n {
                let tmp = a.at(col, j);
                *a.at_mut(col, j) = a.at(pivot, j);
                *a.at_mut(pivot, j) = tmp;
            }
            for j in 0..b.cols {
                let tmp = b.at(col, j);
                *b.at_mut(col, j) = b.at(pivot, j);
                *b.at_mut(pivot, j) = tmp;
            }
        }
        let inv = Complex64::new(1.0, 0.0) / a.at(col, col);
        for j in 0..n {
            *a.at_mut(col, j) *= inv;
        }
        for j in 0..b.cols {
            *b.at_mut(col, j) *= inv;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a.at(row, col);
            if factor == ZERO {
                continue;
            }
            for j in 0..n {
                let v = a.at(col, j);
                *a.at_mut(row, j) -= factor * v;
            }
            for j in 0..b.cols {
                let v = b.at(col, j);
                *b.at_mut(row, j) -= factor * v;
            }
        }
    }
    b
}

pub fn column(v: &[Complex64]) -> Dense {
    Dense { rows: v.len(), cols: 1, data: v.to_vec() }
}

/// Joint LMMSE estimate of a unit-power signal from `y = a x + noise`:
/// `a^H (a a^H + noise_var I)^{-1} y` through dense algebra.
pub fn dense_joint_lmmse(a: &Dense, y: &[Complex64], noise_var: f64) -> Vec<Complex64> {
    let gram = a.matmul(&a.adjoint());
    let mut system = gram;
    for i in 0..system.rows {
        *system.at_mut(i, i) += noise_var;
    }
    let w = solve(system, column(y));
    a.adjoint().matvec(&w.data)
}

/// Dense reference for conditioning a CN(z_pri, v I) prior on
/// `y = S z + noise`: returns the posterior mean and full covariance via
/// explicit matrices, no structural shortcuts.
pub fn dense_conditioning(
    z_pri: &[Complex64],
    v: f64,
    indices: &[usize],
    y: &[Complex64],
    noise_var: f64,
) -> (Vec<Complex64>, Dense) {
    let n = z_pri.len();
    let s = dense_selection(indices, n);
    let sh = s.adjoint();
    // innovation covariance v S S^H + noise_var I, inverted densely
    let mut inno = s.matmul(&sh).scale(v);
    for i in 0..inno.rows {
        *inno.at_mut(i, i) += noise_var;
    }
    let gain = sh.scale(v).matmul(&solve(inno.clone(), Dense::identity(inno.rows)));
    let innov: Vec<Complex64> =
        y.iter().zip(s.matvec(z_pri)).map(|(&yi, szi)| yi - szi).collect();
    let mean: Vec<Complex64> =
        z_pri.iter().zip(gain.matvec(&innov)).map(|(&p, g)| p + g).collect();
    let cov = Dense::identity(n).scale(v).sub(&gain.matmul(&s).scale(v));
    (mean, cov)
}

// ---------- scalar posterior oracle by numeric integration ----------

fn cn_density(x: Complex64, var: f64) -> f64 {
    (-x.norm_sqr() / var).exp() / (PI * var)
}

const MOMENTS: usize = 4;

fn add4(a: [f64; MOMENTS], b: [f64; MOMENTS]) -> [f64; MOMENTS] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Vector-valued adaptive Simpson quadrature: all components share one
/// refinement, driven by the largest component error. Independent of the
/// library's integration scheme.
fn simpson_vec<F: Fn(f64) -> [f64; MOMENTS]>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> [f64; MOMENTS] {
    fn rule<F: Fn(f64) -> [f64; MOMENTS]>(f: &F, a: f64, b: f64) -> [f64; MOMENTS] {
        let fa = f(a);
        let fm = f(0.5 * (a + b));
        let fb = f(b);
        let scale = (b - a) / 6.0;
        let mut out = [0.0; MOMENTS];
        for i in 0..MOMENTS {
            out[i] = scale * (fa[i] + 4.0 * fm[i] + fb[i]);
        }
        out
    }
    fn recurse<F: Fn(f64) -> [f64; MOMENTS]>(
        f: &F,
        a: f64,
        b: f64,
        whole: [f64; MOMENTS],
        tol: f64,
        depth: usize,
    ) -> [f64; MOMENTS] {
        let mid = 0.5 * (a + b);
        let left = rule(f, a, mid);
        let right = rule(f, mid, b);
        let mut refined = [0.0; MOMENTS];
        let mut worst = 0.0_f64;
        for i in 0..MOMENTS {
            let delta = left[i] + right[i] - whole[i];
            refined[i] = left[i] + right[i] + delta / 15.0;
            worst = worst.max(delta.abs());
        }
        if depth == 0 || worst <= 15.0 * tol {
            return refined;
        }
        add4(
            recurse(f, a, mid, left, 0.5 * tol, depth - 1),
            recurse(f, mid, b, right, 0.5 * tol, depth - 1),
        )
    }
    recurse(f, a, b, rule(f, a, b), tol, depth)
}

/// Posterior mean and variance of a zero-or-Gaussian scalar with unit
/// power observed in complex AWGN of variance `v`, from first principles:
/// the active-component moment integrals are evaluated numerically over the
/// plane and mixed with the exact point-mass term.
///
/// The integration runs in coordinates normalized to the integrand peak
/// (substitute `x = center + scale * u`) so tolerances stay meaningful
/// across twelve orders of magnitude in `v`, and the first and second
/// moments are taken relative to the peak location so the tiny posterior
/// variance at small `v` is not lost to cancellation.
pub fn posterior_oracle(r: Complex64, v: f64, lambda: f64) -> (Complex64, f64) {
    let sx2 = 1.0 / lambda;
    let g = move |x: Complex64| cn_density(x, sx2) * cn_density(r - x, v);
    let center = r * (sx2 / (sx2 + v));
    let scale = (sx2 * v / (sx2 + v)).sqrt();
    let peak = g(center).max(1e-300);
    // the normalized integrand decays as exp(-|u|^2): truncation at 6 is
    // below 1e-15 relative
    let span = 6.0;
    let jac = scale * scale;

    let outer = |u_re: f64| {
        simpson_vec(
            &|u_im: f64| {
                let u = Complex64::new(u_re, u_im);
                let gx = g(center + scale * u);
                [gx, u.re * gx, u.im * gx, u.norm_sqr() * gx]
            },
            -span,
            span,
            peak * 1e-11,
            20,
        )
    };
    let raw = simpson_vec(&outer, -span, span, peak * 1e-10, 20);

    let z_active = lambda * jac * raw[0];
    // continuous-part moments of (x - center), rescaled back from u
    let d_active = Complex64::new(raw[1], raw[2]) * (lambda * jac * scale);
    let spread_active = lambda * jac * scale * scale * raw[3];
    let z_spike = (1.0 - lambda) * cn_density(r, v);

    // the point mass sits at x = 0, i.e. at -center relative to the peak
    let z = z_spike + z_active;
    let shift = (d_active - z_spike * center) / z;
    let spread = (spread_active + z_spike * center.norm_sqr()) / z;
    let mean = center + shift;
    let var = spread - shift.norm_sqr();
    (mean, var)
}

// ---------- Monte Carlo draws and estimators ----------

/// One CN(0, 1) draw in polar form (squared radius exponential), a code
/// path distinct from the library's sampler.
pub fn randcn<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let radius = (-(1.0 - u1).ln()).sqrt();
    Complex64::from_polar(radius, 2.0 * PI * u2)
}

/// One unit-power zero-or-Gaussian draw with activity probability `lambda`.
pub fn rand_bg<R: Rng>(rng: &mut R, lambda: f64) -> Complex64 {
    if rng.gen::<f64>() < lambda {
        randcn(rng) * (1.0 / lambda).sqrt()
    } else {
        ZERO
    }
}

/// Monte Carlo estimate (mean, standard error) of the scalar-channel MMSE
/// at snr `eta`: the average realized squared error of the denoiser over
/// fresh draws of signal and observation noise.
pub fn mc_mmse<R: Rng>(eta: f64, lambda: f64, samples: usize, rng: &mut R) -> (f64, f64) {
    let prior = BgPrior::new(lambda).expect("valid lambda");
    let v = 1.0 / eta;
    let noise_scale = v.sqrt();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = rand_bg(rng, lambda);
        let r = x + randcn(rng) * noise_scale;
        let (mean, _) = bg_denoise(r, v, &prior).expect("valid inputs");
        let err = (mean - x).norm_sqr();
        sum += err;
        sum_sq += err * err;
    }
    let count = samples as f64;
    let mean = sum / count;
    let var = (sum_sq - sum * sum / count) / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Mean squared difference between two vectors, normalized by length.
pub fn mean_sq_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Deterministic pseudo-random complex vector for oracle comparisons.
pub fn random_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| randcn(rng)).collect()
}
