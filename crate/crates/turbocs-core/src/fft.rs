//! Unitary DFT/IDFT used by the transform-domain operators.
//!
//! Both directions carry the 1/sqrt(N) factor, so forward followed by inverse
//! is the identity and both preserve the Euclidean norm. Power-of-two lengths
//! take an iterative radix-2 path; other lengths fall back to the exact
//! direct O(N^2) sum, which keeps the transform available for small
//! odd-length test problems.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Forward unitary DFT.
pub fn unitary_dft(input: &[Complex64]) -> Vec<Complex64> {
    transform(input, -1.0)
}

/// Inverse unitary DFT.
pub fn unitary_idft(input: &[Complex64]) -> Vec<Complex64> {
    transform(input, 1.0)
}

fn transform(input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = input.len();
    if n <= 1 {
        return input.to_vec();
    }
    let mut out = if n.is_power_of_two() {
        let mut buf = input.to_vec();
        radix2(&mut buf, sign);
        buf
    } else {
        direct(input, sign)
    };
    let scale = 1.0 / libm::sqrt(n as f64);
    for v in &mut out {
        *v *= scale;
    }
    out
}

/// exp(sign * 2*pi*j * k / n) for k in 0..n/2.
fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    let step = sign * 2.0 * PI / n as f64;
    (0..n / 2)
        .map(|k| {
            let (s, c) = libm::sincos(step * k as f64);
            Complex64::new(c, s)
        })
        .collect()
}

fn radix2(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two() && n >= 2);
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if j > i {
            buf.swap(i, j);
        }
    }
    let tw = twiddles(n, sign);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for base in (0..n).step_by(len) {
            for k in 0..half {
                let w = tw[k * stride];
                let t = w * buf[base + half + k];
                let u = buf[base + k];
                buf[base + k] = u + t;
                buf[base + half + k] = u - t;
            }
        }
        len *= 2;
    }
}

fn direct(input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = input.len();
    // n-th roots indexed by (i*k) mod n stay exact for the whole sum.
    let step = sign * 2.0 * PI / n as f64;
    let roots: Vec<Complex64> = (0..n)
        .map(|k| {
            let (s, c) = libm::sincos(step * k as f64);
            Complex64::new(c, s)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &v) in input.iter().enumerate() {
            acc += v * roots[(i * k) % n];
        }
        *o = acc;
    }
    out
}
