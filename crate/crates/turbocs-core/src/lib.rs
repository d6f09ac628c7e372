//! Compressed sensing recovery of Bernoulli-Gaussian signals from noisy
//! partial-DFT measurements.
//!
//! The observation model is `y = S F x + n` where `F` is the unitary N-point
//! DFT, `S` keeps M of the N rows, `x` has i.i.d. Bernoulli-Gaussian entries
//! normalized to unit power and `n` is circular complex Gaussian noise. The
//! crate provides:
//!
//! * [`turbo::run_turbo`]: turbo-style recovery alternating a constrained
//!   LMMSE stage in the transform domain with a component-wise MMSE denoiser,
//!   exchanging extrinsic means and a single scalar variance per direction.
//! * [`state_evolution`]: the scalar recursion that predicts the per-iteration
//!   MSE of the turbo recovery, plus the replica fixed-point solver it agrees
//!   with at convergence.
//! * [`amp`]: an AMP baseline usable with either the partial-DFT operator or
//!   an explicit i.i.d. Gaussian matrix, with its own (i.i.d.-only) state
//!   evolution.
//! * [`denoiser`]: the Bernoulli-Gaussian posterior denoiser and the scalar
//!   `mmse(snr)` function both predictors are built on.
//!
//! The crate is `no_std` (with `alloc`); all float math goes through `libm`.
//!
//! # Example
//!
//! ```
//! use turbocs_core::model::{sample_instance, SystemConfig};
//! use turbocs_core::turbo::{run_turbo, RunOptions};
//!
//! let cfg = SystemConfig::new(256, 180, 0.4, 30.0, 7).unwrap();
//! let inst = sample_instance(&cfg, 0);
//! let (x_hat, trace) = run_turbo(&inst, &cfg, &RunOptions::default()).unwrap();
//! assert_eq!(x_hat.len(), 256);
//! assert!(trace.last().unwrap().mse_vs_truth < 1e-2);
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod amp;
pub mod denoiser;
mod error;
mod fft;
pub mod model;
pub mod state_evolution;
pub mod turbo;

pub use error::{Error, Result};

/// Smallest variance any Gaussian message may carry.
pub const VAR_MIN: f64 = 1e-13;

/// Largest variance any Gaussian message may carry; also stands in for an
/// uninformative (infinite-variance) extrinsic message.
pub const VAR_MAX: f64 = 1e13;
