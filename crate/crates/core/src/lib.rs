//! Sparse linear-regression support recovery with projected stochastic gates.
//!
//! The crate is organised bottom-up:
//!
//! * [`gates`]: clipped-Gaussian gates, their penalty and moments.
//! * [`linmodel`]: synthetic designs and signals, CSV loading.
//! * [`solver`]: the projected and plain stochastic-gate estimators.
//! * [`baselines`]: LASSO, OMP, randomized OMP, SCAD and the exhaustive
//!   best-subset oracle.
//! * [`metrics`]: trial scoring and bootstrap bands.
//!
//! All randomness flows through caller-owned [`Stream`]s so every result is
//! reproducible from a seed.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod linmodel;
pub mod metrics;
pub mod optim;
pub mod solver;

pub use error::{Error, Result};

/// Seedable random stream used throughout the crate.
pub type Stream = rand_chacha::ChaCha8Rng;

/// Builds a [`Stream`] from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    use rand::SeedableRng;
    Stream::seed_from_u64(seed)
}
