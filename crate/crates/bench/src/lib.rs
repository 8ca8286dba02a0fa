//! Benchmark harness for sparse support recovery: experiment configs,
//! cross-validated regularization, seeded parallel sweeps, CSV tables and SVG
//! plots.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod lambda;
pub mod output;
pub mod plot;
pub mod runner;
pub mod seed;

pub use config::{ExperimentConfig, Method, Sweep};
pub use error::{BenchError, Result};
pub use runner::{run_experiment, SweepOutcome};
