//! Classical sparse-regression comparators.
//!
//! * [`lasso`]: cyclic coordinate descent with soft thresholding.
//! * [`scad`]: coordinate descent with the SCAD thresholding rule, warm
//!   started from the LASSO solution.
//! * [`omp`]: orthogonal matching pursuit and its randomized variant.
//! * [`subset`]: exhaustive best-subset search for tiny instances.
//!
//! The penalized solvers share one convention: the data term is
//! `||y - X beta||² / N` and the penalty enters as `2 * sum_d p(|beta_d|)`, so
//! on an orthonormal design (`XᵀX = N I`) each coordinate reduces to the
//! textbook thresholding rule applied to `z_d = (Xᵀy)_d / N`.

pub mod lasso;
pub mod omp;
pub mod scad;
pub mod subset;

mod cd;

pub use lasso::{lasso_fit, soft_threshold, LassoSettings};
pub use omp::{omp_fit, rand_omp_fit, GreedyFit, RandOmpSettings};
pub use scad::{scad_fit, scad_penalty, scad_threshold, ScadSettings};
pub use subset::{exhaustive_best_subset, refit_residual, BestSubset, SUBSET_LIMIT};

use ndarray::Array1;

/// Outcome of a penalized coordinate-descent fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit {
    pub beta: Array1<f64>,
    pub converged: bool,
    pub sweeps: usize,
    /// Objective after each full sweep, in the internally scaled coordinates.
    pub objective_trace: Vec<f64>,
}

/// Settings for every baseline in one place.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineConfig {
    pub lasso: LassoSettings,
    pub scad: ScadSettings,
    pub rand_omp: RandOmpSettings,
    pub seed: u64,
}
