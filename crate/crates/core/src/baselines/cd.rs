//! Coordinate descent shared by LASSO and SCAD.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::PenalizedFit;
use crate::error::{invalid, Result};

/// Columns rescaled so that `||x_d||² = N`, in Gram form.
pub(super) struct ScaledProblem {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    pub yty: f64,
    pub rows: f64,
    /// Multiply a scaled coefficient by this to get the original one.
    pub scale: Array1<f64>,
    /// Columns that are identically zero stay pinned at 0.
    pub dead: Vec<bool>,
}

impl ScaledProblem {
    pub fn new(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Self> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(invalid(format!(
                "design is {}x{} but the response has {} entries",
                x.nrows(),
                x.ncols(),
                y.len()
            )));
        }
        let n = x.nrows() as f64;
        let d = x.ncols();
        let norms: Vec<f64> = x.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
        let dead: Vec<bool> = norms.iter().map(|&v| v == 0.0).collect();
        let scale = Array1::from_iter(
            norms.iter().map(|&v| if v == 0.0 { 0.0 } else { n.sqrt() / v }),
        );
        let mut gram = x.t().dot(&x);
        let mut xty = x.t().dot(&y);
        for i in 0..d {
            xty[i] *= scale[i];
            for j in 0..d {
                gram[[i, j]] *= scale[i] * scale[j];
            }
        }
        Ok(Self { gram, xty, yty: y.dot(&y), rows: n, scale, dead })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    pub fn data_term(&self, beta: &Array1<f64>) -> f64 {
        (self.yty - 2.0 * beta.dot(&self.xty) + beta.dot(&self.gram.dot(beta))) / self.rows
    }

    pub fn unscale(&self, beta: &Array1<f64>) -> Array1<f64> {
        beta * &self.scale
    }

    pub fn scale_in(&self, beta: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter(beta.iter().zip(self.scale.iter()).map(|(b, s)| {
            if *s == 0.0 {
                0.0
            } else {
                b / s
            }
        }))
    }
}

/// Cyclic coordinate descent where each coordinate solves
/// `min_b (b - z)² + 2 p(|b|)` through `threshold(z)`.
pub(super) fn coordinate_descent(
    problem: &ScaledProblem,
    start: Array1<f64>,
    threshold: impl Fn(f64) -> f64,
    penalty: impl Fn(f64) -> f64,
    max_iters: usize,
    tol: f64,
) -> PenalizedFit {
    let d = problem.dim();
    let n = problem.rows;
    let objective = |b: &Array1<f64>| {
        problem.data_term(b) + 2.0 * b.iter().map(|v| penalty(v.abs())).sum::<f64>()
    };
    let mut beta = start;
    // Residual correlations c = Xᵀy - XᵀX beta in scaled coordinates.
    let mut corr = &problem.xty - &problem.gram.dot(&beta);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_iters {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..d {
            if problem.dead[j] {
                continue;
            }
            let z = corr[j] / n + beta[j];
            let next = threshold(z);
            let delta = next - beta[j];
            if delta != 0.0 {
                beta[j] = next;
                let col = problem.gram.column(j);
                corr.scaled_add(-delta, &col);
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(objective(&beta));
        if max_change < tol {
            converged = true;
            break;
        }
    }
    PenalizedFit { beta: problem.unscale(&beta), converged, sweeps, objective_trace: trace }
}
