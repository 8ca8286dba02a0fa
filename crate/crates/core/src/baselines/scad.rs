//! SCAD-penalized least squares by coordinate descent.

use ndarray::{ArrayView1, ArrayView2};

use super::cd::{coordinate_descent, ScaledProblem};
use super::lasso::{lasso_fit, soft_threshold};
use super::PenalizedFit;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScadSettings {
    pub lambda: f64,
    pub a: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ScadSettings {
    fn default() -> Self {
        Self { lambda: 0.1, a: 3.7, max_iters: 10_000, tol: 1e-9 }
    }
}

/// SCAD penalty: linear up to `lambda`, quadratic blend up to `a lambda`, flat beyond.
pub fn scad_penalty(t: f64, lambda: f64, a: f64) -> f64 {
    let t = t.abs();
    if t <= lambda {
        lambda * t
    } else if t <= a * lambda {
        (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
    } else {
        lambda * lambda * (a + 1.0) / 2.0
    }
}

/// Minimizer of `(b - z)² / 2 + p(|b|)`.
pub fn scad_threshold(z: f64, lambda: f64, a: f64) -> f64 {
    let az = z.abs();
    if az <= 2.0 * lambda {
        soft_threshold(z, lambda)
    } else if az <= a * lambda {
        ((a - 1.0) * z - z.signum() * a * lambda) / (a - 2.0)
    } else {
        z
    }
}

/// Minimizes `||y - X beta||² / N + 2 sum_d p(|beta_d|)`, warm-started at the
/// LASSO solution with the same `lambda`.
pub fn scad_fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    a: f64,
    max_iters: usize,
    tol: f64,
) -> Result<PenalizedFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("SCAD lambda must be nonnegative, got {lambda}")));
    }
    if !(a > 2.0) {
        return Err(invalid(format!("SCAD shape a must exceed 2, got {a}")));
    }
    let problem = ScaledProblem::new(x, y)?;
    let warm = lasso_fit(x, y, lambda, max_iters, tol)?;
    let start = problem.scale_in(&warm.beta);
    Ok(coordinate_descent(
        &problem,
        start,
        |z| scad_threshold(z, lambda, a),
        |t| scad_penalty(t, lambda, a),
        max_iters,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_is_continuous_at_knots() {
        let (l, a) = (0.4, 3.7);
        for knot in [l, a * l] {
            let lo = scad_penalty(knot - 1e-12, l, a);
            let hi = scad_penalty(knot + 1e-12, l, a);
            assert!((lo - hi).abs() < 1e-10);
        }
    }

    #[test]
    fn threshold_is_continuous() {
        let (l, a) = (0.5, 3.7);
        for knot in [2.0 * l, a * l] {
            let lo = scad_threshold(knot - 1e-12, l, a);
            let hi = scad_threshold(knot + 1e-12, l, a);
            assert!((lo - hi).abs() < 1e-9, "{lo} vs {hi}");
        }
    }

    #[test]
    fn rejects_bad_shape() {
        let x = ndarray::array![[1.0]];
        assert!(scad_fit(x.view(), ndarray::array![1.0].view(), 0.1, 2.0, 10, 1e-6).is_err());
    }
}
