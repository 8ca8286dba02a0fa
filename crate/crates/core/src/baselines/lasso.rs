//! LASSO by cyclic coordinate descent.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::cd::{coordinate_descent, ScaledProblem};
use super::PenalizedFit;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSettings {
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self { lambda: 0.1, max_iters: 10_000, tol: 1e-9 }
    }
}

/// `sign(z) * max(|z| - t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Minimizes `||y - X beta||² / N + 2 lambda ||beta||_1`.
///
/// Columns are internally rescaled to `||x_d||² = N`; the returned
/// coefficients are on the original scale. Running out of sweeps is reported
/// through `converged`, not as an error.
pub fn lasso_fit(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> Result<PenalizedFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("LASSO lambda must be nonnegative, got {lambda}")));
    }
    let problem = ScaledProblem::new(x, y)?;
    Ok(coordinate_descent(
        &problem,
        Array1::zeros(problem.dim()),
        |z| soft_threshold(z, lambda),
        |t| lambda * t,
        max_iters,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let x = array![[1.0, 0.2], [0.3, 1.0], [1.0, 1.0], [-0.5, 2.0], [0.0, 1.0]];
        let truth = array![1.5, -0.7];
        let y = x.dot(&truth) + array![0.1, -0.2, 0.05, 0.0, 0.1];
        let fit = lasso_fit(x.view(), y.view(), 0.0, 100_000, 1e-13).unwrap();
        let g = x.t().dot(&x);
        let b = x.t().dot(&y);
        let det = g[[0, 0]] * g[[1, 1]] - g[[0, 1]] * g[[1, 0]];
        let ols = array![
            (g[[1, 1]] * b[0] - g[[0, 1]] * b[1]) / det,
            (g[[0, 0]] * b[1] - g[[1, 0]] * b[0]) / det
        ];
        assert!(fit.converged);
        for i in 0..2 {
            assert!((fit.beta[i] - ols[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn large_lambda_zeroes_everything() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let y = array![1.0, -2.0, 0.3];
        // Threshold on the internal (unit-scaled) coordinates.
        let n: f64 = 3.0;
        let lmax = x
            .columns()
            .into_iter()
            .map(|c| (c.dot(&y) * n.sqrt() / c.dot(&c).sqrt()).abs() / n)
            .fold(0.0, f64::max);
        let fit = lasso_fit(x.view(), y.view(), lmax, 100, 1e-12).unwrap();
        assert_eq!(fit.beta, Array1::zeros(2));
    }

    #[test]
    fn objective_never_increases() {
        let x = array![[1.0, 0.9, 0.1], [0.8, 1.0, -0.3], [0.2, 0.4, 1.0], [1.0, 0.7, 0.5]];
        let y = array![1.0, 0.5, -0.2, 0.9];
        let fit = lasso_fit(x.view(), y.view(), 0.05, 500, 1e-14).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn negative_lambda_rejected() {
        let x = array![[1.0]];
        assert!(lasso_fit(x.view(), array![1.0].view(), -0.1, 10, 1e-6).is_err());
    }
}
