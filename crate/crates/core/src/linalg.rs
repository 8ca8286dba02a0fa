//! Dense Cholesky factorization and the small least-squares helpers built on it.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry are treated as zero.
const PIVOT_FLOOR: f64 = 1e-13;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn factor(a: ArrayView2<'_, f64>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let scale = (0..n).map(|i| a[[i, i]].abs()).fold(0.0_f64, f64::max);
        let floor = PIVOT_FLOOR * scale.max(f64::MIN_POSITIVE);

        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let d = a[[j, j]] - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
            if !(d > floor) || !d.is_finite() {
                return None;
            }
            let pivot = d.sqrt();
            l[j * n + j] = pivot;
            for i in (j + 1)..n {
                let s = a[[i, j]] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / pivot;
            }
        }
        let lower = Array2::from_shape_vec((n, n), l).expect("shape matches buffer");
        Some(Self { lower })
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = self.lower.as_slice().expect("standard layout");
        let mut x = b.to_vec();
        for i in 0..n {
            let s = dot(&l[i * n..i * n + i], &x[..i]);
            x[i] = (x[i] - s) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Array1::from(x)
    }
}

/// Solves a symmetric positive-definite system, falling back to a small ridge.
///
/// The first attempt factors `a` as given. If that fails the diagonal is
/// lifted by `jitter * mean(diag(a))`, then by ten times that, before giving up.
pub fn solve_spd_with_jitter(
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    jitter: f64,
) -> Result<Array1<f64>> {
    if let Some(c) = Cholesky::factor(a) {
        return Ok(c.solve(b));
    }
    let n = a.nrows();
    let mean_diag = if n == 0 {
        0.0
    } else {
        (0..n).map(|i| a[[i, i]]).sum::<f64>() / n as f64
    };
    // An all-zero diagonal still deserves a positive lift.
    let base = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    if jitter > 0.0 {
        for factor in [1.0, 10.0] {
            let mut lifted = a.to_owned();
            let lift = jitter * factor * base;
            for i in 0..n {
                lifted[[i, i]] += lift;
            }
            if let Some(c) = Cholesky::factor(lifted.view()) {
                return Ok(c.solve(b));
            }
        }
    }
    Err(Error::SingularSystem(format!(
        "{n}x{n} system is not positive definite even with ridge jitter {jitter:e}"
    )))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `XᵀX`.
pub fn gram(x: ArrayView2<'_, f64>) -> Array2<f64> {
    x.t().dot(&x)
}

/// Least-squares coefficients restricted to `subset`, from precomputed `XᵀX` and `Xᵀy`.
pub fn lstsq_on_subset(
    gram: ArrayView2<'_, f64>,
    xty: ArrayView1<'_, f64>,
    subset: &[usize],
) -> Option<Array1<f64>> {
    let k = subset.len();
    let mut a = Array2::zeros((k, k));
    let mut b = Array1::zeros(k);
    for (i, &si) in subset.iter().enumerate() {
        b[i] = xty[si];
        for (j, &sj) in subset.iter().enumerate() {
            a[[i, j]] = gram[[si, sj]];
        }
    }
    Cholesky::factor(a.view()).map(|c| c.solve(b.view()))
}
