//! Orthogonal matching pursuit and randomized OMP.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::lstsq_on_subset;
use crate::solver::extract_support;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandOmpSettings {
    /// Number of independent randomized passes averaged together.
    pub runs: usize,
    pub temperature: f64,
}

impl Default for RandOmpSettings {
    fn default() -> Self {
        Self { runs: 10, temperature: 1.0 }
    }
}

/// Coefficients and the selected support (sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyFit {
    pub beta: Array1<f64>,
    pub support: Vec<usize>,
}

struct Greedy {
    gram: Array2<f64>,
    xty: Array1<f64>,
    yty: f64,
    rows: f64,
    col_norms: Array1<f64>,
}

/// One greedy pass: the chosen atoms in selection order and the refit.
struct Path {
    chosen: Vec<usize>,
    coefs: Array1<f64>,
}

impl Greedy {
    fn new(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, k: usize) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(invalid(format!(
                "design has {} rows but the response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if k > x.ncols() {
            return Err(invalid(format!("cannot select {k} atoms from {} columns", x.ncols())));
        }
        let gram = x.t().dot(&x);
        let col_norms = Array1::from_iter((0..x.ncols()).map(|j| gram[[j, j]].sqrt()));
        Ok(Self {
            xty: x.t().dot(&y),
            yty: y.dot(&y),
            rows: x.nrows() as f64,
            gram,
            col_norms,
        })
    }

    fn dim(&self) -> usize {
        self.xty.len()
    }

    /// Normalized correlations `x_dᵀ r / ||x_d||` and `||r||²` for the current fit.
    fn correlations(&self, chosen: &[usize], coefs: &Array1<f64>) -> (Array1<f64>, f64) {
        let mut c = self.xty.clone();
        let mut fitted = 0.0;
        for (i, &s) in chosen.iter().enumerate() {
            c.scaled_add(-coefs[i], &self.gram.column(s));
            fitted += coefs[i] * self.xty[s];
        }
        // At the least-squares refit, ||r||² = yᵀy - βᵀX_Sᵀy.
        let rss = (self.yty - fitted).max(0.0);
        for (v, &nrm) in c.iter_mut().zip(self.col_norms.iter()) {
            *v = if nrm > 0.0 { *v / nrm } else { 0.0 };
        }
        (c, rss)
    }

    fn refit(&self, chosen: &[usize]) -> Result<Array1<f64>> {
        lstsq_on_subset(self.gram.view(), self.xty.view(), chosen).ok_or_else(|| {
            Error::SingularSystem(format!("active set {chosen:?} has a singular Gram matrix"))
        })
    }

    fn run(&self, k: usize, mut pick: impl FnMut(&Array1<f64>, f64, &[bool]) -> usize) -> Result<Path> {
        let mut chosen = Vec::with_capacity(k);
        let mut used = vec![false; self.dim()];
        let mut coefs = Array1::zeros(0);
        for _ in 0..k {
            let (c, rss) = self.correlations(&chosen, &coefs);
            let j = pick(&c, rss, &used);
            used[j] = true;
            chosen.push(j);
            coefs = self.refit(&chosen)?;
        }
        Ok(Path { chosen, coefs })
    }

    fn expand(&self, path: &Path) -> Array1<f64> {
        let mut beta = Array1::zeros(self.dim());
        for (i, &s) in path.chosen.iter().enumerate() {
            beta[s] = path.coefs[i];
        }
        beta
    }
}

fn argmax_abs(c: &Array1<f64>, used: &[bool]) -> usize {
    let mut best = usize::MAX;
    let mut best_val = f64::NEG_INFINITY;
    for (j, v) in c.iter().enumerate() {
        if !used[j] && v.abs() > best_val {
            best = j;
            best_val = v.abs();
        }
    }
    best
}

/// Greedy OMP with a least-squares refit after every selection.
pub fn omp_fit(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, k: usize) -> Result<GreedyFit> {
    let greedy = Greedy::new(x, y, k)?;
    let path = greedy.run(k, |c, _, used| argmax_abs(c, used))?;
    let beta = greedy.expand(&path);
    let mut support = path.chosen;
    support.sort_unstable();
    Ok(GreedyFit { beta, support })
}

/// Randomized OMP.
///
/// Each of `runs` passes picks the next atom with probability proportional to
/// `exp(c_d² / (2 T s²))`, where `c_d` is the normalized residual correlation
/// and `s² = ||r||² / N` the current residual variance. The coefficient
/// vectors of all passes are averaged and the support is the top `k` of the
/// average.
pub fn rand_omp_fit<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    k: usize,
    settings: &RandOmpSettings,
    rng: &mut R,
) -> Result<GreedyFit> {
    if settings.runs == 0 {
        return Err(invalid("randomized OMP needs at least one run"));
    }
    if !(settings.temperature > 0.0) {
        return Err(invalid(format!(
            "randomized OMP temperature must be positive, got {}",
            settings.temperature
        )));
    }
    let greedy = Greedy::new(x, y, k)?;
    let mut total = Array1::zeros(greedy.dim());
    let mut weights = vec![0.0; greedy.dim()];
    for _ in 0..settings.runs {
        let path = greedy.run(k, |c, rss, used| {
            let s2 = rss / greedy.rows;
            let inv = if s2 > 0.0 { 1.0 / (2.0 * settings.temperature * s2) } else { 0.0 };
            let top = c
                .iter()
                .zip(used)
                .filter(|(_, u)| !**u)
                .map(|(v, _)| v * v * inv)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (j, w) in weights.iter_mut().enumerate() {
                *w = if used[j] { 0.0 } else { (c[j] * c[j] * inv - top).exp() };
                sum += *w;
            }
            let mut u = rng.random::<f64>() * sum;
            let mut last = usize::MAX;
            for (j, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    last = j;
                    if u < w {
                        return j;
                    }
                    u -= w;
                }
            }
            last
        })?;
        total += &greedy.expand(&path);
    }
    let beta = total / settings.runs as f64;
    let support = extract_support(beta.view(), k)?;
    Ok(GreedyFit { beta, support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream;
    use ndarray::array;

    fn orthogonal() -> Array2<f64> {
        // Columns of a 4x4 Hadamard matrix: XᵀX = 4 I.
        array![
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0]
        ]
    }

    #[test]
    fn orthogonal_noiseless_recovery() {
        let x = orthogonal();
        let beta = array![0.0, 2.0, 0.0, -1.0];
        let y = x.dot(&beta);
        let fit = omp_fit(x.view(), y.view(), 2).unwrap();
        assert_eq!(fit.support, vec![1, 3]);
        for i in 0..4 {
            assert!((fit.beta[i] - beta[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_atoms() {
        let x = orthogonal();
        let fit = omp_fit(x.view(), array![1.0, 2.0, 3.0, 4.0].view(), 0).unwrap();
        assert!(fit.support.is_empty());
        assert_eq!(fit.beta, Array1::zeros(4));
    }

    #[test]
    fn too_many_atoms_rejected() {
        let x = orthogonal();
        assert!(omp_fit(x.view(), array![1.0, 2.0, 3.0, 4.0].view(), 5).is_err());
    }

    #[test]
    fn singular_refit_reported() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [0.5, 0.5]];
        let err = omp_fit(x.view(), array![1.0, 0.0, 2.0].view(), 2).unwrap_err();
        assert!(matches!(err, Error::SingularSystem(_)));
    }

    #[test]
    fn cold_rand_omp_matches_omp() {
        let x = array![[1.0, 0.3, 0.1], [0.2, 1.0, 0.4], [0.0, 0.5, 1.0], [1.0, 1.0, 0.0], [0.3, 0.0, 0.8]];
        let y = array![1.0, -0.4, 0.7, 0.2, 1.1];
        let omp = omp_fit(x.view(), y.view(), 2).unwrap();
        let settings = RandOmpSettings { runs: 1, temperature: 1e-12 };
        let r = rand_omp_fit(x.view(), y.view(), 2, &settings, &mut stream(3)).unwrap();
        assert_eq!(r.support, omp.support);
        assert_eq!(r.beta, omp.beta);
    }

    #[test]
    fn rand_omp_deterministic_per_seed() {
        let x = orthogonal();
        let y = array![0.3, -1.0, 2.0, 0.5];
        let s = RandOmpSettings::default();
        let a = rand_omp_fit(x.view(), y.view(), 2, &s, &mut stream(8)).unwrap();
        let b = rand_omp_fit(x.view(), y.view(), 2, &s, &mut stream(8)).unwrap();
        assert_eq!(a, b);
    }
}
