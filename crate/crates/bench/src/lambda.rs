//! Reference regularization level and cross-validated selection of its multiplier.

use serde::{Deserialize, Serialize};
use stg_core::linmodel::LinearDataset;
use stg_core::solver::{fit_projected_stg, SolverConfig};

use crate::error::{BenchError, Result};

/// `sqrt(2 sigma² log(D - K) log(K) / N)`.
///
/// Requires `K >= 2` and `D - K >= 2` so both logarithms are positive.
pub fn lambda_base(sigma: f64, d: usize, k: usize, n: usize) -> stg_core::Result<f64> {
    if k <= 1 || d <= k + 1 {
        return Err(stg_core::Error::InvalidArgument(format!(
            "reference lambda needs K >= 2 and D - K >= 2, got D = {d}, K = {k}"
        )));
    }
    if n == 0 {
        return Err(stg_core::Error::InvalidArgument("reference lambda needs N >= 1".into()));
    }
    let (dk, kk) = (((d - k) as f64).ln(), (k as f64).ln());
    Ok((2.0 * sigma * sigma * dk * kk / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CvScope {
    /// Select C separately at every grid point.
    #[default]
    PerPoint,
    /// Select C once, at the last (largest) grid point, and reuse it.
    Once,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaRule {
    /// Only "wainwright" is recognised: the reference level above.
    pub base: String,
    pub c_grid: Vec<f64>,
    pub cv_folds: usize,
    pub cv_scope: CvScope,
    /// When the reference level is undefined (K < 2 or D - K < 2), evaluate it
    /// with K clamped into `[2, D - 2]` instead of failing.
    pub clamp_k: bool,
}

impl Default for LambdaRule {
    fn default() -> Self {
        Self {
            base: "wainwright".into(),
            c_grid: log_grid(0.1, 10.0, 10),
            cv_folds: 5,
            cv_scope: CvScope::PerPoint,
            clamp_k: false,
        }
    }
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

impl LambdaRule {
    pub fn validate(&self) -> Result<()> {
        if self.base != "wainwright" {
            return Err(BenchError::Config(format!("unknown lambda base `{}`", self.base)));
        }
        if self.c_grid.is_empty() {
            return Err(BenchError::Config("C grid is empty".into()));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(0.1..=10.0).contains(*c)) {
            return Err(BenchError::Config(format!("C grid value {c} lies outside [0.1, 10]")));
        }
        if self.cv_folds < 2 {
            return Err(BenchError::Config(format!("cv_folds must be at least 2, got {}", self.cv_folds)));
        }
        Ok(())
    }

    /// Reference level at `(sigma, D, K, N)`, honouring `clamp_k`.
    pub fn base_level(&self, sigma: f64, d: usize, k: usize, n: usize) -> stg_core::Result<f64> {
        match lambda_base(sigma, d, k, n) {
            Err(_) if self.clamp_k && d >= 4 => lambda_base(sigma, d, k.clamp(2, d - 2), n),
            other => other,
        }
    }
}

/// Ascending, duplicate-free copy of a C grid.
fn canonical_grid(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Contiguous row folds; the first `n % folds` folds get one extra row.
pub fn fold_ranges(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    (0..folds)
        .map(|f| {
            let len = base + usize::from(f < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Mean held-out squared prediction error of Projected-STG for each C.
pub fn cv_errors(
    data: &LinearDataset,
    k: usize,
    rule: &LambdaRule,
    solver: &SolverConfig,
    c_grid: &[f64],
) -> Result<Vec<f64>> {
    let n = data.rows();
    if n < rule.cv_folds {
        return Err(BenchError::Core(stg_core::Error::InvalidArgument(format!(
            "{n} rows cannot be split into {} folds",
            rule.cv_folds
        ))));
    }
    let folds = fold_ranges(n, rule.cv_folds);
    let mut errors = vec![0.0; c_grid.len()];
    for fold in &folds {
        let train: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
        let test: Vec<usize> = fold.clone().collect();
        let train_set = data.select_rows(&train);
        let test_set = data.select_rows(&test);
        let base = rule.base_level(data.sigma, data.cols(), k, train.len())?;
        for (slot, &c) in errors.iter_mut().zip(c_grid) {
            let cfg = SolverConfig { lambda: c * base, ..solver.clone() };
            let fit = fit_projected_stg(&train_set, k, &cfg)?;
            let r = &test_set.y - &test_set.x.dot(&fit.beta_hat);
            *slot += r.dot(&r) / test.len() as f64;
        }
    }
    let folds = folds.len() as f64;
    Ok(errors.into_iter().map(|e| e / folds).collect())
}

/// Cross-validated choice of the multiplier C; ties go to the smaller C.
pub fn select_c(data: &LinearDataset, k: usize, rule: &LambdaRule, solver: &SolverConfig) -> Result<f64> {
    Ok(select_c_with_errors(data, k, rule, solver)?.0)
}

/// As [`select_c`], also returning `(C, CV error)` for the deduplicated grid.
/// The table is empty on the single-value fast path.
pub fn select_c_with_errors(
    data: &LinearDataset,
    k: usize,
    rule: &LambdaRule,
    solver: &SolverConfig,
) -> Result<(f64, Vec<(f64, f64)>)> {
    rule.validate()?;
    let grid = canonical_grid(&rule.c_grid);
    if grid.len() == 1 {
        return Ok((grid[0], Vec::new()));
    }
    let errors = cv_errors(data, k, rule, solver, &grid)?;
    let mut best = 0;
    for (i, e) in errors.iter().enumerate() {
        if *e < errors[best] {
            best = i;
        }
    }
    Ok((grid[best], grid.into_iter().zip(errors).collect()))
}
