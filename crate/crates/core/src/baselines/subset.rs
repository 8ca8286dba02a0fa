//! Exhaustive best-subset selection.

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{invalid, Error, Result};
use crate::linalg::{lstsq_on_subset, solve_spd_with_jitter};

/// Largest number of candidate subsets the search will enumerate.
pub const SUBSET_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BestSubset {
    pub support: Vec<usize>,
    /// `||y - X_S beta_S||² / N` at the least-squares refit.
    pub residual: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Least-squares refit residual `||y - X_S beta_S||² / N`, evaluated directly on `X`.
pub fn refit_residual(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, support: &[usize]) -> Result<f64> {
    let n = x.nrows() as f64;
    if support.is_empty() {
        return Ok(y.dot(&y) / n);
    }
    let xs = x.select(ndarray::Axis(1), support);
    let g = xs.t().dot(&xs);
    let b = xs.t().dot(&y);
    let coef = match lstsq_on_subset(g.view(), b.view(), &(0..support.len()).collect::<Vec<_>>()) {
        Some(c) => c,
        None => solve_spd_with_jitter(g.view(), b.view(), 1e-12)?,
    };
    let r = &y - &xs.dot(&coef);
    Ok(r.dot(&r) / n)
}

/// Enumerates every `k`-subset and returns the residual-minimizing one.
///
/// Exact ties keep the lexicographically smallest subset.
pub fn exhaustive_best_subset(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, k: usize) -> Result<BestSubset> {
    let d = x.ncols();
    if x.nrows() != y.len() {
        return Err(invalid("design and response disagree on the number of rows"));
    }
    if k > d {
        return Err(invalid(format!("cannot choose {k} of {d} columns")));
    }
    let subsets = binomial(d, k);
    if subsets > SUBSET_LIMIT {
        return Err(Error::InstanceTooLarge { subsets, limit: SUBSET_LIMIT });
    }
    let gram = x.t().dot(&x);
    let xty = x.t().dot(&y);
    let yty = y.dot(&y);

    let mut combo: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let explained = match lstsq_on_subset(gram.view(), xty.view(), &combo) {
            Some(c) => combo.iter().zip(c.iter()).map(|(&s, v)| v * xty[s]).sum::<f64>(),
            // Rank-deficient subsets are scored through the direct refit.
            None => yty - refit_residual(x, y, &combo)? * x.nrows() as f64,
        };
        let rss = yty - explained;
        let better = match &best {
            None => true,
            Some((b, _)) => rss < *b - 1e-12 * yty.max(f64::MIN_POSITIVE),
        };
        if better {
            best = Some((rss, combo.clone()));
        }
        // Next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                let (_, support) = best.expect("at least one subset");
                let residual = refit_residual(x, y, &support)?;
                return Ok(BestSubset { support, residual });
            }
            i -= 1;
            if combo[i] < d - k + i {
                combo[i] += 1;
                for j in (i + 1)..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(64, 0), 1);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }

    #[test]
    fn full_set_when_k_equals_d() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let r = exhaustive_best_subset(x.view(), array![1.0, 2.0, 3.0].view(), 2).unwrap();
        assert_eq!(r.support, vec![0, 1]);
        assert!(r.residual.abs() < 1e-20);
    }

    #[test]
    fn guard_trips_on_large_instances() {
        let x = ndarray::Array2::<f64>::zeros((2, 40));
        let y = ndarray::Array1::<f64>::zeros(2);
        assert!(matches!(
            exhaustive_best_subset(x.view(), y.view(), 20),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn ties_prefer_lexicographically_smallest() {
        // Columns 0 and 1 identical; either explains y equally.
        let x = array![[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        let y = array![1.0, 2.0, 0.0];
        let r = exhaustive_best_subset(x.view(), y.view(), 1).unwrap();
        assert_eq!(r.support, vec![0]);
    }

    #[test]
    fn empty_subset() {
        let x = array![[1.0], [1.0]];
        let r = exhaustive_best_subset(x.view(), array![1.0, 3.0].view(), 0).unwrap();
        assert!(r.support.is_empty());
        assert_eq!(r.residual, 5.0);
    }
}
