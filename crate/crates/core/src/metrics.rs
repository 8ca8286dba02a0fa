//! Scoring of support-recovery trials and aggregation into success curves.

use std::collections::BTreeSet;

use ndarray::ArrayView1;
use rand::Rng;

use crate::error::{invalid, Result};

/// Per-trial recovery scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialScore {
    /// Estimated support equals the true support.
    pub recovered: bool,
    pub tpr: f64,
    pub fdr: f64,
    pub l2_error: f64,
}

/// One scored fit inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: String,
    /// Value of the swept variable (N or K).
    pub sweep_x: f64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
    pub recovered: bool,
    pub tpr: f64,
    pub fdr: f64,
    pub l2_error: f64,
}

/// Aggregated success rate with its bootstrap band at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub method: String,
    pub x: f64,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
}

/// TPR = TP / (TP + FN), FDR = FP / (FP + TP) with FDR = 0 when nothing is selected.
pub fn score_trial(
    estimated: &[usize],
    truth: &[usize],
    beta_hat: ArrayView1<'_, f64>,
    beta_star: ArrayView1<'_, f64>,
) -> Result<TrialScore> {
    if truth.is_empty() {
        return Err(invalid("true support is empty; TPR is undefined"));
    }
    if beta_hat.len() != beta_star.len() {
        return Err(invalid(format!(
            "estimate has length {} but the truth has length {}",
            beta_hat.len(),
            beta_star.len()
        )));
    }
    let est: BTreeSet<usize> = estimated.iter().copied().collect();
    let tru: BTreeSet<usize> = truth.iter().copied().collect();
    let tp = est.intersection(&tru).count();
    let fp = est.len() - tp;
    let fn_ = tru.len() - tp;
    let tpr = tp as f64 / (tp + fn_) as f64;
    let fdr = if tp + fp == 0 { 0.0 } else { fp as f64 / (tp + fp) as f64 };
    let l2_error = beta_hat
        .iter()
        .zip(beta_star.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(TrialScore { recovered: est == tru, tpr, fdr, l2_error })
}

/// Fraction of `true` outcomes.
pub fn success_rate(outcomes: &[bool]) -> f64 {
    outcomes.iter().filter(|o| **o).count() as f64 / outcomes.len() as f64
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap band for a success rate: `(rate, low, high)`.
///
/// The band is widened if needed so that it always contains the point estimate.
pub fn bootstrap_band<R: Rng + ?Sized>(
    outcomes: &[bool],
    level: f64,
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64, f64)> {
    if outcomes.is_empty() {
        return Err(invalid("bootstrap needs at least one outcome"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if resamples == 0 {
        return Err(invalid("bootstrap needs at least one resample"));
    }
    let n = outcomes.len();
    let rate = success_rate(outcomes);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let hits = (0..n).filter(|_| outcomes[rng.random_range(0..n)]).count();
            hits as f64 / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let low = quantile_sorted(&means, alpha).min(rate);
    let high = quantile_sorted(&means, 1.0 - alpha).max(rate);
    Ok((rate, low, high))
}

/// Nondecreasing least-squares fit by pool-adjacent-violators.
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    // (sum, count) blocks
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c))
        .collect()
}

/// Mean absolute deviation of `values` from their isotonic fit.
pub fn isotonic_deviation(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let fit = isotonic_fit(values);
    fit.iter().zip(values).map(|(a, b)| (a - b).abs()).sum::<f64>() / values.len() as f64
}
