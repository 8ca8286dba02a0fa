//! Seeded, parallel support-recovery sweeps.
//!
//! Every random quantity is drawn from a stream whose seed is a hash of
//! `(master_seed, grid value, trial, tag)`, so results do not depend on the
//! number of worker threads or on scheduling. Work items are collected in
//! canonical order (grid value, then trial, then method) before aggregation.

use ndarray::Array1;
use rayon::prelude::*;
use stg_core::baselines::{lasso_fit, omp_fit, rand_omp_fit, scad_fit, BaselineConfig};
use stg_core::linmodel::{generate_dataset, generate_signal, DesignSpec, LinearDataset};
use stg_core::metrics::{bootstrap_band, score_trial, CurvePoint, TrialRecord};
use stg_core::solver::{extract_support, fit_plain_stg, fit_projected_stg, SolverConfig};
use stg_core::stream;

use crate::config::{ExperimentConfig, Method};
use crate::error::{BenchError, Result};
use crate::lambda::{select_c, CvScope};
use crate::seed::child_seed;

/// Share of failed fits at a grid point above which the sweep aborts.
pub const MAX_FAILURE_SHARE: f64 = 0.1;

/// Estimated coefficients and the size-K support read off them.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub beta: Array1<f64>,
    pub support: Vec<usize>,
}

/// Regularization handed to a single fit.
#[derive(Debug, Clone)]
pub struct FitSettings {
    /// Penalty weight for the STG variants (`C * lambda_base`).
    pub stg_lambda: f64,
    /// Penalty weight for LASSO and SCAD (`lambda_base`).
    pub penalized_lambda: f64,
    pub solver: SolverConfig,
    pub baselines: BaselineConfig,
}

/// Fits one method and extracts its size-`k` support.
pub fn fit_method(method: Method, data: &LinearDataset, k: usize, settings: &FitSettings) -> stg_core::Result<MethodFit> {
    let (x, y) = (data.x.view(), data.y.view());
    let top_k = |beta: Array1<f64>| -> stg_core::Result<MethodFit> {
        let support = extract_support(beta.view(), k)?;
        Ok(MethodFit { beta, support })
    };
    let b = &settings.baselines;
    match method {
        Method::ProjStg | Method::PlainStg => {
            let cfg = SolverConfig { lambda: settings.stg_lambda, ..settings.solver.clone() };
            let fit = if method == Method::ProjStg {
                fit_projected_stg(data, k, &cfg)?
            } else {
                fit_plain_stg(data, k, &cfg)?
            };
            Ok(MethodFit { beta: fit.beta_hat, support: fit.support_hat })
        }
        Method::Lasso => {
            let fit = lasso_fit(x, y, settings.penalized_lambda, b.lasso.max_iters, b.lasso.tol)?;
            top_k(fit.beta)
        }
        Method::Scad => {
            let fit = scad_fit(x, y, settings.penalized_lambda, b.scad.a, b.scad.max_iters, b.scad.tol)?;
            top_k(fit.beta)
        }
        Method::Omp => {
            let fit = omp_fit(x, y, k)?;
            Ok(MethodFit { beta: fit.beta, support: fit.support })
        }
        Method::RandOmp => {
            let fit = rand_omp_fit(x, y, k, &b.rand_omp, &mut stream(b.seed))?;
            Ok(MethodFit { beta: fit.beta, support: fit.support })
        }
    }
}

/// A fit that raised an error; its record counts as a failed recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedFit {
    pub method: Method,
    pub x: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Grid-major, then trial, then method in configured order.
    pub records: Vec<TrialRecord>,
    /// Grid-major, then method in configured order.
    pub curves: Vec<CurvePoint>,
    /// Selected multiplier C per grid value (`None` when no method needs it).
    pub selected_c: Vec<(usize, Option<f64>)>,
    pub failures: Vec<FailedFit>,
}

/// Synthetic dataset for one `(grid value, trial)` cell.
pub fn trial_dataset(cfg: &ExperimentConfig, x: usize, seed: u64) -> Result<LinearDataset> {
    let (n, k) = cfg.point(x);
    let spec = DesignSpec::new(cfg.ensemble()?, n, cfg.fixed.d).with_rho(cfg.fixed.rho);
    let mut rng = stream(seed);
    let signal = generate_signal(cfg.fixed.d, k, &mut rng)?;
    Ok(generate_dataset(&spec, &signal, cfg.fixed.sigma, &mut rng)?)
}

/// Cross-validates C at grid value `x` on a dedicated pilot dataset.
pub fn pilot_c(cfg: &ExperimentConfig, x: usize) -> Result<f64> {
    let (_, k) = cfg.point(x);
    let data = trial_dataset(cfg, x, child_seed(cfg.master_seed, x as u64, 0, "cv"))?;
    let solver = SolverConfig { seed: child_seed(cfg.master_seed, x as u64, 0, "cv-solver"), ..cfg.solver.apply() };
    select_c(&data, k, &cfg.lambda_rule, &solver)
}

fn selected_multipliers(cfg: &ExperimentConfig) -> Result<Vec<Option<f64>>> {
    if !cfg.methods.iter().any(|m| m.uses_cv_lambda()) {
        return Ok(vec![None; cfg.grid.len()]);
    }
    match cfg.lambda_rule.cv_scope {
        CvScope::PerPoint => cfg.grid.par_iter().map(|&x| pilot_c(cfg, x).map(Some)).collect(),
        CvScope::Once => {
            let c = pilot_c(cfg, *cfg.grid.last().expect("grid validated nonempty"))?;
            Ok(vec![Some(c); cfg.grid.len()])
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    x: usize,
    trial: usize,
    c: Option<f64>,
) -> Result<Vec<(TrialRecord, Option<FailedFit>)>> {
    let (n, k) = cfg.point(x);
    let data_seed = child_seed(cfg.master_seed, x as u64, trial as u64, "dataset");
    let data = trial_dataset(cfg, x, data_seed)?;
    let truth = data.truth.as_ref().expect("synthetic data carries its signal");
    let needs_base = cfg.methods.iter().any(|m| !matches!(m, Method::Omp | Method::RandOmp));
    let base = if needs_base { cfg.lambda_rule.base_level(cfg.fixed.sigma, cfg.fixed.d, k, n)? } else { 0.0 };

    cfg.methods
        .iter()
        .map(|&method| {
            let seed = child_seed(cfg.master_seed, x as u64, trial as u64, method.label());
            let settings = FitSettings {
                stg_lambda: c.unwrap_or(1.0) * base,
                penalized_lambda: base,
                solver: SolverConfig { seed, ..cfg.solver.apply() },
                baselines: cfg.baselines.at(base, seed),
            };
            let mut record = TrialRecord {
                method: method.label().to_string(),
                sweep_x: x as f64,
                n,
                d: cfg.fixed.d,
                k,
                sigma: cfg.fixed.sigma,
                seed: data_seed,
                recovered: false,
                tpr: 0.0,
                fdr: 0.0,
                l2_error: f64::NAN,
            };
            let scored = fit_method(method, &data, k, &settings).and_then(|fit| {
                score_trial(&fit.support, &truth.support, fit.beta.view(), truth.beta.view())
            });
            let failure = match scored {
                Ok(s) => {
                    (record.recovered, record.tpr, record.fdr, record.l2_error) =
                        (s.recovered, s.tpr, s.fdr, s.l2_error);
                    None
                }
                Err(e) => Some(FailedFit { method, x, trial, message: e.to_string() }),
            };
            Ok((record, failure))
        })
        .collect()
}

/// Runs the sweep on a pool of `threads` workers (0 picks the machine default).
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<SweepOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let multipliers = selected_multipliers(cfg)?;
    let cells: Vec<(usize, usize)> =
        (0..cfg.grid.len()).flat_map(|g| (0..cfg.trials).map(move |t| (g, t))).collect();
    let results: Vec<Vec<(TrialRecord, Option<FailedFit>)>> = cells
        .par_iter()
        .map(|&(g, t)| run_cell(cfg, cfg.grid[g], t, multipliers[g]))
        .collect::<Result<_>>()?;

    let per_point = cfg.trials * cfg.methods.len();
    let mut records = Vec::with_capacity(cells.len() * cfg.methods.len());
    let mut failures = Vec::new();
    for (g, chunk) in results.chunks(cfg.trials).enumerate() {
        let before = failures.len();
        for (record, failure) in chunk.iter().flatten() {
            records.push(record.clone());
            failures.extend(failure.clone());
        }
        let failed = failures.len() - before;
        if failed as f64 > MAX_FAILURE_SHARE * per_point as f64 {
            return Err(BenchError::SweepHealth {
                x: cfg.grid[g] as u64,
                failed,
                total: per_point,
                first_error: failures[before].message.clone(),
            });
        }
    }

    let curves = cfg
        .grid
        .iter()
        .enumerate()
        .flat_map(|(g, &x)| cfg.methods.iter().map(move |&m| (g, x, m)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(g, x, method)| {
            let start = g * per_point;
            let outcomes: Vec<bool> = records[start..start + per_point]
                .iter()
                .filter(|r| r.method == method.label())
                .map(|r| r.recovered)
                .collect();
            let tag = format!("bootstrap:{}", method.label());
            let mut rng = stream(child_seed(cfg.master_seed, x as u64, 0, &tag));
            let (rate, low, high) =
                bootstrap_band(&outcomes, cfg.bootstrap.level, cfg.bootstrap.resamples, &mut rng)?;
            Ok(CurvePoint {
                method: method.label().to_string(),
                x: x as f64,
                success_rate: rate,
                ci_low: low,
                ci_high: high,
                trials: outcomes.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepOutcome {
        records,
        curves,
        selected_c: cfg.grid.iter().copied().zip(multipliers).collect(),
        failures,
    })
}

/// Success rates of one method along the grid, in grid order.
pub fn method_rates(curves: &[CurvePoint], method: Method) -> Vec<f64> {
    curves.iter().filter(|c| c.method == method.label()).map(|c| c.success_rate).collect()
}
