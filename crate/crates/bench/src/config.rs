//! JSON experiment configuration.
//!
//! Every field has a default, so a config file only needs to list what it
//! changes. Defaults reproduce the vary-N Gaussian-design study: D = 64,
//! K = 10, sigma = 0.5, N in {10, 20, ..., 100}, 100 trials per point, all six
//! methods.
//!
//! ```json
//! {
//!   "sweep": "vary_k",
//!   "grid": [1, 5, 10, 15, 20, 25],
//!   "fixed": { "d": 64, "n": 40, "sigma": 0.5, "ensemble": "gaussian" },
//!   "trials": 100,
//!   "methods": ["proj_stg", "lasso", "omp"],
//!   "lambda_rule": { "c_grid": [0.1, 0.3, 1.0], "cv_folds": 5, "clamp_k": true },
//!   "master_seed": 7
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use stg_core::baselines::{BaselineConfig, LassoSettings, RandOmpSettings, ScadSettings};
use stg_core::linmodel::Ensemble;
use stg_core::optim::AdamSettings;
use stg_core::solver::{EarlyStop, MomentMode, SolverConfig};

use crate::error::{BenchError, Result};
use crate::lambda::LambdaRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    VaryN,
    VaryK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(alias = "ProjSTG")]
    ProjStg,
    #[serde(alias = "PlainSTG")]
    PlainStg,
    #[serde(alias = "LASSO")]
    Lasso,
    #[serde(alias = "OMP")]
    Omp,
    #[serde(alias = "RandOMP")]
    RandOmp,
    #[serde(alias = "SCAD")]
    Scad,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::ProjStg, Method::PlainStg, Method::Lasso, Method::Omp, Method::RandOmp, Method::Scad];

    /// Label used in CSV output and plot legends.
    pub fn label(self) -> &'static str {
        match self {
            Method::ProjStg => "ProjSTG",
            Method::PlainStg => "PlainSTG",
            Method::Lasso => "LASSO",
            Method::Omp => "OMP",
            Method::RandOmp => "RandOMP",
            Method::Scad => "SCAD",
        }
    }

    /// Whether the method's lambda is the cross-validated `C * lambda_base`.
    pub fn uses_cv_lambda(self) -> bool {
        matches!(self, Method::ProjStg | Method::PlainStg)
    }
}

impl std::str::FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Method::ALL
            .into_iter()
            .find(|m| m.label().to_ascii_lowercase() == key)
            .ok_or_else(|| BenchError::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedParams {
    pub d: usize,
    /// Sparsity for vary-N sweeps.
    pub k: usize,
    /// Sample size for vary-K sweeps.
    pub n: usize,
    pub sigma: f64,
    pub ensemble: String,
    pub rho: f64,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self { d: 64, k: 10, n: 40, sigma: 0.5, ensemble: "gaussian".into(), rho: 0.0 }
    }
}

/// Optional overrides of [`SolverConfig`] defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub tau: Option<f64>,
    pub moment_samples: Option<usize>,
    pub risk_samples: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub decay1: Option<f64>,
    pub decay2: Option<f64>,
    pub epsilon: Option<f64>,
    pub exact_moments: Option<bool>,
    pub ridge_jitter: Option<f64>,
    /// Set to false to always run the full epoch budget.
    pub early_stop: Option<bool>,
}

impl SolverOverrides {
    pub fn apply(&self) -> SolverConfig {
        let base = SolverConfig::default();
        let adam = AdamSettings {
            learning_rate: self.learning_rate.unwrap_or(base.adam.learning_rate),
            decay1: self.decay1.unwrap_or(base.adam.decay1),
            decay2: self.decay2.unwrap_or(base.adam.decay2),
            epsilon: self.epsilon.unwrap_or(base.adam.epsilon),
        };
        SolverConfig {
            tau: self.tau.unwrap_or(base.tau),
            moment_samples: self.moment_samples.unwrap_or(base.moment_samples),
            risk_samples: self.risk_samples.unwrap_or(base.risk_samples),
            epochs: self.epochs.unwrap_or(base.epochs),
            adam,
            moment_mode: if self.exact_moments.unwrap_or(false) {
                MomentMode::Exact
            } else {
                MomentMode::MonteCarlo
            },
            ridge_jitter: self.ridge_jitter.unwrap_or(base.ridge_jitter),
            early_stop: match self.early_stop {
                Some(false) => None,
                _ => Some(EarlyStop::default()),
            },
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineOverrides {
    pub max_iters: usize,
    pub tol: f64,
    pub scad_a: f64,
    pub rand_omp_runs: usize,
    pub rand_omp_temperature: f64,
}

impl Default for BaselineOverrides {
    fn default() -> Self {
        let b = BaselineConfig::default();
        Self {
            max_iters: 2_000,
            tol: 1e-8,
            scad_a: b.scad.a,
            rand_omp_runs: b.rand_omp.runs,
            rand_omp_temperature: b.rand_omp.temperature,
        }
    }
}

impl BaselineOverrides {
    /// Baseline settings at a given lambda and seed.
    pub fn at(&self, lambda: f64, seed: u64) -> BaselineConfig {
        BaselineConfig {
            lasso: LassoSettings { lambda, max_iters: self.max_iters, tol: self.tol },
            scad: ScadSettings { lambda, a: self.scad_a, max_iters: self.max_iters, tol: self.tol },
            rand_omp: RandOmpSettings {
                runs: self.rand_omp_runs,
                temperature: self.rand_omp_temperature,
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSettings {
    pub level: f64,
    pub resamples: usize,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self { level: 0.9, resamples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sweep: Sweep,
    pub grid: Vec<usize>,
    pub fixed: FixedParams,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub lambda_rule: LambdaRule,
    pub master_seed: u64,
    pub solver: SolverOverrides,
    pub baselines: BaselineOverrides,
    pub bootstrap: BootstrapSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sweep: Sweep::VaryN,
            grid: (1..=10).map(|i| i * 10).collect(),
            fixed: FixedParams::default(),
            trials: 100,
            methods: Method::ALL.to_vec(),
            lambda_rule: LambdaRule::default(),
            master_seed: 0,
            solver: SolverOverrides::default(),
            baselines: BaselineOverrides::default(),
            bootstrap: BootstrapSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// The vary-K study: N = 40, K in {1, 5, ..., 25}.
    pub fn vary_k_default() -> Self {
        Self {
            sweep: Sweep::VaryK,
            grid: vec![1, 5, 10, 15, 20, 25],
            lambda_rule: LambdaRule { clamp_k: true, ..LambdaRule::default() },
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| BenchError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn ensemble(&self) -> Result<Ensemble> {
        self.fixed.ensemble.parse().map_err(|e: stg_core::Error| BenchError::Config(e.to_string()))
    }

    /// `(N, K)` at a grid value.
    pub fn point(&self, x: usize) -> (usize, usize) {
        match self.sweep {
            Sweep::VaryN => (x, self.fixed.k),
            Sweep::VaryK => (self.fixed.n, x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("grid must be strictly increasing".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods contain duplicates".into());
        }
        if self.fixed.d == 0 {
            return bad("D must be positive".into());
        }
        if !(self.fixed.sigma >= 0.0 && self.fixed.sigma.is_finite()) {
            return bad(format!("sigma must be nonnegative, got {}", self.fixed.sigma));
        }
        if !(0.0..1.0).contains(&self.fixed.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.fixed.rho));
        }
        self.ensemble()?;
        for &x in &self.grid {
            let (n, k) = self.point(x);
            if n == 0 || k == 0 || k > self.fixed.d {
                return bad(format!("grid value {x} gives N = {n}, K = {k} with D = {}", self.fixed.d));
            }
            if self.methods.iter().any(|m| m.uses_cv_lambda())
                && self.lambda_rule.c_grid.len() > 1
                && n < self.lambda_rule.cv_folds
            {
                return bad(format!("N = {n} is too small for {}-fold cross-validation", self.lambda_rule.cv_folds));
            }
            if self.methods.iter().any(|m| !matches!(m, Method::Omp | Method::RandOmp)) {
                self.lambda_rule
                    .base_level(self.fixed.sigma, self.fixed.d, k, n)
                    .map_err(|e| BenchError::Config(format!("grid value {x}: {e}; set lambda_rule.clamp_k")))?;
            }
        }
        self.lambda_rule.validate()?;
        self.solver.apply().validate().map_err(|e| BenchError::Config(e.to_string()))?;
        if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) || self.bootstrap.resamples == 0 {
            return bad("bootstrap needs level in (0, 1) and at least one resample".into());
        }
        if !(self.baselines.scad_a > 2.0)
            || self.baselines.rand_omp_runs == 0
            || !(self.baselines.rand_omp_temperature > 0.0)
        {
            return bad("baseline settings out of range".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::vary_k_default().validate().unwrap();
    }

    #[test]
    fn vary_k_without_clamp_is_a_config_error() {
        let mut cfg = ExperimentConfig::vary_k_default();
        cfg.lambda_rule.clamp_k = false;
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
        cfg.methods = vec![Method::Omp];
        cfg.validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let cfg = ExperimentConfig::vary_k_default();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);

        let partial = r#"{"grid": [20, 40], "trials": 3, "methods": ["ProjSTG", "omp"]}"#;
        let cfg = ExperimentConfig::from_json(partial).unwrap();
        assert_eq!(cfg.methods, vec![Method::ProjStg, Method::Omp]);
        assert_eq!(cfg.fixed.d, 64);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            r#"{"grid": []}"#,
            r#"{"grid": [20, 20]}"#,
            r#"{"trials": 0}"#,
            r#"{"lambda_rule": {"c_grid": [20.0]}}"#,
            r#"{"fixed": {"ensemble": "cauchy"}}"#,
            r#"{"unknown_field": 1}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(BenchError::Config(_))), "{text}");
        }
    }

    #[test]
    fn method_names() {
        assert_eq!("projstg".parse::<Method>().unwrap(), Method::ProjStg);
        assert_eq!("rand_omp".parse::<Method>().unwrap(), Method::RandOmp);
        assert_eq!("LASSO".parse::<Method>().unwrap(), Method::Lasso);
        assert!("ridge".parse::<Method>().is_err());
    }
}
