//! Projected stochastic-gate estimator and its gradient-only counterpart.
//!
//! Both minimize the gated risk
//!
//! ```text
//! V(theta, mu) = E_z ||y - X (theta ⊙ z(mu))||² / N + lambda * sum_d Phi(mu_d / tau)
//! ```
//!
//! over coefficients `theta` and gate means `mu`. The projected variant sets
//! `theta` each epoch to the exact minimizer at fixed `mu`,
//! `(XᵀX ⊙ Q)⁻¹ ((Xᵀy) ⊙ q)`, and only takes Adam steps on `mu`; the plain
//! variant takes Adam steps on both. Gradients in `mu` are pathwise through the
//! clip, with zero derivative on the saturated side and at the boundary.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::gates::{
    exact_gate_moments, gate_is_active, gate_penalty, gate_penalty_derivative, gate_value,
    GateDraws, GateMoments, GateParams,
};
use crate::linalg::{gram, solve_spd_with_jitter};
use crate::linmodel::LinearDataset;
use crate::optim::{Adam, AdamSettings};
use crate::{stream, Stream};

/// Gate means are kept inside this box so `Phi` and `phi` never see overflow.
pub const MU_CAP: f64 = 1e3;

/// Initial gate mean for every coordinate.
pub const MU_INIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    MonteCarlo,
    Exact,
}

/// Stop once `max_d |Δmu_d| < tolerance` for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    pub tolerance: f64,
    pub patience: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { tolerance: 1e-6, patience: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Penalty weight on the expected number of open gates.
    pub lambda: f64,
    /// Gate noise standard deviation.
    pub tau: f64,
    /// Samples used to estimate `q` and `Q` (Monte Carlo mode).
    pub moment_samples: usize,
    /// Gate vectors drawn per epoch for the risk and its gradient.
    pub risk_samples: usize,
    /// Maximum number of epochs.
    pub epochs: usize,
    pub adam: AdamSettings,
    pub moment_mode: MomentMode,
    pub ridge_jitter: f64,
    pub early_stop: Option<EarlyStop>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            tau: 0.5,
            moment_samples: 20,
            risk_samples: 20,
            epochs: 1000,
            adam: AdamSettings::default(),
            moment_mode: MomentMode::MonteCarlo,
            ridge_jitter: 1e-10,
            early_stop: Some(EarlyStop::default()),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.moment_samples == 0 || self.risk_samples == 0 || self.epochs == 0 {
            return Err(invalid("moment samples, risk samples and epochs must all be at least 1"));
        }
        if !(self.ridge_jitter >= 0.0) {
            return Err(invalid(format!("ridge jitter must be nonnegative, got {}", self.ridge_jitter)));
        }
        self.adam.validate().map_err(Error::InvalidArgument)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub theta: Array1<f64>,
    pub mu: Array1<f64>,
    /// `(epoch, V)` with epochs counted from 1.
    pub risk_trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Array1<f64>,
    pub support_hat: Vec<usize>,
    pub theta: Array1<f64>,
    pub mu: Array1<f64>,
    pub epochs_run: usize,
    pub final_risk: f64,
    pub risk_trace: Vec<(usize, f64)>,
}

/// Sufficient statistics of a least-squares problem: `XᵀX`, `Xᵀy`, `yᵀy`, `N`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    pub yty: f64,
    pub rows: usize,
}

impl Quadratic {
    pub fn new(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(invalid(format!(
                "design has {} rows but the response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 {
            return Err(invalid("empty design"));
        }
        Ok(Self { gram: gram(x), xty: x.t().dot(&y), yty: y.dot(&y), rows: x.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    /// `||y - X w||² / N` through the Gram matrix.
    pub fn data_risk(&self, w: ArrayView1<'_, f64>) -> f64 {
        let gw = self.gram.dot(&w);
        (self.yty - 2.0 * w.dot(&self.xty) + w.dot(&gw)) / self.rows as f64
    }

    /// `E_z ||y - X (theta ⊙ z)||² / N` under the given gate moments.
    pub fn expected_data_risk(&self, theta: ArrayView1<'_, f64>, moments: &GateMoments) -> f64 {
        let d = self.dim();
        let mut quad = 0.0;
        for i in 0..d {
            let ti = theta[i];
            for j in 0..d {
                quad += ti * self.gram[[i, j]] * moments.second[[i, j]] * theta[j];
            }
        }
        let lin: f64 = (0..d).map(|i| theta[i] * self.xty[i] * moments.q[i]).sum();
        (self.yty - 2.0 * lin + quad) / self.rows as f64
    }

    /// The gated normal equations `(XᵀX ⊙ Q, (Xᵀy) ⊙ q)`.
    pub fn gated_system(&self, moments: &GateMoments) -> (Array2<f64>, Array1<f64>) {
        (&self.gram * &moments.second, &self.xty * &moments.q)
    }

    /// Minimizer of the expected data risk over `theta` at fixed gate moments.
    pub fn project(&self, moments: &GateMoments, ridge_jitter: f64) -> Result<Array1<f64>> {
        if moments.dim() != self.dim() {
            return Err(invalid(format!(
                "gate moments have dimension {} but the design has {} columns",
                moments.dim(),
                self.dim()
            )));
        }
        let (a, b) = self.gated_system(moments);
        solve_spd_with_jitter(a.view(), b.view(), ridge_jitter)
    }

    /// Frozen-noise risk and its pathwise gradients at `(theta, mu)`.
    pub fn evaluate(
        &self,
        theta: ArrayView1<'_, f64>,
        mu: ArrayView1<'_, f64>,
        tau: f64,
        lambda: f64,
        draws: &GateDraws,
    ) -> RiskEvaluation {
        let d = self.dim();
        let l = draws.samples();
        let n = self.rows as f64;
        let g = self.gram.as_slice().expect("standard layout");
        let mut data = 0.0;
        let mut grad_mu = Array1::zeros(d);
        let mut grad_theta = Array1::zeros(d);
        let mut w = vec![0.0; d];
        let mut z = vec![0.0; d];
        for delta in draws.noise().rows() {
            for i in 0..d {
                z[i] = gate_value(mu[i], delta[i]);
                w[i] = theta[i] * z[i];
            }
            let mut quad = 0.0;
            let mut lin = 0.0;
            for i in 0..d {
                let row = &g[i * d..(i + 1) * d];
                let gw: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
                quad += w[i] * gw;
                lin += w[i] * self.xty[i];
                // d/dw_i of ||y - Xw||² is 2 (Gw - Xᵀy)_i.
                let r = gw - self.xty[i];
                grad_theta[i] += r * z[i];
                if gate_is_active(mu[i], delta[i]) {
                    grad_mu[i] += r * theta[i];
                }
            }
            data += self.yty - 2.0 * lin + quad;
        }
        let scale = 2.0 / (n * l as f64);
        grad_mu.mapv_inplace(|v| v * scale);
        grad_theta.mapv_inplace(|v| v * scale);
        for i in 0..d {
            grad_mu[i] += lambda * gate_penalty_derivative(mu[i], tau);
        }
        RiskEvaluation {
            risk: data / (n * l as f64) + lambda * gate_penalty(mu, tau),
            grad_mu,
            grad_theta,
        }
    }
}

/// Monte Carlo risk and its gradients under one frozen batch of gate noise.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEvaluation {
    pub risk: f64,
    pub grad_mu: Array1<f64>,
    pub grad_theta: Array1<f64>,
}

/// Closed-form coefficient update `(XᵀX ⊙ Q)⁻¹ ((Xᵀy) ⊙ q)`.
///
/// Falls back to a ridge of `ridge_jitter * mean(diag)` (then ten times that)
/// when the gated system is not numerically positive definite.
pub fn projected_theta(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    moments: &GateMoments,
    ridge_jitter: f64,
) -> Result<Array1<f64>> {
    Quadratic::new(x, y)?.project(moments, ridge_jitter)
}

/// Penalized risk under a given noise batch, evaluated directly on `X`.
pub fn risk_with_draws(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    theta: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    tau: f64,
    lambda: f64,
    draws: &GateDraws,
) -> f64 {
    let n = x.nrows() as f64;
    let z = draws.gates(mu);
    let mut total = 0.0;
    for zl in z.rows() {
        let w = &theta * &zl;
        let r = &y - &x.dot(&w);
        total += r.dot(&r);
    }
    total / (n * draws.samples() as f64) + lambda * gate_penalty(mu, tau)
}

/// Penalized risk with `samples` fresh gate vectors.
#[allow(clippy::too_many_arguments)]
pub fn mc_risk<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    theta: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    tau: f64,
    lambda: f64,
    samples: usize,
    rng: &mut R,
) -> f64 {
    assert!(samples >= 1, "risk estimation needs at least one sample");
    let draws = GateDraws::sample(mu.len(), samples, tau, rng);
    risk_with_draws(x, y, theta, mu, tau, lambda, &draws)
}

/// Pathwise gradient of the frozen-noise risk with respect to `mu`.
pub fn mu_gradient(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    theta: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    tau: f64,
    lambda: f64,
    draws: &GateDraws,
) -> Result<Array1<f64>> {
    Ok(Quadratic::new(x, y)?.evaluate(theta, mu, tau, lambda, draws).grad_mu)
}

/// Gradient of the frozen-noise risk with respect to `theta`.
pub fn theta_gradient(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    theta: ArrayView1<'_, f64>,
    mu: ArrayView1<'_, f64>,
    draws: &GateDraws,
) -> Result<Array1<f64>> {
    // The penalty does not involve theta.
    Ok(Quadratic::new(x, y)?.evaluate(theta, mu, 1.0, 0.0, draws).grad_theta)
}

/// Indices of the `k` largest magnitudes, ties to the lower index, returned sorted.
pub fn extract_support(beta: ArrayView1<'_, f64>, k: usize) -> Result<Vec<usize>> {
    if k > beta.len() {
        return Err(invalid(format!("cannot select {k} indices from {} coefficients", beta.len())));
    }
    let mut order: Vec<usize> = (0..beta.len()).collect();
    order.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    let mut support = order[..k].to_vec();
    support.sort_unstable();
    Ok(support)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Closed-form `theta`, Adam on `mu`.
    Projected,
    /// Adam on both `theta` and `mu`.
    Plain,
}

/// Per-epoch diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub risk: f64,
    pub max_mu_change: f64,
    /// Expected data risk under this epoch's moments before and after the
    /// projection; `None` for the plain variant.
    pub projection: Option<(f64, f64)>,
}

/// Epoch-by-epoch driver shared by both estimators.
#[derive(Debug, Clone)]
pub struct StgSolver {
    variant: Variant,
    config: SolverConfig,
    quad: Quadratic,
    state: SolverState,
    mu_opt: Adam,
    theta_opt: Adam,
    rng: Stream,
    epoch: usize,
}

impl StgSolver {
    pub fn new(data: &LinearDataset, variant: Variant, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let quad = Quadratic::new(data.x.view(), data.y.view())?;
        let d = quad.dim();
        Ok(Self {
            variant,
            mu_opt: Adam::new(d, config.adam),
            theta_opt: Adam::new(d, config.adam),
            rng: stream(config.seed),
            state: SolverState {
                theta: Array1::zeros(d),
                mu: Array1::from_elem(d, MU_INIT),
                risk_trace: Vec::with_capacity(config.epochs),
            },
            config,
            quad,
            epoch: 0,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    fn moments(&mut self) -> Result<GateMoments> {
        let params = GateParams::new(self.state.mu.clone(), self.config.tau)?;
        Ok(match self.config.moment_mode {
            MomentMode::Exact => exact_gate_moments(&params),
            MomentMode::MonteCarlo => {
                GateDraws::sample(params.dim(), self.config.moment_samples, params.tau, &mut self.rng)
                    .moments(params.mu.view())
            }
        })
    }

    /// Runs one epoch.
    pub fn epoch(&mut self) -> Result<EpochReport> {
        self.epoch += 1;
        let epoch = self.epoch;
        let (tau, lambda) = (self.config.tau, self.config.lambda);

        let projection = if self.variant == Variant::Projected {
            let moments = self.moments()?;
            let before = self.quad.expected_data_risk(self.state.theta.view(), &moments);
            self.state.theta = self.quad.project(&moments, self.config.ridge_jitter)?;
            let after = self.quad.expected_data_risk(self.state.theta.view(), &moments);
            Some((before, after))
        } else {
            None
        };
        check_finite(&self.state.theta, epoch, "theta")?;

        let draws = GateDraws::sample(self.quad.dim(), self.config.risk_samples, tau, &mut self.rng);
        let eval = self.quad.evaluate(self.state.theta.view(), self.state.mu.view(), tau, lambda, &draws);
        if !eval.risk.is_finite() {
            return Err(Error::Divergence { epoch, what: "risk" });
        }

        let previous_mu = self.state.mu.clone();
        self.mu_opt.step(&mut self.state.mu, eval.grad_mu.view());
        self.state.mu.mapv_inplace(|m| m.clamp(-MU_CAP, MU_CAP));
        if self.variant == Variant::Plain {
            self.theta_opt.step(&mut self.state.theta, eval.grad_theta.view());
            check_finite(&self.state.theta, epoch, "theta")?;
        }
        check_finite(&self.state.mu, epoch, "mu")?;

        let max_mu_change = self
            .state
            .mu
            .iter()
            .zip(previous_mu.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.state.risk_trace.push((epoch, eval.risk));
        Ok(EpochReport { epoch, risk: eval.risk, max_mu_change, projection })
    }

    /// Runs up to the configured number of epochs, honouring early stopping.
    pub fn run(&mut self) -> Result<()> {
        let mut calm = 0;
        while self.epoch < self.config.epochs {
            let report = self.epoch()?;
            if let Some(stop) = self.config.early_stop {
                if report.max_mu_change < stop.tolerance {
                    calm += 1;
                    if calm >= stop.patience {
                        break;
                    }
                } else {
                    calm = 0;
                }
            }
        }
        Ok(())
    }

    /// `beta = theta ⊙ E[z(mu)]` with exact gate means, then top-`k` support.
    pub fn finish(self, k: usize) -> Result<FitResult> {
        let params = GateParams::new(self.state.mu.clone(), self.config.tau)?;
        let q = exact_gate_moments(&params).q;
        let beta_hat = &self.state.theta * &q;
        let support_hat = extract_support(beta_hat.view(), k)?;
        let final_risk = self.state.risk_trace.last().map_or(f64::NAN, |r| r.1);
        Ok(FitResult {
            beta_hat,
            support_hat,
            theta: self.state.theta,
            mu: self.state.mu,
            epochs_run: self.epoch,
            final_risk,
            risk_trace: self.state.risk_trace,
        })
    }
}

fn check_finite(v: &Array1<f64>, epoch: usize, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { epoch, what })
    }
}

fn fit(data: &LinearDataset, k: usize, config: &SolverConfig, variant: Variant) -> Result<FitResult> {
    if k > data.cols() {
        return Err(invalid(format!("K = {k} exceeds the {} available features", data.cols())));
    }
    let mut solver = StgSolver::new(data, variant, config.clone())?;
    solver.run()?;
    solver.finish(k)
}

/// Projected-STG: closed-form coefficients, Adam on the gate means.
pub fn fit_projected_stg(data: &LinearDataset, k: usize, config: &SolverConfig) -> Result<FitResult> {
    fit(data, k, config, Variant::Projected)
}

/// Gradient-only STG: Adam on coefficients (from zero) and gate means.
pub fn fit_plain_stg(data: &LinearDataset, k: usize, config: &SolverConfig) -> Result<FitResult> {
    fit(data, k, config, Variant::Plain)
}
