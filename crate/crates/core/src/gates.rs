//! Clipped-Gaussian stochastic gates.
//!
//! A gate is `z = clip(mu + delta, 0, 1)` with `delta ~ N(0, tau^2)`. This
//! module owns everything that depends only on the gate law: sampling, the
//! expected-open-gates penalty `sum Phi(mu / tau)`, and the first two moments
//! `q = E[z]` and `Q = E[z zᵀ]`, either exactly or by Monte Carlo.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, `0.5 * erfc(-x / sqrt(2))`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `x * phi(x)`, taken as 0 in the infinite limits.
fn x_pdf(x: f64) -> f64 {
    if x.is_finite() {
        x * std_normal_pdf(x)
    } else {
        0.0
    }
}

/// Gate means and the shared noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub mu: Array1<f64>,
    pub tau: f64,
}

impl GateParams {
    pub fn new(mu: Array1<f64>, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if let Some(d) = mu.iter().position(|m| !m.is_finite()) {
            return Err(invalid(format!("gate mean mu[{d}] is not finite")));
        }
        Ok(Self { mu, tau })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("gate noise tau must be positive and finite, got {tau}")))
    }
}

/// First and second gate moments.
///
/// `sample_count == 0` marks moments computed in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMoments {
    pub q: Array1<f64>,
    pub second: Array2<f64>,
    pub sample_count: usize,
}

impl GateMoments {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_exact(&self) -> bool {
        self.sample_count == 0
    }
}

/// The gate value for a given noise draw.
#[inline]
pub fn gate_value(mu_d: f64, delta: f64) -> f64 {
    (mu_d + delta).clamp(0.0, 1.0)
}

/// Whether the gate passes gradient, i.e. `0 < mu + delta < 1` strictly.
#[inline]
pub fn gate_is_active(mu_d: f64, delta: f64) -> bool {
    let v = mu_d + delta;
    v > 0.0 && v < 1.0
}

/// Draws one gate value.
pub fn sample_gate<R: Rng + ?Sized>(mu_d: f64, tau: f64, rng: &mut R) -> f64 {
    debug_assert!(tau > 0.0 && !mu_d.is_nan());
    let xi: f64 = rng.sample(StandardNormal);
    gate_value(mu_d, tau * xi)
}

/// Expected number of open gates, `sum_d Phi(mu_d / tau)`.
pub fn gate_penalty(mu: ArrayView1<'_, f64>, tau: f64) -> f64 {
    mu.iter().map(|&m| std_normal_cdf(m / tau)).sum()
}

/// Derivative of `Phi(mu_d / tau)` with respect to `mu_d`.
#[inline]
pub fn gate_penalty_derivative(mu_d: f64, tau: f64) -> f64 {
    std_normal_pdf(mu_d / tau) / tau
}

/// `(E[z], E[z^2])` for a single clipped-Gaussian gate.
pub fn exact_gate_pair(mu_d: f64, tau: f64) -> (f64, f64) {
    let a = -mu_d / tau;
    let b = (1.0 - mu_d) / tau;
    let mass_inside = std_normal_cdf(b) - std_normal_cdf(a);
    let upper_tail = std_normal_cdf(-b);
    let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));

    let first = mu_d * mass_inside + tau * (pa - pb) + upper_tail;
    // E[(mu + tau xi)^2 ; a < xi < b] + P(xi > b)
    let second = mu_d * mu_d * mass_inside
        + 2.0 * mu_d * tau * (pa - pb)
        + tau * tau * (mass_inside + x_pdf(a) - x_pdf(b))
        + upper_tail;

    let first = first.clamp(0.0, 1.0);
    let second = second.clamp(first * first, 1.0);
    (first, second)
}

/// Closed-form gate moments; off-diagonals use independence, `Q_ij = q_i q_j`.
pub fn exact_gate_moments(params: &GateParams) -> GateMoments {
    let d = params.dim();
    let mut q = Array1::zeros(d);
    let mut diag = Array1::zeros(d);
    for (i, &m) in params.mu.iter().enumerate() {
        let (e1, e2) = exact_gate_pair(m, params.tau);
        q[i] = e1;
        diag[i] = e2;
    }
    let mut second = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            second[[i, j]] = if i == j { diag[i] } else { q[i] * q[j] };
        }
    }
    GateMoments { q, second, sample_count: 0 }
}

/// Empirical gate moments from `m` independent gate vectors.
pub fn mc_gate_moments<R: Rng + ?Sized>(
    params: &GateParams,
    m: usize,
    rng: &mut R,
) -> Result<GateMoments> {
    if m == 0 {
        return Err(invalid("Monte Carlo moment estimation needs at least one sample"));
    }
    let draws = GateDraws::sample(params.dim(), m, params.tau, rng);
    Ok(draws.moments(params.mu.view()))
}

/// A frozen batch of gate noise, one row per Monte Carlo sample.
///
/// Keeping the raw `delta` values (rather than the gates) lets the same noise
/// be re-applied at perturbed means, which is what pathwise gradients and
/// their finite-difference checks need.
#[derive(Debug, Clone, PartialEq)]
pub struct GateDraws {
    delta: Array2<f64>,
}

impl GateDraws {
    /// Draws `samples x dim` noise values in row-major order from one stream.
    pub fn sample<R: Rng + ?Sized>(dim: usize, samples: usize, tau: f64, rng: &mut R) -> Self {
        let mut delta = Array2::zeros((samples, dim));
        for v in delta.iter_mut() {
            let xi: f64 = rng.sample(StandardNormal);
            *v = tau * xi;
        }
        Self { delta }
    }

    pub fn from_noise(delta: Array2<f64>) -> Self {
        Self { delta }
    }

    pub fn noise(&self) -> &Array2<f64> {
        &self.delta
    }

    pub fn samples(&self) -> usize {
        self.delta.nrows()
    }

    pub fn dim(&self) -> usize {
        self.delta.ncols()
    }

    /// Gate values at `mu`, one row per sample.
    pub fn gates(&self, mu: ArrayView1<'_, f64>) -> Array2<f64> {
        assert_eq!(mu.len(), self.dim());
        let mut z = self.delta.clone();
        for mut row in z.rows_mut() {
            for (v, &m) in row.iter_mut().zip(mu.iter()) {
                *v = gate_value(m, *v);
            }
        }
        z
    }

    /// Sample mean of `z` and of `z zᵀ` at `mu`.
    pub fn moments(&self, mu: ArrayView1<'_, f64>) -> GateMoments {
        let z = self.gates(mu);
        let m = self.samples();
        let d = self.dim();
        let inv = 1.0 / m as f64;
        let q = z.sum_axis(ndarray::Axis(0)) * inv;
        let mut second = Array2::zeros((d, d));
        for row in z.rows() {
            let row = row.as_slice().expect("standard layout");
            for i in 0..d {
                let zi = row[i];
                if zi == 0.0 {
                    continue;
                }
                for j in i..d {
                    second[[i, j]] += zi * row[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = second[[i, j]] * inv;
                second[[i, j]] = v;
                second[[j, i]] = v;
            }
        }
        GateMoments { q, second, sample_count: m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream;
    use ndarray::array;

    /// Taylor series for erf, independent of the erfc routine used above.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn clip_identity_and_bounds() {
        assert_eq!(gate_value(0.5, 0.0), 0.5);
        assert_eq!(gate_value(2.0, 0.0), 1.0);
        assert_eq!(gate_value(-3.0, 0.5), 0.0);
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(gate_penalty(array![0.0, 0.0, 0.0].view(), 0.7), 1.5);
        assert!((gate_penalty(array![100.0].view(), 0.5) - 1.0).abs() < 1e-12);
        let oracle = 0.5 * (1.0 + erf_series(1.0 / 2f64.sqrt()));
        let got = gate_penalty(array![0.5].view(), 0.5);
        assert!((got - oracle).abs() < 1e-15, "{got} vs {oracle}");
        assert!((got - 0.841344746).abs() < 1e-9);
    }

    #[test]
    fn cdf_matches_series_on_a_grid() {
        for i in -30..=30 {
            let x = i as f64 * 0.1;
            let oracle = 0.5 * (1.0 + erf_series(x / 2f64.sqrt()));
            assert!((std_normal_cdf(x) - oracle).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn exact_moments_degenerate_and_saturated() {
        let (q, qq) = exact_gate_pair(0.5, 1e-9);
        assert!((q - 0.5).abs() < 1e-9 && (qq - 0.25).abs() < 1e-9);
        let (q, qq) = exact_gate_pair(10.0 * 0.5 + 1.0, 0.5);
        assert!((q - 1.0).abs() < 1e-9 && (qq - 1.0).abs() < 1e-9);
        let (q, qq) = exact_gate_pair(-100.0, 0.5);
        assert_eq!((q, qq), (0.0, 0.0));
    }

    #[test]
    fn exact_moments_structure() {
        let p = GateParams::new(array![-1.0, 0.25, 0.5, 2.0], 0.5).unwrap();
        let m = exact_gate_moments(&p);
        assert!(m.is_exact());
        for i in 0..4 {
            assert!(m.second[[i, i]] >= m.q[i] * m.q[i]);
            for j in 0..4 {
                assert_eq!(m.second[[i, j]], m.second[[j, i]]);
                if i != j {
                    assert_eq!(m.second[[i, j]] - m.q[i] * m.q[j], 0.0);
                }
            }
        }
    }

    #[test]
    fn single_forced_sample() {
        let draws = GateDraws::from_noise(array![[0.0, 0.0]]);
        let m = draws.moments(array![0.5, 0.5].view());
        assert_eq!(m.q, array![0.5, 0.5]);
        assert_eq!(m.second, array![[0.25, 0.25], [0.25, 0.25]]);
        assert_eq!(m.sample_count, 1);
    }

    #[test]
    fn closed_gate_has_zero_moments() {
        let p = GateParams::new(array![-100.0, 0.5], 0.5).unwrap();
        let m = mc_gate_moments(&p, 50, &mut stream(3)).unwrap();
        assert_eq!(m.q[0], 0.0);
        assert_eq!(m.second[[0, 0]], 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        let p = GateParams::new(array![0.5], 0.5).unwrap();
        assert!(mc_gate_moments(&p, 0, &mut stream(0)).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GateParams::new(array![0.5], 0.0).is_err());
        assert!(GateParams::new(array![f64::NAN], 0.5).is_err());
    }

    #[test]
    fn mc_is_deterministic_per_stream() {
        let p = GateParams::new(array![0.1, 0.7, 1.3], 0.5).unwrap();
        let a = mc_gate_moments(&p, 100, &mut stream(11)).unwrap();
        let b = mc_gate_moments(&p, 100, &mut stream(11)).unwrap();
        assert_eq!(a, b);
    }
}
