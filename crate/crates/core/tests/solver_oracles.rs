use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use stg_core::gates::{exact_gate_moments, GateDraws, GateMoments, GateParams};
use stg_core::linalg::{gram, Cholesky};
use stg_core::linmodel::{generate_dataset, generate_signal, DesignSpec, Ensemble, LinearDataset, SparseSignal};
use stg_core::optim::AdamSettings;
use stg_core::solver::{
    fit_plain_stg, fit_projected_stg, mc_risk, mu_gradient, projected_theta, risk_with_draws, theta_gradient,
    MomentMode, SolverConfig, StgSolver, Variant,
};
use stg_core::{stream, Stream};

fn gaussian(rng: &mut Stream, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

fn vector(rng: &mut Stream, len: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_fn(len, |_| rng.random_range(lo..hi))
}

fn synthetic(n: usize, d: usize, k: usize, sigma: f64, seed: u64) -> LinearDataset {
    let mut rng = stream(seed);
    let signal = generate_signal(d, k, &mut rng).unwrap();
    generate_dataset(&DesignSpec::new(Ensemble::GaussianIid, n, d), &signal, sigma, &mut rng).unwrap()
}

fn rel_err(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let diff = (&a - &b).mapv(|v| v * v).sum().sqrt();
    diff / b.mapv(|v| v * v).sum().sqrt()
}

/// Plain gradient descent on `θᵀAθ - 2θᵀb` until the gradient norm is tiny.
fn gradient_descent_minimizer(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    // Gershgorin bound on the largest eigenvalue gives a safe step.
    let bound = a.rows().into_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / (2.0 * bound);
    let mut theta = Array1::zeros(b.len());
    for _ in 0..5_000_000 {
        let grad = (a.dot(&theta) - b) * 2.0;
        if grad.mapv(|v| v * v).sum().sqrt() <= 1e-10 {
            return theta;
        }
        theta = theta - grad * step;
    }
    panic!("gradient descent did not converge");
}

#[test]
fn projection_matches_gradient_descent_oracle() {
    let mut rng = stream(101);
    for _ in 0..10 {
        let x = gaussian(&mut rng, 30, 8);
        let y = x.dot(&vector(&mut rng, 8, -1.0, 1.0)) + vector(&mut rng, 30, -0.3, 0.3);
        let params = GateParams::new(vector(&mut rng, 8, -0.5, 1.5), 0.5).unwrap();
        let m = exact_gate_moments(&params);
        let theta = projected_theta(x.view(), y.view(), &m, 0.0).unwrap();
        let a = &gram(x.view()) * &m.second;
        let b = &x.t().dot(&y) * &m.q;
        let oracle = gradient_descent_minimizer(&a, &b);
        assert!(rel_err(theta.view(), oracle.view()) <= 1e-6);
    }
}

#[test]
fn gated_gram_is_positive_definite_even_when_underdetermined() {
    let mut rng = stream(202);
    for i in 0..40 {
        let (n, d) = if i % 2 == 0 { (40, 64) } else { (30, 8) };
        let x = gaussian(&mut rng, n, d);
        let params = GateParams::new(vector(&mut rng, d, -0.5, 1.5), 0.5).unwrap();
        let m = exact_gate_moments(&params);
        let a = &gram(x.view()) * &m.second;
        assert!(Cholesky::factor(a.view()).is_some(), "instance {i} (N = {n}, D = {d})");
        // XᵀX alone is singular when N < D.
        if n < d {
            assert!(Cholesky::factor(gram(x.view()).view()).is_none());
        }
    }
}

#[test]
fn open_gates_reproduce_least_squares() {
    let mut rng = stream(303);
    let x = gaussian(&mut rng, 50, 6);
    let y = vector(&mut rng, 50, -2.0, 2.0);
    let ones = GateMoments { q: Array1::ones(6), second: Array2::ones((6, 6)), sample_count: 1 };
    let theta = projected_theta(x.view(), y.view(), &ones, 0.0).unwrap();
    // Normal equations solved independently through the residual orthogonality condition.
    let resid = &y - &x.dot(&theta);
    let ortho = x.t().dot(&resid);
    assert!(ortho.iter().all(|v| v.abs() < 1e-10 * y.len() as f64));
    let ols = Cholesky::factor(gram(x.view()).view()).unwrap().solve(x.t().dot(&y).view());
    assert!(rel_err(theta.view(), ols.view()) < 1e-10);
}

#[test]
fn mu_gradient_matches_finite_differences() {
    let mut rng = stream(404);
    let (n, d, l, h) = (20, 4, 8, 1e-5);
    let mut checked = 0;
    for _ in 0..25 {
        let x = gaussian(&mut rng, n, d);
        let y = vector(&mut rng, n, -2.0, 2.0);
        let theta = vector(&mut rng, d, -1.5, 1.5);
        let mu = vector(&mut rng, d, -0.2, 1.2);
        let lambda = rng.random_range(0.0..0.5);
        let draws = GateDraws::sample(d, l, 0.5, &mut rng);
        let grad = mu_gradient(x.view(), y.view(), theta.view(), mu.view(), 0.5, lambda, &draws).unwrap();
        for j in 0..d {
            let near_kink = draws.noise().column(j).iter().any(|dl| {
                let v = mu[j] + dl;
                v.abs() < 1e-4 || (v - 1.0).abs() < 1e-4
            });
            if near_kink {
                continue;
            }
            let mut up = mu.clone();
            let mut down = mu.clone();
            up[j] += h;
            down[j] -= h;
            let r = |m: &Array1<f64>| risk_with_draws(x.view(), y.view(), theta.view(), m.view(), 0.5, lambda, &draws);
            let fd = (r(&up) - r(&down)) / (2.0 * h);
            assert!((fd - grad[j]).abs() <= 1e-4 * grad[j].abs().max(1e-6), "fd {fd} vs {}", grad[j]);
            checked += 1;
        }
    }
    assert!(checked >= 80);
}

#[test]
fn theta_gradient_matches_finite_differences() {
    let mut rng = stream(505);
    let (n, d, l, h) = (20, 5, 8, 1e-5);
    for _ in 0..10 {
        let x = gaussian(&mut rng, n, d);
        let y = vector(&mut rng, n, -2.0, 2.0);
        let mu = vector(&mut rng, d, -0.2, 1.2);
        let draws = GateDraws::sample(d, l, 0.5, &mut rng);
        for theta in [Array1::zeros(d), vector(&mut rng, d, -1.0, 1.0)] {
            let grad = theta_gradient(x.view(), y.view(), theta.view(), mu.view(), &draws).unwrap();
            for j in 0..d {
                let mut up = theta.clone();
                let mut down = theta.clone();
                up[j] += h;
                down[j] -= h;
                let r = |t: &Array1<f64>| risk_with_draws(x.view(), y.view(), t.view(), mu.view(), 0.5, 0.0, &draws);
                let fd = (r(&up) - r(&down)) / (2.0 * h);
                assert!((fd - grad[j]).abs() <= 1e-4 * grad[j].abs().max(1e-6));
            }
        }
    }
}

#[test]
fn saturated_or_zero_coefficients_pass_only_the_penalty_gradient() {
    let mut rng = stream(606);
    let x = gaussian(&mut rng, 20, 3);
    let y = vector(&mut rng, 20, -1.0, 1.0);
    let draws = GateDraws::sample(3, 8, 0.5, &mut rng);
    let closed = Array1::from_elem(3, -10.0);
    let g = mu_gradient(x.view(), y.view(), Array1::ones(3).view(), closed.view(), 0.5, 1.0, &draws).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-20));

    let mu = vector(&mut rng, 3, 0.0, 1.0);
    let g = mu_gradient(x.view(), y.view(), Array1::zeros(3).view(), mu.view(), 0.5, 0.7, &draws).unwrap();
    for j in 0..3 {
        let u = mu[j] / 0.5;
        let pdf = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((g[j] - 0.7 * pdf / 0.5).abs() < 1e-15);
    }
}

#[test]
fn risk_examples() {
    let mut rng = stream(707);
    let x = gaussian(&mut rng, 15, 4);
    let y = vector(&mut rng, 15, -1.0, 1.0);
    let mu = vector(&mut rng, 4, 0.0, 1.0);
    let v = mc_risk(x.view(), y.view(), Array1::zeros(4).view(), mu.view(), 0.5, 0.0, 5, &mut rng);
    assert!((v - y.dot(&y) / 15.0).abs() < 1e-12);

    let beta = Array1::from(vec![1.0, 0.0, -1.0, 0.5]);
    let clean = x.dot(&beta);
    let open = Array1::from_elem(4, 100.0);
    assert!(mc_risk(x.view(), clean.view(), beta.view(), open.view(), 0.5, 0.0, 5, &mut rng).abs() < 1e-20);

    let v = mc_risk(x.view(), Array1::zeros(15).view(), Array1::zeros(4).view(), Array1::zeros(4).view(), 0.5, 1.0, 3, &mut rng);
    assert_eq!(v, 2.0);
}

#[test]
fn exact_projection_never_raises_the_expected_data_risk() {
    let data = synthetic(40, 12, 3, 0.5, 808);
    let config = SolverConfig { lambda: 0.05, moment_mode: MomentMode::Exact, epochs: 150, seed: 9, ..Default::default() };
    let mut solver = StgSolver::new(&data, Variant::Projected, config).unwrap();
    for _ in 0..150 {
        let report = solver.epoch().unwrap();
        let (before, after) = report.projection.unwrap();
        assert!(after <= before + 1e-9, "epoch {}: {before} -> {after}", report.epoch);
    }
}

#[test]
fn fits_are_deterministic_per_seed() {
    let data = synthetic(40, 16, 3, 0.5, 909);
    let config = SolverConfig { lambda: 0.1, seed: 5, epochs: 200, ..Default::default() };
    for fit in [fit_projected_stg, fit_plain_stg] {
        let a = fit(&data, 3, &config).unwrap();
        let b = fit(&data, 3, &config).unwrap();
        assert_eq!(a, b);
        let c = fit(&data, 3, &SolverConfig { seed: 6, ..config.clone() }).unwrap();
        assert_ne!(a.mu, c.mu);
    }
}

#[test]
fn zero_learning_rate_freezes_the_plain_variant() {
    let data = synthetic(30, 6, 2, 0.5, 1001);
    let adam = AdamSettings { learning_rate: 0.0, ..Default::default() };
    let config = SolverConfig { adam, epochs: 1, ..Default::default() };
    let mut solver = StgSolver::new(&data, Variant::Plain, config).unwrap();
    let (theta, mu) = (solver.state().theta.clone(), solver.state().mu.clone());
    solver.epoch().unwrap();
    assert_eq!(solver.state().theta, theta);
    assert_eq!(solver.state().mu, mu);
}

/// Exhaustive best-subset support, computed independently with normal equations.
fn best_subset(data: &LinearDataset, k: usize) -> Vec<usize> {
    let d = data.cols();
    let mut best = (f64::INFINITY, Vec::new());
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let xs = data.x.select(ndarray::Axis(1), &subset);
        let coef = Cholesky::factor(gram(xs.view()).view()).unwrap().solve(xs.t().dot(&data.y).view());
        let r = &data.y - &xs.dot(&coef);
        let rss = r.dot(&r);
        if rss < best.0 {
            best = (rss, subset.clone());
        }
        // next k-subset in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| subset[i] < d - k + i) else { break };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    best.1
}

#[test]
fn noiseless_recovery_agrees_with_best_subset() {
    let config = SolverConfig { lambda: 0.05, ..Default::default() };
    let mut hits = 0;
    let mut plain_agree = 0;
    for seed in 0..100 {
        let data = synthetic(100, 8, 2, 0.0, 5_000 + seed);
        let truth = &data.truth.as_ref().unwrap().support;
        assert_eq!(&best_subset(&data, 2), truth);
        let fit = fit_projected_stg(&data, 2, &SolverConfig { seed, ..config.clone() }).unwrap();
        hits += usize::from(&fit.support_hat == truth);
        let plain = fit_plain_stg(&data, 2, &SolverConfig { seed, ..config.clone() }).unwrap();
        plain_agree += usize::from(plain.support_hat == fit.support_hat);
    }
    assert!(hits >= 98, "{hits}/100");
    assert!(plain_agree >= 90, "{plain_agree}/100");
}

#[test]
fn full_support_and_scalar_instance() {
    let data = synthetic(20, 5, 3, 0.5, 1101);
    let fit = fit_projected_stg(&data, 5, &SolverConfig::default()).unwrap();
    assert_eq!(fit.support_hat, vec![0, 1, 2, 3, 4]);

    let x = Array2::ones((50, 1));
    let signal = SparseSignal::from_beta(Array1::from(vec![1.0]));
    let y = x.dot(&signal.beta);
    let data = LinearDataset { x, y, sigma: 0.0, truth: Some(signal) };
    let fit = fit_projected_stg(&data, 1, &SolverConfig { lambda: 0.0, ..Default::default() }).unwrap();
    assert!((fit.beta_hat[0] - 1.0).abs() < 1e-2, "{}", fit.beta_hat[0]);
}

#[test]
fn invalid_configs_are_rejected() {
    let data = synthetic(20, 5, 2, 0.5, 1201);
    for bad in [
        SolverConfig { tau: 0.0, ..Default::default() },
        SolverConfig { lambda: -1.0, ..Default::default() },
        SolverConfig { moment_samples: 0, ..Default::default() },
        SolverConfig { epochs: 0, ..Default::default() },
    ] {
        assert!(matches!(fit_projected_stg(&data, 2, &bad), Err(stg_core::Error::InvalidArgument(_))));
    }
    assert!(fit_projected_stg(&data, 6, &SolverConfig::default()).is_err());
}
