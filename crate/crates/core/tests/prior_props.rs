mod common;

use common::{fd_gradient, normal_vector, random_mixture, rel_err, rng};
use mapga_core::rng::standard_normal;
use mapga_core::{GaussianMixture, PriorModel, Vector};
use proptest::prelude::*;

const TIMES: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 80.0];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tweedie_identity(seed in any::<u64>(), dim in 1usize..5, k in 1usize..4, t in 0.0f64..80.0) {
        let p = random_mixture(seed, dim, k);
        let x = normal_vector(&mut rng(seed ^ 1), dim, 1.0 + t);
        let d = p.denoise(&x, t);
        let tw = &x + p.score(&x, t) * (t * t);
        prop_assert!((d - tw).amax() <= 1e-12 * (1.0 + x.amax()));
    }

    #[test]
    fn score_matches_log_density_gradient(seed in any::<u64>(), dim in 1usize..4, k in 1usize..4) {
        let p = random_mixture(seed, dim, k);
        let mut r = rng(seed ^ 2);
        for t in TIMES {
            let scale = (0.5 + t * t).sqrt();
            let x = normal_vector(&mut r, dim, scale);
            let fd = fd_gradient(|y| p.log_marginal(y, t), &x, 1e-4 * scale.min(1.0));
            let s = p.score(&x, t);
            // Near a stationary point the relative error is meaningless;
            // normalise by the score scale 1/σ_total there.
            let err = (&fd - &s).norm() / s.norm().max(1e-3 / scale);
            prop_assert!(err < 1e-5, "t = {t}: relative error {err:e}");
        }
    }

    #[test]
    fn denoiser_jacobian_symmetric(seed in any::<u64>(), dim in 1usize..6, k in 1usize..4, t in 0.01f64..80.0) {
        let p = random_mixture(seed, dim, k);
        let x = normal_vector(&mut rng(seed ^ 3), dim, 1.0 + t);
        let j = p.denoiser_jacobian(&x, t);
        prop_assert!((&j - j.transpose()).amax() < 1e-10);
    }

    #[test]
    fn denoiser_jacobian_matches_finite_differences(seed in any::<u64>(), k in 1usize..4, t in 0.05f64..20.0) {
        let p = random_mixture(seed, 2, k);
        let x = normal_vector(&mut rng(seed ^ 4), 2, 1.0 + t);
        let j = p.denoiser_jacobian(&x, t);
        let h = 1e-5 * (0.5 + t * t).sqrt();
        for col in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            let fd = (p.denoise(&xp, t) - p.denoise(&xm, t)) / (2.0 * h);
            let want = j.column(col).into_owned();
            prop_assert!((&fd - &want).amax() < 1e-5 * want.amax().max(1.0));
        }
    }
}

fn mixture_1d(weights: &[f64], means: &[f64], vars: &[f64]) -> GaussianMixture {
    GaussianMixture::diagonal(
        weights.to_vec(),
        means.iter().map(|m| Vector::from_element(1, *m)).collect(),
        vars.iter().map(|v| Vector::from_element(1, *v)).collect(),
    )
    .unwrap()
}

#[test]
fn heat_equation_in_sigma_squared() {
    let mixtures = [
        mixture_1d(&[0.5, 0.5], &[-1.5, 1.5], &[0.3, 0.3]),
        mixture_1d(&[0.2, 0.5, 0.3], &[-2.0, 0.1, 1.7], &[0.1, 0.6, 0.25]),
    ];
    for p in &mixtures {
        for s in [0.05f64, 0.3, 1.0, 3.0] {
            for xv in [-2.2, -0.4, 0.0, 0.9, 2.5] {
                let x = Vector::from_element(1, xv);
                let s2 = s * s;
                let ds = 1e-5 * s2;
                let lp = |v: f64| p.log_marginal(&x, v.sqrt());
                let lhs = (lp(s2 + ds) - lp(s2 - ds)) / (2.0 * ds);
                let hx = 1e-5;
                let grad = p.score(&x, s)[0];
                let lap = (p.score(&Vector::from_element(1, xv + hx), s)[0]
                    - p.score(&Vector::from_element(1, xv - hx), s)[0])
                    / (2.0 * hx);
                let rhs = 0.5 * (lap + grad * grad);
                let err = (lhs - rhs).abs() / rhs.abs().max(1e-3);
                assert!(err < 1e-3, "σ = {s}, x = {xv}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn log_marginal_matches_quadrature() {
    // P_σ(x) = ∫ N(x; x₀, σ²) P₀(x₀) dx₀ by composite Simpson on a fine grid.
    let p = mixture_1d(&[0.5, 0.5], &[-1.5, 1.5], &[0.3, 0.3]);
    let sigma = 0.5;
    let n = 40_000;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / n as f64;
    for xv in [0.0, 0.4, -0.8] {
        let mut acc = 0.0;
        for i in 0..=n {
            let x0 = lo + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let prior = p.log_marginal(&Vector::from_element(1, x0), 0.0).exp();
            let kernel = (-(xv - x0) * (xv - x0) / (2.0 * sigma * sigma)).exp()
                / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
            acc += w * prior * kernel;
        }
        let quad = (acc * h / 3.0).ln();
        let exact = p.log_marginal(&Vector::from_element(1, xv), sigma);
        assert!((quad - exact).abs() < 1e-6, "x = {xv}: {quad} vs {exact}");
    }
}

#[test]
fn denoiser_matches_monte_carlo_posterior_mean() {
    // E[x₀ | x_σ] by importance weighting prior draws with N(x; x₀, σ²I).
    let p = random_mixture(11, 2, 3);
    let sigma = 0.7;
    let x = Vector::from_vec(vec![0.4, -0.9]);
    let mut r = rng(5);
    let draws = 1_000_000;
    let mut sw = 0.0;
    let mut swx = Vector::zeros(2);
    let mut samples = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x0 = p.sample(&mut r);
        let w = (-(&x - &x0).norm_squared() / (2.0 * sigma * sigma)).exp();
        sw += w;
        swx.axpy(w, &x0, 1.0);
        samples.push((w, x0));
    }
    let est = &swx / sw;
    let want = p.denoise(&x, sigma);
    for i in 0..2 {
        // Delta-method standard error of a self-normalised estimator.
        let var: f64 = samples
            .iter()
            .map(|(w, x0)| (w * (x0[i] - est[i])).powi(2))
            .sum::<f64>()
            / (sw * sw);
        let se = var.sqrt();
        assert!(
            (est[i] - want[i]).abs() < 3.0 * se,
            "coordinate {i}: {} vs {} (se {se:e})",
            est[i],
            want[i]
        );
    }
}

#[test]
fn score_sweep_on_fixed_mixture() {
    let p = random_mixture(7, 2, 2);
    let mut r = rng(9);
    for t in TIMES {
        for _ in 0..20 {
            let x = standard_normal(2, &mut r) * (1.0 + t);
            let scale = (0.5 + t * t).sqrt();
            let fd = fd_gradient(|y| p.log_marginal(y, t), &x, 1e-4 * scale.min(1.0));
            let s = p.score(&x, t);
            assert!(rel_err(&fd, &s) < 1e-5 || (&fd - &s).norm() < 1e-8 / scale);
        }
    }
}
