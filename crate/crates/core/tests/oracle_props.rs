mod common;

use common::{normal_vector, random_gaussian, random_spd, rng};
use mapga_core::forward_op::simulate_measurement;
use mapga_core::oracle::{
    gaussian_posterior_logpdf, gaussian_posterior_map, gaussian_prior_posterior, gmm_grid_map,
    log_posterior,
};
use mapga_core::{
    GaussianMixture, GaussianPosterior, GridSpec, InpaintingMask, Matrix, Measurement, Vector,
};
use proptest::prelude::*;

#[test]
fn gaussian_map_agrees_with_lattice_search() {
    for seed in 0..3 {
        let p = random_gaussian(seed, 3);
        let mask = InpaintingMask::from_indices(3, 1, 1, vec![0, 2]).unwrap();
        let mut r = rng(seed + 10);
        let x0 = p.sample(&mut r);
        let meas = simulate_measurement(&x0, &mask, 0.3, &mut r).unwrap();
        let post = gaussian_prior_posterior(&p, &meas).unwrap();
        let grid = gmm_grid_map(&p, &meas, &GridSpec::default()).unwrap();
        for i in 0..3 {
            assert!(
                (grid.argmax[i] - post.mean[i]).abs() <= grid.cell[i],
                "seed {seed}, axis {i}: {} vs {} (cell {})",
                grid.argmax[i],
                post.mean[i],
                grid.cell[i]
            );
        }
    }
}

#[test]
fn symmetric_bimodal_posterior_returns_one_of_two_maximizers() {
    // Modes at (±1.5, 0); only the second coordinate is observed, so the
    // posterior is symmetric under x₀ ↦ −x₀.
    let p = GaussianMixture::diagonal(
        vec![0.5, 0.5],
        vec![
            Vector::from_vec(vec![-1.5, 0.0]),
            Vector::from_vec(vec![1.5, 0.0]),
        ],
        vec![Vector::from_vec(vec![0.2, 0.5]); 2],
    )
    .unwrap();
    let mask = InpaintingMask::from_indices(2, 1, 1, vec![1]).unwrap();
    let meas = Measurement::new(Vector::from_element(1, 0.3), 0.2, mask).unwrap();
    let spec = GridSpec {
        points_per_axis: 301,
        bounds: Some(vec![(-3.0, 3.0), (-3.0, 3.0)]),
        ..GridSpec::default()
    };
    let grid = gmm_grid_map(&p, &meas, &spec).unwrap();
    let mirror = Vector::from_vec(vec![-grid.argmax[0], grid.argmax[1]]);
    let var = meas.sigma_y * meas.sigma_y;
    let a = log_posterior(&p, &meas, &grid.argmax, var, 0.0).unwrap();
    let b = log_posterior(&p, &meas, &mirror, var, 0.0).unwrap();
    assert!(grid.argmax[0] != 0.0);
    assert!((a - b).abs() < 1e-9);
    assert!((a - grid.objective).abs() < 1e-12);
    assert_eq!(grid.ties, 2);
}

#[test]
fn logpdf_matches_quadrature_normalised_density() {
    let post = GaussianPosterior {
        mean: Vector::from_element(1, 0.4),
        covariance: Matrix::from_element(1, 1, 0.3),
    };
    let unnorm = |x: f64| (-(x - 0.4) * (x - 0.4) / (2.0 * 0.3)).exp();
    let n = 20_000;
    let (lo, hi) = (0.4 - 12.0, 0.4 + 12.0);
    let h = (hi - lo) / n as f64;
    let mut z = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        z += w * unnorm(lo + i as f64 * h);
    }
    z *= h / 3.0;
    for x in [-1.0, 0.0, 0.4, 1.3] {
        let want = (unnorm(x) / z).ln();
        let got = gaussian_posterior_logpdf(&post, &Vector::from_element(1, x)).unwrap();
        assert!((got - want).abs() < 1e-8, "x = {x}: {got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn posterior_mean_is_stationary_for_the_map_objective(seed in any::<u64>(), sigma_y in 0.05f64..1.0) {
        let dim = 4;
        let mut r = rng(seed);
        let mu0 = normal_vector(&mut r, dim, 1.0);
        let sigma0 = random_spd(&mut r, dim, 0.1);
        let p = GaussianMixture::gaussian(mu0.clone(), sigma0.clone()).unwrap();
        let mask = InpaintingMask::from_indices(2, 2, 1, vec![0, 3]).unwrap();
        let meas = simulate_measurement(&p.sample(&mut r), &mask, sigma_y, &mut r).unwrap();
        let post = gaussian_posterior_map(&mu0, &sigma0, &mask, &meas.y, sigma_y).unwrap();
        let obj = |x: &Vector| log_posterior(&p, &meas, x, sigma_y * sigma_y, 0.0).unwrap();
        let h = 1e-4;
        for _ in 0..5 {
            let u = normal_vector(&mut r, dim, 1.0).normalize();
            let dd = (obj(&(&post.mean + &u * h)) - obj(&(&post.mean - &u * h))) / (2.0 * h);
            prop_assert!(dd.abs() < 1e-8, "directional derivative {dd:e}");
        }
        // Same point maximises the posterior log-density itself.
        let at_mean = gaussian_posterior_logpdf(&post, &post.mean).unwrap();
        let u = normal_vector(&mut r, dim, 0.1);
        prop_assert!(gaussian_posterior_logpdf(&post, &(&post.mean + u)).unwrap() < at_mean);
    }

    #[test]
    fn noiseless_limit_is_continuous(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mu0 = normal_vector(&mut r, 4, 1.0);
        let sigma0 = random_spd(&mut r, 4, 0.1);
        let mask = InpaintingMask::from_indices(2, 2, 1, vec![1, 2]).unwrap();
        let y = normal_vector(&mut r, 2, 1.0);
        let exact = gaussian_posterior_map(&mu0, &sigma0, &mask, &y, 0.0).unwrap();
        let near = gaussian_posterior_map(&mu0, &sigma0, &mask, &y, 1e-6).unwrap();
        prop_assert!((&exact.mean - &near.mean).amax() < 1e-4);
        prop_assert!((mask.apply(&exact.mean).unwrap() - &y).amax() < 1e-12);
    }
}
