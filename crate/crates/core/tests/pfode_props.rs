mod common;

use common::{normal_vector, random_gaussian, random_mixture, rng};
use mapga_core::pfode::{gaussian_consistency_closed_form, integrate, pf_ode_rhs};
use mapga_core::rng::standard_normal;
use mapga_core::{
    ConsistencyFn, GaussianMixture, Matrix, NoiseSchedule, OdeConfig, OdeScheme, PriorModel, Vector,
};
use proptest::prelude::*;

fn schedule() -> NoiseSchedule {
    NoiseSchedule::default()
}

/// Fine enough that discretization error sits well below the tolerances
/// checked with it.
fn fine() -> OdeConfig {
    OdeConfig {
        steps: 2000,
        ..OdeConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rhs_equals_score_form(seed in any::<u64>(), k in 1usize..4, t in 0.002f64..80.0) {
        let p = random_mixture(seed, 3, k);
        let x = normal_vector(&mut rng(seed ^ 1), 3, 1.0 + t);
        let rhs = pf_ode_rhs(&x, t, &p).unwrap();
        // −σ σ̇ ∇log P with σ = t, σ̇ = 1.
        let alt = p.score(&x, t) * -t;
        prop_assert!((&rhs - &alt).amax() <= 1e-12 * (1.0 + alt.amax()));
    }

    #[test]
    fn vjp_matches_finite_differences(seed in any::<u64>(), k in 1usize..4, t in 0.01f64..80.0) {
        let p = random_mixture(seed, 2, k);
        let mut r = rng(seed ^ 2);
        let z = normal_vector(&mut r, 2, (0.5 + t * t).sqrt());
        let v = normal_vector(&mut r, 2, 1.0);
        let f = ConsistencyFn::new(&p, schedule(), OdeConfig::default()).unwrap();
        let got = f.vjp(&z, t, &v).unwrap();
        let h = 1e-4;
        let mut fd = Vector::zeros(2);
        for i in 0..2 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            fd[i] = (v.dot(&f.eval(&zp, t).unwrap()) - v.dot(&f.eval(&zm, t).unwrap())) / (2.0 * h);
        }
        let err = (&got - &fd).norm() / got.norm().max(1e-8);
        prop_assert!(err < 1e-4, "relative error {err:e}");
    }

    #[test]
    fn vjp_adjoint_identity(seed in any::<u64>(), k in 1usize..4, t in 0.01f64..80.0) {
        let p = random_mixture(seed, 3, k);
        let mut r = rng(seed ^ 3);
        let z = normal_vector(&mut r, 3, (0.5 + t * t).sqrt());
        let u = normal_vector(&mut r, 3, 1.0);
        let v = normal_vector(&mut r, 3, 1.0);
        let f = ConsistencyFn::new(&p, schedule(), OdeConfig::default()).unwrap();
        // Standard forward-difference step √(machine ε)·(1 + ‖z‖).
        let h = f64::EPSILON.sqrt() * (1.0 + z.norm());
        let ju = (f.eval(&(&z + &u * h), t).unwrap() - f.eval(&z, t).unwrap()) / h;
        let lhs = ju.dot(&v);
        let rhs = u.dot(&f.vjp(&z, t, &v).unwrap());
        let scale = ju.norm() * v.norm();
        prop_assert!((lhs - rhs).abs() < 1e-4 * scale.max(1e-8), "{lhs} vs {rhs}");
    }

    #[test]
    fn vjp_of_zero_is_zero(seed in any::<u64>(), t in 0.002f64..80.0) {
        let p = random_mixture(seed, 2, 2);
        let z = normal_vector(&mut rng(seed), 2, 1.0 + t);
        let f = ConsistencyFn::new(&p, schedule(), OdeConfig::default()).unwrap();
        prop_assert_eq!(f.vjp(&z, t, &Vector::zeros(2)).unwrap(), Vector::zeros(2));
    }
}

#[test]
fn boundary_is_identity_for_value_and_vjp() {
    let p = random_mixture(1, 2, 2);
    let f = ConsistencyFn::new(&p, schedule(), OdeConfig::default()).unwrap();
    let z = Vector::from_vec(vec![0.3, -0.2]);
    let v = Vector::from_vec(vec![1.5, 2.5]);
    assert_eq!(f.eval(&z, 0.002).unwrap(), z);
    assert_eq!(f.vjp(&z, 0.002, &v).unwrap(), v);
    assert!(f.eval(&z, 0.0019).is_err());
    assert!(f.eval(&z, 80.5).is_err());
}

#[test]
fn heun_converges_at_second_order() {
    // Successive halvings of the step size shrink the difference by ~4.
    let p = random_mixture(3, 2, 3);
    let s = schedule();
    for t in [1.0, 10.0, 80.0] {
        let z = standard_normal(2, &mut rng(4)) * t;
        let eval = |steps| {
            ConsistencyFn::new(
                &p,
                s,
                OdeConfig {
                    steps,
                    ..OdeConfig::default()
                },
            )
            .unwrap()
            .eval(&z, t)
            .unwrap()
        };
        let (a, b, c, d) = (eval(40), eval(80), eval(160), eval(320));
        let r1 = (&a - &b).norm() / (&b - &c).norm();
        let r2 = (&b - &c).norm() / (&c - &d).norm();
        assert!(
            (3.0..5.0).contains(&r1) && (3.5..4.5).contains(&r2),
            "t = {t}: ratios {r1}, {r2}"
        );
    }
}

#[test]
fn euler_converges_at_first_order() {
    let p = random_mixture(3, 2, 3);
    let s = schedule();
    let t = 10.0;
    let z = standard_normal(2, &mut rng(4)) * t;
    let eval = |steps| {
        ConsistencyFn::new(
            &p,
            s,
            OdeConfig {
                steps,
                scheme: OdeScheme::Euler,
                ..OdeConfig::default()
            },
        )
        .unwrap()
        .eval(&z, t)
        .unwrap()
    };
    let (a, b, c) = (eval(400), eval(800), eval(1600));
    let r = (&a - &b).norm() / (&b - &c).norm();
    assert!((1.7..2.3).contains(&r), "ratio {r}");
}

#[test]
fn fine_grid_matches_gaussian_closed_form() {
    let s = schedule();
    for seed in 0..5 {
        let p = random_gaussian(seed, 3);
        let f = ConsistencyFn::new(&p, s, fine()).unwrap();
        for t in [0.1, 1.0, 10.0, 80.0] {
            let z = p.mean(0) + standard_normal(3, &mut rng(seed)) * t;
            let got = f.eval(&z, t).unwrap();
            let want = gaussian_consistency_closed_form(&p, &s, &z, t).unwrap();
            assert!((&got - &want).norm() / want.norm() < 1e-4);
        }
    }
}

#[test]
fn self_consistency_along_trajectories() {
    let s = schedule();
    for seed in 0..4 {
        let p = random_mixture(seed, 2, 3);
        let f = ConsistencyFn::new(&p, s, fine()).unwrap();
        let t = 30.0;
        let z = standard_normal(2, &mut rng(seed + 100)) * t;
        let origin = f.eval(&z, t).unwrap();
        for mid in [10.0, 1.0, 0.1, 0.01] {
            let x_mid = integrate(&p, &z, t, mid, &fine()).unwrap().into_endpoint();
            let again = f.eval(&x_mid, mid).unwrap();
            assert!((&again - &origin).norm() < 1e-4, "seed {seed}, s = {mid}");
        }
    }
}

#[test]
fn marginal_preservation_for_gaussian_prior() {
    // z ~ N(μ, Σ + T²I) mapped through f(·, T) must be N(μ, Σ + ε²I).
    let s = schedule();
    let mean = Vector::from_vec(vec![0.5, -1.0]);
    let cov = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let p = GaussianMixture::gaussian(mean.clone(), cov.clone()).unwrap();
    let f = ConsistencyFn::new(
        &p,
        s,
        OdeConfig {
            steps: 200,
            ..OdeConfig::default()
        },
    )
    .unwrap();
    let t = s.t_max();
    let start =
        GaussianMixture::gaussian(mean.clone(), &cov + Matrix::identity(2, 2) * t * t).unwrap();
    let n = 10_000;
    let mut r = rng(21);
    let out: Vec<Vector> = (0..n)
        .map(|_| f.eval(&start.sample(&mut r), t).unwrap())
        .collect();
    let nf = n as f64;
    let m = out.iter().fold(Vector::zeros(2), |a, x| a + x) / nf;
    let target = &cov + Matrix::identity(2, 2) * s.epsilon().powi(2);
    let mut c = Matrix::zeros(2, 2);
    for x in &out {
        let d = x - &m;
        c += &d * d.transpose();
    }
    c /= nf - 1.0;
    for i in 0..2 {
        assert!((m[i] - mean[i]).abs() < 3.0 * (target[(i, i)] / nf).sqrt());
        for j in 0..2 {
            let se = ((target[(i, i)] * target[(j, j)] + target[(i, j)].powi(2)) / nf).sqrt();
            assert!(
                (c[(i, j)] - target[(i, j)]).abs() < 3.0 * se,
                "cov[{i},{j}] = {}",
                c[(i, j)]
            );
        }
    }
}

#[test]
fn denoiser_proxy_error_vanishes_as_noise_shrinks() {
    // Single trajectories may bump up locally while passing between modes;
    // the RMS over trajectories decreases.
    let s = schedule();
    let grid = [10.0, 5.0, 2.0, 1.0, 0.5, 0.1, 0.01];
    for seed in 0..5 {
        let p = random_mixture(seed, 2, 3);
        let f = ConsistencyFn::new(&p, s, OdeConfig::default()).unwrap();
        let mut r = rng(seed + 50);
        let mut sq = [0.0; 7];
        for _ in 0..50 {
            let x_eps = p.sample(&mut r);
            let errs: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    let xt = integrate(&p, &x_eps, s.epsilon(), t, &fine())
                        .unwrap()
                        .into_endpoint();
                    (f.eval(&xt, t).unwrap() - p.denoise(&xt, t)).norm()
                })
                .collect();
            assert!(errs[6] / errs[0] < 1e-2, "seed {seed}: {errs:?}");
            for (acc, e) in sq.iter_mut().zip(&errs) {
                *acc += e * e;
            }
        }
        assert!(sq.windows(2).all(|w| w[1] < w[0]), "seed {seed}: {sq:?}");
    }
}
