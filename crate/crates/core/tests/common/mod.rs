#![allow(dead_code)]

use mapga_core::rng::{seeded, standard_normal, SolverRng};
use mapga_core::{GaussianMixture, Matrix, Vector};
use rand::Rng;

pub fn rng(seed: u64) -> SolverRng {
    seeded(seed)
}

pub fn normal_vector(rng: &mut impl Rng, dim: usize, scale: f64) -> Vector {
    standard_normal(dim, rng) * scale
}

/// SPD matrix `A Aᵀ/dim + floor·I` with a random `A`.
pub fn random_spd(rng: &mut impl Rng, dim: usize, floor: f64) -> Matrix {
    let a = Matrix::from_iterator(dim, dim, standard_normal(dim * dim, rng).iter().copied());
    &a * a.transpose() / dim as f64 + Matrix::identity(dim, dim) * floor
}

/// Mixture with `k` components, dense covariances, means spread over ±2.
pub fn random_mixture(seed: u64, dim: usize, k: usize) -> GaussianMixture {
    let mut r = rng(seed);
    let raw: Vec<f64> = (0..k).map(|_| 0.2 + r.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - head;
    let means = (0..k).map(|_| normal_vector(&mut r, dim, 1.5)).collect();
    let covs = (0..k).map(|_| random_spd(&mut r, dim, 0.1) * 0.5).collect();
    GaussianMixture::dense(weights, means, covs).unwrap()
}

/// Gaussian with a random dense covariance.
pub fn random_gaussian(seed: u64, dim: usize) -> GaussianMixture {
    let mut r = rng(seed);
    let mean = normal_vector(&mut r, dim, 1.0);
    GaussianMixture::gaussian(mean, random_spd(&mut r, dim, 0.1)).unwrap()
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn fd_gradient(f: impl Fn(&Vector) -> f64, x: &Vector, h: f64) -> Vector {
    let mut g = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let down = f(&xp);
        xp[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

pub fn rel_err(got: &Vector, want: &Vector) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}
