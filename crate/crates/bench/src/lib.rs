//! Shared fixtures for the criterion benches.

use mapga_core::prior::squared_exponential_covariance;
use mapga_core::rng::{seeded, standard_normal};
use mapga_core::{GaussianMixture, InpaintingMask, MaskKind, Measurement, Vector};

/// Zero-mean smooth-field prior on a `side × side` single-channel image.
pub fn smooth_prior(side: usize) -> GaussianMixture {
    let cov = squared_exponential_covariance(side, side, 1, 1.5, 1e-2).unwrap();
    GaussianMixture::gaussian(Vector::zeros(side * side), cov).unwrap()
}

/// A box50 inpainting problem with a prior draw as ground truth.
pub fn box50_problem(prior: &GaussianMixture, side: usize, sigma_y: f64, seed: u64) -> Measurement {
    let mask = InpaintingMask::new(MaskKind::Box50, side, side, 1).unwrap();
    let mut rng = seeded(seed);
    let x0 = prior.sample(&mut rng);
    let noise = standard_normal(mask.m(), &mut rng);
    let y = mask.apply(&x0).unwrap() + noise * sigma_y;
    Measurement::new(y, sigma_y, mask).unwrap()
}

pub fn random_vector(dim: usize, seed: u64) -> Vector {
    standard_normal(dim, &mut seeded(seed))
}
