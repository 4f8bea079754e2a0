//! Seeded randomness helpers.
//!
//! All stochastic operations take an explicit `&mut impl Rng`; these helpers
//! fix the generator family so runs are reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::Vector;

pub type SolverRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> SolverRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream for one experiment cell. Depends only on
/// `(master_seed, cell_index)`, never on scheduling order.
pub fn cell_rng(master_seed: u64, cell_index: u64) -> SolverRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(cell_index);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    Vector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Draws `mean + std * ξ` with `ξ` standard normal.
pub fn gaussian_around<R: Rng + ?Sized>(mean: &Vector, std: f64, rng: &mut R) -> Vector {
    let mut out = standard_normal(mean.len(), rng);
    out *= std;
    out += mean;
    out
}
