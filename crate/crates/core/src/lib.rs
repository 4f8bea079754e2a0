//! MAP estimation for linear inverse problems with diffusion priors.
//!
//! The crate is organised bottom-up:
//!
//! - [`schedule`]: the `σ(t) = t` noise schedule, the perturbation kernel and
//!   ρ-spaced time grids.
//! - [`prior`]: analytic diffusion priors (Gaussian and Gaussian mixture)
//!   exposing marginal log-density, score, denoiser and denoiser Jacobian.
//! - [`pfode`]: probability-flow ODE integration, the consistency function
//!   and its vector-Jacobian product.
//! - [`forward_op`]: inpainting masks (row-selector measurement operators)
//!   and measurement simulation.
//! - [`solver`]: MAP-GA, MAP-GA-PGDM, the PGDM baseline and naive `x₀`-space
//!   gradient ascent.
//! - [`oracle`]: closed-form Gaussian posteriors and brute-force grid MAP,
//!   used as independent ground truth.

pub mod error;
pub mod forward_op;
pub mod oracle;
pub mod pfode;
pub mod prior;
pub mod rng;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use forward_op::{InpaintingMask, MaskKind, Measurement};
pub use oracle::{GaussianPosterior, GridSpec};
pub use pfode::{ConsistencyFn, OdeConfig, OdeScheme};
pub use prior::{GaussianMixture, MixtureSpec, PriorModel};
pub use schedule::{NoiseSchedule, TimeGrid};
pub use solver::{Backend, SolveResult, SolverConfig, TraceRecord};

/// Dense column vector used for images, measurements and latents.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
