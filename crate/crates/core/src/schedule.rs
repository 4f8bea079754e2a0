//! Noise schedule, perturbation kernel and discrete time grids.
//!
//! The schedule is the identity `σ(t) = t`, so diffusion time and noise level
//! coincide numerically. Functions still name their arguments by role
//! (`t` for time, `sigma` for noise level).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::gaussian_around;
use crate::Vector;

pub const DEFAULT_SIGMA_MIN: f64 = 0.002;
pub const DEFAULT_SIGMA_MAX: f64 = 80.0;
pub const DEFAULT_RHO: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSchedule {
    /// Noise level at `t = ε`.
    pub sigma_min: f64,
    /// Noise level at `t = T`.
    pub sigma_max: f64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            sigma_min: DEFAULT_SIGMA_MIN,
            sigma_max: DEFAULT_SIGMA_MAX,
        }
    }
}

impl NoiseSchedule {
    pub fn new(sigma_min: f64, sigma_max: f64) -> Result<Self> {
        let s = Self {
            sigma_min,
            sigma_max,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_min.is_finite()) {
            return Err(Error::config(
                "schedule.sigma_min",
                "must be positive and finite",
            ));
        }
        if !(self.sigma_max > self.sigma_min && self.sigma_max.is_finite()) {
            return Err(Error::config(
                "schedule.sigma_max",
                "must be finite and greater than sigma_min",
            ));
        }
        Ok(())
    }

    /// `ε`, the smallest time the solvers evaluate.
    pub fn epsilon(&self) -> f64 {
        self.sigma_min
    }

    /// `T`, the largest time.
    pub fn t_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        sigma(t)
    }

    /// Errors unless `ε ≤ t ≤ T`.
    pub fn check_time(&self, t: f64) -> Result<()> {
        if t.is_nan() || t < self.sigma_min || t > self.sigma_max {
            Err(Error::Domain(format!(
                "time {t} outside [{}, {}]",
                self.sigma_min, self.sigma_max
            )))
        } else {
            Ok(())
        }
    }
}

/// `σ(t) = t` for `t ≥ 0`.
pub fn sigma(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok(t)
}

/// Samples the perturbation kernel `x0 + sqrt(σ²(t) − σ²(0))·ξ`, with `σ(0) = 0`.
pub fn perturb<R: Rng + ?Sized>(x0: &Vector, t: f64, rng: &mut R) -> Result<Vector> {
    let s = sigma(t)?;
    if s == 0.0 {
        return Ok(x0.clone());
    }
    Ok(gaussian_around(x0, s, rng))
}

/// Strictly decreasing list of times `τ_n > … > τ_0`.
///
/// Stored in the order the solvers walk it: `taus()[0]` is the largest time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    taus: Vec<f64>,
    rho: f64,
}

impl TimeGrid {
    /// Times from largest to smallest.
    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Number of intervals, i.e. outer solver steps.
    pub fn steps(&self) -> usize {
        self.taus.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.taus[0]
    }

    pub fn end(&self) -> f64 {
        self.taus[self.taus.len() - 1]
    }
}

/// ρ-interpolated grid from `sigma_max` down to `sigma_min` with `n` points:
///
/// `τ_i = (σ_max^{1/ρ} + i/(n−1)·(σ_min^{1/ρ} − σ_max^{1/ρ}))^ρ`, `i = 0..n`.
///
/// Endpoints are pinned to the inputs exactly.
pub fn edm_time_grid(n: usize, sigma_min: f64, sigma_max: f64, rho: f64) -> Result<TimeGrid> {
    if n < 2 {
        return Err(Error::config(
            "time_grid.n",
            format!("need at least 2 points, got {n}"),
        ));
    }
    if !(sigma_min > 0.0 && sigma_max > sigma_min && sigma_max.is_finite()) {
        return Err(Error::config(
            "time_grid",
            format!("need 0 < sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]"),
        ));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::config(
            "time_grid.rho",
            format!("must be positive, got {rho}"),
        ));
    }
    let inv = 1.0 / rho;
    let hi = sigma_max.powf(inv);
    let lo = sigma_min.powf(inv);
    let last = (n - 1) as f64;
    let mut taus: Vec<f64> = (0..n)
        .map(|i| (hi + (i as f64 / last) * (lo - hi)).powf(rho))
        .collect();
    taus[0] = sigma_max;
    taus[n - 1] = sigma_min;
    if taus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Numerical(format!(
            "time grid with n={n} on [{sigma_min}, {sigma_max}] is not strictly decreasing"
        )));
    }
    Ok(TimeGrid { taus, rho })
}
