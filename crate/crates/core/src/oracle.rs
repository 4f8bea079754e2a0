//! Ground truth for tests and experiments.
//!
//! Nothing here goes through the ODE solver or the gradient code paths: the
//! Gaussian posterior is linear algebra, and the mixture MAP is a lattice
//! search.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::forward_op::{InpaintingMask, Measurement};
use crate::prior::{GaussianMixture, PriorModel};
use crate::{Matrix, Vector};

const RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vector,
    pub covariance: Matrix,
}

fn spd_factor(mat: &Matrix, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(mat.clone()) {
        return Ok(c);
    }
    let scale = mat.diagonal().amax().max(1.0);
    let mut ridged = mat.clone();
    for i in 0..ridged.nrows() {
        ridged[(i, i)] += RIDGE * scale;
    }
    Cholesky::new(ridged).ok_or_else(|| {
        Error::Numerical(format!(
            "{what} ({}×{}) is not positive definite even with ridge {:e}; diagonal range [{:e}, {:e}]",
            mat.nrows(),
            mat.ncols(),
            RIDGE * scale,
            mat.diagonal().min(),
            mat.diagonal().max()
        ))
    })
}

/// Posterior of `x ~ N(μ0, Σ0)` given `y = Hx + η`, `η ~ N(0, σ_y² I)`.
///
/// Uses the gain form `K = Σ0 Hᵀ (HΣ0Hᵀ + σ_y² I)⁻¹`, which stays valid at
/// `σ_y = 0` (exact conditioning on the visible coordinates).
pub fn gaussian_posterior_map(
    mu0: &Vector,
    sigma0: &Matrix,
    mask: &InpaintingMask,
    y: &Vector,
    sigma_y: f64,
) -> Result<GaussianPosterior> {
    let n = mask.n();
    check_len(n, mu0.len())?;
    check_len(n, sigma0.nrows())?;
    check_len(n, sigma0.ncols())?;
    check_len(mask.m(), y.len())?;
    if !(sigma_y >= 0.0) {
        return Err(Error::config("sigma_y", "must be nonnegative"));
    }
    let kept = mask.kept_indices();
    let m = kept.len();
    // Σ0 Hᵀ: the kept columns of Σ0.
    let cross = Matrix::from_fn(n, m, |i, j| sigma0[(i, kept[j])]);
    let mut gram = Matrix::from_fn(m, m, |i, j| sigma0[(kept[i], kept[j])]);
    for i in 0..m {
        gram[(i, i)] += sigma_y * sigma_y;
    }
    let chol = spd_factor(&gram, "measurement covariance HΣ0Hᵀ + σ_y²I")?;
    let innovation = y - mask.apply(mu0)?;
    let mean = mu0 + &cross * chol.solve(&innovation);
    let mut covariance = sigma0 - &cross * chol.solve(&cross.transpose());
    covariance = (&covariance + covariance.transpose()) * 0.5;
    Ok(GaussianPosterior { mean, covariance })
}

/// Same as [`gaussian_posterior_map`] for a single-component mixture prior.
pub fn gaussian_prior_posterior(
    prior: &GaussianMixture,
    meas: &Measurement,
) -> Result<GaussianPosterior> {
    if !prior.is_gaussian() {
        return Err(Error::Contract(
            "posterior oracle needs a single Gaussian prior".into(),
        ));
    }
    gaussian_posterior_map(
        prior.mean(0),
        &prior.covariance(0),
        &meas.mask,
        &meas.y,
        meas.sigma_y,
    )
}

/// Log-density of the posterior. Fails if the covariance is singular (e.g.
/// the `σ_y = 0` posterior, which is degenerate on the visible coordinates).
pub fn gaussian_posterior_logpdf(post: &GaussianPosterior, x: &Vector) -> Result<f64> {
    check_len(post.mean.len(), x.len())?;
    let chol = Cholesky::new(post.covariance.clone())
        .ok_or_else(|| Error::Numerical("posterior covariance is not positive definite".into()))?;
    let d = x - &post.mean;
    let quad = d.dot(&chol.solve(&d));
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (post.mean.len() as f64 * (2.0 * PI).ln() + log_det + quad))
}

/// `log N(y; Hx, noise_var·I)`.
pub fn log_likelihood(meas: &Measurement, x: &Vector, noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::config(
            "sigma_y",
            "likelihood needs positive noise variance",
        ));
    }
    let r = meas.residual(x)?;
    Ok(-0.5 * (r.norm_squared() / noise_var + r.len() as f64 * (2.0 * PI * noise_var).ln()))
}

/// `log N(y; Hx, noise_var·I) + log P_σ(x)`, the unnormalized log-posterior.
pub fn log_posterior<P: PriorModel + ?Sized>(
    prior: &P,
    meas: &Measurement,
    x: &Vector,
    noise_var: f64,
    prior_sigma: f64,
) -> Result<f64> {
    Ok(log_likelihood(meas, x, noise_var)? + prior.log_marginal(x, prior_sigma))
}

fn log_gaussian(x: &Vector, mean: &Vector, cov: &Matrix) -> Result<f64> {
    let chol = spd_factor(cov, "covariance")?;
    let d = x - mean;
    let quad = d.dot(&chol.solve(&d));
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (x.len() as f64 * (2.0 * PI).ln() + log_det + quad))
}

/// The likelihood MAP-GA uses at `x_ε` next to the exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodGap {
    /// `log N(y; Hx_ε, (σ_y² + ε²)I)`, treating `P(x₀|x_ε)` as `P(x_ε|x₀)`.
    pub approx: f64,
    /// `log P(y|x_ε) = log Σ_k r_k N(y; H m_k, σ_y² I + H C_k Hᵀ)` with
    /// `N(m_k, C_k)` the component posteriors of `x₀` given `x_ε`.
    pub exact: f64,
}

impl LikelihoodGap {
    pub fn gap(&self) -> f64 {
        self.approx - self.exact
    }
}

/// Evaluates both forms of `log P(y | x_ε)` for a mixture prior.
pub fn likelihood_gap(
    prior: &GaussianMixture,
    meas: &Measurement,
    x_eps: &Vector,
    epsilon: f64,
) -> Result<LikelihoodGap> {
    let n = prior.dim();
    check_len(n, x_eps.len())?;
    check_len(n, meas.mask.n())?;
    if !(epsilon > 0.0) {
        return Err(Error::config("schedule.sigma_min", "ε must be positive"));
    }
    let e2 = epsilon * epsilon;
    let sy2 = meas.sigma_y * meas.sigma_y;
    let approx = log_likelihood(meas, x_eps, sy2 + e2)?;
    let kept = meas.mask.kept_indices();
    let mut log_resp = Vec::with_capacity(prior.num_components());
    let mut log_lik = Vec::with_capacity(prior.num_components());
    for k in 0..prior.num_components() {
        let mu = prior.mean(k);
        let cov = prior.covariance(k);
        let mut marg = cov.clone();
        for i in 0..n {
            marg[(i, i)] += e2;
        }
        log_resp.push(prior.weights()[k].ln() + log_gaussian(x_eps, mu, &marg)?);
        // gain = Σ(Σ + ε²I)⁻¹, m = μ + gain(x − μ), C = ε²·gain
        let chol = spd_factor(&marg, "component marginal covariance")?;
        let gain = chol.solve(&cov).transpose();
        let m = mu + &gain * (x_eps - mu);
        let c = gain * e2;
        let mut s = Matrix::from_fn(kept.len(), kept.len(), |i, j| c[(kept[i], kept[j])]);
        for i in 0..kept.len() {
            s[(i, i)] += sy2;
        }
        log_lik.push(log_gaussian(&meas.y, &meas.mask.apply(&m)?, &s)?);
    }
    let norm = crate::prior::log_sum_exp(&log_resp);
    let terms: Vec<f64> = log_resp
        .iter()
        .zip(&log_lik)
        .map(|(r, l)| r - norm + l)
        .collect();
    Ok(LikelihoodGap {
        approx,
        exact: crate::prior::log_sum_exp(&terms),
    })
}

/// Lattice specification for [`gmm_grid_map`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    /// Half-width of the box in units of the largest component std.
    pub half_width_std: f64,
    /// Explicit `(lo, hi)` per axis; overrides the automatic box.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 201,
            half_width_std: 4.0,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub argmax: Vector,
    pub objective: f64,
    /// Lattice spacing per axis (zero for a single-point axis).
    pub cell: Vec<f64>,
    /// Number of lattice points that tie the maximum within 1e-12.
    pub ties: usize,
}

pub const MAX_GRID_DIM: usize = 3;

/// Brute-force `argmax_x log P(y|x) + log P_0(x)` over a lattice; ties go
/// to the lowest lattice index (first axis slowest).
pub fn gmm_grid_map(
    prior: &GaussianMixture,
    meas: &Measurement,
    spec: &GridSpec,
) -> Result<GridMap> {
    let d = prior.dim();
    if d > MAX_GRID_DIM {
        return Err(Error::Contract(format!(
            "grid MAP supports dimension ≤ {MAX_GRID_DIM}, got {d}"
        )));
    }
    check_len(d, meas.dim())?;
    if spec.points_per_axis == 0 {
        return Err(Error::config("grid.points_per_axis", "must be positive"));
    }
    let noise_var = meas.sigma_y * meas.sigma_y;
    let bounds: Vec<(f64, f64)> = match &spec.bounds {
        Some(b) => {
            check_len(d, b.len())?;
            b.clone()
        }
        None => {
            let half = spec.half_width_std * prior.max_variance().sqrt();
            (0..d)
                .map(|i| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for k in 0..prior.num_components() {
                        lo = lo.min(prior.mean(k)[i] - half);
                        hi = hi.max(prior.mean(k)[i] + half);
                    }
                    (lo, hi)
                })
                .collect()
        }
    };
    let p = spec.points_per_axis;
    let cell: Vec<f64> = bounds
        .iter()
        .map(|(lo, hi)| {
            if p > 1 {
                (hi - lo) / (p - 1) as f64
            } else {
                0.0
            }
        })
        .collect();
    let coord = |axis: usize, i: usize| bounds[axis].0 + i as f64 * cell[axis];
    let total = p.pow(d as u32);
    let mut best = f64::NEG_INFINITY;
    let mut best_x = Vector::zeros(d);
    let mut ties = 0usize;
    let mut x = Vector::zeros(d);
    for flat in 0..total {
        let mut rem = flat;
        for axis in (0..d).rev() {
            x[axis] = coord(axis, rem % p);
            rem /= p;
        }
        let ll = if noise_var > 0.0 {
            log_likelihood(meas, &x, noise_var)?
        } else if meas.residual_norm(&x)? == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        let obj = ll + prior.log_marginal(&x, 0.0);
        if obj > best + 1e-12 {
            best = obj;
            best_x.copy_from(&x);
            ties = 1;
        } else if (obj - best).abs() <= 1e-12 {
            ties += 1;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "objective is −∞ on the whole lattice".into(),
        ));
    }
    Ok(GridMap {
        argmax: best_x,
        objective: best,
        cell,
        ties,
    })
}
