//! Analytic diffusion priors.
//!
//! A Gaussian mixture data distribution stays a Gaussian mixture under the
//! variance-exploding perturbation kernel: component `k` has covariance
//! `Σ_k + σ²I` at noise level `σ`. Marginal density, score, denoiser and the
//! denoiser Jacobian are therefore all available in closed form.
//!
//! Every component covariance is stored factored (diagonal, or an
//! eigendecomposition `U Λ Uᵀ`) so `(Σ_k + σ²I)⁻¹` and its log-determinant
//! cost one or two mat-vecs for any `σ`.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng::standard_normal;
use crate::{Matrix, Vector};

/// Interface to a diffusion prior at noise level `sigma`.
///
/// `denoise` must satisfy Tweedie's identity
/// `denoise(x, σ) = x + σ²·score(x, σ)`.
pub trait PriorModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `log P_σ(x)`.
    fn log_marginal(&self, x: &Vector, sigma: f64) -> f64;

    /// `∇_x log P_σ(x)`.
    fn score(&self, x: &Vector, sigma: f64) -> Vector;

    /// Posterior mean `E[x₀ | x_σ = x]`.
    fn denoise(&self, x: &Vector, sigma: f64) -> Vector {
        let mut out = self.score(x, sigma);
        out *= sigma * sigma;
        out += x;
        out
    }

    /// Jacobian-vector product `(∂D/∂x)·v`. The Jacobian is symmetric, so
    /// this is also the vector-Jacobian product.
    fn denoiser_jvp(&self, x: &Vector, sigma: f64, v: &Vector) -> Vector;

    /// Dense Jacobian `∂D/∂x`, assembled column by column.
    fn denoiser_jacobian(&self, x: &Vector, sigma: f64) -> Matrix {
        let n = self.dim();
        let mut jac = Matrix::zeros(n, n);
        let mut e = Vector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            jac.set_column(j, &self.denoiser_jvp(x, sigma, &e));
            e[j] = 0.0;
        }
        jac
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Covariance {
    Diagonal(Vector),
    Eigen { vectors: Matrix, values: Vector },
}

impl Covariance {
    fn dense(cov: &Matrix) -> Result<Self> {
        let asym = (cov - cov.transpose()).amax();
        if asym > 1e-10 * cov.amax().max(1.0) {
            return Err(Error::Data(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let sym = (cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Data(format!(
                "covariance is not positive definite (min eigenvalue {:e})",
                eig.eigenvalues.min()
            )));
        }
        Ok(Covariance::Eigen {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        })
    }

    fn to_dense(&self) -> Matrix {
        match self {
            Covariance::Diagonal(d) => Matrix::from_diagonal(d),
            Covariance::Eigen { vectors, values } => {
                vectors * Matrix::from_diagonal(values) * vectors.transpose()
            }
        }
    }

    fn eigenvalues(&self) -> &Vector {
        match self {
            Covariance::Diagonal(d) => d,
            Covariance::Eigen { values, .. } => values,
        }
    }

    fn log_det(&self, s2: f64) -> f64 {
        self.eigenvalues().iter().map(|l| (l + s2).ln()).sum()
    }

    /// `(Σ + s2·I)⁻¹ r` together with the quadratic form `rᵀ(Σ + s2·I)⁻¹ r`.
    fn solve_with_quad(&self, r: &Vector, s2: f64) -> (Vector, f64) {
        match self {
            Covariance::Diagonal(d) => {
                let mut quad = 0.0;
                let out = Vector::from_iterator(
                    r.len(),
                    r.iter().zip(d.iter()).map(|(ri, di)| {
                        let p = ri / (di + s2);
                        quad += ri * p;
                        p
                    }),
                );
                (out, quad)
            }
            Covariance::Eigen { vectors, values } => {
                let mut rot = vectors.tr_mul(r);
                let mut quad = 0.0;
                for (ri, l) in rot.iter_mut().zip(values.iter()) {
                    let p = *ri / (l + s2);
                    quad += *ri * p;
                    *ri = p;
                }
                (vectors * rot, quad)
            }
        }
    }

    fn solve(&self, r: &Vector, s2: f64) -> Vector {
        self.solve_with_quad(r, s2).0
    }

    /// Applies `f(λ)` spectrally: `U diag(f(λ)) Uᵀ r`.
    fn apply_spectral(&self, r: &Vector, f: impl Fn(f64) -> f64) -> Vector {
        match self {
            Covariance::Diagonal(d) => r.zip_map(d, |ri, di| ri * f(di)),
            Covariance::Eigen { vectors, values } => {
                let mut rot = vectors.tr_mul(r);
                for (ri, l) in rot.iter_mut().zip(values.iter()) {
                    *ri *= f(*l);
                }
                vectors * rot
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Component {
    log_weight: f64,
    mean: Vector,
    cov: Covariance,
}

/// Gaussian mixture data distribution `Σ_k w_k N(μ_k, Σ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<Component>,
    dim: usize,
}

impl GaussianMixture {
    fn build(weights: Vec<f64>, means: Vec<Vector>, covs: Vec<Covariance>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Data("mixture needs at least one component".into()));
        }
        if means.len() != weights.len() || covs.len() != weights.len() {
            return Err(Error::Data(format!(
                "mixture has {} weights, {} means, {} covariances",
                weights.len(),
                means.len(),
                covs.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Data(
                "mixture weights must be nonnegative and finite".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Data(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::Data("mixture dimension must be positive".into()));
        }
        let mut components = Vec::with_capacity(weights.len());
        for (k, ((w, mean), cov)) in weights.iter().zip(means).zip(covs).enumerate() {
            if mean.len() != dim || cov.eigenvalues().len() != dim {
                return Err(Error::Data(format!(
                    "component {k} has inconsistent dimension"
                )));
            }
            if mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::Data(format!("component {k} mean is not finite")));
            }
            if cov
                .eigenvalues()
                .iter()
                .any(|l| !(*l > 0.0) || !l.is_finite())
            {
                return Err(Error::Data(format!(
                    "component {k} covariance is not positive definite"
                )));
            }
            components.push(Component {
                log_weight: w.ln(),
                mean,
                cov,
            });
        }
        Ok(Self {
            weights,
            components,
            dim,
        })
    }

    /// Mixture with diagonal covariances.
    pub fn diagonal(weights: Vec<f64>, means: Vec<Vector>, variances: Vec<Vector>) -> Result<Self> {
        let covs = variances.into_iter().map(Covariance::Diagonal).collect();
        Self::build(weights, means, covs)
    }

    /// Mixture with dense symmetric positive-definite covariances.
    pub fn dense(weights: Vec<f64>, means: Vec<Vector>, covariances: Vec<Matrix>) -> Result<Self> {
        let covs = covariances
            .iter()
            .map(Covariance::dense)
            .collect::<Result<Vec<_>>>()?;
        Self::build(weights, means, covs)
    }

    /// Single Gaussian `N(mean, cov)`.
    pub fn gaussian(mean: Vector, cov: Matrix) -> Result<Self> {
        Self::dense(vec![1.0], vec![mean], vec![cov])
    }

    /// Single Gaussian with diagonal covariance.
    pub fn gaussian_diagonal(mean: Vector, variances: Vector) -> Result<Self> {
        Self::diagonal(vec![1.0], vec![mean], vec![variances])
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn is_gaussian(&self) -> bool {
        self.components.len() == 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &Vector {
        &self.components[k].mean
    }

    pub fn covariance(&self, k: usize) -> Matrix {
        self.components[k].cov.to_dense()
    }

    /// Whether every component uses the diagonal representation.
    pub fn is_diagonal(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c.cov, Covariance::Diagonal(_)))
    }

    /// Mean of the mixture, `Σ_k w_k μ_k`.
    pub fn overall_mean(&self) -> Vector {
        let mut m = Vector::zeros(self.dim);
        for (w, c) in self.weights.iter().zip(&self.components) {
            m.axpy(*w, &c.mean, 1.0);
        }
        m
    }

    /// Largest per-coordinate variance across components.
    pub fn max_variance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.cov.to_dense().diagonal().max())
            .fold(0.0, f64::max)
    }

    /// For a single Gaussian, applies `U diag(f(λ)) Uᵀ` to `r`.
    pub(crate) fn gaussian_spectral(&self, r: &Vector, f: impl Fn(f64) -> f64) -> Result<Vector> {
        if !self.is_gaussian() {
            return Err(Error::Contract(format!(
                "expected a single Gaussian, got {} components",
                self.components.len()
            )));
        }
        Ok(self.components[0].cov.apply_spectral(r, f))
    }

    /// Draws from `P_0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.components.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let c = &self.components[k];
        let xi = standard_normal(self.dim, rng);
        &c.mean + c.cov.apply_spectral(&xi, f64::sqrt)
    }

    /// Per-component terms at `(x, σ)`.
    fn evaluate(&self, x: &Vector, sigma: f64) -> MixtureEval {
        let s2 = sigma * sigma;
        let mut log_terms = Vec::with_capacity(self.components.len());
        let mut pulls = Vec::with_capacity(self.components.len());
        let norm = self.dim as f64 * (2.0 * PI).ln();
        for c in &self.components {
            let diff = &c.mean - x;
            let (pull, quad) = c.cov.solve_with_quad(&diff, s2);
            log_terms.push(c.log_weight - 0.5 * (norm + c.cov.log_det(s2) + quad));
            pulls.push(pull);
        }
        let log_norm = log_sum_exp(&log_terms);
        let resp = log_terms.iter().map(|l| (l - log_norm).exp()).collect();
        MixtureEval {
            log_density: log_norm,
            resp,
            pulls,
        }
    }
}

struct MixtureEval {
    log_density: f64,
    /// Responsibilities `r_k(x)`.
    resp: Vec<f64>,
    /// `(Σ_k + σ²I)⁻¹(μ_k − x)`.
    pulls: Vec<Vector>,
}

impl MixtureEval {
    fn score(&self) -> Vector {
        let mut out = Vector::zeros(self.pulls[0].len());
        for (r, g) in self.resp.iter().zip(&self.pulls) {
            if *r > 0.0 {
                out.axpy(*r, g, 1.0);
            }
        }
        out
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl PriorModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_marginal(&self, x: &Vector, sigma: f64) -> f64 {
        self.evaluate(x, sigma).log_density
    }

    fn score(&self, x: &Vector, sigma: f64) -> Vector {
        self.evaluate(x, sigma).score()
    }

    // ∂D/∂x = I + σ²·(−Σ_k r_k P_k + Σ_k r_k (g_k − ḡ)(g_k − ḡ)ᵀ),
    // with P_k = (Σ_k + σ²I)⁻¹ and g_k = P_k(μ_k − x).
    fn denoiser_jvp(&self, x: &Vector, sigma: f64, v: &Vector) -> Vector {
        let s2 = sigma * sigma;
        if s2 == 0.0 {
            return v.clone();
        }
        let eval = self.evaluate(x, sigma);
        let mean_pull = eval.score();
        let mut acc = Vector::zeros(self.dim);
        for ((r, g), c) in eval.resp.iter().zip(&eval.pulls).zip(&self.components) {
            if *r == 0.0 {
                continue;
            }
            acc.axpy(-r, &c.cov.solve(v, s2), 1.0);
            let centered = g - &mean_pull;
            let proj = centered.dot(v);
            acc.axpy(r * proj, &centered, 1.0);
        }
        acc *= s2;
        acc += v;
        acc
    }
}

/// JSON description of a mixture with diagonal covariances:
/// `{ "weights": [...], "means": [[...]], "cov_diag": [[...]] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub cov_diag: Vec<Vec<f64>>,
}

impl MixtureSpec {
    pub fn build(&self) -> Result<GaussianMixture> {
        GaussianMixture::diagonal(
            self.weights.clone(),
            self.means
                .iter()
                .map(|m| Vector::from_vec(m.clone()))
                .collect(),
            self.cov_diag
                .iter()
                .map(|d| Vector::from_vec(d.clone()))
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("mixture JSON: {e}")))
    }
}

impl TryFrom<&GaussianMixture> for MixtureSpec {
    type Error = Error;

    fn try_from(gmm: &GaussianMixture) -> Result<Self> {
        let mut cov_diag = Vec::new();
        for c in &gmm.components {
            match &c.cov {
                Covariance::Diagonal(d) => cov_diag.push(d.as_slice().to_vec()),
                Covariance::Eigen { .. } => {
                    return Err(Error::Contract(
                        "only diagonal mixtures have a JSON representation".into(),
                    ))
                }
            }
        }
        Ok(MixtureSpec {
            weights: gmm.weights.clone(),
            means: gmm
                .components
                .iter()
                .map(|c| c.mean.as_slice().to_vec())
                .collect(),
            cov_diag,
        })
    }
}

pub const DEFAULT_RIDGE: f64 = 1e-4;

/// Fits `N(mean, cov + ridge·I)` to a dataset. With `diagonal` set only the
/// per-coordinate variances are kept.
pub fn fit_empirical_gaussian(
    dataset: &[Vector],
    ridge: f64,
    diagonal: bool,
) -> Result<GaussianMixture> {
    if dataset.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 samples to fit a Gaussian, got {}",
            dataset.len()
        )));
    }
    if !(ridge > 0.0) {
        return Err(Error::config("prior.ridge", "must be positive"));
    }
    let dim = dataset[0].len();
    for v in dataset {
        check_len(dim, v.len()).map_err(|e| Error::Data(format!("inconsistent dataset: {e}")))?;
    }
    let count = dataset.len() as f64;
    let mut mean = Vector::zeros(dim);
    for v in dataset {
        mean += v;
    }
    mean /= count;
    if diagonal {
        let mut var = Vector::zeros(dim);
        for v in dataset {
            var += (v - &mean).map(|d| d * d);
        }
        var /= count - 1.0;
        var.add_scalar_mut(ridge);
        return GaussianMixture::gaussian_diagonal(mean, var);
    }
    let mut cov = Matrix::zeros(dim, dim);
    for v in dataset {
        let d = v - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= count - 1.0;
    for i in 0..dim {
        cov[(i, i)] += ridge;
    }
    GaussianMixture::gaussian(mean, cov)
}

/// Covariance of a smooth random image: `exp(−‖p − q‖²/(2ℓ²))` between pixel
/// positions `p`, `q` of the same channel, zero across channels, plus
/// `jitter` on the diagonal. Indices are channel-major (`c·H·W + y·W + x`).
pub fn squared_exponential_covariance(
    width: usize,
    height: usize,
    channels: usize,
    length_scale: f64,
    jitter: f64,
) -> Result<Matrix> {
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::config("shape", "image dimensions must be positive"));
    }
    if !(length_scale > 0.0 && length_scale.is_finite()) {
        return Err(Error::config("length_scale", "must be positive"));
    }
    if !(jitter >= 0.0) {
        return Err(Error::config("jitter", "must be nonnegative"));
    }
    let plane = width * height;
    let n = plane * channels;
    let mut cov = Matrix::zeros(n, n);
    let inv = 1.0 / (2.0 * length_scale * length_scale);
    for c in 0..channels {
        let off = c * plane;
        for i in 0..plane {
            let (xi, yi) = ((i % width) as f64, (i / width) as f64);
            for j in 0..plane {
                let (xj, yj) = ((j % width) as f64, (j / width) as f64);
                let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
                cov[(off + i, off + j)] = (-d2 * inv).exp();
            }
            cov[(off + i, off + i)] += jitter;
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn std_normal_1d() -> GaussianMixture {
        GaussianMixture::gaussian_diagonal(
            Vector::from_element(1, 0.0),
            Vector::from_element(1, 1.0),
        )
        .unwrap()
    }

    fn symmetric_pair(m: f64) -> GaussianMixture {
        GaussianMixture::diagonal(
            vec![0.5, 0.5],
            vec![
                Vector::from_vec(vec![-m, 0.0]),
                Vector::from_vec(vec![m, 0.0]),
            ],
            vec![Vector::from_vec(vec![0.3, 0.3]); 2],
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_values() {
        let p = std_normal_1d();
        let zero = Vector::zeros(1);
        assert!((p.log_marginal(&zero, 0.0) + 0.5 * (2.0 * PI).ln()).abs() < 1e-14);
        let s = 30.0;
        let expected = -0.5 * (2.0 * PI * (1.0 + s * s)).ln();
        assert!((p.log_marginal(&zero, s) - expected).abs() < 1e-12);
        let x = Vector::from_element(1, 1.7);
        for s in [0.0, 0.3, 2.0, 80.0] {
            let v = 1.0 + s * s;
            assert!((p.score(&x, s)[0] + 1.7 / v).abs() < 1e-14);
            assert!((p.denoise(&x, s)[0] - 1.7 / v).abs() < 1e-12);
            assert!((p.denoiser_jacobian(&x, s)[(0, 0)] - 1.0 / v).abs() < 1e-14);
        }
    }

    #[test]
    fn denoise_identity_at_zero_noise() {
        let p = symmetric_pair(1.5);
        let x = Vector::from_vec(vec![0.4, -2.0]);
        assert_eq!(p.denoise(&x, 0.0), x);
        let j = p.denoiser_jacobian(&x, 1e-6);
        assert!((j - Matrix::identity(2, 2)).amax() < 1e-9);
    }

    #[test]
    fn symmetric_mixture_has_zero_score_between_modes() {
        let p = symmetric_pair(2.0);
        let s = p.score(&Vector::zeros(2), 0.7);
        assert!(s.amax() < 1e-15);
    }

    #[test]
    fn extreme_noise_is_stable() {
        let p = symmetric_pair(3.0);
        let x = Vector::from_vec(vec![500.0, -300.0]);
        for s in [1e-3, 80.0] {
            assert!(p.log_marginal(&x, s).is_finite());
            assert!(p.score(&x, s).iter().all(|v| v.is_finite()));
            assert!(p.denoise(&x, s).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn invalid_mixtures_are_rejected() {
        let m = vec![Vector::zeros(2)];
        assert!(GaussianMixture::diagonal(
            vec![0.9],
            m.clone(),
            vec![Vector::from_element(2, 1.0)]
        )
        .is_err());
        assert!(GaussianMixture::diagonal(
            vec![1.0],
            m.clone(),
            vec![Vector::from_vec(vec![1.0, 0.0])]
        )
        .is_err());
        let not_pd = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianMixture::gaussian(Vector::zeros(2), not_pd).is_err());
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GaussianMixture::gaussian(Vector::zeros(2), asym).is_err());
    }

    #[test]
    fn dense_and_diagonal_agree() {
        let d = Vector::from_vec(vec![0.5, 2.0, 1.2]);
        let mean = Vector::from_vec(vec![0.1, -0.3, 0.8]);
        let diag = GaussianMixture::gaussian_diagonal(mean.clone(), d.clone()).unwrap();
        let dense = GaussianMixture::gaussian(mean, Matrix::from_diagonal(&d)).unwrap();
        let x = Vector::from_vec(vec![1.0, 2.0, -1.0]);
        let v = Vector::from_vec(vec![0.3, -0.2, 0.9]);
        for s in [0.0, 0.5, 10.0] {
            assert!((diag.log_marginal(&x, s) - dense.log_marginal(&x, s)).abs() < 1e-12);
            assert!((diag.score(&x, s) - dense.score(&x, s)).amax() < 1e-12);
            assert!((diag.denoiser_jvp(&x, s, &v) - dense.denoiser_jvp(&x, s, &v)).amax() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"weights":[0.25,0.75],"means":[[0,1],[2,-1]],"cov_diag":[[1,1],[0.5,2]]}"#;
        let spec = MixtureSpec::from_json(text).unwrap();
        let gmm = spec.build().unwrap();
        assert_eq!(gmm.num_components(), 2);
        assert_eq!(MixtureSpec::try_from(&gmm).unwrap(), spec);
        assert!(MixtureSpec::from_json(r#"{"weights":[1]}"#).is_err());
    }

    #[test]
    fn empirical_fit_edge_cases() {
        let v = Vector::from_vec(vec![1.0, 2.0]);
        let g = fit_empirical_gaussian(&[v.clone(), v.clone()], DEFAULT_RIDGE, false).unwrap();
        assert_eq!(g.mean(0), &v);
        assert!((g.covariance(0) - Matrix::identity(2, 2) * DEFAULT_RIDGE).amax() < 1e-15);
        assert!(matches!(
            fit_empirical_gaussian(&[], DEFAULT_RIDGE, false),
            Err(Error::Data(_))
        ));
        assert!(fit_empirical_gaussian(&[v.clone()], DEFAULT_RIDGE, false).is_err());
        assert!(fit_empirical_gaussian(&[v, Vector::zeros(3)], DEFAULT_RIDGE, false).is_err());
    }

    #[test]
    fn empirical_fit_recovers_parameters() {
        let mean = Vector::from_vec(vec![1.0, -2.0]);
        let cov = Matrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 0.5]);
        let truth = GaussianMixture::gaussian(mean.clone(), cov.clone()).unwrap();
        let mut rng = seeded(3);
        let n = 10_000;
        let data: Vec<Vector> = (0..n).map(|_| truth.sample(&mut rng)).collect();
        let fit = fit_empirical_gaussian(&data, DEFAULT_RIDGE, false).unwrap();
        let nf = n as f64;
        for i in 0..2 {
            let se = (cov[(i, i)] / nf).sqrt();
            assert!((fit.mean(0)[i] - mean[i]).abs() < 4.0 * se);
        }
        let est = fit.covariance(0);
        for i in 0..2 {
            for j in 0..2 {
                // Var of a sample covariance entry: (Σ_ii Σ_jj + Σ_ij²)/n.
                let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / nf).sqrt();
                assert!((est[(i, j)] - cov[(i, j)]).abs() < 4.0 * se + DEFAULT_RIDGE);
            }
        }
    }

    #[test]
    fn squared_exponential_structure() {
        let cov = squared_exponential_covariance(3, 2, 2, 1.5, 1e-2).unwrap();
        assert_eq!(cov.shape(), (12, 12));
        assert!((cov.clone() - cov.transpose()).amax() == 0.0);
        assert!((cov[(0, 0)] - 1.01).abs() < 1e-15);
        // pixels (0,0) and (1,1) are at distance √2
        assert!((cov[(0, 4)] - (-2.0 / 4.5f64).exp()).abs() < 1e-15);
        assert_eq!(cov[(0, 6)], 0.0);
        assert!(GaussianMixture::gaussian(Vector::zeros(12), cov).is_ok());
        assert!(squared_exponential_covariance(0, 2, 1, 1.0, 0.0).is_err());
        assert!(squared_exponential_covariance(2, 2, 1, 0.0, 0.0).is_err());
    }
}
