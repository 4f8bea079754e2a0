//! MAP-GA and its baselines for inpainting.
//!
//! MAP-GA optimizes over the noise-space variable `z` rather than over `x₀`:
//! the estimate is `x̂_ε = f(z, t)` where `f` is the consistency function (or
//! the denoiser used as a proxy for it), and `z` follows gradient ascent on
//! `log P(f(z, t) | y)`. The gradient is the vector-Jacobian product
//! `(∂f/∂z)ᵀ ∇_{x_ε} log P(x_ε | y)`.
//!
//! All solvers are sequential and deterministic given the config and the rng.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::forward_op::Measurement;
use crate::oracle::log_posterior;
use crate::pfode::{ConsistencyFn, OdeConfig, OdeTrajectory};
use crate::prior::PriorModel;
use crate::rng::{gaussian_around, standard_normal};
use crate::schedule::{edm_time_grid, sigma, NoiseSchedule, TimeGrid, DEFAULT_RHO};
use crate::Vector;

/// Map from `(z, t)` to the clean estimate `x̂_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// PF-ODE solved down to `ε`.
    Consistency,
    /// One-shot denoiser `D(z, t)`.
    Denoiser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Number of outer time steps `n`; the grid has `n + 1` points.
    pub outer_steps: usize,
    /// Gradient-ascent iterations per outer step.
    pub num_iter: usize,
    /// Learning rate; `None` means `σ_y² + σ_ε²`.
    pub lr: Option<f64>,
    pub use_prior: bool,
    pub backend: Backend,
    pub schedule: NoiseSchedule,
    /// Spacing exponent of the outer grid.
    pub rho: f64,
    /// First outer time `τ_n`; `None` means `T`.
    pub t_start: Option<f64>,
    pub ode: OdeConfig,
    /// Stop the inner loop once `‖grad‖` falls below this.
    pub grad_tol: Option<f64>,
    /// Evaluate the log-posterior for every trace record.
    pub record_log_posterior: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_steps: 20,
            num_iter: 50,
            lr: None,
            use_prior: true,
            backend: Backend::Consistency,
            schedule: NoiseSchedule::default(),
            rho: DEFAULT_RHO,
            t_start: None,
            ode: OdeConfig::default(),
            grad_tol: None,
            record_log_posterior: false,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn epsilon(&self) -> f64 {
        self.schedule.epsilon()
    }

    pub fn learning_rate(&self, sigma_y: f64) -> f64 {
        self.lr
            .unwrap_or_else(|| sigma_y * sigma_y + self.epsilon() * self.epsilon())
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.ode.validate()?;
        if self.outer_steps < 1 {
            return Err(Error::config("solver.outer_steps", "must be at least 1"));
        }
        if self.num_iter < 1 {
            return Err(Error::config("solver.num_iter", "must be at least 1"));
        }
        if let Some(lr) = self.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::config(
                    "solver.lr",
                    format!("must be positive, got {lr}"),
                ));
            }
        }
        if let Some(t) = self.t_start {
            if !(t > self.epsilon() && t <= self.schedule.t_max()) {
                return Err(Error::config(
                    "solver.t_start",
                    format!("must lie in (ε, T], got {t}"),
                ));
            }
        }
        if !(self.rho > 0.0) {
            return Err(Error::config("solver.rho", "must be positive"));
        }
        Ok(())
    }

    /// Outer grid `τ_n > … > τ_0 = ε`.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        let start = self.t_start.unwrap_or(self.schedule.t_max());
        edm_time_grid(self.outer_steps + 1, self.epsilon(), start, self.rho)
    }
}

/// Variance `r_t²` of the Gaussian surrogate for `P(x₀ | x_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GuidanceVariance {
    /// `r_t² = σ_t² / (1 + σ_t²)`.
    Bounded,
    /// `r_t² = (scale·σ_t)²`.
    Proportional { scale: f64 },
}

impl GuidanceVariance {
    pub fn r2(&self, sigma_t: f64) -> f64 {
        let s2 = sigma_t * sigma_t;
        match self {
            GuidanceVariance::Bounded => s2 / (1.0 + s2),
            GuidanceVariance::Proportional { scale } => scale * scale * s2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgdmConfig {
    /// Number of guided denoising steps.
    pub steps: usize,
    pub schedule: NoiseSchedule,
    pub rho: f64,
    pub variance: GuidanceVariance,
    /// Treat `x̂_t` as constant in `x_t` (skip the denoiser Jacobian).
    pub detach_jacobian: bool,
    pub record_log_posterior: bool,
}

impl Default for PgdmConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            schedule: NoiseSchedule::default(),
            rho: DEFAULT_RHO,
            variance: GuidanceVariance::Bounded,
            detach_jacobian: false,
            record_log_posterior: false,
        }
    }
}

impl PgdmConfig {
    /// The PGDM stage of MAP-GA-PGDM: 20 steps.
    pub fn refinement() -> Self {
        Self {
            steps: 20,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.steps < 1 {
            return Err(Error::config("pgdm.steps", "must be at least 1"));
        }
        if !(self.rho > 0.0) {
            return Err(Error::config("pgdm.rho", "must be positive"));
        }
        if let GuidanceVariance::Proportional { scale } = self.variance {
            if !(scale >= 0.0) {
                return Err(Error::config("pgdm.variance.scale", "must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaiveConfig {
    pub n_iters: usize,
    pub lr: f64,
    /// Noise floor added to `σ_y²` in the likelihood.
    pub epsilon: f64,
    pub grad_tol: Option<f64>,
    pub record_log_posterior: bool,
}

impl Default for NaiveConfig {
    fn default() -> Self {
        Self {
            n_iters: 1000,
            lr: 1e-2,
            epsilon: crate::schedule::DEFAULT_SIGMA_MIN,
            grad_tol: None,
            record_log_posterior: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    MapGa,
    Pgdm,
    Naive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub stage: Stage,
    pub t: f64,
    /// `‖y − Hx̂‖`.
    pub residual: f64,
    pub grad_norm: f64,
    pub log_posterior: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x_hat: Vector,
    pub trace: Vec<TraceRecord>,
    /// Number of posterior gradient evaluations.
    pub grad_evals: usize,
    pub config: serde_json::Value,
}

impl SolveResult {
    /// Trace as CSV with header `iteration,t,residual,grad_norm,log_posterior`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,t,residual,grad_norm,log_posterior\n");
        for r in &self.trace {
            let lp = r
                .log_posterior
                .map(|v| format!("{v:e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{}\n",
                r.iteration, r.t, r.residual, r.grad_norm, lp
            ));
        }
        out
    }

    /// Best log-posterior seen at each outer MAP-GA time, in grid order.
    pub fn best_log_posterior_per_step(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in self.trace.iter().filter(|r| r.stage == Stage::MapGa) {
            let Some(lp) = r.log_posterior else { continue };
            match out.last_mut() {
                Some((t, best)) if *t == r.t => *best = best.max(lp),
                _ => out.push((r.t, lp)),
            }
        }
        out
    }
}

/// `∇_{x_ε} log P(y | x_ε) = Hᵀ(y − Hx_ε)/(σ_y² + σ_ε²)`, using `HHᵀ = I`.
pub fn grad_log_likelihood(x_eps: &Vector, meas: &Measurement, epsilon: f64) -> Result<Vector> {
    let var = meas.sigma_y * meas.sigma_y + epsilon * epsilon;
    if !(var > 0.0) {
        return Err(Error::config(
            "sigma_y",
            "σ_y and ε are both zero; the likelihood is degenerate",
        ));
    }
    let mut g = meas.mask.adjoint(&meas.residual(x_eps)?)?;
    g /= var;
    Ok(g)
}

/// `∇_{x_ε} log P(x_ε)`, the score at noise level `ε`.
///
/// Equal to `(D(x, ε) − x)/ε²`; analytic priors expose the score directly,
/// which avoids the cancellation in that difference.
pub fn grad_log_prior<P: PriorModel + ?Sized>(
    x_eps: &Vector,
    prior: &P,
    epsilon: f64,
) -> Result<Vector> {
    if !(epsilon > 0.0) {
        return Err(Error::config("schedule.sigma_min", "ε must be positive"));
    }
    check_len(prior.dim(), x_eps.len())?;
    Ok(prior.score(x_eps, sigma(epsilon)?))
}

enum BackendPass {
    Ode(OdeTrajectory),
    Denoiser { z: Vector, t: f64, out: Vector },
}

impl BackendPass {
    fn run<P: PriorModel + ?Sized>(
        prior: &P,
        cfg: &SolverConfig,
        z: &Vector,
        t: f64,
    ) -> Result<Self> {
        check_len(prior.dim(), z.len())?;
        cfg.schedule.check_time(t)?;
        match cfg.backend {
            Backend::Consistency => {
                let f = ConsistencyFn::new(prior, cfg.schedule, cfg.ode)?;
                Ok(BackendPass::Ode(f.trace(z, t)?))
            }
            Backend::Denoiser => Ok(BackendPass::Denoiser {
                z: z.clone(),
                t,
                out: prior.denoise(z, sigma(t)?),
            }),
        }
    }

    fn output(&self) -> &Vector {
        match self {
            BackendPass::Ode(tr) => tr.endpoint(),
            BackendPass::Denoiser { out, .. } => out,
        }
    }

    fn into_output(self) -> Vector {
        match self {
            BackendPass::Ode(tr) => tr.into_endpoint(),
            BackendPass::Denoiser { out, .. } => out,
        }
    }

    fn vjp<P: PriorModel + ?Sized>(&self, prior: &P, v: &Vector) -> Vector {
        match self {
            BackendPass::Ode(tr) => tr.vjp(prior, v),
            BackendPass::Denoiser { z, t, .. } => prior.denoiser_jvp(z, *t, v),
        }
    }
}

/// `x̂ = f(z, t)` under the configured backend.
pub fn backend_map<P: PriorModel + ?Sized>(
    z: &Vector,
    t: f64,
    prior: &P,
    cfg: &SolverConfig,
) -> Result<Vector> {
    Ok(BackendPass::run(prior, cfg, z, t)?.into_output())
}

/// Everything one posterior gradient evaluation produces.
#[derive(Debug, Clone)]
pub struct PosteriorStep {
    pub x_hat: Vector,
    /// `∇_{x_ε} log P(x_ε | y)` at `x̂`.
    pub grad_posterior: Vector,
    /// `(∂f/∂z)ᵀ grad_posterior`.
    pub grad: Vector,
}

pub fn posterior_step<P: PriorModel + ?Sized>(
    z: &Vector,
    t: f64,
    meas: &Measurement,
    prior: &P,
    cfg: &SolverConfig,
) -> Result<PosteriorStep> {
    let pass = BackendPass::run(prior, cfg, z, t)?;
    let eps = cfg.epsilon();
    let x_hat = pass.output();
    let mut g = grad_log_likelihood(x_hat, meas, eps)?;
    if cfg.use_prior {
        g += grad_log_prior(x_hat, prior, eps)?;
    }
    let grad = pass.vjp(prior, &g);
    Ok(PosteriorStep {
        x_hat: pass.into_output(),
        grad_posterior: g,
        grad,
    })
}

/// `∇_z log P(f(z, t) | y)`.
pub fn posterior_vjp_step<P: PriorModel + ?Sized>(
    z: &Vector,
    t: f64,
    meas: &Measurement,
    prior: &P,
    cfg: &SolverConfig,
) -> Result<Vector> {
    Ok(posterior_step(z, t, meas, prior, cfg)?.grad)
}

/// The objective MAP-GA ascends, as a function of `x̂_ε`:
/// `log N(y; Hx̂, (σ_y² + ε²)I) + [use_prior]·log P_ε(x̂)`.
pub fn map_objective<P: PriorModel + ?Sized>(
    x_hat: &Vector,
    meas: &Measurement,
    prior: &P,
    cfg: &SolverConfig,
) -> Result<f64> {
    let eps = cfg.epsilon();
    let var = meas.sigma_y * meas.sigma_y + eps * eps;
    let mut obj = crate::oracle::log_likelihood(meas, x_hat, var)?;
    if cfg.use_prior {
        obj += prior.log_marginal(x_hat, eps);
    }
    Ok(obj)
}

/// Starting point of MAP-GA.
#[derive(Debug, Clone, PartialEq)]
pub enum MapGaInit {
    /// `z ~ N(0, σ²(τ_n) I)`.
    Noise,
    /// Start from a given `z`, e.g. a perturbed ground truth for warm starts.
    State(Vector),
}

struct MapGaRun {
    x_hat: Vector,
    trace: Vec<TraceRecord>,
    grad_evals: usize,
}

fn run_map_ga<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg: &SolverConfig,
    grid: &TimeGrid,
    init: MapGaInit,
    rng: &mut R,
) -> Result<MapGaRun> {
    check_len(prior.dim(), meas.dim())?;
    let lr = cfg.learning_rate(meas.sigma_y);
    let eps_grid = grid.end();
    let s2_end = sigma(eps_grid)?.powi(2);
    let mut z = match init {
        MapGaInit::Noise => {
            let mut z = standard_normal(prior.dim(), rng);
            z *= sigma(grid.start())?;
            z
        }
        MapGaInit::State(z) => {
            check_len(prior.dim(), z.len())?;
            z
        }
    };
    let taus = grid.taus();
    let mut trace = Vec::with_capacity(grid.steps() * cfg.num_iter);
    let mut x_hat = Vector::zeros(prior.dim());
    let mut iteration = 0usize;
    for i in 0..grid.steps() {
        let t = taus[i];
        for _ in 0..cfg.num_iter {
            let step = posterior_step(&z, t, meas, prior, cfg)?;
            let grad_norm = step.grad.norm();
            let log_posterior = if cfg.record_log_posterior {
                Some(map_objective(&step.x_hat, meas, prior, cfg)?)
            } else {
                None
            };
            trace.push(TraceRecord {
                iteration,
                stage: Stage::MapGa,
                t,
                residual: meas.residual_norm(&step.x_hat)?,
                grad_norm,
                log_posterior,
            });
            iteration += 1;
            z.axpy(lr, &step.grad, 1.0);
            if !z.iter().all(|v| v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "MAP-GA diverged at t = {t}, iteration {iteration}; learning rate {lr} is too large"
                )));
            }
            if cfg.grad_tol.is_some_and(|tol| grad_norm < tol) {
                break;
            }
        }
        x_hat = backend_map(&z, t, prior, cfg)?;
        let var = sigma(taus[i + 1])?.powi(2) - s2_end;
        z = if var > 0.0 {
            gaussian_around(&x_hat, var.sqrt(), rng)
        } else {
            x_hat.clone()
        };
    }
    Ok(MapGaRun {
        x_hat,
        grad_evals: trace.len(),
        trace,
    })
}

/// MAP-GA from pure noise at `τ_n`.
pub fn map_ga<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<SolveResult> {
    map_ga_with_init(meas, prior, cfg, MapGaInit::Noise, rng)
}

pub fn map_ga_with_init<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg: &SolverConfig,
    init: MapGaInit,
    rng: &mut R,
) -> Result<SolveResult> {
    cfg.validate()?;
    let grid = cfg.time_grid()?;
    let run = run_map_ga(meas, prior, cfg, &grid, init, rng)?;
    Ok(SolveResult {
        x_hat: run.x_hat,
        trace: run.trace,
        grad_evals: run.grad_evals,
        config: serde_json::json!({ "solver": "map_ga", "config": cfg }),
    })
}

/// One PGDM sweep over `grid`, starting from `x` at `grid.start()`.
fn run_pgdm<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg: &PgdmConfig,
    grid: &TimeGrid,
    mut x: Vector,
    first_iteration: usize,
    trace: &mut Vec<TraceRecord>,
    rng: &mut R,
) -> Result<Vector> {
    let taus = grid.taus();
    let s2_end = sigma(grid.end())?.powi(2);
    let sy2 = meas.sigma_y * meas.sigma_y;
    let eps = cfg.schedule.epsilon();
    let mut mu = x.clone();
    for i in 0..grid.steps() {
        let t = taus[i];
        let s = sigma(t)?;
        let x_hat = prior.denoise(&x, s);
        let var = sy2 + cfg.variance.r2(s);
        if !(var > 0.0) {
            return Err(Error::config(
                "pgdm.variance",
                "σ_y² + r_t² must be positive",
            ));
        }
        let mut back = meas.mask.adjoint(&meas.residual(&x_hat)?)?;
        back /= var;
        let guidance = if cfg.detach_jacobian {
            back
        } else {
            prior.denoiser_jvp(&x, s, &back)
        };
        mu = x_hat;
        mu.axpy(s * s, &guidance, 1.0);
        if !mu.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("PGDM diverged at t = {t}")));
        }
        let log_posterior = if cfg.record_log_posterior {
            let noise = (sy2 + eps * eps).max(f64::MIN_POSITIVE);
            Some(log_posterior(prior, meas, &mu, noise, eps)?)
        } else {
            None
        };
        trace.push(TraceRecord {
            iteration: first_iteration + i,
            stage: Stage::Pgdm,
            t,
            residual: meas.residual_norm(&mu)?,
            grad_norm: guidance.norm(),
            log_posterior,
        });
        let next_var = sigma(taus[i + 1])?.powi(2) - s2_end;
        x = if next_var > 0.0 {
            gaussian_around(&mu, next_var.sqrt(), rng)
        } else {
            mu.clone()
        };
    }
    Ok(mu)
}

/// PGDM from pure noise at `T`, `cfg.steps` guided steps down to `ε`.
pub fn pgdm_baseline<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg: &PgdmConfig,
    rng: &mut R,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_len(prior.dim(), meas.dim())?;
    let grid = edm_time_grid(
        cfg.steps + 1,
        cfg.schedule.epsilon(),
        cfg.schedule.t_max(),
        cfg.rho,
    )?;
    let mut x = standard_normal(prior.dim(), rng);
    x *= sigma(grid.start())?;
    let mut trace = Vec::with_capacity(cfg.steps);
    let x_hat = run_pgdm(meas, prior, cfg, &grid, x, 0, &mut trace, rng)?;
    Ok(SolveResult {
        x_hat,
        grad_evals: trace.len(),
        trace,
        config: serde_json::json!({ "solver": "pgdm", "config": cfg }),
    })
}

/// MAP-GA without the prior term from `T` down to `σ_y`, then PGDM from `σ_y`
/// down to `ε` (`cfg_pgdm.steps` steps).
pub fn map_ga_pgdm<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg_map: &SolverConfig,
    cfg_pgdm: &PgdmConfig,
    rng: &mut R,
) -> Result<SolveResult> {
    cfg_map.validate()?;
    cfg_pgdm.validate()?;
    let sy = meas.sigma_y;
    if !(sy > 0.0) {
        return Err(Error::config(
            "sigma_y",
            "MAP-GA-PGDM needs σ_y > 0; use MAP-GA for noiseless problems",
        ));
    }
    let eps = cfg_map.epsilon();
    let start = cfg_map.t_start.unwrap_or(cfg_map.schedule.t_max());
    if !(sy > eps && sy < start) {
        return Err(Error::config(
            "sigma_y",
            format!("MAP-GA-PGDM needs ε < σ_y < τ_n, got σ_y = {sy}"),
        ));
    }
    let map_cfg = SolverConfig {
        use_prior: false,
        ..cfg_map.clone()
    };
    let map_grid = edm_time_grid(cfg_map.outer_steps + 1, sy, start, cfg_map.rho)?;
    let run = run_map_ga(meas, prior, &map_cfg, &map_grid, MapGaInit::Noise, rng)?;
    let pgdm_grid = edm_time_grid(
        cfg_pgdm.steps + 1,
        cfg_pgdm.schedule.epsilon(),
        sy,
        cfg_pgdm.rho,
    )?;
    let mut trace = run.trace;
    let first = trace.len();
    let x_hat = run_pgdm(
        meas, prior, cfg_pgdm, &pgdm_grid, run.x_hat, first, &mut trace, rng,
    )?;
    Ok(SolveResult {
        x_hat,
        grad_evals: trace.len(),
        trace,
        config: serde_json::json!({ "solver": "map_ga_pgdm", "map": map_cfg, "pgdm": cfg_pgdm }),
    })
}

/// Gradient ascent directly in `x₀`: `x ← x + λ(∇log P(y|x) + ∇log P_0(x))`,
/// from `x ~ N(0, I)`.
pub fn naive_map_x0<P: PriorModel + ?Sized, R: Rng + ?Sized>(
    meas: &Measurement,
    prior: &P,
    cfg: &NaiveConfig,
    rng: &mut R,
) -> Result<SolveResult> {
    check_len(prior.dim(), meas.dim())?;
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(Error::config("naive.lr", "must be nonnegative"));
    }
    let mut x = standard_normal(prior.dim(), rng);
    let noise = meas.sigma_y * meas.sigma_y + cfg.epsilon * cfg.epsilon;
    let mut trace = Vec::with_capacity(cfg.n_iters);
    for iteration in 0..cfg.n_iters {
        let mut g = grad_log_likelihood(&x, meas, cfg.epsilon)?;
        g += prior.score(&x, 0.0);
        let grad_norm = g.norm();
        let log_posterior = if cfg.record_log_posterior {
            Some(log_posterior(prior, meas, &x, noise, 0.0)?)
        } else {
            None
        };
        trace.push(TraceRecord {
            iteration,
            stage: Stage::Naive,
            t: 0.0,
            residual: meas.residual_norm(&x)?,
            grad_norm,
            log_posterior,
        });
        if cfg.grad_tol.is_some_and(|tol| grad_norm < tol) {
            break;
        }
        x.axpy(cfg.lr, &g, 1.0);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "naive MAP diverged at iteration {iteration}; learning rate {} is too large",
                cfg.lr
            )));
        }
    }
    Ok(SolveResult {
        x_hat: x,
        grad_evals: trace.len(),
        trace,
        config: serde_json::json!({ "solver": "naive_map", "config": cfg }),
    })
}
