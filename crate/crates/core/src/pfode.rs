//! Probability-flow ODE and the consistency function.
//!
//! Under `σ(t) = t` the probability-flow ODE reads
//! `dx/dt = −(D(x, t) − x)/t`. The consistency function maps `(z, t)` to the
//! end point of the trajectory through `z` at `t = ε`; here it is realised by
//! integrating the ODE on a ρ-spaced sub-grid.
//!
//! [`OdeTrajectory::vjp`] is the exact discrete adjoint of the implemented
//! Heun/Euler recursion, so finite differences of [`ConsistencyFn::eval`]
//! converge to it without discretization mismatch.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::prior::{GaussianMixture, PriorModel};
use crate::schedule::{edm_time_grid, sigma, NoiseSchedule, DEFAULT_RHO};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeScheme {
    Heun,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    /// Number of integration intervals between `t` and the target time.
    pub steps: usize,
    pub scheme: OdeScheme,
    /// Spacing exponent of the internal sub-grid.
    pub rho: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            steps: 18,
            scheme: OdeScheme::Heun,
            rho: DEFAULT_RHO,
        }
    }
}

impl OdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::config("ode.steps", "must be at least 1"));
        }
        if !(self.rho > 0.0) {
            return Err(Error::config("ode.rho", "must be positive"));
        }
        Ok(())
    }
}

/// `−(D(x, t) − x)/t`.
pub fn pf_ode_rhs<P: PriorModel + ?Sized>(x: &Vector, t: f64, prior: &P) -> Result<Vector> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("PF-ODE drift needs t > 0, got {t}")));
    }
    Ok(drift(prior, x, t))
}

fn drift<P: PriorModel + ?Sized>(prior: &P, x: &Vector, t: f64) -> Vector {
    let mut d = prior.denoise(x, t);
    d -= x;
    d /= -t;
    d
}

/// `(∂drift/∂x)ᵀ v = −(J_D v − v)/t`, using the symmetry of `J_D`.
fn drift_vjp<P: PriorModel + ?Sized>(prior: &P, x: &Vector, t: f64, v: &Vector) -> Vector {
    let mut d = prior.denoiser_jvp(x, t, v);
    d -= v;
    d /= -t;
    d
}

/// Stored forward pass of the ODE solver, used for the adjoint sweep.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    scheme: OdeScheme,
    times: Vec<f64>,
    /// `states[i]` is the state at `times[i]`.
    states: Vec<Vector>,
    /// Heun predictor `x_i + h·F(x_i)` for each interval.
    predictors: Vec<Vector>,
}

impl OdeTrajectory {
    pub fn endpoint(&self) -> &Vector {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn into_endpoint(mut self) -> Vector {
        self.states
            .pop()
            .expect("trajectory has at least one state")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    /// `(∂x_end/∂x_start)ᵀ v` through the discrete recursion.
    pub fn vjp<P: PriorModel + ?Sized>(&self, prior: &P, v: &Vector) -> Vector {
        let mut adj = v.clone();
        for i in (0..self.times.len() - 1).rev() {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let h = t1 - t0;
            let x0 = &self.states[i];
            adj = match self.scheme {
                OdeScheme::Euler => {
                    let mut out = drift_vjp(prior, x0, t0, &adj);
                    out *= h;
                    out += &adj;
                    out
                }
                // x₁ = x₀ + h/2·(F(x₀) + F(x₀ + h F(x₀)))
                // ⇒ a₀ = a + h/2·(b + J₀(a + h b)),  b = J(x_pred)ᵀ a.
                OdeScheme::Heun => {
                    let b = drift_vjp(prior, &self.predictors[i], t1, &adj);
                    let mut inner = b.clone();
                    inner *= h;
                    inner += &adj;
                    let mut out = drift_vjp(prior, x0, t0, &inner);
                    out += &b;
                    out *= 0.5 * h;
                    out += &adj;
                    out
                }
            };
        }
        adj
    }
}

/// Integrates the PF-ODE from `(x, t_from)` to `t_to` on a ρ-spaced grid with
/// `cfg.steps` intervals. Works in either direction; `t_from == t_to` is a no-op.
pub fn integrate<P: PriorModel + ?Sized>(
    prior: &P,
    x: &Vector,
    t_from: f64,
    t_to: f64,
    cfg: &OdeConfig,
) -> Result<OdeTrajectory> {
    cfg.validate()?;
    check_len(prior.dim(), x.len())?;
    if !(t_from > 0.0 && t_to > 0.0) || !t_from.is_finite() || !t_to.is_finite() {
        return Err(Error::Domain(format!(
            "PF-ODE integration needs positive finite times, got {t_from} → {t_to}"
        )));
    }
    let times: Vec<f64> = if t_from == t_to {
        vec![t_from]
    } else if t_from > t_to {
        edm_time_grid(cfg.steps + 1, t_to, t_from, cfg.rho)?
            .taus()
            .to_vec()
    } else {
        let mut g = edm_time_grid(cfg.steps + 1, t_from, t_to, cfg.rho)?
            .taus()
            .to_vec();
        g.reverse();
        g
    };
    let mut states = Vec::with_capacity(times.len());
    let mut predictors = Vec::with_capacity(times.len().saturating_sub(1));
    states.push(x.clone());
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let x0 = states.last().expect("non-empty");
        let d0 = drift(prior, x0, t0);
        let mut pred = x0.clone();
        pred.axpy(h, &d0, 1.0);
        let next = match cfg.scheme {
            OdeScheme::Euler => pred.clone(),
            OdeScheme::Heun => {
                let d1 = drift(prior, &pred, t1);
                let mut n = x0.clone();
                n.axpy(0.5 * h, &d0, 1.0);
                n.axpy(0.5 * h, &d1, 1.0);
                n
            }
        };
        predictors.push(pred);
        states.push(next);
    }
    Ok(OdeTrajectory {
        scheme: cfg.scheme,
        times,
        states,
        predictors,
    })
}

/// The consistency function `f(z, t)`: the PF-ODE trajectory through `(z, t)`
/// followed down to `t = ε`.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyFn<'a, P: PriorModel + ?Sized> {
    prior: &'a P,
    schedule: NoiseSchedule,
    cfg: OdeConfig,
}

impl<'a, P: PriorModel + ?Sized> ConsistencyFn<'a, P> {
    pub fn new(prior: &'a P, schedule: NoiseSchedule, cfg: OdeConfig) -> Result<Self> {
        schedule.validate()?;
        cfg.validate()?;
        Ok(Self {
            prior,
            schedule,
            cfg,
        })
    }

    pub fn prior(&self) -> &'a P {
        self.prior
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn config(&self) -> &OdeConfig {
        &self.cfg
    }

    /// Forward pass with stored states. `t == ε` gives an empty trajectory.
    pub fn trace(&self, z: &Vector, t: f64) -> Result<OdeTrajectory> {
        self.schedule.check_time(t)?;
        integrate(self.prior, z, t, self.schedule.epsilon(), &self.cfg)
    }

    pub fn eval(&self, z: &Vector, t: f64) -> Result<Vector> {
        Ok(self.trace(z, t)?.into_endpoint())
    }

    /// `(∂f(z, t)/∂z)ᵀ v`.
    pub fn vjp(&self, z: &Vector, t: f64, v: &Vector) -> Result<Vector> {
        check_len(self.prior.dim(), v.len())?;
        Ok(self.trace(z, t)?.vjp(self.prior, v))
    }
}

/// Exact solution of the PF-ODE for a single Gaussian prior `N(μ, U Λ Uᵀ)`:
///
/// `f(z, t) = μ + U diag(sqrt((λ + ε²)/(λ + t²))) Uᵀ (z − μ)`.
pub fn gaussian_consistency_closed_form(
    prior: &GaussianMixture,
    schedule: &NoiseSchedule,
    z: &Vector,
    t: f64,
) -> Result<Vector> {
    check_len(prior.dim(), z.len())?;
    schedule.check_time(t)?;
    let s2_end = sigma(schedule.epsilon())?.powi(2);
    let s2 = sigma(t)?.powi(2);
    let mu = prior.mean(0);
    let shrink = prior.gaussian_spectral(&(z - mu), |l| ((l + s2_end) / (l + s2)).sqrt())?;
    Ok(mu + shrink)
}
