//! Experiment configuration file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mapga_core::prior::{fit_empirical_gaussian, squared_exponential_covariance, DEFAULT_RIDGE};
use mapga_core::solver::{NaiveConfig, PgdmConfig};
use mapga_core::{Backend, GaussianMixture, MaskKind, MixtureSpec, SolverConfig, Vector};
use serde::{Deserialize, Serialize};

use crate::data::{read_dataset, DatasetMeta};
use crate::error::{CliError, Result};

/// `(num_time_steps, num_iter)` splits of the 1000-evaluation budget.
pub const ABLATION_SPLITS: [(usize, usize); 7] = [
    (20, 50),
    (50, 20),
    (100, 10),
    (200, 5),
    (250, 4),
    (500, 2),
    (1000, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    MapGa,
    MapGaNp,
    MapGaD,
    MapGaDNp,
    MapGaPgdm,
    MapGaPgdmD,
    Pgdm,
    NaiveMap,
}

impl SolverName {
    pub const ALL: [SolverName; 8] = [
        SolverName::MapGa,
        SolverName::MapGaNp,
        SolverName::MapGaD,
        SolverName::MapGaDNp,
        SolverName::MapGaPgdm,
        SolverName::MapGaPgdmD,
        SolverName::Pgdm,
        SolverName::NaiveMap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverName::MapGa => "map-ga",
            SolverName::MapGaNp => "map-ga-np",
            SolverName::MapGaD => "map-ga-d",
            SolverName::MapGaDNp => "map-ga-d-np",
            SolverName::MapGaPgdm => "map-ga-pgdm",
            SolverName::MapGaPgdmD => "map-ga-pgdm-d",
            SolverName::Pgdm => "pgdm",
            SolverName::NaiveMap => "naive-map",
        }
    }

    /// `(backend, use_prior)` of the MAP-GA stage; `None` for solvers without one.
    /// `NP` drops the prior term, `D` swaps the consistency model for the denoiser.
    pub fn map_stage(&self) -> Option<(Backend, bool)> {
        match self {
            SolverName::MapGa => Some((Backend::Consistency, true)),
            SolverName::MapGaNp => Some((Backend::Consistency, false)),
            SolverName::MapGaD => Some((Backend::Denoiser, true)),
            SolverName::MapGaDNp => Some((Backend::Denoiser, false)),
            SolverName::MapGaPgdm => Some((Backend::Consistency, false)),
            SolverName::MapGaPgdmD => Some((Backend::Denoiser, false)),
            SolverName::Pgdm | SolverName::NaiveMap => None,
        }
    }

    pub fn has_pgdm_stage(&self) -> bool {
        matches!(
            self,
            SolverName::MapGaPgdm | SolverName::MapGaPgdmD | SolverName::Pgdm
        )
    }
}

impl fmt::Display for SolverName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        SolverName::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| CliError::config("solvers", format!("unknown solver `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    pub width: usize,
    pub height: usize,
    #[serde(default = "one")]
    pub channels: usize,
}

fn one() -> usize {
    1
}

impl Shape {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
        }
    }

    pub fn dim(&self) -> usize {
        self.width * self.height * self.channels
    }
}

impl Default for Shape {
    fn default() -> Self {
        Shape::new(8, 8, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Inline diagonal-covariance mixture.
    Mixture(MixtureSpec),
    /// Zero-mean Gaussian with squared-exponential covariance over pixels.
    SmoothField {
        length_scale: f64,
        #[serde(default = "default_jitter")]
        jitter: f64,
    },
    /// Dataset written by `make-data`. With `fit_empirical` the prior is the
    /// dataset's empirical Gaussian, otherwise the generating prior recorded
    /// next to it. Ground truths are drawn from the dataset.
    Dataset {
        path: PathBuf,
        #[serde(default = "yes")]
        fit_empirical: bool,
        #[serde(default)]
        diagonal: bool,
        #[serde(default = "default_ridge")]
        ridge: f64,
    },
}

fn default_jitter() -> f64 {
    1e-2
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

fn yes() -> bool {
    true
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::SmoothField {
            length_scale: 1.5,
            jitter: default_jitter(),
        }
    }
}

/// A prior together with the ground-truth pool, if any.
#[derive(Debug, Clone)]
pub struct ResolvedPrior {
    pub prior: GaussianMixture,
    pub dataset: Option<Vec<Vector>>,
}

impl PriorSpec {
    /// Builds the prior. Relative dataset paths are taken from `base`.
    pub fn resolve(&self, shape: Shape, base: &Path) -> Result<ResolvedPrior> {
        match self {
            PriorSpec::Mixture(spec) => {
                let prior = spec.build().map_err(|e| at_field("prior.mixture", e))?;
                Ok(ResolvedPrior {
                    prior,
                    dataset: None,
                })
            }
            PriorSpec::SmoothField {
                length_scale,
                jitter,
            } => {
                let cov = squared_exponential_covariance(
                    shape.width,
                    shape.height,
                    shape.channels,
                    *length_scale,
                    *jitter,
                )
                .map_err(|e| at_field("prior.smooth_field", e))?;
                let prior = GaussianMixture::gaussian(Vector::zeros(shape.dim()), cov)
                    .map_err(|e| at_field("prior.smooth_field", e))?;
                Ok(ResolvedPrior {
                    prior,
                    dataset: None,
                })
            }
            PriorSpec::Dataset {
                path,
                fit_empirical,
                diagonal,
                ridge,
            } => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let (data_shape, samples) = read_dataset(&path)?;
                if data_shape != shape {
                    return Err(CliError::config(
                        "prior.dataset.path",
                        format!(
                            "dataset images are {}x{}x{}, config shape is {}x{}x{}",
                            data_shape.width,
                            data_shape.height,
                            data_shape.channels,
                            shape.width,
                            shape.height,
                            shape.channels
                        ),
                    ));
                }
                let prior = if *fit_empirical {
                    fit_empirical_gaussian(&samples, *ridge, *diagonal)
                        .map_err(|e| at_field("prior.dataset", e))?
                } else {
                    let meta = DatasetMeta::read(&path)?;
                    meta.prior
                        .resolve(shape, base)
                        .map_err(|e| {
                            CliError::config(
                                "prior.dataset.fit_empirical",
                                format!("generating prior: {e}"),
                            )
                        })?
                        .prior
                };
                Ok(ResolvedPrior {
                    prior,
                    dataset: Some(samples),
                })
            }
        }
    }
}

fn at_field(field: &str, e: mapga_core::Error) -> CliError {
    match e {
        mapga_core::Error::Config { path, message } => {
            CliError::config(format!("{field}.{path}"), message)
        }
        other => CliError::config(field, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub prior: PriorSpec,
    pub shape: Shape,
    pub masks: Vec<MaskKind>,
    pub sigma_y: Vec<f64>,
    pub solvers: Vec<SolverName>,
    /// MAP-GA settings; the `backend` and `use_prior` fields are set per solver.
    pub solver: SolverConfig,
    /// PGDM baseline.
    pub pgdm: PgdmConfig,
    /// PGDM stage of MAP-GA-PGDM.
    pub refinement: PgdmConfig,
    pub naive: NaiveConfig,
    pub seeds: Vec<u64>,
    /// Run every MAP-GA cell once per split in [`ABLATION_SPLITS`].
    pub ablation: bool,
    /// Start the plain MAP-GA solvers at this time from `x₀ + t·ξ` instead of
    /// pure noise at `T`. MAP-GA-PGDM ignores it.
    pub warm_start: Option<f64>,
    /// PSNR peak value.
    pub peak: f64,
    pub save_images: bool,
    pub save_traces: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            prior: PriorSpec::default(),
            shape: Shape::default(),
            masks: vec![MaskKind::Box50],
            sigma_y: vec![0.05],
            solvers: vec![SolverName::MapGa],
            solver: SolverConfig::default(),
            pgdm: PgdmConfig::default(),
            refinement: PgdmConfig::refinement(),
            naive: NaiveConfig::default(),
            seeds: vec![0],
            ablation: false,
            warm_start: None,
            peak: 1.0,
            save_images: false,
            save_traces: false,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            CliError::Parse {
                field: if field == "." { "<root>".into() } else { field },
                message: e.into_inner().to_string(),
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked without running a solve.
    pub fn validate(&self) -> Result<()> {
        let s = self.shape;
        if s.width == 0 || s.height == 0 || s.channels == 0 {
            return Err(CliError::config("shape", "dimensions must be positive"));
        }
        nonempty("masks", self.masks.len())?;
        nonempty("sigma_y", self.sigma_y.len())?;
        nonempty("solvers", self.solvers.len())?;
        nonempty("seeds", self.seeds.len())?;
        for (i, kind) in self.masks.iter().enumerate() {
            if *kind == MaskKind::Custom {
                return Err(CliError::config(
                    format!("masks[{i}]"),
                    "custom masks cannot be generated from a kind",
                ));
            }
            mapga_core::InpaintingMask::new(*kind, s.width, s.height, s.channels)
                .map_err(|e| CliError::config(format!("masks[{i}]"), e.to_string()))?;
        }
        for (i, &sy) in self.sigma_y.iter().enumerate() {
            if !(sy >= 0.0 && sy.is_finite()) {
                return Err(CliError::config(
                    format!("sigma_y[{i}]"),
                    "must be finite and nonnegative",
                ));
            }
            if sy == 0.0
                && self
                    .solvers
                    .iter()
                    .any(|n| matches!(n, SolverName::MapGaPgdm | SolverName::MapGaPgdmD))
            {
                return Err(CliError::config(
                    format!("sigma_y[{i}]"),
                    "MAP-GA-PGDM needs sigma_y > 0; drop it from `solvers` or the zero from `sigma_y`",
                ));
            }
        }
        if !(self.peak > 0.0 && self.peak.is_finite()) {
            return Err(CliError::config("peak", "must be positive"));
        }
        if let Some(t) = self.warm_start {
            if !(t > self.solver.epsilon() && t <= self.solver.schedule.t_max()) {
                return Err(CliError::config(
                    "warm_start",
                    "must lie in (epsilon, t_max]",
                ));
            }
        }
        self.solver.validate().map_err(|e| prefix("solver", e))?;
        self.pgdm.validate().map_err(|e| prefix("pgdm", e))?;
        self.refinement
            .validate()
            .map_err(|e| prefix("refinement", e))?;
        if !(self.naive.lr >= 0.0 && self.naive.lr.is_finite()) {
            return Err(CliError::config("naive.lr", "must be nonnegative"));
        }
        Ok(())
    }

    /// Budget splits each MAP-GA cell runs with.
    pub fn splits(&self) -> Vec<(usize, usize)> {
        if self.ablation {
            ABLATION_SPLITS.to_vec()
        } else {
            vec![(self.solver.outer_steps, self.solver.num_iter)]
        }
    }
}

fn nonempty(field: &str, len: usize) -> Result<()> {
    if len == 0 {
        Err(CliError::config(field, "must not be empty"))
    } else {
        Ok(())
    }
}

/// Re-roots a core config error under `section`.
fn prefix(section: &str, e: mapga_core::Error) -> CliError {
    match e {
        mapga_core::Error::Config { path, message } => {
            let rest = ["solver.", "pgdm.", "naive."]
                .iter()
                .find_map(|p| path.strip_prefix(p))
                .unwrap_or(&path);
            CliError::config(format!("{section}.{rest}"), message)
        }
        other => CliError::Core(other),
    }
}
