//! Grid runner: one solve per (solver, mask, σ_y, seed, split) cell.
//!
//! Ground truth depends only on the seed and the measurement noise on
//! (seed, mask, σ_y), so every solver in a grid sees the same problems.
//! Solver randomness comes from `cell_rng(seed, SOLVER_STREAM + cell index)`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mapga_core::forward_op::simulate_measurement;
use mapga_core::oracle::log_posterior;
use mapga_core::rng::{cell_rng, standard_normal};
use mapga_core::solver::{
    map_ga, map_ga_pgdm, map_ga_with_init, naive_map_x0, pgdm_baseline, MapGaInit,
};
use mapga_core::{GaussianMixture, InpaintingMask, Measurement, PriorModel, SolveResult, Vector};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ResolvedPrior, SolverName};
use crate::error::{CliError, Result};
use crate::image::write_triplet;
use crate::metrics::{psnr, write_csv_file, MetricsRow, TimingRow};

pub const GROUND_TRUTH_STREAM: u64 = 0;
pub const MEASUREMENT_STREAM: u64 = 1;
pub const SOLVER_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub index: usize,
    pub solver: SolverName,
    pub mask: usize,
    pub sigma_y: usize,
    pub seed: u64,
    /// `(num_time_steps, num_iter)` as reported in the metrics row.
    pub split: (usize, usize),
}

impl Cell {
    /// Directory name for per-cell artifacts.
    pub fn label(&self, cfg: &ExperimentConfig) -> String {
        format!(
            "{:05}_{}_{}_sy{}_seed{}_{}x{}",
            self.index,
            self.solver,
            cfg.masks[self.mask],
            cfg.sigma_y[self.sigma_y],
            self.seed,
            self.split.0,
            self.split.1
        )
    }
}

/// Enumerates cells in output order: solver, mask, σ_y, seed, split.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &solver in &cfg.solvers {
        let splits = match solver {
            SolverName::Pgdm => vec![(cfg.pgdm.steps, 1)],
            SolverName::NaiveMap => vec![(1, cfg.naive.n_iters)],
            _ => cfg.splits(),
        };
        for mask in 0..cfg.masks.len() {
            for sigma_y in 0..cfg.sigma_y.len() {
                for &seed in &cfg.seeds {
                    for &split in &splits {
                        out.push(Cell {
                            index: out.len(),
                            solver,
                            mask,
                            sigma_y,
                            seed,
                            split,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Immutable inputs shared by all cells.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub prior: ResolvedPrior,
    pub masks: Vec<InpaintingMask>,
    /// Where per-cell artifacts go; `None` disables them.
    pub artifacts: Option<PathBuf>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig, base: &Path, artifacts: Option<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let prior = cfg.prior.resolve(cfg.shape, base)?;
        if prior.prior.dim() != cfg.shape.dim() {
            return Err(CliError::config(
                "prior",
                format!(
                    "prior has dimension {}, shape has {}",
                    prior.prior.dim(),
                    cfg.shape.dim()
                ),
            ));
        }
        let s = cfg.shape;
        let masks = cfg
            .masks
            .iter()
            .map(|k| InpaintingMask::new(*k, s.width, s.height, s.channels))
            .collect::<mapga_core::Result<_>>()?;
        Ok(Self {
            cfg,
            prior,
            masks,
            artifacts,
        })
    }

    pub fn ground_truth(&self, seed: u64) -> Vector {
        match &self.prior.dataset {
            Some(data) => data[(seed % data.len() as u64) as usize].clone(),
            None => self
                .prior
                .prior
                .sample(&mut cell_rng(seed, GROUND_TRUTH_STREAM)),
        }
    }

    pub fn measurement(&self, cell: &Cell, x0: &Vector) -> Result<Measurement> {
        let problem = (cell.mask * self.cfg.sigma_y.len() + cell.sigma_y) as u64;
        let mut rng = cell_rng(cell.seed, MEASUREMENT_STREAM + problem);
        Ok(simulate_measurement(
            x0,
            &self.masks[cell.mask],
            self.cfg.sigma_y[cell.sigma_y],
            &mut rng,
        )?)
    }

    pub fn solve(&self, cell: &Cell, meas: &Measurement, x0: &Vector) -> Result<SolveResult> {
        let cfg = self.cfg;
        let prior: &GaussianMixture = &self.prior.prior;
        let mut rng = cell_rng(cell.seed, SOLVER_STREAM + cell.index as u64);
        let mut map_cfg = cfg.solver.clone();
        map_cfg.outer_steps = cell.split.0;
        map_cfg.num_iter = cell.split.1;
        let out = match cell.solver {
            SolverName::Pgdm => pgdm_baseline(meas, prior, &cfg.pgdm, &mut rng)?,
            SolverName::NaiveMap => naive_map_x0(meas, prior, &cfg.naive, &mut rng)?,
            SolverName::MapGaPgdm | SolverName::MapGaPgdmD => {
                map_cfg.backend = cell.solver.map_stage().expect("MAP stage").0;
                map_ga_pgdm(meas, prior, &map_cfg, &cfg.refinement, &mut rng)?
            }
            _ => {
                let (backend, use_prior) = cell.solver.map_stage().expect("MAP stage");
                map_cfg.backend = backend;
                map_cfg.use_prior = use_prior;
                match cfg.warm_start {
                    Some(t) => {
                        map_cfg.t_start = Some(t);
                        let z = x0 + standard_normal(x0.len(), &mut rng) * t;
                        map_ga_with_init(meas, prior, &map_cfg, MapGaInit::State(z), &mut rng)?
                    }
                    None => map_ga(meas, prior, &map_cfg, &mut rng)?,
                }
            }
        };
        Ok(out)
    }

    pub fn run_cell(&self, cell: &Cell) -> Result<CellOutput> {
        let cfg = self.cfg;
        let x0 = self.ground_truth(cell.seed);
        let meas = self.measurement(cell, &x0)?;
        let start = Instant::now();
        let result = self.solve(cell, &meas, &x0)?;
        let wall = start.elapsed().as_secs_f64();
        let x_hat = &result.x_hat;
        let mse = (x_hat - &x0).norm_squared() / x0.len() as f64;
        let sy = meas.sigma_y;
        let lp = if sy > 0.0 {
            Some(log_posterior(
                &self.prior.prior,
                &meas,
                x_hat,
                sy * sy,
                0.0,
            )?)
        } else {
            None
        };
        let (solver, mask) = (cell.solver.to_string(), cfg.masks[cell.mask].to_string());
        let metrics = MetricsRow {
            solver: solver.clone(),
            mask: mask.clone(),
            sigma_y: sy,
            seed: cell.seed,
            num_time_steps: cell.split.0,
            num_iter: cell.split.1,
            mse,
            psnr: psnr(mse, cfg.peak),
            residual: meas.residual_norm(x_hat)?,
            log_posterior: lp,
            grad_evals: result.grad_evals,
        };
        let timing = TimingRow {
            solver,
            mask,
            sigma_y: sy,
            seed: cell.seed,
            num_time_steps: cell.split.0,
            num_iter: cell.split.1,
            wall_time_s: wall,
        };
        if let Some(root) = &self.artifacts {
            let dir = root.join(cell.label(cfg));
            if cfg.save_images {
                write_triplet(&dir, cfg.shape, &x0, &self.masks[cell.mask], x_hat)?;
            }
            if cfg.save_traces {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                let path = dir.join("trace.csv");
                std::fs::write(&path, result.trace_csv()).map_err(|e| CliError::io(&path, e))?;
            }
        }
        Ok(CellOutput {
            metrics,
            timing,
            result,
        })
    }
}

pub struct CellOutput {
    pub metrics: MetricsRow,
    pub timing: TimingRow,
    pub result: SolveResult,
}

pub struct Experiment {
    pub metrics: Vec<MetricsRow>,
    pub timings: Vec<TimingRow>,
}

/// Runs every cell on a pool of `jobs` threads; rows come back in cell order.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path, jobs: usize) -> Result<Experiment> {
    let artifacts = (cfg.save_images || cfg.save_traces).then(|| cfg.output.join("cells"));
    let ctx = Context::new(cfg, base, artifacts)?;
    let all = cells(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let outputs: Vec<Result<CellOutput>> =
        pool.install(|| all.par_iter().map(|c| ctx.run_cell(c)).collect());
    let mut metrics = Vec::with_capacity(outputs.len());
    let mut timings = Vec::with_capacity(outputs.len());
    for out in outputs {
        let out = out?;
        metrics.push(out.metrics);
        timings.push(out.timing);
    }
    Ok(Experiment { metrics, timings })
}

/// Writes `metrics.csv`, `timings.csv` and the resolved `config.json` to `dir`.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, exp: &Experiment) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_csv_file(&dir.join("metrics.csv"), &exp.metrics)?;
    write_csv_file(&dir.join("timings.csv"), &exp.timings)?;
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json()).map_err(|e| CliError::io(&path, e))
}
