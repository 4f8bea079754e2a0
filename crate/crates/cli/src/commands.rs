//! Command-line surface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mapga_core::rng::seeded;
use mapga_core::{InpaintingMask, MaskKind};

use crate::config::{ExperimentConfig, PriorSpec, Shape, SolverName};
use crate::data::{make_synthetic_dataset, write_dataset, DataKind, DatasetMeta, Generator};
use crate::error::{CliError, Result};
use crate::image::write_png_bytes;
use crate::metrics::{read_metrics, render_table, summarize, write_csv_file};
use crate::runner::{cells, run_experiment, write_experiment, Context};

#[derive(Debug, Parser)]
#[command(
    name = "mapga",
    version,
    about = "MAP-GA inpainting experiments on analytic diffusion priors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a single problem and write metrics, trace and images.
    Solve(Common),
    /// Run the full (solver, mask, σ_y, seed) grid.
    Bench(Common),
    /// Write mask JSON files and previews.
    MakeMasks {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Generate a synthetic dataset.
    MakeData {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Squared-exponential length scale in pixels (smooth-fields).
        #[arg(long)]
        length_scale: Option<f64>,
        /// Independent per-pixel variance added to smooth fields.
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Summarize one or more metrics CSV files.
    Report {
        /// Metrics files; defaults to `<out>/metrics.csv`.
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum KindArg {
    GmmDraws,
    SmoothFields,
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replaces the config's mask list.
    #[arg(long)]
    pub mask: Option<MaskKind>,
    /// Replaces the config's σ_y list.
    #[arg(long = "sigma-y")]
    pub sigma_y: Option<f64>,
    /// Replaces the config's solver list.
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverName>,
    /// Replaces the config's seed list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
}

fn parse_solver(s: &str) -> std::result::Result<SolverName, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

impl Cli {
    pub fn config_path(&self) -> Option<&Path> {
        match &self.command {
            Command::Solve(c) | Command::Bench(c) => c.config.as_deref(),
            Command::MakeMasks { common, .. } | Command::MakeData { common, .. } => {
                common.config.as_deref()
            }
            Command::Report { .. } => None,
        }
    }
}

impl Common {
    /// Loads the config (or defaults) and applies flag overrides. Returns the
    /// config and the directory relative paths inside it resolve against.
    pub fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let (mut cfg, base) = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::load(path)?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (ExperimentConfig::default(), PathBuf::new()),
        };
        if self.config.is_some() && cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        if let Some(m) = self.mask {
            cfg.masks = vec![m];
        }
        if let Some(s) = self.sigma_y {
            cfg.sigma_y = vec![s];
        }
        if let Some(s) = self.solver {
            cfg.solvers = vec![s];
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        Ok((cfg, base))
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

impl ShapeArgs {
    fn apply(&self, shape: &mut Shape) {
        if let Some(w) = self.width {
            shape.width = w;
        }
        if let Some(h) = self.height {
            shape.height = h;
        }
        if let Some(c) = self.channels {
            shape.channels = c;
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(c) => solve(c),
        Command::Bench(c) => bench(c),
        Command::MakeMasks { common, shape } => make_masks(common, shape),
        Command::MakeData {
            common,
            shape,
            kind,
            count,
            length_scale,
            jitter,
        } => make_data(common, shape, *kind, *count, *length_scale, *jitter),
        Command::Report { inputs, out } => report(inputs, out.as_deref()),
    }
}

fn solve(c: &Common) -> Result<()> {
    let (mut cfg, base) = c.load()?;
    cfg.save_images = true;
    cfg.save_traces = true;
    let grid = cells(&cfg);
    if grid.len() != 1 {
        return Err(CliError::Usage(format!(
            "solve runs one problem but the config describes {} cells; narrow it with --solver/--mask/--sigma-y/--seed or use bench",
            grid.len()
        )));
    }
    let cell = grid[0];
    let ctx = Context::new(&cfg, &base, Some(cfg.output.clone()))?;
    let out = ctx.run_cell(&cell)?;
    let label = cell.label(&cfg);
    let m = &out.metrics;
    write_experiment(
        &cfg.output,
        &cfg,
        &crate::runner::Experiment {
            metrics: vec![m.clone()],
            timings: vec![out.timing.clone()],
        },
    )?;
    println!(
        "{} {} sigma_y={} seed={} mse={:.6e} psnr={:.3} residual={:.6e} grad_evals={} -> {}",
        m.solver,
        m.mask,
        m.sigma_y,
        m.seed,
        m.mse,
        m.psnr,
        m.residual,
        m.grad_evals,
        cfg.output.join(label).display()
    );
    Ok(())
}

fn bench(c: &Common) -> Result<()> {
    let (cfg, base) = c.load()?;
    let exp = run_experiment(&cfg, &base, c.jobs())?;
    write_experiment(&cfg.output, &cfg, &exp)?;
    print!("{}", render_table(&summarize(&exp.metrics)));
    println!(
        "{} rows -> {}",
        exp.metrics.len(),
        cfg.output.join("metrics.csv").display()
    );
    Ok(())
}

fn make_masks(c: &Common, shape_args: &ShapeArgs) -> Result<()> {
    let (mut cfg, _) = c.load()?;
    shape_args.apply(&mut cfg.shape);
    let kinds = match (c.mask, &c.config) {
        (Some(m), _) => vec![m],
        (None, Some(_)) => cfg.masks.clone(),
        (None, None) => MaskKind::SIX.to_vec(),
    };
    let out = &cfg.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let s = cfg.shape;
    for kind in kinds {
        let mask = InpaintingMask::new(kind, s.width, s.height, s.channels)
            .map_err(|e| CliError::config("masks", e.to_string()))?;
        let json = out.join(format!("{kind}.json"));
        std::fs::write(&json, mask.to_json()).map_err(|e| CliError::io(&json, e))?;
        let bytes: Vec<u8> = mask
            .indicator()
            .iter()
            .map(|&v| if v > 0.0 { 255 } else { 0 })
            .collect();
        write_png_bytes(
            &out.join(format!("{kind}.png")),
            s.width,
            s.height * s.channels,
            &bytes,
        )?;
        println!(
            "{kind}: kept {} of {} -> {}",
            mask.m(),
            mask.n(),
            json.display()
        );
    }
    Ok(())
}

fn make_data(
    c: &Common,
    shape_args: &ShapeArgs,
    kind: KindArg,
    count: usize,
    length_scale: Option<f64>,
    jitter: Option<f64>,
) -> Result<()> {
    let (mut cfg, _) = c.load()?;
    shape_args.apply(&mut cfg.shape);
    let generator = match kind {
        KindArg::GmmDraws => match &cfg.prior {
            PriorSpec::Mixture(spec) => Generator::GmmDraws(spec.clone()),
            _ => {
                return Err(CliError::config(
                    "prior",
                    "gmm-draws needs an inline `mixture` prior in the config",
                ))
            }
        },
        KindArg::SmoothFields => {
            let (ls, jit) = match &cfg.prior {
                PriorSpec::SmoothField {
                    length_scale,
                    jitter,
                } => (*length_scale, *jitter),
                _ => (1.5, 1e-2),
            };
            Generator::SmoothFields {
                length_scale: length_scale.unwrap_or(ls),
                jitter: jitter.unwrap_or(jit),
            }
        }
    };
    let seed = c.seed.unwrap_or(0);
    let samples = make_synthetic_dataset(&generator, count, cfg.shape, &mut seeded(seed))?;
    let out = &cfg.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("dataset.f32");
    write_dataset(&path, cfg.shape, &samples)?;
    let meta = DatasetMeta {
        kind: generator.kind(),
        shape: cfg.shape,
        count,
        seed,
        prior: generator.prior_spec(),
    };
    meta.write(&path)?;
    let name = match meta.kind {
        DataKind::GmmDraws => "gmm-draws",
        DataKind::SmoothFields => "smooth-fields",
    };
    println!("{count} {name} samples -> {}", path.display());
    Ok(())
}

fn report(inputs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = if inputs.is_empty() {
        vec![out_dir.join("metrics.csv")]
    } else {
        inputs.to_vec()
    };
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(read_metrics(f)?);
    }
    let summary = summarize(&rows);
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    write_csv_file(&out_dir.join("summary.csv"), &summary)?;
    print!("{}", render_table(&summary));
    Ok(())
}
