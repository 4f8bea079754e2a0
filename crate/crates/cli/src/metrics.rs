//! Metrics rows, CSV I/O and the `report` summary.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Column order of `metrics.csv`.
pub const METRICS_COLUMNS: [&str; 11] = [
    "solver",
    "mask",
    "sigma_y",
    "seed",
    "num_time_steps",
    "num_iter",
    "mse",
    "psnr",
    "residual",
    "log_posterior",
    "grad_evals",
];

/// Column order of `timings.csv`.
pub const TIMING_COLUMNS: [&str; 7] = [
    "solver",
    "mask",
    "sigma_y",
    "seed",
    "num_time_steps",
    "num_iter",
    "wall_time_s",
];

/// One solve. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub solver: String,
    pub mask: String,
    pub sigma_y: f64,
    pub seed: u64,
    pub num_time_steps: usize,
    pub num_iter: usize,
    /// Mean squared error to the ground truth.
    pub mse: f64,
    pub psnr: f64,
    /// `‖y − Hx̂‖`.
    pub residual: f64,
    /// `log N(y; Hx̂, σ_y²I) + log P_0(x̂)`; empty when `σ_y = 0`.
    pub log_posterior: Option<f64>,
    pub grad_evals: usize,
}

/// Wall time of one solve, kept apart so `metrics.csv` is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub solver: String,
    pub mask: String,
    pub sigma_y: f64,
    pub seed: u64,
    pub num_time_steps: usize,
    pub num_iter: usize,
    pub wall_time_s: f64,
}

pub fn psnr(mse: f64, peak: f64) -> f64 {
    10.0 * (peak * peak / mse).log10()
}

/// Serializes rows with a header line, in order.
pub fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Csv(e.into()))?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_COLUMNS {
        return Err(CliError::Usage(format!(
            "{}: unexpected columns {header:?}",
            path.display()
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(CliError::from))
        .collect()
}

/// Aggregate over seeds for one (solver, mask, σ_y, split) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solver: String,
    pub mask: String,
    pub sigma_y: f64,
    pub num_time_steps: usize,
    pub num_iter: usize,
    pub n: usize,
    pub mse_mean: f64,
    /// Standard error of `mse_mean`.
    pub mse_se: f64,
    pub psnr_mean: f64,
    pub residual_mean: f64,
    /// Mean over rows that have a value.
    pub log_posterior_mean: Option<f64>,
}

/// Groups rows in first-appearance order.
pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    type Key = (String, String, u64, usize, usize);
    let key = |r: &MetricsRow| -> Key {
        (
            r.solver.clone(),
            r.mask.clone(),
            r.sigma_y.to_bits(),
            r.num_time_steps,
            r.num_iter,
        )
    };
    let mut order: Vec<Key> = Vec::new();
    for r in rows {
        let k = key(r);
        if !order.contains(&k) {
            order.push(k);
        }
    }
    order
        .into_iter()
        .map(|k| {
            let group: Vec<&MetricsRow> = rows.iter().filter(|r| key(r) == k).collect();
            let n = group.len();
            let mean =
                |f: &dyn Fn(&MetricsRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n as f64;
            let mse_mean = mean(&|r| r.mse);
            let mse_se = if n > 1 {
                let var = group
                    .iter()
                    .map(|r| (r.mse - mse_mean).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let lps: Vec<f64> = group.iter().filter_map(|r| r.log_posterior).collect();
            SummaryRow {
                solver: k.0,
                mask: k.1,
                sigma_y: f64::from_bits(k.2),
                num_time_steps: k.3,
                num_iter: k.4,
                n,
                mse_mean,
                mse_se,
                psnr_mean: mean(&|r| r.psnr),
                residual_mean: mean(&|r| r.residual),
                log_posterior_mean: (!lps.is_empty())
                    .then(|| lps.iter().sum::<f64>() / lps.len() as f64),
            }
        })
        .collect()
}

/// Fixed-width text rendering of a summary.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<14} {:<9} {:>8} {:>6} {:>5} {:>4} {:>12} {:>10} {:>8} {:>11} {:>12}\n",
        "solver",
        "mask",
        "sigma_y",
        "steps",
        "iter",
        "n",
        "mse",
        "mse_se",
        "psnr",
        "residual",
        "log_post"
    );
    for r in rows {
        let lp = r
            .log_posterior_mean
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<14} {:<9} {:>8} {:>6} {:>5} {:>4} {:>12.4e} {:>10.2e} {:>8.2} {:>11.4e} {:>12}\n",
            r.solver,
            r.mask,
            r.sigma_y,
            r.num_time_steps,
            r.num_iter,
            r.n,
            r.mse_mean,
            r.mse_se,
            r.psnr_mean,
            r.residual_mean,
            lp
        ));
    }
    out
}
