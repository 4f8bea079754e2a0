//! Float sidecar files, synthetic datasets and their metadata.
//!
//! Both binary formats are a 16-byte header (4-byte magic, then width,
//! height and channels as little-endian `u32`) followed by little-endian
//! `f32` pixels in channel-major order. An image file holds one image; a
//! dataset file holds any number of them back to back.

use std::path::{Path, PathBuf};

use mapga_core::rng::{standard_normal, SolverRng};
use mapga_core::{Matrix, MixtureSpec, Vector};
use serde::{Deserialize, Serialize};

use crate::config::{PriorSpec, Shape};
use crate::error::{CliError, Result};

pub const IMAGE_MAGIC: [u8; 4] = *b"MGF1";
pub const DATASET_MAGIC: [u8; 4] = *b"MGD1";
pub const HEADER_LEN: usize = 16;

pub fn encode(magic: [u8; 4], shape: Shape, pixels: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * pixels.len());
    out.extend_from_slice(&magic);
    for d in [shape.width, shape.height, shape.channels] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for p in pixels {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(magic: [u8; 4], bytes: &[u8]) -> Result<(Shape, Vec<f32>)> {
    if bytes.len() < HEADER_LEN || bytes[..4] != magic {
        return Err(CliError::Image(format!(
            "not a {} file",
            String::from_utf8_lossy(&magic)
        )));
    }
    let dim =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let shape = Shape::new(dim(0), dim(1), dim(2));
    let body = &bytes[HEADER_LEN..];
    let plane = 4 * shape.dim();
    if plane == 0 || body.len() % plane != 0 || (magic == IMAGE_MAGIC && body.len() != plane) {
        return Err(CliError::Image(format!(
            "payload of {} bytes does not match {}x{}x{}",
            body.len(),
            shape.width,
            shape.height,
            shape.channels
        )));
    }
    let pixels = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((shape, pixels))
}

pub fn write_f32_image(path: &Path, shape: Shape, pixels: &[f32]) -> Result<()> {
    debug_assert_eq!(pixels.len(), shape.dim());
    std::fs::write(path, encode(IMAGE_MAGIC, shape, pixels)).map_err(|e| CliError::io(path, e))
}

pub fn read_f32_image(path: &Path) -> Result<(Shape, Vec<f32>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(IMAGE_MAGIC, &bytes)
}

pub fn write_dataset(path: &Path, shape: Shape, samples: &[Vector]) -> Result<()> {
    let pixels: Vec<f32> = samples
        .iter()
        .flat_map(|s| s.iter().map(|&v| v as f32))
        .collect();
    std::fs::write(path, encode(DATASET_MAGIC, shape, &pixels)).map_err(|e| CliError::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<(Shape, Vec<Vector>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (shape, pixels) = decode(DATASET_MAGIC, &bytes)?;
    let samples = pixels
        .chunks_exact(shape.dim())
        .map(|c| Vector::from_iterator(c.len(), c.iter().map(|&v| v as f64)))
        .collect();
    Ok((shape, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    GmmDraws,
    SmoothFields,
}

/// Sidecar JSON written next to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub kind: DataKind,
    pub shape: Shape,
    pub count: usize,
    pub seed: u64,
    /// Prior the samples were drawn from.
    pub prior: PriorSpec,
}

impl DatasetMeta {
    pub fn path_for(dataset: &Path) -> PathBuf {
        dataset.with_extension("json")
    }

    pub fn read(dataset: &Path) -> Result<Self> {
        let path = Self::path_for(dataset);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config("prior.dataset.path", format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dataset: &Path) -> Result<()> {
        let path = Self::path_for(dataset);
        let text = serde_json::to_string_pretty(self).expect("metadata serializes");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// Source distribution of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    GmmDraws(MixtureSpec),
    SmoothFields { length_scale: f64, jitter: f64 },
}

impl Generator {
    pub fn kind(&self) -> DataKind {
        match self {
            Generator::GmmDraws(_) => DataKind::GmmDraws,
            Generator::SmoothFields { .. } => DataKind::SmoothFields,
        }
    }

    pub fn prior_spec(&self) -> PriorSpec {
        match self {
            Generator::GmmDraws(spec) => PriorSpec::Mixture(spec.clone()),
            Generator::SmoothFields {
                length_scale,
                jitter,
            } => PriorSpec::SmoothField {
                length_scale: *length_scale,
                jitter: *jitter,
            },
        }
    }
}

/// Draws `count` images of `shape` from `generator`.
pub fn make_synthetic_dataset(
    generator: &Generator,
    count: usize,
    shape: Shape,
    rng: &mut SolverRng,
) -> Result<Vec<Vector>> {
    if count == 0 {
        return Err(CliError::config("count", "must be at least 1"));
    }
    match generator {
        Generator::GmmDraws(spec) => {
            let gmm = spec
                .build()
                .map_err(|e| CliError::config("prior.mixture", e.to_string()))?;
            if mapga_core::PriorModel::dim(&gmm) != shape.dim() {
                return Err(CliError::config(
                    "shape",
                    format!(
                        "mixture has dimension {}, shape has {}",
                        mapga_core::PriorModel::dim(&gmm),
                        shape.dim()
                    ),
                ));
            }
            Ok((0..count).map(|_| gmm.sample(rng)).collect())
        }
        Generator::SmoothFields {
            length_scale,
            jitter,
        } => {
            if !(*length_scale > 0.0 && length_scale.is_finite()) {
                return Err(CliError::config("length_scale", "must be positive"));
            }
            if !(*jitter >= 0.0) {
                return Err(CliError::config("jitter", "must be nonnegative"));
            }
            let root_w = se_root(shape.width, *length_scale);
            let root_h = se_root(shape.height, *length_scale);
            let plane = shape.width * shape.height;
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let mut x = Vector::zeros(shape.dim());
                for c in 0..shape.channels {
                    let xi = standard_normal(plane, rng);
                    let xi = Matrix::from_row_slice(shape.height, shape.width, xi.as_slice());
                    let field = &root_h * xi * root_w.transpose();
                    for y in 0..shape.height {
                        for col in 0..shape.width {
                            x[c * plane + y * shape.width + col] = field[(y, col)];
                        }
                    }
                }
                x += standard_normal(shape.dim(), rng) * jitter.sqrt();
                out.push(x);
            }
            Ok(out)
        }
    }
}

/// Symmetric square root of the 1-D kernel `exp(−(i−j)²/(2ℓ²))`.
fn se_root(n: usize, length_scale: f64) -> Matrix {
    let inv = 1.0 / (2.0 * length_scale * length_scale);
    let k = Matrix::from_fn(n, n, |i, j| (-((i as f64 - j as f64).powi(2)) * inv).exp());
    let eig = k.symmetric_eigen();
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose()
}
