//! Inpainting measurement operators.
//!
//! An inpainting operator `H ∈ R^{m×n}` selects the visible pixels of an
//! image, so its rows are one-hot and mutually orthogonal: `HHᵀ = I_m` and
//! `HᵀH` is a 0/1 diagonal projector. It is stored as the sorted list of kept
//! flat indices. Images are laid out channel-major:
//! `index = (c·height + row)·width + col`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng::standard_normal;
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    /// Hides a centred square of side 50% of the width.
    Box50,
    /// Hides the right half.
    Half,
    /// Keeps only the centred square of side 25% of the width.
    Expand,
    /// Hides a centred square of side 25% of the width.
    Box25,
    /// Keeps the top-left pixel of every 2×2 block.
    Sr2x,
    /// Hides every odd row.
    Altlines,
    /// Keeps everything.
    Full,
    /// Arbitrary index set loaded from a file.
    Custom,
}

impl MaskKind {
    /// The six inpainting settings, in reporting order.
    pub const SIX: [MaskKind; 6] = [
        MaskKind::Box50,
        MaskKind::Half,
        MaskKind::Expand,
        MaskKind::Box25,
        MaskKind::Sr2x,
        MaskKind::Altlines,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MaskKind::Box50 => "box50",
            MaskKind::Half => "half",
            MaskKind::Expand => "expand",
            MaskKind::Box25 => "box25",
            MaskKind::Sr2x => "sr2x",
            MaskKind::Altlines => "altlines",
            MaskKind::Full => "full",
            MaskKind::Custom => "custom",
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "box50" => MaskKind::Box50,
            "half" => MaskKind::Half,
            "expand" => MaskKind::Expand,
            "box25" => MaskKind::Box25,
            "sr2x" => MaskKind::Sr2x,
            "altlines" => MaskKind::Altlines,
            "full" => MaskKind::Full,
            "custom" => MaskKind::Custom,
            other => {
                return Err(Error::config(
                    "mask",
                    format!("unknown mask kind `{other}`"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InpaintingMask {
    pub kind: MaskKind,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    kept_indices: Vec<usize>,
}

impl InpaintingMask {
    /// Builds one of the named masks for a square image.
    pub fn new(kind: MaskKind, width: usize, height: usize, channels: usize) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::config("mask", "image dimensions must be positive"));
        }
        if kind == MaskKind::Full {
            return Ok(Self::full(width, height, channels));
        }
        if kind == MaskKind::Custom {
            return Err(Error::config(
                "mask",
                "custom masks are built from an index list",
            ));
        }
        if width != height {
            return Err(Error::config(
                "mask",
                format!("{kind} needs a square image, got {width}×{height}"),
            ));
        }
        if width % 2 != 0 {
            return Err(Error::config(
                "mask",
                format!("{kind} needs even image dimensions, got {width}×{height}"),
            ));
        }
        let side = width;
        let centred = |crop: usize| -> Result<(usize, usize)> {
            if crop == 0 {
                return Err(Error::config(
                    "mask",
                    format!("{kind} crop is empty at width {side}"),
                ));
            }
            let off = (side - crop) / 2;
            Ok((off, off + crop))
        };
        let visible: Box<dyn Fn(usize, usize) -> bool> = match kind {
            MaskKind::Box50 => {
                let (a, b) = centred(side / 2)?;
                Box::new(move |r, c| !((a..b).contains(&r) && (a..b).contains(&c)))
            }
            MaskKind::Box25 => {
                let (a, b) = centred(side / 4)?;
                Box::new(move |r, c| !((a..b).contains(&r) && (a..b).contains(&c)))
            }
            MaskKind::Expand => {
                let (a, b) = centred(side / 4)?;
                Box::new(move |r, c| (a..b).contains(&r) && (a..b).contains(&c))
            }
            MaskKind::Half => Box::new(move |_, c| c < side / 2),
            MaskKind::Sr2x => Box::new(|r, c| r % 2 == 0 && c % 2 == 0),
            MaskKind::Altlines => Box::new(|r, _| r % 2 == 0),
            MaskKind::Full | MaskKind::Custom => unreachable!(),
        };
        let mut kept = Vec::new();
        for ch in 0..channels {
            for r in 0..height {
                for c in 0..width {
                    if visible(r, c) {
                        kept.push((ch * height + r) * width + c);
                    }
                }
            }
        }
        Ok(Self {
            kind,
            width,
            height,
            channels,
            kept_indices: kept,
        })
    }

    /// `H = I`.
    pub fn full(width: usize, height: usize, channels: usize) -> Self {
        Self {
            kind: MaskKind::Full,
            width,
            height,
            channels,
            kept_indices: (0..width * height * channels).collect(),
        }
    }

    /// Mask from an explicit visible set; indices must be strictly increasing
    /// and below `width·height·channels`.
    pub fn from_indices(
        width: usize,
        height: usize,
        channels: usize,
        kept_indices: Vec<usize>,
    ) -> Result<Self> {
        let m = Self {
            kind: MaskKind::Custom,
            width,
            height,
            channels,
            kept_indices,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.kept_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data(
                "mask indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = self.kept_indices.last() {
            if last >= n {
                return Err(Error::Data(format!(
                    "mask index {last} out of range for n = {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("mask JSON: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mask serializes")
    }

    /// Image dimension `n`.
    pub fn n(&self) -> usize {
        self.width * self.height * self.channels
    }

    /// Measurement dimension `m`.
    pub fn m(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn kept_indices(&self) -> &[usize] {
        &self.kept_indices
    }

    /// Complement of the visible set, in increasing order.
    pub fn hidden_indices(&self) -> Vec<usize> {
        let mut hidden = Vec::with_capacity(self.n() - self.m());
        let mut kept = self.kept_indices.iter().peekable();
        for i in 0..self.n() {
            if kept.peek() == Some(&&i) {
                kept.next();
            } else {
                hidden.push(i);
            }
        }
        hidden
    }

    /// 0/1 indicator of the visible set, i.e. the diagonal of `HᵀH`.
    pub fn indicator(&self) -> Vector {
        let mut d = Vector::zeros(self.n());
        for &i in &self.kept_indices {
            d[i] = 1.0;
        }
        d
    }

    /// `Hx`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_len(self.n(), x.len())?;
        Ok(Vector::from_iterator(
            self.m(),
            self.kept_indices.iter().map(|&i| x[i]),
        ))
    }

    /// `Hᵀy`.
    pub fn adjoint(&self, y: &Vector) -> Result<Vector> {
        check_len(self.m(), y.len())?;
        let mut x = Vector::zeros(self.n());
        for (&i, v) in self.kept_indices.iter().zip(y.iter()) {
            x[i] = *v;
        }
        Ok(x)
    }
}

/// An observation `y = Hx + η`, `η ~ N(0, σ_y² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: Vector,
    pub sigma_y: f64,
    pub mask: InpaintingMask,
}

impl Measurement {
    pub fn new(y: Vector, sigma_y: f64, mask: InpaintingMask) -> Result<Self> {
        check_len(mask.m(), y.len())?;
        if !(sigma_y >= 0.0) || !sigma_y.is_finite() {
            return Err(Error::config(
                "sigma_y",
                format!("must be nonnegative, got {sigma_y}"),
            ));
        }
        Ok(Self { y, sigma_y, mask })
    }

    pub fn dim(&self) -> usize {
        self.mask.n()
    }

    /// `‖y − Hx‖₂`.
    pub fn residual_norm(&self, x: &Vector) -> Result<f64> {
        Ok((&self.y - self.mask.apply(x)?).norm())
    }

    /// `y − Hx`.
    pub fn residual(&self, x: &Vector) -> Result<Vector> {
        Ok(&self.y - self.mask.apply(x)?)
    }
}

pub fn simulate_measurement<R: Rng + ?Sized>(
    x0: &Vector,
    mask: &InpaintingMask,
    sigma_y: f64,
    rng: &mut R,
) -> Result<Measurement> {
    if !(sigma_y >= 0.0) || !sigma_y.is_finite() {
        return Err(Error::config(
            "sigma_y",
            format!("must be nonnegative, got {sigma_y}"),
        ));
    }
    let mut y = mask.apply(x0)?;
    if sigma_y > 0.0 {
        y.axpy(sigma_y, &standard_normal(y.len(), rng), 1.0);
    }
    Measurement::new(y, sigma_y, mask.clone())
}
