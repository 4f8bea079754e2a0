//! 8-bit grayscale previews and image triplets.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use mapga_core::{InpaintingMask, Vector};

use crate::config::Shape;
use crate::data::write_f32_image;
use crate::error::{CliError, Result};

/// Maps `[lo, hi]` linearly onto `0..=255`, clamping outside.
pub fn quantize(values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    values
        .iter()
        .map(|v| (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Writes an 8-bit grayscale PNG. Channels are stacked vertically, so the
/// file is `width × (height·channels)`.
pub fn write_png(path: &Path, shape: Shape, values: &[f64], range: (f64, f64)) -> Result<()> {
    let bytes = quantize(values, range.0, range.1);
    write_png_bytes(path, shape.width, shape.height * shape.channels, &bytes)
}

pub fn write_png_bytes(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| CliError::Image(e.to_string()))?;
    writer
        .write_image_data(bytes)
        .map_err(|e| CliError::Image(e.to_string()))?;
    writer.finish().map_err(|e| CliError::Image(e.to_string()))
}

/// Reads an 8-bit grayscale PNG as `(width, height, bytes)`.
pub fn read_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = png::Decoder::new(std::io::BufReader::new(file))
        .read_info()
        .map_err(|e| CliError::Image(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| CliError::Image(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(CliError::Image(format!(
            "{}: not 8-bit grayscale",
            path.display()
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, buf))
}

/// Writes `<stem>.png` and `<stem>.f32`.
pub fn write_image(
    dir: &Path,
    stem: &str,
    shape: Shape,
    x: &Vector,
    range: (f64, f64),
) -> Result<()> {
    write_png(&dir.join(format!("{stem}.png")), shape, x.as_slice(), range)?;
    let pixels: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    write_f32_image(&dir.join(format!("{stem}.f32")), shape, &pixels)
}

/// Original, masked and reconstructed images, all on the original's range.
/// Hidden pixels of the masked image are set to the bottom of that range.
pub fn write_triplet(
    dir: &Path,
    shape: Shape,
    original: &Vector,
    mask: &InpaintingMask,
    recon: &Vector,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let lo = original.min();
    let hi = original.max();
    let ind = mask.indicator();
    let masked = original.zip_map(&ind, |v, k| if k > 0.0 { v } else { lo });
    write_image(dir, "original", shape, original, (lo, hi))?;
    write_image(dir, "masked", shape, &masked, (lo, hi))?;
    write_image(dir, "reconstruction", shape, recon, (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_clamps_and_rounds() {
        assert_eq!(
            quantize(&[-1.0, 0.0, 0.5, 1.0, 2.0], 0.0, 1.0),
            vec![0, 0, 128, 255, 255]
        );
        assert_eq!(quantize(&[3.0], 3.0, 3.0), vec![0]);
    }
}
