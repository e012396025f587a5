//! Output files: every write goes to a temporary file in the target
//! directory and is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use panoplan_core::floorplan::FloorplanRaster;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline. Maps are written in key order, so
/// equal values give identical bytes.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn encode_png(width: u32, height: u32, pixels: &[u8], color: ExtendedColorType) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out).write_image(pixels, width, height, color).expect("in-memory png encoding");
    out
}

pub fn write_png(path: &Path, width: u32, height: u32, pixels: &[u8], color: ExtendedColorType) -> Result<(), CliError> {
    write_atomic(path, &encode_png(width, height, pixels, color))
}

/// Floorplan raster upscaled by `scale` pixels per cell. An empty raster
/// becomes a single white pixel.
pub fn floorplan_png(raster: &FloorplanRaster, scale: usize) -> Vec<u8> {
    if raster.cols == 0 || raster.rows == 0 {
        return encode_png(1, 1, &[255, 255, 255], ExtendedColorType::Rgb8);
    }
    let rgb = raster.to_rgb8();
    let (w, h) = (raster.cols * scale, raster.rows * scale);
    let mut px = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let k = ((y / scale) * raster.cols + x / scale) * 3;
            px.extend_from_slice(&rgb[k..k + 3]);
        }
    }
    encode_png(w as u32, h as u32, &px, ExtendedColorType::Rgb8)
}

/// Bar chart of component-size fractions, largest component on the left.
pub fn cc_histogram_png(pdf: &[f64]) -> Vec<u8> {
    const BAR: usize = 24;
    const GAP: usize = 6;
    const HEIGHT: usize = 200;
    let n = pdf.len().max(1);
    let w = GAP + n * (BAR + GAP);
    let mut px = vec![255u8; w * HEIGHT * 3];
    for (k, &f) in pdf.iter().enumerate() {
        let bar_h = (f.clamp(0.0, 1.0) * (HEIGHT - 1) as f64).round() as usize;
        let x0 = GAP + k * (BAR + GAP);
        for y in HEIGHT - bar_h..HEIGHT {
            for x in x0..x0 + BAR {
                px[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&[55, 126, 184]);
            }
        }
    }
    // baseline
    for x in 0..w {
        px[((HEIGHT - 1) * w + x) * 3..((HEIGHT - 1) * w + x) * 3 + 3].copy_from_slice(&[0, 0, 0]);
    }
    encode_png(w as u32, HEIGHT as u32, &px, ExtendedColorType::Rgb8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_atomic(&dir.path().join("nope/a.txt"), b"x").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn pngs_decode() {
        let img = image::load_from_memory(&cc_histogram_png(&[0.5, 0.3, 0.2])).unwrap();
        assert_eq!(img.height(), 200);
        let empty = image::load_from_memory(&floorplan_png(&FloorplanRaster::empty(0.1), 4)).unwrap();
        assert_eq!((empty.width(), empty.height()), (1, 1));
    }
}
