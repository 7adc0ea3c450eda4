//! PNG frame sequences and atomic file writes.
//!
//! A sequence directory holds `frame_00000.png`, `frame_00001.png`, … with no
//! gaps. Alpha frames are 8-bit grayscale (`v/255`); 16-bit grayscale is also
//! accepted when reading (`v/65535`). Images and foregrounds are 8-bit RGB.
//! Writing quantises with `round(255·v)`, so metrics computed against 8-bit
//! ground truth cannot resolve differences much below `1/255`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::compositor::{Clip, Role};
use crate::error::{Error, Result};
use crate::grid::Grid;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn image_err(path: &Path, message: impl ToString) -> Error {
    Error::Image { path: path.display().to_string(), message: message.to_string() }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Argument(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

fn quantise(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// PNG encoding of a 1-channel (gray) or 3-channel (RGB) grid in `[0, 1]`.
pub fn encode_png(grid: &Grid) -> Result<Vec<u8>> {
    let (h, w, c) = grid.dims();
    let color = match c {
        1 => ExtendedColorType::L8,
        3 => ExtendedColorType::Rgb8,
        _ => return Err(Error::Shape(format!("PNG output needs 1 or 3 channels, got {c}"))),
    };
    let pixels: Vec<u8> = grid.data().iter().map(|&v| quantise(v)).collect();
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(&pixels, w as u32, h as u32, color)
        .map_err(|e| Error::Image { path: String::new(), message: e.to_string() })?;
    Ok(out)
}

pub fn write_png(path: &Path, grid: &Grid) -> Result<()> {
    let bytes = encode_png(grid).map_err(|e| match e {
        Error::Image { message, .. } => image_err(path, message),
        other => other,
    })?;
    write_atomic(path, &bytes)
}

/// Reads a PNG as a grid with `channels` (1 = gray alpha, 3 = RGB).
pub fn read_png(path: &Path, channels: usize) -> Result<Grid> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| image_err(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match (channels, &img) {
        (1, DynamicImage::ImageLuma8(g)) => g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        (1, DynamicImage::ImageLuma16(g)) => g.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        (3, DynamicImage::ImageRgb8(g)) => g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        _ => {
            return Err(image_err(
                path,
                format!("unsupported pixel format {:?} for a {channels}-channel frame", img.color()),
            ))
        }
    };
    Grid::new(h, w, channels, data)
}

pub fn frame_name(t: usize) -> String {
    format!("frame_{t:05}.png")
}

/// Writes every frame of `clip` into `dir` (created if missing).
pub fn write_sequence(dir: &Path, clip: &Clip) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (t, frame) in clip.frames().iter().enumerate() {
        write_png(&dir.join(frame_name(t)), frame)?;
    }
    Ok(())
}

/// Sorted `frame_%05d.png` paths in `dir`; the indices must run 0, 1, 2, …
pub fn list_sequence(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut indices = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let name = entry.map_err(io_err(dir))?.file_name();
        let name = name.to_string_lossy();
        if let Some(num) = name.strip_prefix("frame_").and_then(|s| s.strip_suffix(".png")) {
            if num.len() == 5 && num.bytes().all(|b| b.is_ascii_digit()) {
                indices.push(num.parse::<usize>().expect("digits"));
            }
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(Error::Argument(format!("{} contains no frame_%05d.png files", dir.display())));
    }
    if let Some((i, _)) = indices.iter().enumerate().find(|(i, t)| *i != **t) {
        return Err(Error::Argument(format!("{}: frame {i} is missing", dir.display())));
    }
    Ok(indices.into_iter().map(|t| dir.join(frame_name(t))).collect())
}

pub fn read_sequence(dir: &Path, role: Role) -> Result<Clip> {
    use rayon::prelude::*;
    let frames = list_sequence(dir)?
        .par_iter()
        .map(|p| read_png(p, role.channels()))
        .collect::<Result<Vec<_>>>()?;
    Clip::new(frames, role)
}
