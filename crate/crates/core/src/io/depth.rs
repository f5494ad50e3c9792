use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use super::{io_err, IoError};
use crate::raster::DepthMap;

/// KITTI depth PNG convention: depth = stored / 256.
const PNG_DEPTH_SCALE: f64 = 256.0;

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Reads a depth map from `.pfm` (non-positive = invalid) or 16-bit `.png`
/// (`stored / 256`, zero = invalid).
pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthMap, IoError> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => {
            let (w, h, data) = read_pfm(path)?;
            Ok(DepthMap::from_vec(w, h, data.into_iter().map(f64::from).collect())?)
        }
        Some("png") => read_depth_png(path),
        _ => Err(IoError::UnknownExtension(path.to_path_buf())),
    }
}

pub fn write_depth(path: impl AsRef<Path>, depth: &DepthMap) -> Result<(), IoError> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => {
            let data: Vec<f32> = depth.raw().iter().map(|&d| d as f32).collect();
            write_pfm(path, depth.width(), depth.height(), &data)
        }
        Some("png") => write_depth_png(path, depth),
        _ => Err(IoError::UnknownExtension(path.to_path_buf())),
    }
}

fn read_depth_png(path: &Path) -> Result<DepthMap, IoError> {
    let img = image::open(path).map_err(|e| IoError::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let DynamicImage::ImageLuma16(buf) = img else {
        return Err(IoError::MalformedHeader {
            path: path.to_path_buf(),
            reason: "depth PNG must be 16-bit grayscale".into(),
        });
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let data = buf
        .pixels()
        .map(|p| p.0[0] as f64 / PNG_DEPTH_SCALE)
        .collect();
    Ok(DepthMap::from_vec(w, h, data)?)
}

fn write_depth_png(path: &Path, depth: &DepthMap) -> Result<(), IoError> {
    let (w, h) = depth.dims();
    let mut buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(w as u32, h as u32);
    for (c, r, px) in buf.enumerate_pixels_mut() {
        let stored = depth
            .get(c as usize, r as usize)
            .map(|d| (d * PNG_DEPTH_SCALE).round().clamp(1.0, u16::MAX as f64) as u16)
            .unwrap_or(0);
        *px = Luma([stored]);
    }
    buf.save(path).map_err(|e| IoError::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Reads a single-channel PFM. Returns row-major data, top row first.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f32>), IoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let malformed = |reason: &str| IoError::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    // Three whitespace-separated header tokens after the "Pf" tag.
    let mut pos = 0usize;
    let mut token = || -> Option<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    match token().as_deref() {
        Some("Pf") => {}
        Some("PF") => return Err(malformed("color PFM is not a depth map")),
        _ => return Err(malformed("missing Pf tag")),
    }
    let w: usize = token()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed("bad width"))?;
    let h: usize = token()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed("bad height"))?;
    let scale: f64 = token()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| malformed("bad scale"))?;
    if w == 0 || h == 0 || scale == 0.0 {
        return Err(malformed("zero dimension or scale"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    let payload = &bytes[pos + 1..];
    if payload.len() != w * h * 4 {
        return Err(malformed("payload size does not match dimensions"));
    }
    let little = scale < 0.0;
    let mut data = vec![0f32; w * h];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().expect("4 bytes");
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // Stored bottom row first.
        let (file_row, col) = (i / w, i % w);
        data[(h - 1 - file_row) * w + col] = v;
    }
    Ok((w, h, data))
}

/// Writes a little-endian single-channel PFM from top-row-first data.
pub fn write_pfm(path: impl AsRef<Path>, width: usize, height: usize, data: &[f32]) -> Result<(), IoError> {
    let path = path.as_ref();
    assert_eq!(data.len(), width * height, "pfm buffer size");
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    for row in (0..height).rev() {
        for v in &data[row * width..(row + 1) * width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(io_err(path))
}
