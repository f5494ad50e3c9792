use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use super::IoError;
use crate::raster::GrayImage;

/// Reads PNG/PGM (8 or 16 bit; color is converted to luma) into `[0, 1]`.
pub fn read_gray_image(path: impl AsRef<Path>) -> Result<GrayImage, IoError> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| IoError::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        other => other
            .into_luma16()
            .pixels()
            .map(|p| p.0[0] as f64 / 65535.0)
            .collect(),
    };
    Ok(GrayImage::from_vec(w, h, data)?)
}

/// Writes 16-bit grayscale for `.png`, 8-bit for other image extensions.
/// Values are clamped to `[0, 1]`.
pub fn write_gray_image(path: impl AsRef<Path>, img: &GrayImage) -> Result<(), IoError> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let result = if is_png {
        let data = img
            .data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
            .collect();
        ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w, h, data)
            .expect("buffer size")
            .save(path)
    } else {
        let data = img
            .data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(w, h, data)
            .expect("buffer size")
            .save(path)
    };
    result.map_err(|e| IoError::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png16_and_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(9, 7, |c, r| (c * 7 + r) as f64 / 70.0);
        let png = dir.path().join("a.png");
        write_gray_image(&png, &img).unwrap();
        let back = read_gray_image(&png).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
        let pgm = dir.path().join("a.pgm");
        write_gray_image(&pgm, &img).unwrap();
        let back = read_gray_image(&pgm).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}
