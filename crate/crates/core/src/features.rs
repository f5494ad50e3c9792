//! Difference-of-Gaussians keypoint detection (locations only).
//!
//! The scale space is kept at full resolution: level `i` has blur
//! `σ₀·2^(i/s)`, and every level is blurred directly from the input. This
//! makes detections exactly translation-covariant away from the border.

use thiserror::Error;

use crate::raster::{GrayImage, PixelMask};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("image too small for keypoint detection: {0}x{1} (need at least 16x16)")]
    TooSmall(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointParams {
    pub octaves: usize,
    pub scales_per_octave: usize,
    /// Blur of the first scale level.
    pub base_sigma: f64,
    /// Blur already present in the input.
    pub assumed_blur: f64,
    /// On images scaled to `[0, 1]`.
    pub contrast_threshold: f64,
    pub edge_ratio: f64,
    /// Grow each detected location into a `(2r+1)²` square.
    pub dilate: usize,
}

impl Default for KeypointParams {
    fn default() -> Self {
        Self {
            octaves: 3,
            scales_per_octave: 3,
            base_sigma: 1.6,
            assumed_blur: 0.5,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            dilate: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub response: f64,
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with mirrored borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let (w, h) = img.dims();
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for (j, kv) in kernel.iter().enumerate() {
                let c = reflect(col as isize + j as isize - r, w);
                acc += kv * img.get(c, row);
            }
            tmp[row * w + col] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for (j, kv) in kernel.iter().enumerate() {
                let rr = reflect(row as isize + j as isize - r, h);
                acc += kv * tmp[rr * w + col];
            }
            out[row * w + col] = acc;
        }
    }
    GrayImage::from_vec(w, h, out).expect("same dims")
}

struct DogStack {
    levels: Vec<Vec<f64>>,
    width: usize,
}

impl DogStack {
    #[inline]
    fn at(&self, level: usize, col: usize, row: usize) -> f64 {
        self.levels[level][row * self.width + col]
    }

    fn gradient(&self, l: usize, c: usize, r: usize) -> [f64; 3] {
        [
            0.5 * (self.at(l, c + 1, r) - self.at(l, c - 1, r)),
            0.5 * (self.at(l, c, r + 1) - self.at(l, c, r - 1)),
            0.5 * (self.at(l + 1, c, r) - self.at(l - 1, c, r)),
        ]
    }

    fn hessian(&self, l: usize, c: usize, r: usize) -> [[f64; 3]; 3] {
        let v = self.at(l, c, r);
        let dxx = self.at(l, c + 1, r) + self.at(l, c - 1, r) - 2.0 * v;
        let dyy = self.at(l, c, r + 1) + self.at(l, c, r - 1) - 2.0 * v;
        let dss = self.at(l + 1, c, r) + self.at(l - 1, c, r) - 2.0 * v;
        let dxy = 0.25
            * (self.at(l, c + 1, r + 1) - self.at(l, c - 1, r + 1) - self.at(l, c + 1, r - 1)
                + self.at(l, c - 1, r - 1));
        let dxs = 0.25
            * (self.at(l + 1, c + 1, r) - self.at(l + 1, c - 1, r) - self.at(l - 1, c + 1, r)
                + self.at(l - 1, c - 1, r));
        let dys = 0.25
            * (self.at(l + 1, c, r + 1) - self.at(l + 1, c, r - 1) - self.at(l - 1, c, r + 1)
                + self.at(l - 1, c, r - 1));
        [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]]
    }

    fn is_extremum(&self, l: usize, c: usize, r: usize) -> bool {
        let v = self.at(l, c, r);
        let (mut is_max, mut is_min) = (true, true);
        for dl in 0..3 {
            for dr in 0..3 {
                for dc in 0..3 {
                    if dl == 1 && dr == 1 && dc == 1 {
                        continue;
                    }
                    let n = self.at(l + dl - 1, c + dc - 1, r + dr - 1);
                    is_max &= v > n;
                    is_min &= v < n;
                    if !is_max && !is_min {
                        return false;
                    }
                }
            }
        }
        is_max || is_min
    }
}

fn solve3(h: &[[f64; 3]; 3], g: &[f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| h[i][j]);
    let b = nalgebra::Vector3::new(g[0], g[1], g[2]);
    let x = m.lu().solve(&b)?;
    Some([x[0], x[1], x[2]])
}

/// Scale-space extrema with sub-pixel refinement, contrast and edge tests.
pub fn detect_keypoints(img: &GrayImage, params: &KeypointParams) -> Result<Vec<Keypoint>, FeatureError> {
    let (w, h) = img.dims();
    if w < 16 || h < 16 {
        return Err(FeatureError::TooSmall(w, h));
    }
    let s = params.scales_per_octave.max(1);
    let n_levels = params.octaves.max(1) * s + 3;
    let sigmas: Vec<f64> = (0..n_levels)
        .map(|i| params.base_sigma * 2f64.powf(i as f64 / s as f64))
        .collect();
    let blurred: Vec<GrayImage> = sigmas
        .iter()
        .map(|&sg| {
            let extra = (sg * sg - params.assumed_blur * params.assumed_blur).max(0.0).sqrt();
            gaussian_blur(img, extra)
        })
        .collect();
    let dog = DogStack {
        levels: blurred
            .windows(2)
            .map(|p| p[1].data().iter().zip(p[0].data()).map(|(a, b)| a - b).collect())
            .collect(),
        width: w,
    };

    let prefilter = 0.5 * params.contrast_threshold / s as f64;
    let threshold = params.contrast_threshold / s as f64;
    let edge = (params.edge_ratio + 1.0).powi(2) / params.edge_ratio;
    let border = 2usize;
    let mut out = Vec::new();
    for l in 1..dog.levels.len() - 1 {
        for r in border..h - border {
            for c in border..w - border {
                let v = dog.at(l, c, r);
                if v.abs() <= prefilter || !dog.is_extremum(l, c, r) {
                    continue;
                }
                // Iterative quadratic refinement.
                let (mut cc, mut rr, mut ll) = (c, r, l);
                let mut accepted = None;
                for _ in 0..5 {
                    let g = dog.gradient(ll, cc, rr);
                    let hs = dog.hessian(ll, cc, rr);
                    let Some(step) = solve3(&hs, &g) else { break };
                    let off = [-step[0], -step[1], -step[2]];
                    if off.iter().all(|o| o.abs() < 0.5) {
                        accepted = Some((off, g, hs));
                        break;
                    }
                    let nc = cc as f64 + off[0].round();
                    let nr = rr as f64 + off[1].round();
                    let nl = ll as f64 + off[2].round();
                    if nc < border as f64
                        || nr < border as f64
                        || nc >= (w - border) as f64
                        || nr >= (h - border) as f64
                        || nl < 1.0
                        || nl >= (dog.levels.len() - 1) as f64
                    {
                        break;
                    }
                    (cc, rr, ll) = (nc as usize, nr as usize, nl as usize);
                }
                let Some((off, g, hs)) = accepted else { continue };
                let contrast = dog.at(ll, cc, rr)
                    + 0.5 * (g[0] * off[0] + g[1] * off[1] + g[2] * off[2]);
                if contrast.abs() < threshold {
                    continue;
                }
                let tr = hs[0][0] + hs[1][1];
                let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[0][1];
                if det <= 0.0 || tr * tr / det >= edge {
                    continue;
                }
                out.push(Keypoint {
                    x: cc as f64 + off[0],
                    y: rr as f64 + off[1],
                    sigma: params.base_sigma * 2f64.powf((ll as f64 + off[2]) / s as f64),
                    response: contrast,
                });
            }
        }
    }
    Ok(out)
}

/// Mask of DoG keypoint locations (rounded to the nearest pixel).
pub fn detect_keypoint_mask(img: &GrayImage, params: &KeypointParams) -> Result<PixelMask, FeatureError> {
    let (w, h) = img.dims();
    let mut mask = PixelMask::new(w, h, false);
    for kp in detect_keypoints(img, params)? {
        let (c, r) = (kp.x.round(), kp.y.round());
        if c >= 0.0 && r >= 0.0 && (c as usize) < w && (r as usize) < h {
            mask.set(c as usize, r as usize, true);
        }
    }
    Ok(mask.dilated(params.dilate))
}
