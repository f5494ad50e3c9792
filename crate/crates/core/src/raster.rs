//! Dense per-pixel containers: flow fields, depth maps, masks and grayscale
//! images. All are row-major with `(col, row)` indexing.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("raster dimensions must be positive, got {0}x{1}")]
    EmptyDimensions(usize, usize),
    #[error("buffer length {got} does not match {width}x{height}")]
    BufferLength {
        width: usize,
        height: usize,
        got: usize,
    },
}

pub(crate) fn check_same_dims(
    a: (usize, usize),
    b: (usize, usize),
) -> Result<(), RasterError> {
    if a != b {
        return Err(RasterError::DimensionMismatch(a.0, a.1, b.0, b.1));
    }
    Ok(())
}

/// Per-pixel 2D displacement with a validity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<[f64; 2]>,
    valid: Vec<bool>,
}

impl FlowField {
    pub fn new_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 2]; width * height],
            valid: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, u: f64, v: f64) -> Self {
        Self {
            width,
            height,
            data: vec![[u, v]; width * height],
            valid: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col < self.width && row < self.height);
        row * self.width + col
    }

    pub fn get(&self, col: usize, row: usize) -> Option<[f64; 2]> {
        let i = self.index(col, row);
        self.valid[i].then_some(self.data[i])
    }

    /// Stores a displacement; non-finite values mark the pixel invalid.
    pub fn set(&mut self, col: usize, row: usize, u: f64, v: f64) {
        let i = self.index(col, row);
        let ok = u.is_finite() && v.is_finite();
        self.data[i] = if ok { [u, v] } else { [0.0; 2] };
        self.valid[i] = ok;
    }

    pub fn invalidate(&mut self, col: usize, row: usize) {
        let i = self.index(col, row);
        self.valid[i] = false;
        self.data[i] = [0.0; 2];
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Iterates `(col, row, [u, v])` over valid pixels in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, [f64; 2])> + '_ {
        let w = self.width;
        self.data
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(move |(i, (d, _))| (i % w, i / w, *d))
    }
}

/// Per-pixel depth; valid entries are finite and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, depth: f64) -> Self {
        let mut m = Self::new_invalid(width, height);
        for row in 0..height {
            for col in 0..width {
                m.set(col, row, depth);
            }
        }
        m
    }

    /// From a row-major buffer; non-positive or non-finite entries are invalid.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::BufferLength {
                width,
                height,
                got: data.len(),
            });
        }
        let data = data
            .into_iter()
            .map(|d| if d > 0.0 && d.is_finite() { d } else { 0.0 })
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        let d = self.data[row * self.width + col];
        (d > 0.0).then_some(d)
    }

    /// Stores a depth; non-positive or non-finite values mark it invalid.
    pub fn set(&mut self, col: usize, row: usize, depth: f64) {
        self.data[row * self.width + col] = if depth > 0.0 && depth.is_finite() {
            depth
        } else {
            0.0
        };
    }

    pub fn invalidate(&mut self, col: usize, row: usize) {
        self.data[row * self.width + col] = 0.0;
    }

    /// Row-major raw values, `0.0` where invalid.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0.0)
            .map(move |(i, &d)| (i % w, i / w, d))
    }

    /// Multiplies every valid depth by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let data = self
            .data
            .iter()
            .map(|&d| if d > 0.0 { d * factor } else { 0.0 })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Boolean per-pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Grows every set pixel into a `(2r+1)²` square.
    pub fn dilated(&self, radius: usize) -> Self {
        if radius == 0 {
            return self.clone();
        }
        let mut out = Self::new(self.width, self.height, false);
        for (col, row) in self.iter_set() {
            let (c0, c1) = (col.saturating_sub(radius), (col + radius).min(self.width - 1));
            let (r0, r1) = (row.saturating_sub(radius), (row + radius).min(self.height - 1));
            for r in r0..=r1 {
                for c in c0..=c1 {
                    out.set(c, r, true);
                }
            }
        }
        out
    }
}

/// Single-channel floating point image, intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::BufferLength {
                width,
                height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Bilinear sample; `None` outside `[0, w−1] × [0, h−1]`.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    /// Shifts content by `(dx, dy)` pixels, filling uncovered pixels with `fill`.
    pub fn shifted(&self, dx: isize, dy: isize, fill: f64) -> Self {
        Self::from_fn(self.width, self.height, |c, r| {
            let sc = c as isize - dx;
            let sr = r as isize - dy;
            if sc >= 0 && sr >= 0 && (sc as usize) < self.width && (sr as usize) < self.height {
                self.get(sc as usize, sr as usize)
            } else {
                fill
            }
        })
    }
}
