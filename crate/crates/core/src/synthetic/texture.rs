//! Procedural value-noise texture.

use crate::raster::GrayImage;

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Quintic fade: C² continuous, so blurred texture has smooth gradients.
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Sum of value-noise octaves on an integer lattice. Values lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueNoise {
    seed: u64,
    octaves: usize,
}

impl ValueNoise {
    pub fn new(seed: u64, octaves: usize) -> Self {
        Self {
            seed,
            octaves: octaves.max(1),
        }
    }

    fn lattice(&self, octave: usize, ix: i64, iy: i64) -> f64 {
        let h = mix(
            self.seed
                ^ mix(octave as u64 + 1)
                ^ mix((ix as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
                ^ mix((iy as u64).wrapping_add(0x632b_e59b_d9b4_e019)),
        );
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn octave(&self, octave: usize, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x.floor(), y.floor());
        let (ix, iy) = (fx as i64, fy as i64);
        let (tx, ty) = (fade(x - fx), fade(y - fy));
        let v00 = self.lattice(octave, ix, iy);
        let v10 = self.lattice(octave, ix + 1, iy);
        let v01 = self.lattice(octave, ix, iy + 1);
        let v11 = self.lattice(octave, ix + 1, iy + 1);
        let top = v00 + (v10 - v00) * tx;
        let bottom = v01 + (v11 - v01) * tx;
        top + (bottom - top) * ty
    }

    /// Noise at continuous coordinates; the first octave has unit lattice
    /// spacing, each further octave doubles the frequency and halves the
    /// amplitude.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let (mut sum, mut norm, mut amp, mut freq) = (0.0, 0.0, 1.0, 1.0);
        for o in 0..self.octaves {
            sum += amp * self.octave(o, x * freq, y * freq);
            norm += amp;
            amp *= 0.5;
            freq *= 2.0;
        }
        sum / norm
    }

    /// Rasterizes the noise with pixel `(c, r)` at `(c·freq, r·freq)`.
    pub fn render(&self, width: usize, height: usize, freq: f64) -> GrayImage {
        GrayImage::from_fn(width, height, |c, r| self.sample(c as f64 * freq, r as f64 * freq))
    }
}

/// Random square cells marked flat (textureless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatCells {
    pub seed: u64,
    /// Cell side in texture units.
    pub cell: f64,
    /// Probability that a cell is flat.
    pub fraction: f64,
}

impl FlatCells {
    pub fn is_flat(&self, x: f64, y: f64) -> bool {
        if self.fraction <= 0.0 {
            return false;
        }
        let (cx, cy) = ((x / self.cell).floor() as i64, (y / self.cell).floor() as i64);
        let h = mix(self.seed ^ mix(cx as u64 ^ 0x5851_f42d_4c95_7f2d) ^ mix((cy as u64).rotate_left(17)));
        ((h >> 11) as f64 / (1u64 << 53) as f64) < self.fraction
    }
}
