//! Plane-sweep depth over a hypothesis schedule that is uniform in inverse
//! depth. Matching candidates are generated with the translation normalized
//! to unit length, so the cost volume does not depend on the unknown scene
//! scale; metric depth is recovered afterwards by a single scale factor.

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, GeometryError, PixelPoint, RigidTransform};
use crate::raster::{check_same_dims, DepthMap, GrayImage, RasterError};

/// Allowed deviation of `‖t‖` from 1 for a pose treated as normalized.
pub const UNIT_TRANSLATION_TOL: f64 = 1e-9;

/// Default soft-argmin temperature on standardized costs.
pub const DEFAULT_TAU: f64 = 0.3;

/// Default half-width of the soft-argmin window, in hypotheses.
pub const DEFAULT_SOFT_WINDOW: usize = 2;

const CONFIDENCE_EPS: f64 = 1e-9;
/// Patch intensity variance below which ZNCC is undefined.
const ZNCC_MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("translation must be normalized (|t| = 1), got |t| = {0}")]
    NotNormalized(f64),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("invalid extraction mode: {0}")]
    InvalidMode(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// `d_l = L·d_min / l` for `l = 1..=L`, stored farthest first.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSchedule {
    d_min: f64,
    depths: Vec<f64>,
}

impl HypothesisSchedule {
    pub fn new(count: usize, d_min: f64) -> Result<Self, SweepError> {
        if count < 2 {
            return Err(SweepError::InvalidSchedule(format!(
                "need at least 2 hypotheses, got {count}"
            )));
        }
        if !(d_min > 0.0 && d_min.is_finite()) {
            return Err(SweepError::InvalidSchedule(format!(
                "d_min must be positive, got {d_min}"
            )));
        }
        let depths = (1..=count)
            .map(|l| count as f64 * d_min / l as f64)
            .collect();
        Ok(Self { d_min, depths })
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.depths[0]
    }

    /// Depths, index 0 = farthest (`l = 1`).
    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    /// Spacing between neighbouring inverse depths, `1 / (L·d_min)`.
    pub fn inverse_step(&self) -> f64 {
        1.0 / (self.len() as f64 * self.d_min)
    }

    /// Relative depth error allowed by inverse-depth quantization for depths
    /// up to `max_depth` (in schedule units): `max_depth / (L·d_min)`.
    pub fn quantization_bound(&self, max_depth: f64) -> f64 {
        max_depth * self.inverse_step()
    }
}

/// Returns `(R, t/‖t‖)` and `α = ‖t‖`.
pub fn normalize_translation(pose: &RigidTransform) -> Result<(RigidTransform, f64), SweepError> {
    Ok(pose.normalized()?)
}

fn check_normalized(pose: &RigidTransform) -> Result<(), SweepError> {
    let n = pose.translation().norm();
    if (n - 1.0).abs() > UNIT_TRANSLATION_TOL {
        return Err(SweepError::NotNormalized(n));
    }
    Ok(())
}

/// Per-pixel warp terms: the candidate for depth `d` is the dehomogenized
/// `a·d + b` with `a = K R K⁻¹ x` and `b = K t`.
#[derive(Debug, Clone, Copy)]
struct Warp {
    krk_inv: nalgebra::Matrix3<f64>,
    kt: Vector3<f64>,
}

impl Warp {
    fn new(k: &CameraIntrinsics, pose: &RigidTransform) -> Self {
        Self {
            krk_inv: k.matrix() * pose.rotation() * k.inverse_matrix(),
            kt: k.matrix() * pose.translation(),
        }
    }

    #[inline]
    fn candidate(&self, a: &Vector3<f64>, depth: f64) -> Option<PixelPoint> {
        let h = a * depth + self.kt;
        (h.z > 0.0).then(|| PixelPoint::new(h.x / h.z, h.y / h.z))
    }
}

/// Matching candidates `x′_l ~ K(R·K⁻¹x·d_l + t)` for every hypothesis, in
/// schedule order. Candidates behind the second camera are `None`.
///
/// The pose is used as given; pass a normalized pose to get candidates
/// that are independent of the scene scale.
pub fn warp_candidates(
    x: &PixelPoint,
    k: &CameraIntrinsics,
    pose: &RigidTransform,
    schedule: &HypothesisSchedule,
) -> Vec<Option<PixelPoint>> {
    let warp = Warp::new(k, pose);
    let a = warp.krk_inv * x.homogeneous();
    schedule
        .depths()
        .iter()
        .map(|&d| warp.candidate(&a, d))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostFunction {
    /// Mean absolute difference over a 5×5 patch.
    #[default]
    Sad,
    /// `1 − ZNCC` over a 7×7 patch; zero-variance patches cost 1.
    Zncc,
}

impl CostFunction {
    pub fn patch_radius(&self) -> usize {
        match self {
            CostFunction::Sad => 2,
            CostFunction::Zncc => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostFunction::Sad => "sad",
            CostFunction::Zncc => "zncc",
        }
    }
}

/// `width × height × L` matching costs; `NaN` marks an invalid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    count: usize,
    costs: Vec<f64>,
}

impl CostVolume {
    /// Builds a volume from pixel-major costs (`L` consecutive values per
    /// pixel, pixels row-major). Non-finite entries are invalid.
    pub fn from_vec(width: usize, height: usize, count: usize, costs: Vec<f64>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || count == 0 {
            return Err(RasterError::EmptyDimensions(width, height));
        }
        if costs.len() != width * height * count {
            return Err(RasterError::BufferLength {
                width: width * count,
                height,
                got: costs.len(),
            });
        }
        let costs = costs
            .into_iter()
            .map(|c| if c.is_finite() { c } else { f64::NAN })
            .collect();
        Ok(Self {
            width,
            height,
            count,
            costs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn hypotheses(&self) -> usize {
        self.count
    }

    pub fn get(&self, col: usize, row: usize, l: usize) -> Option<f64> {
        let v = self.costs[(row * self.width + col) * self.count + l];
        (!v.is_nan()).then_some(v)
    }

    /// All `L` costs of one pixel, `NaN` where invalid.
    pub fn pixel(&self, col: usize, row: usize) -> &[f64] {
        let start = (row * self.width + col) * self.count;
        &self.costs[start..start + self.count]
    }

    pub fn valid_count(&self) -> usize {
        self.costs.iter().filter(|c| !c.is_nan()).count()
    }
}

fn patch_cost(
    img1: &GrayImage,
    img2: &GrayImage,
    col: usize,
    row: usize,
    target: &PixelPoint,
    cost: CostFunction,
    buf: &mut Vec<(f64, f64)>,
) -> f64 {
    let r = cost.patch_radius() as isize;
    let total = ((2 * r + 1) * (2 * r + 1)) as usize;
    buf.clear();
    let (w, h) = (img1.width() as isize, img1.height() as isize);
    for dy in -r..=r {
        for dx in -r..=r {
            let (c1, r1) = (col as isize + dx, row as isize + dy);
            if c1 < 0 || r1 < 0 || c1 >= w || r1 >= h {
                continue;
            }
            if let Some(v2) = img2.sample(target.x + dx as f64, target.y + dy as f64) {
                buf.push((img1.get(c1 as usize, r1 as usize), v2));
            }
        }
    }
    // Invalid when at least half of the patch is missing.
    if 2 * buf.len() <= total {
        return f64::NAN;
    }
    let n = buf.len() as f64;
    match cost {
        CostFunction::Sad => buf.iter().map(|(a, b)| (a - b).abs()).sum::<f64>() / n,
        CostFunction::Zncc => {
            let (ma, mb) = buf
                .iter()
                .fold((0.0, 0.0), |(sa, sb), (a, b)| (sa + a, sb + b));
            let (ma, mb) = (ma / n, mb / n);
            let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
            for (a, b) in buf.iter() {
                let (da, db) = (a - ma, b - mb);
                saa += da * da;
                sbb += db * db;
                sab += da * db;
            }
            if saa / n < ZNCC_MIN_VARIANCE || sbb / n < ZNCC_MIN_VARIANCE {
                return 1.0;
            }
            (1.0 - sab / (saa * sbb).sqrt()).clamp(0.0, 2.0)
        }
    }
}

/// Photometric cost volume: `img1` patches at `x` compared against `img2`
/// bilinearly sampled around each candidate `x′_l`. Requires a pose with
/// unit translation. Rows are processed in parallel; the output does not
/// depend on the partitioning.
pub fn build_cost_volume(
    img1: &GrayImage,
    img2: &GrayImage,
    k: &CameraIntrinsics,
    pose: &RigidTransform,
    schedule: &HypothesisSchedule,
    cost: CostFunction,
) -> Result<CostVolume, SweepError> {
    check_same_dims(img1.dims(), img2.dims())?;
    check_normalized(pose)?;
    let (w, h) = img1.dims();
    let count = schedule.len();
    let warp = Warp::new(k, pose);
    let mut costs = vec![f64::NAN; w * h * count];
    costs
        .par_chunks_mut(w * count)
        .enumerate()
        .for_each(|(row, out)| {
            let mut buf = Vec::with_capacity(49);
            for col in 0..w {
                let a = warp.krk_inv * PixelPoint::new(col as f64, row as f64).homogeneous();
                for (l, &d) in schedule.depths().iter().enumerate() {
                    if let Some(target) = warp.candidate(&a, d) {
                        out[col * count + l] = patch_cost(img1, img2, col, row, &target, cost, &mut buf);
                    }
                }
            }
        });
    Ok(CostVolume {
        width: w,
        height: h,
        count,
        costs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtractionMode {
    /// Depth of the lowest-cost hypothesis.
    Hard,
    /// Softmin expectation over inverse depth with temperature `tau` on
    /// per-pixel standardized costs `(c − min) / std`. With `window: Some(k)`
    /// the expectation only covers hypotheses within `k` of the best one,
    /// which keeps distant secondary minima from pulling the estimate;
    /// `None` averages over the whole range. Confidence always uses the
    /// full distribution.
    Soft { tau: f64, window: Option<usize> },
}

impl ExtractionMode {
    pub fn soft() -> Self {
        ExtractionMode::Soft {
            tau: DEFAULT_TAU,
            window: Some(DEFAULT_SOFT_WINDOW),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExtractionMode::Hard => "hard",
            ExtractionMode::Soft { .. } => "soft",
        }
    }
}

/// Up-to-scale depth (unit-translation units) and confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub depth: DepthMap,
    pub confidence: GrayImage,
}

/// Returns `(inverse depth, confidence)` for one pixel, or `None` if no
/// hypothesis is valid.
fn extract_pixel(costs: &[f64], inv: &[f64], mode: ExtractionMode, weights: &mut Vec<f64>) -> Option<(f64, f64)> {
    let valid: Vec<usize> = (0..costs.len()).filter(|&l| !costs[l].is_nan()).collect();
    let n = valid.len();
    if n == 0 {
        return None;
    }
    // Lowest cost, earliest hypothesis on ties.
    let best = valid
        .iter()
        .copied()
        .fold(valid[0], |b, l| if costs[l] < costs[b] { l } else { b });
    let min = costs[best];
    match mode {
        ExtractionMode::Hard => {
            let second = valid
                .iter()
                .filter(|&&l| l != best)
                .map(|&l| costs[l])
                .fold(f64::INFINITY, f64::min);
            let conf = if second.is_finite() {
                ((second - min) / (second + CONFIDENCE_EPS)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            Some((inv[best], conf))
        }
        ExtractionMode::Soft { tau, window } => {
            let mean = valid.iter().map(|&l| costs[l]).sum::<f64>() / n as f64;
            let var = valid.iter().map(|&l| (costs[l] - mean).powi(2)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            if std <= 1e-12 * (1.0 + mean.abs()) {
                // No preferred hypothesis: uniform weights over the whole range.
                let inv_d = valid.iter().map(|&l| inv[l]).sum::<f64>() / n as f64;
                return Some((inv_d, 0.0));
            }
            let weight = |l: usize| (-(costs[l] - min) / (std * tau)).exp();
            weights.clear();
            weights.extend(valid.iter().map(|&l| weight(l)));
            let sum: f64 = weights.iter().sum();
            let conf = if n > 1 {
                let entropy: f64 = weights
                    .iter()
                    .map(|w| w / sum)
                    .filter(|&p| p > 0.0)
                    .map(|p| -p * p.ln())
                    .sum();
                (1.0 - entropy / (n as f64).ln()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let in_window = |l: usize| window.is_none_or(|k| l.abs_diff(best) <= k);
            let (mut num, mut den) = (0.0, 0.0);
            for (&l, &w) in valid.iter().zip(weights.iter()) {
                if in_window(l) {
                    num += w * inv[l];
                    den += w;
                }
            }
            Some((num / den, conf))
        }
    }
}

/// Converts a cost volume into depth and confidence. Pixels without any
/// valid hypothesis get invalid depth and zero confidence.
pub fn extract_depth(
    volume: &CostVolume,
    schedule: &HypothesisSchedule,
    mode: ExtractionMode,
) -> Result<SweepResult, SweepError> {
    if volume.hypotheses() != schedule.len() {
        return Err(SweepError::InvalidSchedule(format!(
            "volume has {} hypotheses, schedule has {}",
            volume.hypotheses(),
            schedule.len()
        )));
    }
    if let ExtractionMode::Soft { tau, .. } = mode {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SweepError::InvalidMode(format!("tau must be positive, got {tau}")));
        }
    }
    let (w, h) = (volume.width(), volume.height());
    let inv: Vec<f64> = schedule.depths().iter().map(|d| 1.0 / d).collect();
    let (inv_lo, inv_hi) = (1.0 / schedule.d_max(), 1.0 / schedule.d_min());
    let per_row: Vec<(Vec<f64>, Vec<f64>)> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut weights = Vec::with_capacity(schedule.len());
            let mut depth = vec![0.0; w];
            let mut conf = vec![0.0; w];
            for col in 0..w {
                if let Some((i, c)) = extract_pixel(volume.pixel(col, row), &inv, mode, &mut weights) {
                    depth[col] = 1.0 / i.clamp(inv_lo, inv_hi);
                    conf[col] = c;
                }
            }
            (depth, conf)
        })
        .collect();
    let (mut depth, mut conf) = (Vec::with_capacity(w * h), Vec::with_capacity(w * h));
    for (d, c) in per_row {
        depth.extend(d);
        conf.extend(c);
    }
    Ok(SweepResult {
        depth: DepthMap::from_vec(w, h, depth)?,
        confidence: GrayImage::from_vec(w, h, conf)?,
    })
}

/// Cost volume and extraction in one call; `pose` must have unit translation.
pub fn plane_sweep(
    img1: &GrayImage,
    img2: &GrayImage,
    k: &CameraIntrinsics,
    pose: &RigidTransform,
    schedule: &HypothesisSchedule,
    cost: CostFunction,
    mode: ExtractionMode,
) -> Result<SweepResult, SweepError> {
    let volume = build_cost_volume(img1, img2, k, pose, schedule, cost)?;
    extract_depth(&volume, schedule, mode)
}

/// Multiplies every valid depth by the ground-truth scale `α_gt`.
pub fn reconcile_scale(pred: &DepthMap, alpha_gt: f64) -> Result<DepthMap, SweepError> {
    if !(alpha_gt > 0.0 && alpha_gt.is_finite()) {
        return Err(SweepError::InvalidScale(alpha_gt));
    }
    Ok(pred.scaled(alpha_gt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{essential_from_pose, EpipolarScorer};
    use approx::assert_relative_eq;

    fn k100() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 40.0).unwrap()
    }

    #[test]
    fn schedule_properties() {
        let s = HypothesisSchedule::new(6, 1.0).unwrap();
        assert_eq!(s.depths(), &[6.0, 3.0, 2.0, 1.5, 1.2, 1.0]);
        let s = HypothesisSchedule::new(64, 0.37).unwrap();
        assert_eq!(s.d_max(), 64.0 * 0.37);
        assert_eq!(*s.depths().last().unwrap(), 0.37);
        for p in s.depths().windows(2) {
            assert!(p[1] < p[0]);
            assert_relative_eq!(1.0 / p[1] - 1.0 / p[0], s.inverse_step(), max_relative = 1e-12);
        }
        assert!(HypothesisSchedule::new(1, 1.0).is_err());
        assert!(HypothesisSchedule::new(4, 0.0).is_err());
    }

    #[test]
    fn lateral_candidates_match_hand_values() {
        let k = k100();
        let pose = RigidTransform::identity().with_translation(Vector3::new(1.0, 0.0, 0.0));
        let s = HypothesisSchedule::new(6, 1.0).unwrap();
        let x = PixelPoint::new(50.0, 40.0);
        let expected = [100.0 / 6.0, 100.0 / 3.0, 50.0, 200.0 / 3.0, 250.0 / 3.0, 100.0];
        for (c, e) in warp_candidates(&x, &k, &pose, &s).iter().zip(expected) {
            let c = c.unwrap();
            assert_relative_eq!(c.x - 50.0, e, max_relative = 1e-12);
            assert_eq!(c.y, 40.0);
        }
    }

    #[test]
    fn candidates_on_epipolar_line_and_far_limit() {
        let k = k100();
        let pose = RigidTransform::from_axis_angle(
            Vector3::new(0.3, 1.0, 0.2),
            0.1,
            Vector3::new(0.6, -0.2, 0.3),
        );
        let (unit, _) = normalize_translation(&pose).unwrap();
        let scorer = EpipolarScorer::new(&essential_from_pose(&unit).unwrap(), &k);
        let s = HypothesisSchedule::new(32, 0.5).unwrap();
        let x = PixelPoint::new(23.0, 61.0);
        for c in warp_candidates(&x, &k, &unit, &s).into_iter().flatten() {
            let line = scorer.epipolar_line(&x).unwrap();
            assert!(crate::geometry::point_line_distance(&c, &line) < 1e-9);
        }
        let far = HypothesisSchedule::new(2, 1e12).unwrap();
        let c = warp_candidates(&x, &k, &unit, &far)[0].unwrap();
        let inf = k.matrix() * unit.rotation() * k.inverse_matrix() * x.homogeneous();
        assert!((c.x - inf.x / inf.z).abs() < 1e-6 && (c.y - inf.y / inf.z).abs() < 1e-6);
    }

    #[test]
    fn normalization() {
        let pose = RigidTransform::identity().with_translation(Vector3::new(3.0, 4.0, 0.0));
        let (unit, alpha) = normalize_translation(&pose).unwrap();
        assert_eq!(alpha, 5.0);
        assert_relative_eq!(*unit.translation(), Vector3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
        let (again, a1) = normalize_translation(&unit).unwrap();
        assert_relative_eq!(a1, 1.0, epsilon = 1e-15);
        assert_eq!(again.rotation(), unit.rotation());
        assert!(normalize_translation(&RigidTransform::identity()).is_err());
    }

    #[test]
    fn scale_changes_raw_candidates_only() {
        let k = k100();
        let s = HypothesisSchedule::new(8, 1.0).unwrap();
        let base = RigidTransform::from_axis_angle(Vector3::y(), 0.05, Vector3::new(0.8, 0.1, 0.2));
        let x = PixelPoint::new(30.0, 30.0);
        let raw: Vec<_> = [0.5, 1.0, 2.0]
            .iter()
            .map(|a| warp_candidates(&x, &k, &base.with_translation(base.translation() * *a), &s))
            .collect();
        assert_ne!(raw[0], raw[1]);
        assert_ne!(raw[1], raw[2]);
        let norm: Vec<_> = [0.5, 1.0, 2.0]
            .iter()
            .map(|a| {
                let (u, _) = normalize_translation(&base.with_translation(base.translation() * *a)).unwrap();
                warp_candidates(&x, &k, &u, &s)
            })
            .collect();
        assert_eq!(norm[0], norm[1]);
        assert_eq!(norm[1], norm[2]);
    }

    #[test]
    fn unnormalized_pose_rejected() {
        let img = GrayImage::new(8, 8, 0.5);
        let pose = RigidTransform::identity().with_translation(Vector3::new(2.0, 0.0, 0.0));
        let s = HypothesisSchedule::new(4, 1.0).unwrap();
        assert!(matches!(
            build_cost_volume(&img, &img, &k100(), &pose, &s, CostFunction::Sad),
            Err(SweepError::NotNormalized(_))
        ));
        let small = GrayImage::new(7, 8, 0.5);
        assert!(matches!(
            build_cost_volume(&img, &small, &k100(), &pose.normalized().unwrap().0, &s, CostFunction::Sad),
            Err(SweepError::Raster(_))
        ));
    }

    #[test]
    fn constant_images_have_zero_confidence() {
        let img = GrayImage::new(40, 30, 0.5);
        let pose = RigidTransform::identity().with_translation(Vector3::new(1.0, 0.0, 0.0));
        let s = HypothesisSchedule::new(8, 2.0).unwrap();
        for cost in [CostFunction::Sad, CostFunction::Zncc] {
            let vol = build_cost_volume(&img, &img, &k100(), &pose, &s, cost).unwrap();
            assert!(vol.valid_count() > 0);
            for mode in [ExtractionMode::Hard, ExtractionMode::soft()] {
                let res = extract_depth(&vol, &s, mode).unwrap();
                assert!(res.confidence.data().iter().all(|&c| c < 1e-9), "{cost:?} {mode:?}");
            }
        }
        let vol = build_cost_volume(&img, &img, &k100(), &pose, &s, CostFunction::Sad).unwrap();
        for c in 0..40 {
            for l in 0..8 {
                if let Some(v) = vol.get(c, 15, l) {
                    assert!(v.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn out_of_frame_cells_invalid() {
        let img = GrayImage::from_fn(20, 10, |c, r| ((c * 3 + r) % 7) as f64 / 7.0);
        let pose = RigidTransform::identity().with_translation(Vector3::new(1.0, 0.0, 0.0));
        let s = HypothesisSchedule::new(4, 1.0).unwrap();
        let vol = build_cost_volume(&img, &img, &k100(), &pose, &s, CostFunction::Sad).unwrap();
        // Nearest hypothesis shifts by 100 px: entirely outside a 20 px image.
        assert_eq!(vol.get(5, 5, 3), None);
        let res = extract_depth(&vol, &s, ExtractionMode::Hard).unwrap();
        assert_eq!(res.depth.get(19, 5), None);
        assert_eq!(res.confidence.get(19, 5), 0.0);
    }

    fn single_pixel(costs: Vec<f64>) -> CostVolume {
        let n = costs.len();
        CostVolume::from_vec(1, 1, n, costs).unwrap()
    }

    #[test]
    fn one_hot_costs() {
        let s = HypothesisSchedule::new(6, 1.0).unwrap();
        for star in 0..6 {
            let costs = (0..6).map(|l| if l == star { 0.0 } else { 1.0 }).collect();
            let vol = single_pixel(costs);
            let hard = extract_depth(&vol, &s, ExtractionMode::Hard).unwrap();
            assert_eq!(hard.depth.get(0, 0), Some(s.depths()[star]));
            assert_relative_eq!(hard.confidence.get(0, 0), 1.0, epsilon = 1e-6);
            let sharp = extract_depth(&vol, &s, ExtractionMode::Soft { tau: 0.01, window: None }).unwrap();
            assert_relative_eq!(sharp.depth.get(0, 0).unwrap(), s.depths()[star], max_relative = 1e-12);
        }
        // Default temperature at the default hypothesis count.
        let s = HypothesisSchedule::new(64, 1.0).unwrap();
        for star in [0, 1, 31, 63] {
            let costs = (0..64).map(|l| if l == star { 0.0 } else { 1.0 }).collect();
            let soft = extract_depth(&single_pixel(costs), &s, ExtractionMode::soft()).unwrap();
            let d = soft.depth.get(0, 0).unwrap();
            assert!((d - s.depths()[star]).abs() / s.depths()[star] < 1e-3);
            assert!(soft.confidence.get(0, 0) > 0.99);
        }
    }

    #[test]
    fn uniform_costs_give_inverse_midpoint() {
        let s = HypothesisSchedule::new(5, 1.0).unwrap();
        let vol = single_pixel(vec![0.7; 5]);
        let mid = 0.5 * (1.0 / s.d_max() + 1.0 / s.d_min());
        for mode in [ExtractionMode::soft(), ExtractionMode::Soft { tau: 0.3, window: None }] {
            let soft = extract_depth(&vol, &s, mode).unwrap();
            assert_relative_eq!(1.0 / soft.depth.get(0, 0).unwrap(), mid, max_relative = 1e-12);
            assert_eq!(soft.confidence.get(0, 0), 0.0);
        }
        let hard = extract_depth(&vol, &s, ExtractionMode::Hard).unwrap();
        assert_eq!(hard.confidence.get(0, 0), 0.0);
    }

    #[test]
    fn extraction_validates_inputs() {
        let s = HypothesisSchedule::new(5, 1.0).unwrap();
        let vol = single_pixel(vec![f64::NAN; 4]);
        assert!(extract_depth(&vol, &s, ExtractionMode::Hard).is_err());
        let vol = single_pixel(vec![f64::NAN; 5]);
        let r = extract_depth(&vol, &s, ExtractionMode::Hard).unwrap();
        assert_eq!(r.depth.get(0, 0), None);
        assert!(extract_depth(&vol, &s, ExtractionMode::Soft { tau: 0.0, window: None }).is_err());
    }

    #[test]
    fn window_ignores_distant_minimum() {
        let s = HypothesisSchedule::new(16, 1.0).unwrap();
        // Sharp minimum at 3, a slightly worse one at 12.
        let mut costs = vec![1.0; 16];
        costs[3] = 0.0;
        costs[12] = 0.05;
        let vol = single_pixel(costs);
        let windowed = extract_depth(&vol, &s, ExtractionMode::soft()).unwrap();
        let full = extract_depth(&vol, &s, ExtractionMode::Soft { tau: 0.3, window: None }).unwrap();
        let target = s.depths()[3];
        let err = |r: &SweepResult| (r.depth.get(0, 0).unwrap() - target).abs();
        assert!(err(&windowed) < 1e-9);
        assert!(err(&full) > 1e-2);
        assert_eq!(windowed.confidence, full.confidence);
    }

    #[test]
    fn depths_stay_in_schedule_range() {
        let s = HypothesisSchedule::new(4, 2.0).unwrap();
        let vol = single_pixel(vec![0.0, 5.0, 5.0, 5.0]);
        let d = extract_depth(&vol, &s, ExtractionMode::soft()).unwrap().depth.get(0, 0).unwrap();
        assert!(d <= s.d_max() && d >= s.d_min());
    }

    #[test]
    fn reconcile() {
        let d = DepthMap::filled(3, 2, 2.0);
        assert_eq!(reconcile_scale(&d, 1.0).unwrap(), d);
        assert_eq!(reconcile_scale(&d, 3.5).unwrap(), DepthMap::filled(3, 2, 7.0));
        assert!(reconcile_scale(&d, 0.0).is_err());
        assert!(reconcile_scale(&d, -1.0).is_err());
    }
}
