//! Synthetic two-view scenes with exact ground truth: random point clouds
//! and procedurally textured planes, with controlled match noise and
//! outliers.

pub mod texture;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{rigid_flow, CameraIntrinsics, Correspondence, PixelPoint, RigidTransform};
use crate::io::{self, IoError};
use crate::raster::{DepthMap, FlowField, GrayImage, PixelMask};
use texture::{FlatCells, ValueNoise};

const MAX_REJECTIONS_PER_POINT: usize = 1000;

/// Relative depth tolerance for visibility tests.
const VISIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("scene is not visible in both cameras")]
    SceneBehindCamera,
    #[error("{0} scenes have no image")]
    NoRaster(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// `n` points at distinct integer pixels of view 1 with depths drawn
    /// from the spec's depth range.
    PointCloud { n: usize },
    /// Fronto-parallel textured plane `Z = depth` in camera 1.
    TexturedPlane { depth: f64, texture_seed: u64 },
    /// A near plane covering view-1 columns `< split` in front of a far
    /// plane covering the rest.
    TwoPlanes {
        near: f64,
        far: f64,
        split: usize,
        texture_seed: u64,
    },
}

impl SceneKind {
    pub fn name(&self) -> &'static str {
        match self {
            SceneKind::PointCloud { .. } => "point_cloud",
            SceneKind::TexturedPlane { .. } => "textured_plane",
            SceneKind::TwoPlanes { .. } => "two_planes",
        }
    }

    pub fn is_textured(&self) -> bool {
        !matches!(self, SceneKind::PointCloud { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierMode {
    /// Targets uniform over the frame.
    #[default]
    Uniform,
    /// Only pixels in textureless cells are corrupted. Each cell gets one
    /// random 1.5–5 px offset shared by its corrupted pixels, mimicking flow
    /// failures on flat regions.
    Textureless,
    /// A square block of pixels shares one extra displacement of 5–15 px,
    /// like an independently moving object.
    DynamicBlock,
}

impl OutlierMode {
    pub fn name(&self) -> &'static str {
        match self {
            OutlierMode::Uniform => "uniform",
            OutlierMode::Textureless => "textureless",
            OutlierMode::DynamicBlock => "dynamic_block",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(OutlierMode::Uniform),
            "textureless" => Some(OutlierMode::Textureless),
            "dynamic_block" => Some(OutlierMode::DynamicBlock),
            _ => None,
        }
    }
}

/// Procedural texture parameters for textured kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureParams {
    /// Lattice spacing of the coarsest noise octave, in view-1 pixels.
    pub period_px: f64,
    pub octaves: usize,
    /// Side of the square cells that may be flat, in view-1 pixels.
    pub flat_cell_px: f64,
    /// Fraction of cells rendered textureless.
    pub flat_fraction: f64,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            period_px: 6.0,
            octaves: 3,
            flat_cell_px: 32.0,
            flat_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    /// `(near, far)` depth range for point clouds; textured kinds must lie
    /// inside it.
    pub depth_range: (f64, f64),
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    /// Metric pose of camera 2; `‖t‖` is the ground-truth scale.
    pub pose: RigidTransform,
    /// Standard deviation of Gaussian noise on inlier flow, pixels.
    pub noise_px: f64,
    pub outlier_ratio: f64,
    pub outlier_mode: OutlierMode,
    pub texture: TextureParams,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            kind: SceneKind::TexturedPlane {
                depth: 5.0,
                texture_seed: 1,
            },
            depth_range: (2.0, 20.0),
            width: 320,
            height: 240,
            intrinsics: CameraIntrinsics::new(300.0, 300.0, 159.5, 119.5).expect("valid"),
            pose: RigidTransform::from_axis_angle(
                Vector3::new(0.1, 1.0, -0.05),
                0.03,
                Vector3::new(0.4, 0.05, 0.1),
            ),
            noise_px: 0.0,
            outlier_ratio: 0.0,
            outlier_mode: OutlierMode::Uniform,
            texture: TextureParams::default(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        let (near, far) = self.depth_range;
        if !(near > 0.0 && far > near && far.is_finite()) {
            return bad(format!("depth range must satisfy 0 < near < far, got ({near}, {far})"));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return bad(format!("outlier ratio must be in [0, 1), got {}", self.outlier_ratio));
        }
        if !(self.noise_px >= 0.0 && self.noise_px.is_finite()) {
            return bad(format!("noise must be non-negative, got {}", self.noise_px));
        }
        if self.width < 16 || self.height < 16 {
            return bad(format!("image must be at least 16x16, got {}x{}", self.width, self.height));
        }
        let in_range = |d: f64| d >= near && d <= far;
        match self.kind {
            SceneKind::PointCloud { n } => {
                if n < 1 || n > self.width * self.height {
                    return bad(format!("point count {n} does not fit the image"));
                }
                if self.outlier_mode == OutlierMode::Textureless {
                    return bad("textureless outliers need a textured scene".into());
                }
            }
            SceneKind::TexturedPlane { depth, .. } => {
                if !in_range(depth) {
                    return bad(format!("plane depth {depth} outside depth range"));
                }
            }
            SceneKind::TwoPlanes { near: a, far: b, split, .. } => {
                if !(in_range(a) && in_range(b) && a < b) {
                    return bad(format!("need near < far inside depth range, got ({a}, {b})"));
                }
                if split == 0 || split >= self.width {
                    return bad(format!("split column {split} must be inside the image"));
                }
            }
        }
        let t = &self.texture;
        if self.kind.is_textured()
            && !(t.period_px > 0.0 && t.octaves >= 1 && t.flat_cell_px > 0.0 && (0.0..=1.0).contains(&t.flat_fraction))
        {
            return bad("invalid texture parameters".into());
        }
        Ok(())
    }

    /// The same scene with translation and all depths multiplied by `alpha`.
    /// Produces identical flow.
    pub fn scaled(&self, alpha: f64) -> Self {
        let kind = match self.kind {
            SceneKind::PointCloud { n } => SceneKind::PointCloud { n },
            SceneKind::TexturedPlane { depth, texture_seed } => SceneKind::TexturedPlane {
                depth: depth * alpha,
                texture_seed,
            },
            SceneKind::TwoPlanes { near, far, split, texture_seed } => SceneKind::TwoPlanes {
                near: near * alpha,
                far: far * alpha,
                split,
                texture_seed,
            },
        };
        Self {
            kind,
            depth_range: (self.depth_range.0 * alpha, self.depth_range.1 * alpha),
            pose: self.pose.with_translation(self.pose.translation() * alpha),
            ..*self
        }
    }
}

/// Fronto-parallel plane `Z = depth` in camera-1 coordinates, optionally
/// limited to `X/Z < u_max`.
#[derive(Debug, Clone, Copy)]
struct Plane {
    depth: f64,
    u_max: Option<f64>,
    texture_offset: f64,
}

/// Analytic scene used to ray-cast both views.
#[derive(Debug, Clone)]
struct PlaneScene {
    planes: Vec<Plane>,
    noise: ValueNoise,
    flat: FlatCells,
    freq: (f64, f64),
    flat_scale: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    point: Vector3<f64>,
    plane: usize,
    distance: f64,
}

impl PlaneScene {
    fn new(spec: &SceneSpec) -> Option<Self> {
        let k = &spec.intrinsics;
        let (planes, seed) = match spec.kind {
            SceneKind::PointCloud { .. } => return None,
            SceneKind::TexturedPlane { depth, texture_seed } => (
                vec![Plane {
                    depth,
                    u_max: None,
                    texture_offset: 0.0,
                }],
                texture_seed,
            ),
            SceneKind::TwoPlanes { near, far, split, texture_seed } => (
                vec![
                    Plane {
                        depth: near,
                        u_max: Some((split as f64 - 0.5 - k.cx()) / k.fx()),
                        texture_offset: 0.0,
                    },
                    Plane {
                        depth: far,
                        u_max: None,
                        texture_offset: 1000.0,
                    },
                ],
                texture_seed,
            ),
        };
        let t = &spec.texture;
        Some(Self {
            planes,
            noise: ValueNoise::new(seed, t.octaves),
            flat: FlatCells {
                seed: seed ^ 0xf1a7,
                cell: 1.0,
                fraction: t.flat_fraction,
            },
            freq: (k.fx() / t.period_px, k.fy() / t.period_px),
            flat_scale: (k.fx() / t.flat_cell_px, k.fy() / t.flat_cell_px),
        })
    }

    /// First intersection of the ray `origin + λ·dir`, `λ > 0`.
    fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, plane) in self.planes.iter().enumerate() {
            if dir.z == 0.0 {
                continue;
            }
            let lambda = (plane.depth - origin.z) / dir.z;
            if lambda <= 0.0 {
                continue;
            }
            let point = origin + dir * lambda;
            if plane.u_max.is_some_and(|u| point.x / plane.depth >= u) {
                continue;
            }
            let distance = lambda * dir.norm();
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(Hit { point, plane: i, distance });
            }
        }
        best
    }

    fn texture_coords(&self, hit: &Hit) -> (f64, f64) {
        let d = self.planes[hit.plane].depth;
        (hit.point.x / d, hit.point.y / d)
    }

    fn is_flat(&self, hit: &Hit) -> bool {
        let (u, v) = self.texture_coords(hit);
        let off = self.planes[hit.plane].texture_offset;
        self.flat.is_flat(u * self.flat_scale.0 + off, v * self.flat_scale.1)
    }

    fn intensity(&self, hit: &Hit) -> f64 {
        if self.is_flat(hit) {
            return 0.5;
        }
        let (u, v) = self.texture_coords(hit);
        let off = self.planes[hit.plane].texture_offset;
        self.noise.sample(u * self.freq.0 + off, v * self.freq.1)
    }
}

fn view1_ray(k: &CameraIntrinsics, x: &PixelPoint) -> Vector3<f64> {
    k.inverse_matrix() * x.homogeneous()
}

/// Camera-2 center and ray direction for a view-2 pixel, in camera-1
/// coordinates.
fn view2_ray(k: &CameraIntrinsics, pose: &RigidTransform, x: &PixelPoint) -> (Vector3<f64>, Vector3<f64>) {
    let rt = pose.rotation().transpose();
    (-(rt * pose.translation()), rt * (k.inverse_matrix() * x.homogeneous()))
}

fn in_frame(p: &PixelPoint, w: usize, h: usize) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x <= (w - 1) as f64 && p.y <= (h - 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub spec: SceneSpec,
    /// View-1 image (textured kinds only).
    pub image1: Option<GrayImage>,
    /// View-2 image rendered by [`render_second_view`] (textured kinds only).
    pub image2: Option<GrayImage>,
    /// Exact rigid flow of the scene, `rigid_flow(gt_depth, gt_pose, K)`.
    pub gt_flow: FlowField,
    /// Flow handed to estimators: `gt_flow` plus noise and outliers, invalid
    /// where the target leaves the frame.
    pub flow: FlowField,
    pub gt_depth: DepthMap,
    pub gt_pose: RigidTransform,
    pub alpha_gt: f64,
    pub outlier_mask: PixelMask,
    /// View-1 pixels whose surface point is hidden in view 2.
    pub occlusion: PixelMask,
    /// View-1 pixels in textureless cells.
    pub flat_mask: PixelMask,
}

impl SyntheticSample {
    pub fn outlier_count(&self) -> usize {
        self.outlier_mask.count()
    }

    /// Observed flow as correspondences, row-major.
    pub fn correspondences(&self) -> Vec<Correspondence> {
        self.flow
            .iter_valid()
            .map(|(c, r, [u, v])| {
                let x = PixelPoint::new(c as f64, r as f64);
                Correspondence::new(x, x.offset(u, v))
            })
            .collect()
    }

    /// Ground-truth depth restricted to pixels whose exact match lies at
    /// least `margin` pixels inside both views and is not occluded: the
    /// pixels a two-view matcher can recover.
    pub fn matchable_depth(&self, margin: usize) -> DepthMap {
        let (w, h) = self.gt_depth.dims();
        let m = margin as f64;
        let inside = |x: f64, y: f64| x >= m && y >= m && x <= (w - 1) as f64 - m && y <= (h - 1) as f64 - m;
        let mut out = DepthMap::new_invalid(w, h);
        for (c, r, [u, v]) in self.gt_flow.iter_valid() {
            let (x, y) = (c as f64, r as f64);
            if inside(x, y) && inside(x + u, y + v) && !self.occlusion.get(c, r) {
                out.set(c, r, self.gt_depth.get(c, r).expect("flow implies depth"));
            }
        }
        out
    }

    /// `‖t‖ = 1` ground-truth pose.
    pub fn unit_pose(&self) -> RigidTransform {
        self.gt_pose.normalized().expect("validated non-zero translation").0
    }
}

/// Generates a sample; deterministic for a fixed spec (including seed).
pub fn generate(spec: &SceneSpec) -> Result<SyntheticSample, SynthError> {
    spec.validate()?;
    let alpha_gt = spec.pose.translation().norm();
    if alpha_gt == 0.0 {
        return Err(SynthError::InvalidSpec("ground-truth translation must be non-zero".into()));
    }
    let (w, h) = (spec.width, spec.height);
    let k = &spec.intrinsics;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let scene = PlaneScene::new(spec);
    let mut gt_depth = DepthMap::new_invalid(w, h);
    let mut flat_mask = PixelMask::new(w, h, false);
    let mut image1 = None;
    match (&scene, spec.kind) {
        (Some(scene), _) => {
            let mut img = GrayImage::new(w, h, 0.0);
            for r in 0..h {
                for c in 0..w {
                    let x = PixelPoint::new(c as f64, r as f64);
                    let hit = scene
                        .cast(&Vector3::zeros(), &view1_ray(k, &x))
                        .expect("planes cover view 1");
                    gt_depth.set(c, r, hit.point.z);
                    img.set(c, r, scene.intensity(&hit));
                    flat_mask.set(c, r, scene.is_flat(&hit));
                }
            }
            image1 = Some(img);
        }
        (None, SceneKind::PointCloud { n }) => {
            let (near, far) = spec.depth_range;
            let mut used = PixelMask::new(w, h, false);
            let mut accepted = 0;
            let mut attempts = 0;
            while accepted < n {
                attempts += 1;
                if attempts > MAX_REJECTIONS_PER_POINT * n {
                    return Err(SynthError::SceneBehindCamera);
                }
                let (c, r) = (rng.random_range(0..w), rng.random_range(0..h));
                let d = rng.random_range(near..far);
                if used.get(c, r) {
                    continue;
                }
                let p = k.backproject(&PixelPoint::new(c as f64, r as f64), d);
                if !k.project(&spec.pose.transform_point(&p)).is_some_and(|xp| in_frame(&xp, w, h)) {
                    continue;
                }
                used.set(c, r, true);
                gt_depth.set(c, r, d);
                accepted += 1;
            }
        }
        (None, _) => unreachable!("textured kinds build a scene"),
    }

    let gt_flow = rigid_flow(&gt_depth, &spec.pose, k);
    let mut flow = FlowField::new_invalid(w, h);
    let mut occlusion = PixelMask::new(w, h, false);
    for (c, r, [u, v]) in gt_flow.iter_valid() {
        let x = PixelPoint::new(c as f64, r as f64);
        let xp = x.offset(u, v);
        if !in_frame(&xp, w, h) {
            continue;
        }
        flow.set(c, r, u, v);
        if let Some(scene) = &scene {
            let p = k.backproject(&x, gt_depth.get(c, r).expect("valid"));
            let (origin, dir) = view2_ray(k, &spec.pose, &xp);
            if let Some(hit) = scene.cast(&origin, &dir) {
                if hit.distance < (p - origin).norm() * (1.0 - VISIBILITY_TOL) {
                    occlusion.set(c, r, true);
                }
            }
        }
    }
    let candidates: Vec<(usize, usize)> = flow.iter_valid().map(|(c, r, _)| (c, r)).collect();
    if candidates.len() < 5 {
        return Err(SynthError::SceneBehindCamera);
    }

    let outlier_mask = place_outliers(spec, &mut rng, &mut flow, &candidates, &flat_mask)?;

    if spec.noise_px > 0.0 {
        let normal = Normal::new(0.0, spec.noise_px).expect("valid std");
        for &(c, r) in &candidates {
            let (du, dv) = (normal.sample(&mut rng), normal.sample(&mut rng));
            if outlier_mask.get(c, r) {
                continue;
            }
            let [u, v] = flow.get(c, r).expect("valid");
            flow.set(c, r, u + du, v + dv);
        }
    }

    let mut sample = SyntheticSample {
        spec: *spec,
        image1,
        image2: None,
        gt_flow,
        flow,
        gt_depth,
        gt_pose: spec.pose,
        alpha_gt,
        outlier_mask,
        occlusion,
        flat_mask,
    };
    if spec.kind.is_textured() {
        sample.image2 = Some(render_second_view(&sample)?.image);
    }
    Ok(sample)
}

fn place_outliers(
    spec: &SceneSpec,
    rng: &mut ChaCha8Rng,
    flow: &mut FlowField,
    candidates: &[(usize, usize)],
    flat_mask: &PixelMask,
) -> Result<PixelMask, SynthError> {
    let (w, h) = (spec.width, spec.height);
    let count = (spec.outlier_ratio * candidates.len() as f64).round() as usize;
    let mut mask = PixelMask::new(w, h, false);
    if count == 0 {
        return Ok(mask);
    }
    let chosen: Vec<(usize, usize)> = match spec.outlier_mode {
        OutlierMode::Uniform => sample(rng, candidates.len(), count)
            .into_iter()
            .map(|i| candidates[i])
            .collect(),
        OutlierMode::Textureless => {
            let flat: Vec<_> = candidates.iter().copied().filter(|&(c, r)| flat_mask.get(c, r)).collect();
            if flat.len() < count {
                return Err(SynthError::InvalidSpec(format!(
                    "{count} textureless outliers requested but only {} flat pixels",
                    flat.len()
                )));
            }
            sample(rng, flat.len(), count).into_iter().map(|i| flat[i]).collect()
        }
        OutlierMode::DynamicBlock => {
            let side = (count as f64).sqrt().ceil() as usize;
            if side > w || side > h {
                return Err(SynthError::InvalidSpec("dynamic block larger than image".into()));
            }
            let (c0, r0) = (rng.random_range(0..=w - side), rng.random_range(0..=h - side));
            let block: Vec<_> = candidates
                .iter()
                .copied()
                .filter(|&(c, r)| c >= c0 && c < c0 + side && r >= r0 && r < r0 + side)
                .take(count)
                .collect();
            if block.len() < count {
                return Err(SynthError::InvalidSpec("dynamic block covers too few valid pixels".into()));
            }
            block
        }
    };
    let mut random_offset = |lo: f64, hi: f64| {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let len = rng.random_range(lo..hi);
        (len * angle.cos(), len * angle.sin())
    };
    let block_motion = random_offset(5.0, 15.0);
    // Flow in a textureless patch fails coherently: one error per image tile.
    let tile = (spec.texture.flat_cell_px.round() as usize).max(1);
    let tiles_x = w.div_ceil(tile);
    let tile_offsets: Vec<(f64, f64)> = if spec.outlier_mode == OutlierMode::Textureless {
        (0..tiles_x * h.div_ceil(tile)).map(|_| random_offset(1.5, 5.0)).collect()
    } else {
        Vec::new()
    };
    for (c, r) in chosen {
        let [u, v] = flow.get(c, r).expect("candidate is valid");
        let target = PixelPoint::new(c as f64 + u, r as f64 + v);
        let new_target = match spec.outlier_mode {
            OutlierMode::Uniform => PixelPoint::new(
                rng.random_range(0.0..=(w - 1) as f64),
                rng.random_range(0.0..=(h - 1) as f64),
            ),
            OutlierMode::Textureless => {
                let (du, dv) = tile_offsets[(r / tile) * tiles_x + c / tile];
                target.offset(du, dv)
            }
            OutlierMode::DynamicBlock => target.offset(block_motion.0, block_motion.1),
        };
        let clamped = PixelPoint::new(
            new_target.x.clamp(0.0, (w - 1) as f64),
            new_target.y.clamp(0.0, (h - 1) as f64),
        );
        flow.set(c, r, clamped.x - c as f64, clamped.y - r as f64);
        mask.set(c, r, true);
    }
    Ok(mask)
}

/// View-2 image and per-pixel flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub image: GrayImage,
    /// Surface seen by view 2 is hidden or outside the frame in view 1; such
    /// pixels carry the analytic texture value instead of a warped one.
    pub occluded: PixelMask,
    /// Ray hits no surface.
    pub empty: PixelMask,
}

/// Renders view 2 by casting each pixel's ray into the scene and sampling
/// view 1 bilinearly at the projection of the hit point.
pub fn render_second_view(sample: &SyntheticSample) -> Result<RenderedView, SynthError> {
    let spec = &sample.spec;
    let scene = PlaneScene::new(spec).ok_or(SynthError::NoRaster("point cloud"))?;
    let img1 = sample.image1.as_ref().ok_or(SynthError::NoRaster("point cloud"))?;
    let (w, h) = (spec.width, spec.height);
    let k = &spec.intrinsics;
    let mut image = GrayImage::new(w, h, 0.5);
    let mut occluded = PixelMask::new(w, h, false);
    let mut empty = PixelMask::new(w, h, false);
    for r in 0..h {
        for c in 0..w {
            let x2 = PixelPoint::new(c as f64, r as f64);
            let (origin, dir) = view2_ray(k, &spec.pose, &x2);
            let Some(hit) = scene.cast(&origin, &dir) else {
                empty.set(c, r, true);
                continue;
            };
            let warped = k.project(&hit.point).and_then(|x1| {
                let seen = scene.cast(&Vector3::zeros(), &view1_ray(k, &x1))?;
                let visible = (seen.point.z - hit.point.z).abs() <= VISIBILITY_TOL * hit.point.z;
                if visible {
                    img1.sample(x1.x, x1.y)
                } else {
                    None
                }
            });
            match warped {
                Some(v) => image.set(c, r, v),
                None => {
                    image.set(c, r, scene.intensity(&hit));
                    occluded.set(c, r, true);
                }
            }
        }
    }
    Ok(RenderedView { image, occluded, empty })
}

fn mask_image(mask: &PixelMask) -> GrayImage {
    GrayImage::from_fn(mask.width(), mask.height(), |c, r| if mask.get(c, r) { 1.0 } else { 0.0 })
}

/// Manifest text: one `key=value` per line.
pub fn manifest(sample: &SyntheticSample) -> String {
    let spec = &sample.spec;
    let k = &spec.intrinsics;
    let mut m = String::new();
    let mut kv = |key: &str, value: String| {
        writeln!(m, "{key}={value}").expect("write to string");
    };
    kv("kind", spec.kind.name().into());
    match spec.kind {
        SceneKind::PointCloud { n } => kv("points", n.to_string()),
        SceneKind::TexturedPlane { depth, texture_seed } => {
            kv("plane_depth", depth.to_string());
            kv("texture_seed", texture_seed.to_string());
        }
        SceneKind::TwoPlanes { near, far, split, texture_seed } => {
            kv("near_depth", near.to_string());
            kv("far_depth", far.to_string());
            kv("split", split.to_string());
            kv("texture_seed", texture_seed.to_string());
        }
    }
    if spec.kind.is_textured() {
        let t = &spec.texture;
        kv("period_px", t.period_px.to_string());
        kv("octaves", t.octaves.to_string());
        kv("flat_cell_px", t.flat_cell_px.to_string());
        kv("flat_fraction", t.flat_fraction.to_string());
    }
    kv("width", spec.width.to_string());
    kv("height", spec.height.to_string());
    kv("depth_near", spec.depth_range.0.to_string());
    kv("depth_far", spec.depth_range.1.to_string());
    kv("intrinsics", format!("{} {} {} {}", k.fx(), k.fy(), k.cx(), k.cy()));
    kv("pose", io::format_pose_line(&spec.pose));
    kv("alpha_gt", sample.alpha_gt.to_string());
    kv("noise_px", spec.noise_px.to_string());
    kv("outlier_mode", spec.outlier_mode.name().into());
    kv("outlier_ratio", spec.outlier_ratio.to_string());
    kv("outlier_count", sample.outlier_count().to_string());
    kv("valid_matches", sample.flow.valid_count().to_string());
    kv("seed", spec.seed.to_string());
    m
}

/// Border margin (pixels) used for `depth_matchable.pfm`; covers the
/// largest matching patch.
pub const MATCHABLE_MARGIN: usize = 3;

/// Writes a sample directory: observed and exact flow (`.flo`), depth and
/// its matchable subset (`.pfm`), images and masks (`.png`), intrinsics,
/// metric pose and a manifest.
pub fn write_sample(dir: impl AsRef<Path>, sample: &SyntheticSample) -> Result<(), IoError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io::io_err(dir))?;
    io::write_flow(dir.join("flow.flo"), &sample.flow)?;
    io::write_flow(dir.join("gt_flow.flo"), &sample.gt_flow)?;
    io::write_depth(dir.join("depth.pfm"), &sample.gt_depth)?;
    io::write_depth(dir.join("depth_matchable.pfm"), &sample.matchable_depth(MATCHABLE_MARGIN))?;
    io::write_intrinsics(dir.join("intrinsics.txt"), &sample.spec.intrinsics)?;
    io::write_trajectory(dir.join("pose.txt"), &io::Trajectory::new(vec![sample.gt_pose]))?;
    io::write_gray_image(dir.join("outliers.png"), &mask_image(&sample.outlier_mask))?;
    if let (Some(a), Some(b)) = (&sample.image1, &sample.image2) {
        io::write_gray_image(dir.join("image1.png"), a)?;
        io::write_gray_image(dir.join("image2.png"), b)?;
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest(sample)).map_err(io::io_err(&path))
}
