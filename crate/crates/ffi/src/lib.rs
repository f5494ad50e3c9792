//! C ABI over the `twoview` library.
//!
//! Every fallible function returns a [`TvStatus`]; on failure the message is
//! available from [`tv_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twoview::geometry::{CameraIntrinsics, RigidTransform};
use twoview::io::{flow_to_correspondences, read_flow};
use twoview::metrics::{depth_metrics, pose_errors, DisparityParams, Scaling};
use twoview::pose::{apply_mask_strategy, estimate_pose_ransac, MaskStrategy, PoseError, RansacConfig};
use twoview::raster::{DepthMap, FlowField, GrayImage};
use twoview::sweep::{normalize_translation, plane_sweep, CostFunction, ExtractionMode, HypothesisSchedule, SweepResult};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input is valid but admits no meaningful estimate.
    Degenerate = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type Failure = (TvStatus, String);

fn fail<T>(status: TvStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err((status, msg.into()))
}

fn invalid(e: impl ToString) -> Failure {
    (TvStatus::InvalidArgument, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TvStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TvStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| (TvStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return fail(TvStatus::NullPointer, format!("{name} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn pixels(width: usize, height: usize) -> Result<usize, Failure> {
    width
        .checked_mul(height)
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid(format!("bad image size {width}x{height}")))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn tv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl TvIntrinsics {
    fn to_core(self) -> Result<CameraIntrinsics, Failure> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy).map_err(invalid)
    }
}

/// Rigid transform `X2 = R·X1 + t` as the 12 row-major values of `[R|t]`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvPose {
    pub rt: [f64; 12],
}

impl TvPose {
    fn to_core(self) -> Result<RigidTransform, Failure> {
        RigidTransform::from_row_major(&self.rt).map_err(invalid)
    }

    fn from_core(pose: &RigidTransform) -> Self {
        Self { rt: pose.to_row_major() }
    }
}

// ---------------------------------------------------------------------------
// Flow

/// Opaque dense flow field.
pub struct TvFlow(FlowField);

/// Builds a flow field from `2·width·height` interleaved `(u, v)` values in
/// row-major order. Non-finite pairs mark invalid pixels.
///
/// # Safety
/// `uv` must point to `2·width·height` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_flow_new(uv: *const f64, width: usize, height: usize, out: *mut *mut TvFlow) -> TvStatus {
    guard(|| {
        if out.is_null() {
            return fail(TvStatus::NullPointer, "out is null");
        }
        let n = pixels(width, height)?;
        let uv = slice(uv, 2 * n, "uv")?;
        let mut flow = FlowField::new_invalid(width, height);
        for (i, pair) in uv.chunks_exact(2).enumerate() {
            if pair[0].is_finite() && pair[1].is_finite() {
                flow.set(i % width, i / width, pair[0], pair[1]);
            }
        }
        *out = Box::into_raw(Box::new(TvFlow(flow)));
        Ok(())
    })
}

/// Reads a Middlebury `.flo` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_flow_read(path: *const c_char, out: *mut *mut TvFlow) -> TvStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(TvStatus::NullPointer, "path or out is null");
        }
        let path = CStr::from_ptr(path).to_str().map_err(invalid)?;
        let flow = read_flow(path).map_err(|e| (TvStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(TvFlow(flow)));
        Ok(())
    })
}

/// # Safety
/// `flow` must be null or a pointer obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tv_flow_free(flow: *mut TvFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// # Safety
/// `flow` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_flow_dims(flow: *const TvFlow, width: *mut usize, height: *mut usize) -> TvStatus {
    guard(|| {
        let flow = deref(flow, "flow")?;
        if width.is_null() || height.is_null() {
            return fail(TvStatus::NullPointer, "width or height is null");
        }
        (*width, *height) = flow.0.dims();
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Pose

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvRansacOptions {
    /// Sampson inlier threshold, squared pixels.
    pub threshold: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub min_iterations: usize,
    /// Nonlinear refinement rounds; 0 disables.
    pub refine_rounds: usize,
    pub seed: u64,
    /// Use only pixels on a grid with this stride; 0 uses every valid pixel.
    pub grid_stride: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvPoseResult {
    /// Relative pose with unit translation.
    pub pose: TvPose,
    pub correspondences: usize,
    pub inliers: usize,
    pub iterations: usize,
    pub mean_inlier_sampson: f64,
    pub median_inlier_flow: f64,
    /// Nonzero when the median inlier displacement is too small for a
    /// reliable translation direction.
    pub low_parallax: i32,
}

/// Fills `options` with the library defaults.
///
/// # Safety
/// `options` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_ransac_options_default(options: *mut TvRansacOptions) -> TvStatus {
    guard(|| {
        if options.is_null() {
            return fail(TvStatus::NullPointer, "options is null");
        }
        let c = RansacConfig::default();
        *options = TvRansacOptions {
            threshold: c.inlier_threshold,
            confidence: c.confidence,
            max_iterations: c.max_iterations,
            min_iterations: c.min_iterations,
            refine_rounds: c.refine_rounds,
            seed: c.seed,
            grid_stride: 0,
        };
        Ok(())
    })
}

/// Robust relative pose from a flow field. A null `options` uses defaults.
///
/// # Safety
/// Pointers must be valid; `options` may be null.
#[no_mangle]
pub unsafe extern "C" fn tv_estimate_pose(
    flow: *const TvFlow,
    intrinsics: *const TvIntrinsics,
    options: *const TvRansacOptions,
    out: *mut TvPoseResult,
) -> TvStatus {
    guard(|| {
        let flow = &deref(flow, "flow")?.0;
        let k = deref(intrinsics, "intrinsics")?.to_core()?;
        if out.is_null() {
            return fail(TvStatus::NullPointer, "out is null");
        }
        let mut config = RansacConfig::default();
        let mut stride = 0;
        if let Some(o) = options.as_ref() {
            config.inlier_threshold = o.threshold;
            config.confidence = o.confidence;
            config.max_iterations = o.max_iterations;
            config.min_iterations = o.min_iterations;
            config.refine_rounds = o.refine_rounds;
            config.seed = o.seed;
            stride = o.grid_stride;
        }
        let matches = if stride == 0 {
            flow_to_correspondences(flow, None).map_err(invalid)?
        } else {
            apply_mask_strategy(flow, &MaskStrategy::Grid { stride }, None).map_err(pose_failure)?
        };
        let est = estimate_pose_ransac(&matches, &k, &config).map_err(pose_failure)?;
        *out = TvPoseResult {
            pose: TvPose::from_core(&est.pose),
            correspondences: matches.len(),
            inliers: est.inlier_count(),
            iterations: est.iterations_run,
            mean_inlier_sampson: est.mean_inlier_sampson,
            median_inlier_flow: est.median_inlier_flow,
            low_parallax: est.low_parallax as i32,
        };
        Ok(())
    })
}

fn pose_failure(e: PoseError) -> Failure {
    let status = match e {
        PoseError::InvalidConfig(_) | PoseError::MissingAux(..) | PoseError::Raster(_) => TvStatus::InvalidArgument,
        _ => TvStatus::Degenerate,
    };
    (status, e.to_string())
}

// ---------------------------------------------------------------------------
// Plane sweep

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvExtraction {
    Hard = 0,
    Soft = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvCost {
    Sad = 0,
    Zncc = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvSweepOptions {
    pub hypotheses: usize,
    /// Nearest hypothesis depth in baseline units.
    pub d_min: f64,
    pub extraction: TvExtraction,
    /// Soft-argmin temperature.
    pub tau: f64,
    /// Soft-argmin half-window in hypotheses; negative averages over all.
    pub window: i32,
    pub cost: TvCost,
}

/// Opaque sweep output: up-to-scale depth and confidence.
pub struct TvDepth(SweepResult);

/// # Safety
/// `options` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_sweep_options_default(options: *mut TvSweepOptions) -> TvStatus {
    guard(|| {
        if options.is_null() {
            return fail(TvStatus::NullPointer, "options is null");
        }
        let (tau, window) = match ExtractionMode::soft() {
            ExtractionMode::Soft { tau, window } => (tau, window.map_or(-1, |w| w as i32)),
            ExtractionMode::Hard => unreachable!(),
        };
        *options = TvSweepOptions {
            hypotheses: 64,
            d_min: 1.0,
            extraction: TvExtraction::Soft,
            tau,
            window,
            cost: TvCost::Sad,
        };
        Ok(())
    })
}

/// Plane-sweep depth for view 1. Images are row-major intensities in
/// `[0, 1]`; the pose translation is normalized to unit length first, so
/// depth is in baseline units.
///
/// # Safety
/// `image1` and `image2` must each hold `width·height` doubles; the other
/// pointers must be valid. `options` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn tv_plane_sweep(
    image1: *const f64,
    image2: *const f64,
    width: usize,
    height: usize,
    intrinsics: *const TvIntrinsics,
    pose: *const TvPose,
    options: *const TvSweepOptions,
    out: *mut *mut TvDepth,
) -> TvStatus {
    guard(|| {
        let n = pixels(width, height)?;
        let img1 = GrayImage::from_vec(width, height, slice(image1, n, "image1")?.to_vec()).map_err(invalid)?;
        let img2 = GrayImage::from_vec(width, height, slice(image2, n, "image2")?.to_vec()).map_err(invalid)?;
        let k = deref(intrinsics, "intrinsics")?.to_core()?;
        let pose = deref(pose, "pose")?.to_core()?;
        if out.is_null() {
            return fail(TvStatus::NullPointer, "out is null");
        }
        let mut o = TvSweepOptions {
            hypotheses: 0,
            d_min: 0.0,
            extraction: TvExtraction::Soft,
            tau: 0.0,
            window: 0,
            cost: TvCost::Sad,
        };
        match options.as_ref() {
            Some(given) => o = *given,
            None => {
                tv_sweep_options_default(&mut o);
            }
        }
        let (unit, _) = normalize_translation(&pose).map_err(|e| (TvStatus::Degenerate, e.to_string()))?;
        let schedule = HypothesisSchedule::new(o.hypotheses, o.d_min).map_err(invalid)?;
        let mode = match o.extraction {
            TvExtraction::Hard => ExtractionMode::Hard,
            TvExtraction::Soft => ExtractionMode::Soft {
                tau: o.tau,
                window: usize::try_from(o.window).ok(),
            },
        };
        let cost = match o.cost {
            TvCost::Sad => CostFunction::Sad,
            TvCost::Zncc => CostFunction::Zncc,
        };
        let result = plane_sweep(&img1, &img2, &k, &unit, &schedule, cost, mode).map_err(invalid)?;
        *out = Box::into_raw(Box::new(TvDepth(result)));
        Ok(())
    })
}

/// # Safety
/// `depth` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_depth_free(depth: *mut TvDepth) {
    if !depth.is_null() {
        drop(Box::from_raw(depth));
    }
}

/// Copies `width·height` depth values (NaN where invalid) and, if
/// `confidence` is not null, the matching confidences.
///
/// # Safety
/// `depth` must be a live handle; buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tv_depth_copy(
    depth: *const TvDepth,
    values: *mut f64,
    confidence: *mut f64,
    len: usize,
) -> TvStatus {
    guard(|| {
        let r = &deref(depth, "depth")?.0;
        let (w, h) = r.depth.dims();
        if len != w * h {
            return fail(TvStatus::InvalidArgument, format!("buffer length {len}, need {}", w * h));
        }
        if values.is_null() {
            return fail(TvStatus::NullPointer, "values is null");
        }
        let values = std::slice::from_raw_parts_mut(values, len);
        for (i, v) in values.iter_mut().enumerate() {
            *v = r.depth.get(i % w, i / w).unwrap_or(f64::NAN);
        }
        if !confidence.is_null() {
            std::slice::from_raw_parts_mut(confidence, len).copy_from_slice(r.confidence.data());
        }
        Ok(())
    })
}

/// # Safety
/// `depth` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_depth_dims(depth: *const TvDepth, width: *mut usize, height: *mut usize) -> TvStatus {
    guard(|| {
        let r = &deref(depth, "depth")?.0;
        if width.is_null() || height.is_null() {
            return fail(TvStatus::NullPointer, "width or height is null");
        }
        (*width, *height) = r.depth.dims();
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Metrics

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvScaling {
    None = 0,
    Median = 1,
    GtScale = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TvDepthMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    /// NaN unless a focal length was supplied.
    pub d1_all: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub l1_inv: f64,
    pub sc_inv: f64,
    pub l1_rel: f64,
}

/// Depth errors over pixels valid in both maps (finite and positive).
/// `gt_scale` is used with [`TvScaling::GtScale`]; a positive `focal`
/// enables D1-all with the KITTI stereo baseline.
///
/// # Safety
/// `pred` and `gt` must each hold `width·height` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_depth_metrics(
    pred: *const f64,
    gt: *const f64,
    width: usize,
    height: usize,
    scaling: TvScaling,
    gt_scale: f64,
    focal: f64,
    out: *mut TvDepthMetrics,
) -> TvStatus {
    guard(|| {
        let n = pixels(width, height)?;
        let pred = DepthMap::from_vec(width, height, slice(pred, n, "pred")?.to_vec()).map_err(invalid)?;
        let gt = DepthMap::from_vec(width, height, slice(gt, n, "gt")?.to_vec()).map_err(invalid)?;
        if out.is_null() {
            return fail(TvStatus::NullPointer, "out is null");
        }
        let scaling = match scaling {
            TvScaling::None => Scaling::None,
            TvScaling::Median => Scaling::Median,
            TvScaling::GtScale => Scaling::GtScale(gt_scale),
        };
        let disparity = (focal > 0.0).then(|| DisparityParams::kitti(focal));
        let m = depth_metrics(&pred, &gt, scaling, disparity).map_err(invalid)?;
        *out = TvDepthMetrics {
            abs_rel: m.abs_rel,
            sq_rel: m.sq_rel,
            rmse: m.rmse,
            rmse_log: m.rmse_log,
            d1_all: m.d1_all.unwrap_or(f64::NAN),
            delta1: m.delta1,
            delta2: m.delta2,
            delta3: m.delta3,
            l1_inv: m.l1_inv,
            sc_inv: m.sc_inv,
            l1_rel: m.l1_rel,
        };
        Ok(())
    })
}

/// Rotation error and translation-direction error, both in degrees.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tv_pose_errors(
    pred: *const TvPose,
    gt: *const TvPose,
    rot_deg: *mut f64,
    tran_deg: *mut f64,
) -> TvStatus {
    guard(|| {
        let pred = deref(pred, "pred")?.to_core()?;
        let gt = deref(gt, "gt")?.to_core()?;
        if rot_deg.is_null() || tran_deg.is_null() {
            return fail(TvStatus::NullPointer, "output is null");
        }
        let e = pose_errors(&pred, &gt).map_err(invalid)?;
        (*rot_deg, *tran_deg) = (e.rot_deg, e.tran_deg);
        Ok(())
    })
}
