use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Settings;
use super::*;
use crate::features::KeypointParams;
use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::io::{self, Trajectory};
use crate::metrics::{
    depth_metrics, format_key_values, kitti_vo_errors, pose_errors, DisparityParams,
    MetricsError, Scaling, KITTI_BASELINE,
};
use crate::pose::{
    apply_mask_strategy, estimate_pose_ransac, MaskAux, MaskStrategy, PoseError, PoseEstimate,
    RansacConfig,
};
use crate::raster::{DepthMap, FlowField, GrayImage};
use crate::sweep::{
    normalize_translation, plane_sweep, reconcile_scale, CostFunction, ExtractionMode,
    HypothesisSchedule, SweepError, SweepResult, DEFAULT_SOFT_WINDOW, DEFAULT_TAU,
};
use crate::synthetic::{self, OutlierMode, SceneKind, SceneSpec, TextureParams};

/// Mean confidence under which a sweep is reported as unreliable.
const LOW_CONFIDENCE: f64 = 0.05;

fn io_error(e: impl Display) -> CliError {
    CliError::Io(e.to_string())
}

fn pose_error(e: PoseError) -> CliError {
    match e {
        PoseError::InvalidConfig(_) | PoseError::MissingAux(..) | PoseError::Raster(_) => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Degenerate(e.to_string()),
    }
}

fn sweep_error(e: SweepError) -> CliError {
    match e {
        SweepError::NotNormalized(_) | SweepError::Geometry(_) => CliError::Degenerate(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn metrics_error(e: MetricsError) -> CliError {
    CliError::Config(e.to_string())
}

/// Runs a parsed command line on a pool of `cli.threads` workers.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::EstimatePose(a) => estimate_pose(&a),
        Command::SweepDepth(a) => sweep_depth(&a),
        Command::Evaluate(EvaluateCommand::Depth(a)) => evaluate_depth(&a),
        Command::Evaluate(EvaluateCommand::Pose(a)) => evaluate_pose(&a),
        Command::Evaluate(EvaluateCommand::Trajectory(a)) => evaluate_trajectory(&a),
        Command::Synth(a) => synth(&a),
        Command::Pipeline(a) => pipeline(&a),
    })
}

fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

fn out_dir(s: &Settings) -> Result<PathBuf, CliError> {
    let dir = s.require_path("out")?;
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_intrinsics(s: &Settings) -> Result<CameraIntrinsics, CliError> {
    io::read_intrinsics(s.require_path("intrinsics")?).map_err(io_error)
}

fn read_single_pose(path: &Path) -> Result<RigidTransform, CliError> {
    let traj = io::read_trajectory(path).map_err(io_error)?;
    traj.poses()
        .first()
        .copied()
        .ok_or_else(|| CliError::Io(format!("{}: no pose", path.display())))
}

fn read_image(s: &Settings, key: &str) -> Result<GrayImage, CliError> {
    io::read_gray_image(s.require_path(key)?).map_err(io_error)
}

fn mask_strategy(s: &Settings) -> Result<MaskStrategy, CliError> {
    Ok(match s.raw("mask").unwrap_or("all") {
        "all" => MaskStrategy::All,
        "grid" => MaskStrategy::Grid {
            stride: s.get_or("grid-stride", 4)?,
        },
        "keypoints" => MaskStrategy::KeypointLocations(KeypointParams {
            dilate: s.get_or("keypoint-dilate", 1)?,
            ..KeypointParams::default()
        }),
        "weights" => MaskStrategy::WeightThreshold {
            threshold: s.get_or("weight-threshold", 0.5)?,
        },
        other => return Err(CliError::Config(format!("unknown mask {other:?}"))),
    })
}

fn ransac_config(s: &Settings) -> Result<RansacConfig, CliError> {
    let d = RansacConfig::default();
    Ok(RansacConfig {
        inlier_threshold: s.get_or("ransac-threshold", d.inlier_threshold)?,
        confidence: s.get_or("confidence", d.confidence)?,
        max_iterations: s.get_or("max-iters", d.max_iterations)?,
        min_iterations: s.get_or("min-iters", d.min_iterations)?,
        seed: s.get_or("seed", d.seed)?,
        refit_samples: d.refit_samples,
        refine_rounds: s.get_or("refine-rounds", d.refine_rounds)?,
    })
}

/// Masks the flow and runs RANSAC. Low parallax is treated as degenerate.
fn estimate_from_flow(
    s: &Settings,
    flow: &FlowField,
    k: &CameraIntrinsics,
) -> Result<PoseEstimate, CliError> {
    let strategy = mask_strategy(s)?;
    let aux_image;
    let aux = match strategy {
        MaskStrategy::KeypointLocations(_) => {
            aux_image = read_image(s, "image1")?;
            Some(MaskAux::Image(&aux_image))
        }
        MaskStrategy::WeightThreshold { .. } => {
            aux_image = read_image(s, "weights")?;
            Some(MaskAux::Weights(&aux_image))
        }
        _ => None,
    };
    let matches = apply_mask_strategy(flow, &strategy, aux)
        .map_err(pose_error)
        .map_err(|e| e.in_stage("mask"))?;
    let config = ransac_config(s)?;
    config.validate().map_err(pose_error)?;
    let est = estimate_pose_ransac(&matches, k, &config)
        .map_err(pose_error)
        .map_err(|e| e.in_stage("pose"))?;
    if est.low_parallax {
        return Err(CliError::Degenerate(format!(
            "pose: median inlier displacement {:.3} px is too small to fix the translation",
            est.median_inlier_flow
        )));
    }
    Ok(est)
}

fn pose_report(est: &PoseEstimate, total: usize) -> String {
    let inliers = est.inlier_count();
    format!(
        "correspondences={total}\ninliers={inliers}\ninlier_ratio={}\niterations={}\nmean_inlier_sampson={}\nmedian_inlier_flow={}\nlow_parallax={}\n",
        inliers as f64 / total.max(1) as f64,
        est.iterations_run,
        est.mean_inlier_sampson,
        est.median_inlier_flow,
        est.low_parallax,
    )
}

fn write_pose(path: &Path, pose: &RigidTransform) -> Result<(), CliError> {
    io::write_trajectory(path, &Trajectory::new(vec![*pose])).map_err(io_error)
}

fn estimate_pose(a: &EstimatePoseArgs) -> Result<(), CliError> {
    let known = keys(&[
        &["flow", "intrinsics", "image1", "gt-pose", "seed", "out"],
        &MaskArgs::KEYS,
        &RansacArgs::KEYS,
    ]);
    let mut overrides = overrides!(a;
        "flow" => flow, "intrinsics" => intrinsics, "image1" => image1,
        "gt-pose" => gt_pose, "seed" => seed, "out" => out,
    );
    overrides.extend(a.mask.overrides());
    overrides.extend(a.ransac.overrides());
    let s = Settings::resolve(&known, &[], a.config.as_deref(), overrides)?;

    let flow = io::read_flow(s.require_path("flow")?).map_err(io_error)?;
    let k = read_intrinsics(&s)?;
    let gt = s.path("gt-pose").map(|p| read_single_pose(&p)).transpose()?;
    let dir = out_dir(&s)?;
    let est = estimate_from_flow(&s, &flow, &k)?;
    write_pose(&dir.join("pose.txt"), &est.pose)?;
    let mut report = pose_report(&est, flow.valid_count());
    if let Some(gt) = gt {
        let e = pose_errors(&est.pose, &gt).map_err(metrics_error)?;
        let metrics = format_key_values(e.key_values());
        write_text(&dir.join("metrics.txt"), &metrics)?;
        report.push_str(&metrics);
    }
    write_text(&dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn sweep_schedule(s: &Settings) -> Result<(HypothesisSchedule, CostFunction, ExtractionMode), CliError> {
    let schedule = HypothesisSchedule::new(s.get_or("hypotheses", 64)?, s.get_or("dmin", 1.0)?)
        .map_err(sweep_error)?;
    let cost = match s.raw("cost").unwrap_or("sad") {
        "sad" => CostFunction::Sad,
        "zncc" => CostFunction::Zncc,
        other => return Err(CliError::Config(format!("unknown cost {other:?}"))),
    };
    let mode = match s.raw("mode").unwrap_or("soft") {
        "hard" => ExtractionMode::Hard,
        "soft" => {
            let window = match s.raw("soft-window") {
                Some("none") => None,
                Some(_) => Some(s.require("soft-window")?),
                None => Some(DEFAULT_SOFT_WINDOW),
            };
            ExtractionMode::Soft {
                tau: s.get_or("tau", DEFAULT_TAU)?,
                window,
            }
        }
        other => return Err(CliError::Config(format!("unknown mode {other:?}"))),
    };
    Ok((schedule, cost, mode))
}

fn write_map(path: &Path, width: usize, height: usize, values: impl Iterator<Item = f64>) -> Result<(), CliError> {
    let data: Vec<f32> = values.map(|v| v as f32).collect();
    io::write_pfm(path, width, height, &data).map_err(io_error)
}

/// Writes depth, confidence and (with `alpha`) rescaled depth; returns the
/// report lines.
fn write_sweep(dir: &Path, result: &SweepResult, alpha: Option<f64>) -> Result<(String, Option<DepthMap>), CliError> {
    let (w, h) = result.depth.dims();
    io::write_depth(dir.join("depth.pfm"), &result.depth).map_err(io_error)?;
    write_map(&dir.join("confidence.pfm"), w, h, result.confidence.data().iter().copied())?;
    let metric = alpha
        .map(|a| reconcile_scale(&result.depth, a).map_err(sweep_error))
        .transpose()?;
    if let Some(m) = &metric {
        io::write_depth(dir.join("depth_metric.pfm"), m).map_err(io_error)?;
    }
    let valid = result.depth.valid_count();
    let mean_conf = result.confidence.data().iter().sum::<f64>() / (w * h) as f64;
    if mean_conf < LOW_CONFIDENCE {
        eprintln!("warning: mean matching confidence {mean_conf:.4} is very low; the images may lack texture");
    }
    let report = format!("valid_pixels={valid}\nmean_confidence={mean_conf}\n");
    Ok((report, metric))
}

fn sweep_depth(a: &SweepDepthArgs) -> Result<(), CliError> {
    let known = keys(&[
        &["image1", "image2", "intrinsics", "pose", "flow", "gt-scale", "gt-depth", "seed", "out"],
        &MaskArgs::KEYS,
        &RansacArgs::KEYS,
        &SweepArgs::KEYS,
    ]);
    let mut overrides = overrides!(a;
        "image1" => image1, "image2" => image2, "intrinsics" => intrinsics,
        "pose" => pose, "flow" => flow, "gt-scale" => gt_scale, "gt-depth" => gt_depth,
        "seed" => seed, "out" => out,
    );
    overrides.extend(a.mask.overrides());
    overrides.extend(a.ransac.overrides());
    overrides.extend(a.sweep.overrides());
    let s = Settings::resolve(&known, &[], a.config.as_deref(), overrides)?;

    let img1 = read_image(&s, "image1")?;
    let img2 = read_image(&s, "image2")?;
    let k = read_intrinsics(&s)?;
    let (schedule, cost, mode) = sweep_schedule(&s)?;
    let alpha: Option<f64> = s.get("gt-scale")?;
    let gt_depth = s.path("gt-depth").map(io::read_depth).transpose().map_err(io_error)?;
    let pose = match (s.path("pose"), s.path("flow")) {
        (Some(p), _) => read_single_pose(&p)?,
        (None, Some(f)) => {
            let flow = io::read_flow(f).map_err(io_error)?;
            estimate_from_flow(&s, &flow, &k)?.pose
        }
        (None, None) => return Err(CliError::Config("need --pose or --flow".into())),
    };
    let (unit, _) = normalize_translation(&pose).map_err(sweep_error)?;
    let dir = out_dir(&s)?;
    let result = plane_sweep(&img1, &img2, &k, &unit, &schedule, cost, mode).map_err(sweep_error)?;
    let (mut report, metric) = write_sweep(&dir, &result, alpha)?;
    report.insert_str(
        0,
        &format!(
            "hypotheses={}\nd_min={}\nd_max={}\nmode={}\n",
            schedule.len(),
            schedule.d_min(),
            schedule.d_max(),
            mode.name()
        ),
    );
    if let (Some(gt), Some(metric), Some(alpha)) = (&gt_depth, &metric, alpha) {
        let m = depth_metrics(metric, gt, Scaling::None, None).map_err(metrics_error)?;
        let max_depth = gt.iter_valid().map(|(_, _, d)| d).fold(0.0f64, f64::max);
        report.push_str(&format!(
            "abs_rel={}\nquantization_bound={}\n",
            m.abs_rel,
            schedule.quantization_bound(max_depth / alpha)
        ));
    }
    write_text(&dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn scaling(s: &Settings, gt_pose: Option<&RigidTransform>) -> Result<Scaling, CliError> {
    Ok(match s.raw("scaling").unwrap_or("none") {
        "none" => Scaling::None,
        "median" => Scaling::Median,
        "gt" => {
            let alpha = match (s.get::<f64>("gt-scale")?, gt_pose) {
                (Some(a), _) => a,
                (None, Some(p)) => p.translation().norm(),
                (None, None) => return Err(CliError::Config("--scaling gt needs --gt-scale".into())),
            };
            Scaling::GtScale(alpha)
        }
        other => return Err(CliError::Config(format!("unknown scaling {other:?}"))),
    })
}

fn emit_metrics(s: &Settings, text: &str) -> Result<(), CliError> {
    if s.raw("out").is_some() {
        let dir = out_dir(s)?;
        write_text(&dir.join("metrics.txt"), text)?;
    }
    print!("{text}");
    Ok(())
}

fn evaluate_depth(a: &EvalDepthArgs) -> Result<(), CliError> {
    let known = ["pred", "gt", "scaling", "gt-scale", "intrinsics", "baseline", "out"];
    let overrides = overrides!(a;
        "pred" => pred, "gt" => gt, "scaling" => scaling, "gt-scale" => gt_scale,
        "intrinsics" => intrinsics, "baseline" => baseline, "out" => out,
    );
    let s = Settings::resolve(&known, &[], a.config.as_deref(), overrides)?;
    let pred = io::read_depth(s.require_path("pred")?).map_err(io_error)?;
    let gt = io::read_depth(s.require_path("gt")?).map_err(io_error)?;
    let disparity = match s.path("intrinsics") {
        Some(p) => Some(DisparityParams {
            focal: io::read_intrinsics(p).map_err(io_error)?.fx(),
            baseline: s.get_or("baseline", KITTI_BASELINE)?,
        }),
        None => None,
    };
    let m = depth_metrics(&pred, &gt, scaling(&s, None)?, disparity).map_err(metrics_error)?;
    emit_metrics(&s, &format_key_values(m.key_values()))
}

fn pair_settings(a: &EvalPairArgs) -> Result<Settings, CliError> {
    let overrides = overrides!(a; "pred" => pred, "gt" => gt, "out" => out);
    Settings::resolve(&["pred", "gt", "out"], &[], a.config.as_deref(), overrides)
}

fn evaluate_pose(a: &EvalPairArgs) -> Result<(), CliError> {
    let s = pair_settings(a)?;
    let pred = read_single_pose(&s.require_path("pred")?)?;
    let gt = read_single_pose(&s.require_path("gt")?)?;
    let e = pose_errors(&pred, &gt).map_err(metrics_error)?;
    emit_metrics(&s, &format_key_values(e.key_values()))
}

fn evaluate_trajectory(a: &EvalPairArgs) -> Result<(), CliError> {
    let s = pair_settings(a)?;
    let pred = io::read_trajectory(s.require_path("pred")?).map_err(io_error)?;
    let gt = io::read_trajectory(s.require_path("gt")?).map_err(io_error)?;
    let e = kitti_vo_errors(&pred, &gt).map_err(metrics_error)?;
    emit_metrics(&s, &format_key_values(e.key_values()))
}

/// Keys a sample manifest carries that describe the result, not the scene.
const DERIVED_SYNTH_KEYS: [&str; 3] = ["alpha_gt", "outlier_count", "valid_matches"];

fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let known = [
        "kind", "points", "plane-depth", "near-depth", "far-depth", "split", "texture-seed", "width",
        "height", "depth-near", "depth-far", "intrinsics", "pose", "noise-px", "outlier-ratio",
        "outlier-mode", "period-px", "octaves", "flat-cell-px", "flat-fraction", "seed", "out",
    ];
    let overrides = overrides!(a;
        "kind" => kind, "points" => points, "plane-depth" => plane_depth,
        "near-depth" => near_depth, "far-depth" => far_depth, "split" => split,
        "texture-seed" => texture_seed, "width" => width, "height" => height,
        "depth-near" => depth_near, "depth-far" => depth_far, "intrinsics" => intrinsics,
        "pose" => pose, "noise-px" => noise_px, "outlier-ratio" => outlier_ratio,
        "outlier-mode" => outlier_mode, "period-px" => period_px, "octaves" => octaves,
        "flat-cell-px" => flat_cell_px, "flat-fraction" => flat_fraction, "seed" => seed,
        "out" => out,
    );
    let s = Settings::resolve(&known, &DERIVED_SYNTH_KEYS, a.config.as_deref(), overrides)?;
    let spec = scene_spec(&s)?;
    let dir = out_dir(&s)?;
    let sample = synthetic::generate(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    synthetic::write_sample(&dir, &sample).map_err(io_error)?;
    print!("{}", synthetic::manifest(&sample));
    Ok(())
}

fn scene_spec(s: &Settings) -> Result<SceneSpec, CliError> {
    let d = SceneSpec::default();
    let texture_seed = s.get_or("texture-seed", 1)?;
    let kind = match s.raw("kind").unwrap_or(d.kind.name()) {
        "point_cloud" => SceneKind::PointCloud {
            n: s.get_or("points", 1000)?,
        },
        "textured_plane" => SceneKind::TexturedPlane {
            depth: s.get_or("plane-depth", 5.0)?,
            texture_seed,
        },
        "two_planes" => SceneKind::TwoPlanes {
            near: s.get_or("near-depth", 4.0)?,
            far: s.get_or("far-depth", 10.0)?,
            split: s.get_or("split", s.get_or::<usize>("width", d.width)? / 2)?,
            texture_seed,
        },
        other => return Err(CliError::Config(format!("unknown scene kind {other:?}"))),
    };
    let intrinsics = match s.raw("intrinsics") {
        Some(text) => io::parse_intrinsics(text).map_err(|e| CliError::Config(format!("intrinsics: {e}")))?,
        None => d.intrinsics,
    };
    let pose = match s.raw("pose") {
        Some(text) => io::parse_pose_line(text).map_err(|e| CliError::Config(format!("pose: {e}")))?,
        None => d.pose,
    };
    let outlier_mode = match s.raw("outlier-mode") {
        Some(m) => OutlierMode::parse(m).ok_or_else(|| CliError::Config(format!("unknown outlier mode {m:?}")))?,
        None => d.outlier_mode,
    };
    let t = TextureParams::default();
    let spec = SceneSpec {
        kind,
        depth_range: (s.get_or("depth-near", d.depth_range.0)?, s.get_or("depth-far", d.depth_range.1)?),
        width: s.get_or("width", d.width)?,
        height: s.get_or("height", d.height)?,
        intrinsics,
        pose,
        noise_px: s.get_or("noise-px", d.noise_px)?,
        outlier_ratio: s.get_or("outlier-ratio", d.outlier_ratio)?,
        outlier_mode,
        texture: TextureParams {
            period_px: s.get_or("period-px", t.period_px)?,
            octaves: s.get_or("octaves", t.octaves)?,
            flat_cell_px: s.get_or("flat-cell-px", t.flat_cell_px)?,
            flat_fraction: s.get_or("flat-fraction", t.flat_fraction)?,
        },
        seed: s.get_or("seed", d.seed)?,
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

/// Keys that change where or how fast a run happens but not its results.
const NON_REPRODUCIBLE_KEYS: [&str; 1] = ["out"];

fn pipeline(a: &PipelineArgs) -> Result<(), CliError> {
    let known = keys(&[
        &[
            "flow", "image1", "image2", "intrinsics", "gt-depth", "gt-pose", "scaling", "gt-scale",
            "seed", "out",
        ],
        &MaskArgs::KEYS,
        &RansacArgs::KEYS,
        &SweepArgs::KEYS,
    ]);
    let mut overrides = overrides!(a;
        "flow" => flow, "image1" => image1, "image2" => image2, "intrinsics" => intrinsics,
        "gt-depth" => gt_depth, "gt-pose" => gt_pose, "scaling" => scaling,
        "gt-scale" => gt_scale, "seed" => seed, "out" => out,
    );
    overrides.extend(a.mask.overrides());
    overrides.extend(a.ransac.overrides());
    overrides.extend(a.sweep.overrides());
    let mut s = Settings::resolve(&known, &[], a.config.as_deref(), overrides)?;

    // Pin every default so the manifest alone reproduces the run.
    let r = ransac_config(&s)?;
    let (schedule, cost, mode) = sweep_schedule(&s).map_err(|e| e.in_stage("config"))?;
    s.set("seed", r.seed);
    s.set("ransac-threshold", r.inlier_threshold);
    s.set("confidence", r.confidence);
    s.set("max-iters", r.max_iterations);
    s.set("min-iters", r.min_iterations);
    s.set("refine-rounds", r.refine_rounds);
    s.set("mask", mask_strategy(&s)?.name());
    s.set("hypotheses", schedule.len());
    s.set("dmin", schedule.d_min());
    s.set("cost", cost.name());
    s.set("mode", mode.name());
    if let ExtractionMode::Soft { tau, window } = mode {
        s.set("tau", tau);
        s.set("soft-window", window.map_or("none".to_string(), |w| w.to_string()));
    }

    let flow = io::read_flow(s.require_path("flow")?).map_err(io_error).map_err(|e| e.in_stage("input"))?;
    let img1 = read_image(&s, "image1").map_err(|e| e.in_stage("input"))?;
    let img2 = read_image(&s, "image2").map_err(|e| e.in_stage("input"))?;
    let k = read_intrinsics(&s).map_err(|e| e.in_stage("input"))?;
    let gt_depth = s
        .path("gt-depth")
        .map(io::read_depth)
        .transpose()
        .map_err(io_error)
        .map_err(|e| e.in_stage("input"))?;
    let gt_pose = s
        .path("gt-pose")
        .map(|p| read_single_pose(&p))
        .transpose()
        .map_err(|e| e.in_stage("input"))?;
    let depth_scaling = scaling(&s, gt_pose.as_ref()).map_err(|e| e.in_stage("config"))?;
    let alpha = match depth_scaling {
        Scaling::GtScale(a) => Some(a),
        _ => s.get("gt-scale")?,
    };
    let dir = out_dir(&s)?;
    write_text(&dir.join("run_manifest.txt"), &s.manifest(&NON_REPRODUCIBLE_KEYS))?;

    let est = estimate_from_flow(&s, &flow, &k)?;
    write_pose(&dir.join("pose.txt"), &est.pose)?;
    let mut report = pose_report(&est, flow.valid_count());

    let result = plane_sweep(&img1, &img2, &k, &est.pose, &schedule, cost, mode)
        .map_err(sweep_error)
        .map_err(|e| e.in_stage("sweep"))?;
    let (sweep_report, _) = write_sweep(&dir, &result, alpha)?;
    report.push_str(&sweep_report);

    let mut metrics = String::new();
    if let Some(gt) = &gt_pose {
        let e = pose_errors(&est.pose, gt).map_err(metrics_error).map_err(|e| e.in_stage("evaluate"))?;
        metrics.push_str(&format_key_values(e.key_values()));
    }
    if let Some(gt) = &gt_depth {
        let m = depth_metrics(&result.depth, gt, depth_scaling, Some(DisparityParams::kitti(k.fx())))
            .map_err(metrics_error)
            .map_err(|e| e.in_stage("evaluate"))?;
        metrics.push_str(&format_key_values(m.key_values()));
        if let Some(alpha) = alpha {
            let max_depth = gt.iter_valid().map(|(_, _, d)| d).fold(0.0f64, f64::max);
            metrics.push_str(&format!("quantization_bound={}\n", schedule.quantization_bound(max_depth / alpha)));
        }
    }
    if !metrics.is_empty() {
        write_text(&dir.join("metrics.txt"), &metrics)?;
    }
    write_text(&dir.join("report.txt"), &report)?;
    print!("{report}{metrics}");
    Ok(())
}
