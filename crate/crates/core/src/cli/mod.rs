//! Command-line front end. Every option can also come from a flat
//! `key=value` file given with `--config`; command-line values win.
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 2 degenerate input
//! or failed estimation.

/// `(key, value)` pairs for [`config::Settings::resolve`] from struct fields.
macro_rules! overrides {
    ($s:expr; $($key:literal => $field:ident),* $(,)?) => {
        vec![$(($key, $s.$field.clone())),*]
    };
}

mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    /// Estimation could not produce a meaningful result.
    #[error("degenerate: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Degenerate(_) => 2,
        }
    }

    /// Prefixes the message with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{stage}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{stage}: {m}")),
            CliError::Degenerate(m) => CliError::Degenerate(format!("{stage}: {m}")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "twoview", version, about = "Two-view relative pose, plane-sweep depth and evaluation")]
pub struct Cli {
    /// Worker threads (0 = all cores). Outputs do not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Robust relative pose from a flow field.
    EstimatePose(EstimatePoseArgs),
    /// Plane-sweep depth from two images and a pose (given or estimated).
    SweepDepth(SweepDepthArgs),
    /// Depth, pose or trajectory metrics as key=value lines.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Render a synthetic sample with exact ground truth.
    Synth(SynthArgs),
    /// Flow → mask → pose → depth → optional evaluation, with a run manifest.
    Pipeline(PipelineArgs),
}

type Overrides = Vec<(&'static str, Option<String>)>;

#[derive(Debug, Args, Default, Clone)]
pub struct MaskArgs {
    /// Correspondence mask: all, grid, keypoints or weights.
    #[arg(long)]
    pub mask: Option<String>,
    /// Stride for --mask grid.
    #[arg(long)]
    pub grid_stride: Option<String>,
    /// Half-width of the square grown around each keypoint.
    #[arg(long)]
    pub keypoint_dilate: Option<String>,
    /// Per-pixel weight image for --mask weights.
    #[arg(long)]
    pub weights: Option<String>,
    /// Minimum weight kept by --mask weights.
    #[arg(long)]
    pub weight_threshold: Option<String>,
}

impl MaskArgs {
    pub const KEYS: [&'static str; 5] = ["mask", "grid-stride", "keypoint-dilate", "weights", "weight-threshold"];

    fn overrides(&self) -> Overrides {
        overrides!(self;
            "mask" => mask,
            "grid-stride" => grid_stride,
            "keypoint-dilate" => keypoint_dilate,
            "weights" => weights,
            "weight-threshold" => weight_threshold,
        )
    }
}

#[derive(Debug, Args, Default, Clone)]
pub struct RansacArgs {
    /// Sampson inlier threshold in squared pixels.
    #[arg(long)]
    pub ransac_threshold: Option<String>,
    /// Target probability of drawing one all-inlier sample.
    #[arg(long)]
    pub confidence: Option<String>,
    #[arg(long)]
    pub max_iters: Option<String>,
    #[arg(long)]
    pub min_iters: Option<String>,
    /// Nonlinear refinement rounds after RANSAC (0 disables).
    #[arg(long)]
    pub refine_rounds: Option<String>,
}

impl RansacArgs {
    pub const KEYS: [&'static str; 5] = ["ransac-threshold", "confidence", "max-iters", "min-iters", "refine-rounds"];

    fn overrides(&self) -> Overrides {
        overrides!(self;
            "ransac-threshold" => ransac_threshold,
            "confidence" => confidence,
            "max-iters" => max_iters,
            "min-iters" => min_iters,
            "refine-rounds" => refine_rounds,
        )
    }
}

#[derive(Debug, Args, Default, Clone)]
pub struct SweepArgs {
    /// Number of depth hypotheses L.
    #[arg(long)]
    pub hypotheses: Option<String>,
    /// Nearest hypothesis depth, in units of the baseline length.
    #[arg(long)]
    pub dmin: Option<String>,
    /// Depth extraction: hard or soft.
    #[arg(long)]
    pub mode: Option<String>,
    /// Soft-argmin temperature.
    #[arg(long)]
    pub tau: Option<String>,
    /// Soft-argmin window half-width in hypotheses; "none" uses all.
    #[arg(long)]
    pub soft_window: Option<String>,
    /// Matching cost: sad or zncc.
    #[arg(long)]
    pub cost: Option<String>,
}

impl SweepArgs {
    pub const KEYS: [&'static str; 6] = ["hypotheses", "dmin", "mode", "tau", "soft-window", "cost"];

    fn overrides(&self) -> Overrides {
        overrides!(self;
            "hypotheses" => hypotheses,
            "dmin" => dmin,
            "mode" => mode,
            "tau" => tau,
            "soft-window" => soft_window,
            "cost" => cost,
        )
    }
}

#[derive(Debug, Args, Default, Clone)]
pub struct EstimatePoseArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Forward flow (.flo).
    #[arg(long)]
    pub flow: Option<String>,
    /// Intrinsics: "fx fy cx cy" or a KITTI calibration line.
    #[arg(long)]
    pub intrinsics: Option<String>,
    /// First image, needed by --mask keypoints.
    #[arg(long)]
    pub image1: Option<String>,
    /// Ground-truth pose for reporting rotation/translation errors.
    #[arg(long)]
    pub gt_pose: Option<String>,
    #[command(flatten)]
    pub mask: MaskArgs,
    #[command(flatten)]
    pub ransac: RansacArgs,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SweepDepthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub image1: Option<String>,
    #[arg(long)]
    pub image2: Option<String>,
    #[arg(long)]
    pub intrinsics: Option<String>,
    /// Relative pose file; normalized to a unit baseline before use.
    #[arg(long)]
    pub pose: Option<String>,
    /// Flow used to estimate the pose when --pose is absent.
    #[arg(long)]
    pub flow: Option<String>,
    #[command(flatten)]
    pub mask: MaskArgs,
    #[command(flatten)]
    pub ransac: RansacArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Ground-truth scale α; also writes depth rescaled by it.
    #[arg(long)]
    pub gt_scale: Option<String>,
    /// Ground-truth depth for reporting errors (needs --gt-scale).
    #[arg(long)]
    pub gt_depth: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Depth error battery.
    Depth(EvalDepthArgs),
    /// Rotation and translation-direction errors.
    Pose(EvalPairArgs),
    /// KITTI odometry errors after similarity alignment.
    Trajectory(EvalPairArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct EvalDepthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<String>,
    #[arg(long)]
    pub gt: Option<String>,
    /// none, median or gt.
    #[arg(long)]
    pub scaling: Option<String>,
    #[arg(long)]
    pub gt_scale: Option<String>,
    /// Intrinsics providing the focal length for D1-all.
    #[arg(long)]
    pub intrinsics: Option<String>,
    /// Stereo baseline for D1-all.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct EvalPairArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<String>,
    #[arg(long)]
    pub gt: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SynthArgs {
    /// Scene description; a sample manifest can be passed back in.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// textured_plane, two_planes or point_cloud.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long)]
    pub plane_depth: Option<String>,
    #[arg(long)]
    pub near_depth: Option<String>,
    #[arg(long)]
    pub far_depth: Option<String>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub texture_seed: Option<String>,
    #[arg(long)]
    pub width: Option<String>,
    #[arg(long)]
    pub height: Option<String>,
    #[arg(long)]
    pub depth_near: Option<String>,
    #[arg(long)]
    pub depth_far: Option<String>,
    /// "fx fy cx cy".
    #[arg(long)]
    pub intrinsics: Option<String>,
    /// Twelve row-major values of [R|t].
    #[arg(long)]
    pub pose: Option<String>,
    #[arg(long)]
    pub noise_px: Option<String>,
    #[arg(long)]
    pub outlier_ratio: Option<String>,
    /// uniform, textureless or dynamic_block.
    #[arg(long)]
    pub outlier_mode: Option<String>,
    #[arg(long)]
    pub period_px: Option<String>,
    #[arg(long)]
    pub octaves: Option<String>,
    #[arg(long)]
    pub flat_cell_px: Option<String>,
    #[arg(long)]
    pub flat_fraction: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct PipelineArgs {
    /// Settings file; a previous run_manifest.txt reproduces that run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub flow: Option<String>,
    #[arg(long)]
    pub image1: Option<String>,
    #[arg(long)]
    pub image2: Option<String>,
    #[arg(long)]
    pub intrinsics: Option<String>,
    #[command(flatten)]
    pub mask: MaskArgs,
    #[command(flatten)]
    pub ransac: RansacArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long)]
    pub gt_depth: Option<String>,
    #[arg(long)]
    pub gt_pose: Option<String>,
    /// Depth scaling before evaluation: none, median or gt.
    #[arg(long)]
    pub scaling: Option<String>,
    /// Ground-truth scale α; defaults to ‖t‖ of --gt-pose.
    #[arg(long)]
    pub gt_scale: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}
