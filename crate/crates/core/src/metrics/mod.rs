//! Training losses and evaluation metrics for depth, relative pose and
//! trajectories.

mod depth;
mod losses;
mod odometry;
mod pose;
mod umeyama;

pub use depth::{aggregate_depth_metrics, depth_metrics, DepthMetrics, DisparityParams, Scaling, KITTI_BASELINE};
pub use losses::{
    flow_loss, huber, huber_depth_loss, huber_depth_loss_with_grad, huber_grad, scale_invariant_loss,
    total_loss, HuberForm,
};
pub use odometry::{kitti_vo_errors, VoErrors, SEGMENT_LENGTHS, SEGMENT_STEP};
pub use pose::{pose_errors, PoseErrors};
pub use umeyama::{align_trajectory, umeyama_align, Similarity};

use thiserror::Error;

use crate::raster::RasterError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no jointly valid pixels")]
    EmptyOverlap,
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("zero-length translation")]
    ZeroTranslation,
    #[error("need at least 3 points, got {0}")]
    NotEnoughPoints(usize),
    #[error("degenerate point set: {0}")]
    Degenerate(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("insufficient length: ground-truth path is {0:.1} m, need at least 100 m")]
    InsufficientLength(f64),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Neumaier-compensated sum; result is independent of magnitude ordering
/// effects to within a few ulps.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Formats `key=value` lines, one metric per line.
pub fn format_key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> String {
    pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
        assert_eq!(format_key_values([("a", 1.5), ("b", 0.0)]), "a=1.5\nb=0\n");
    }
}
