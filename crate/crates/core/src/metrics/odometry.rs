use super::umeyama::align_trajectory;
use super::{compensated_sum, MetricsError};
use crate::geometry::rotation_angle;
use crate::io::Trajectory;

/// Segment lengths in metres along the ground-truth path.
pub const SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

/// Frames between consecutive segment starts.
pub const SEGMENT_STEP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoErrors {
    /// Mean relative translation error, percent.
    pub t_err_pct: f64,
    /// Mean relative rotation error, degrees per 100 m.
    pub r_err_deg_per_100m: f64,
    /// Number of evaluated segments.
    pub segments: usize,
}

impl VoErrors {
    pub const KEYS: [&'static str; 2] = ["t_err_pct", "r_err_deg_per_100m"];

    pub fn key_values(&self) -> Vec<(&'static str, f64)> {
        vec![("t_err_pct", self.t_err_pct), ("r_err_deg_per_100m", self.r_err_deg_per_100m)]
    }
}

fn path_distances(gt: &Trajectory) -> Vec<f64> {
    let pos = gt.positions();
    let mut dist = Vec::with_capacity(pos.len());
    let mut acc = 0.0;
    for (i, p) in pos.iter().enumerate() {
        if i > 0 {
            acc += (p - pos[i - 1]).norm();
        }
        dist.push(acc);
    }
    dist
}

/// KITTI odometry errors. `pred` is first aligned to `gt` with a similarity
/// transform; then, for start frames every [`SEGMENT_STEP`] frames and each
/// length in [`SEGMENT_LENGTHS`], the relative motion over the first
/// sub-trajectory longer than that length is compared.
pub fn kitti_vo_errors(pred: &Trajectory, gt: &Trajectory) -> Result<VoErrors, MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gt.len()));
    }
    if gt.len() < 2 {
        return Err(MetricsError::NotEnoughPoints(gt.len()));
    }
    let dist = path_distances(gt);
    let total = *dist.last().expect("non-empty");
    if total < SEGMENT_LENGTHS[0] {
        return Err(MetricsError::InsufficientLength(total));
    }
    let (_, aligned) = align_trajectory(pred, gt)?;
    let (p, g) = (aligned.poses(), gt.poses());

    let mut t_errs = Vec::new();
    let mut r_errs = Vec::new();
    for first in (0..g.len()).step_by(SEGMENT_STEP) {
        for len in SEGMENT_LENGTHS {
            let Some(last) = (first..g.len()).find(|&j| dist[j] > dist[first] + len) else {
                continue;
            };
            let delta_gt = g[first].inverse().compose(&g[last]);
            let delta_pred = p[first].inverse().compose(&p[last]);
            let err = delta_pred.inverse().compose(&delta_gt);
            t_errs.push(err.translation().norm() / len);
            r_errs.push(rotation_angle(err.rotation()) / len);
        }
    }
    if t_errs.is_empty() {
        return Err(MetricsError::InsufficientLength(total));
    }
    let n = t_errs.len() as f64;
    Ok(VoErrors {
        t_err_pct: compensated_sum(t_errs) / n * 100.0,
        r_err_deg_per_100m: (compensated_sum(r_errs) / n).to_degrees() * 100.0,
        segments: n as usize,
    })
}
