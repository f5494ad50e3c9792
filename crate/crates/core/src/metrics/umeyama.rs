use nalgebra::{Matrix3, Vector3};

use super::MetricsError;
use crate::geometry::RigidTransform;
use crate::io::Trajectory;

/// Ratio of the second to the first singular value of the cross-covariance
/// under which the rotation is not fully determined.
const DEGENERATE_RATIO: f64 = 1e-10;

/// `p ↦ s·R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Sum of squared residuals after alignment.
    pub residual: f64,
    /// Point set is (nearly) collinear: the rotation about the common axis is
    /// arbitrary.
    pub degenerate: bool,
}

impl Similarity {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Applies the similarity to a camera-to-world pose.
    pub fn apply_pose(&self, pose: &RigidTransform) -> RigidTransform {
        let rotation = self.rotation * pose.rotation();
        RigidTransform::new(rotation, self.apply(pose.translation()))
            .expect("product of rotations is a rotation")
    }

    pub fn residual_of(&self, src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> f64 {
        src.iter().zip(dst).map(|(s, d)| (d - self.apply(s)).norm_squared()).sum()
    }
}

/// Closed-form least-squares similarity mapping `src` onto `dst`, with the
/// determinant correction that keeps `R` a proper rotation.
pub fn umeyama_align(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<Similarity, MetricsError> {
    if src.len() != dst.len() {
        return Err(MetricsError::LengthMismatch(src.len(), dst.len()));
    }
    let n = src.len();
    if n < 3 {
        return Err(MetricsError::NotEnoughPoints(n));
    }
    let nf = n as f64;
    let mu_s = src.iter().sum::<Vector3<f64>>() / nf;
    let mu_d = dst.iter().sum::<Vector3<f64>>() / nf;
    let var_s = src.iter().map(|p| (p - mu_s).norm_squared()).sum::<f64>() / nf;
    if var_s == 0.0 || !var_s.is_finite() {
        return Err(MetricsError::Degenerate("source points coincide"));
    }
    let mut cov = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        cov += (d - mu_d) * (s - mu_s).transpose();
    }
    cov /= nf;
    let svd = cov.svd(true, true);
    let (u, vt) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
    let mut sv = svd.singular_values;
    // nalgebra does not guarantee ordering.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let degenerate = sv[order[1]] <= DEGENERATE_RATIO * sv[order[0]];
    let mut sign = Vector3::new(1.0, 1.0, 1.0);
    if u.determinant() * vt.determinant() < 0.0 {
        // Flip the direction with the smallest singular value.
        sign[order[2]] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&sign) * vt;
    sv.component_mul_assign(&sign);
    let scale = sv.sum() / var_s;
    let translation = mu_d - scale * (rotation * mu_s);
    let mut sim = Similarity {
        scale,
        rotation,
        translation,
        residual: 0.0,
        degenerate,
    };
    sim.residual = sim.residual_of(src, dst);
    Ok(sim)
}

/// Aligns `pred` camera positions onto `gt` and applies the similarity to
/// every pose.
pub fn align_trajectory(pred: &Trajectory, gt: &Trajectory) -> Result<(Similarity, Trajectory), MetricsError> {
    let sim = umeyama_align(&pred.positions(), &gt.positions())?;
    let poses = pred.poses().iter().map(|p| sim.apply_pose(p)).collect();
    let aligned = Trajectory::with_frames(poses, pred.frames().to_vec()).expect("frames unchanged");
    Ok((sim, aligned))
}
