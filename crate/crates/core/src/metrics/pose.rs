use super::MetricsError;
use crate::geometry::{angle_between, rotation_distance, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseErrors {
    /// Geodesic rotation error, degrees.
    pub rot_deg: f64,
    /// Angle between translation directions, degrees.
    pub tran_deg: f64,
}

impl PoseErrors {
    pub const KEYS: [&'static str; 2] = ["rot_deg", "tran_deg"];

    pub fn key_values(&self) -> Vec<(&'static str, f64)> {
        vec![("rot_deg", self.rot_deg), ("tran_deg", self.tran_deg)]
    }
}

/// Rotation and translation-direction errors; translation scale is ignored.
pub fn pose_errors(pred: &RigidTransform, gt: &RigidTransform) -> Result<PoseErrors, MetricsError> {
    if pred.translation().norm() == 0.0 || gt.translation().norm() == 0.0 {
        return Err(MetricsError::ZeroTranslation);
    }
    Ok(PoseErrors {
        rot_deg: rotation_distance(pred.rotation(), gt.rotation()).to_degrees(),
        tran_deg: angle_between(pred.translation(), gt.translation()).to_degrees(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    #[test]
    fn hand_cases() {
        let t = Vector3::new(0.3, -0.2, 1.0);
        let gt = RigidTransform::identity().with_translation(t);
        assert_eq!(pose_errors(&gt, &gt).unwrap(), PoseErrors { rot_deg: 0.0, tran_deg: 0.0 });
        let rz = RigidTransform::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_2, t);
        let e = pose_errors(&rz, &gt).unwrap();
        assert_relative_eq!(e.rot_deg, 90.0, epsilon = 1e-12);
        assert_eq!(e.tran_deg, 0.0);
        let flipped = gt.with_translation(-t);
        assert_relative_eq!(pose_errors(&flipped, &gt).unwrap().tran_deg, 180.0, epsilon = 1e-12);
        assert!(pose_errors(&RigidTransform::identity(), &gt).is_err());
    }

    #[test]
    fn symmetric_and_scale_free() {
        let a = RigidTransform::from_axis_angle(Vector3::new(1.0, 2.0, 0.5), 0.4, Vector3::new(1.0, 0.0, 0.2));
        let b = RigidTransform::from_axis_angle(Vector3::new(-0.3, 1.0, 0.1), 0.9, Vector3::new(0.1, 1.0, 0.0));
        let ab = pose_errors(&a, &b).unwrap();
        let ba = pose_errors(&b, &a).unwrap();
        assert_relative_eq!(ab.rot_deg, ba.rot_deg, epsilon = 1e-12);
        let scaled = pose_errors(&a.with_translation(a.translation() * 7.0), &b).unwrap();
        assert_relative_eq!(ab.tran_deg, scaled.tran_deg, epsilon = 1e-12);
    }
}
