//! Relative pose from correspondences: five-point minimal solver, RANSAC,
//! cheirality disambiguation and correspondence masking.

mod five_point;
mod masking;
mod ransac;
mod refine;

pub use five_point::{constraint_residuals, five_point};
pub use masking::{apply_mask_strategy, MaskAux, MaskStrategy};
pub use refine::refine_pose;
pub use ransac::{estimate_pose_ransac, PoseEstimate, RansacConfig, LOW_PARALLAX_PX};

use thiserror::Error;

use crate::geometry::{
    triangulate_normalized, tol, CameraIntrinsics, Correspondence, GeometryError, RigidTransform,
};
use crate::raster::RasterError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoseError {
    #[error("degenerate sample")]
    DegenerateSample,
    #[error("need at least 5 correspondences, got {0}")]
    NotEnoughCorrespondences(usize),
    #[error("estimation failed: {0}")]
    EstimationFailed(String),
    #[error("cheirality failed: no candidate places points in front of both cameras")]
    CheiralityFailed,
    #[error("invalid ransac config: {0}")]
    InvalidConfig(String),
    #[error("mask strategy {0} requires {1}")]
    MissingAux(&'static str, &'static str),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Number of correspondences triangulating in front of both cameras.
pub fn cheirality_count(
    pose: &RigidTransform,
    correspondences: &[Correspondence],
    k: &CameraIntrinsics,
) -> usize {
    correspondences
        .iter()
        .filter(|c| {
            triangulate_normalized(
                &k.normalize(&c.first),
                &k.normalize(&c.second),
                pose,
                tol::PARALLAX_ANGLE,
            )
            .map(|t| t.in_front())
            .unwrap_or(false)
        })
        .count()
}

/// Picks the candidate with the most points in front of both cameras; ties
/// go to the earliest candidate.
pub fn select_by_cheirality(
    candidates: &[RigidTransform],
    correspondences: &[Correspondence],
    k: &CameraIntrinsics,
) -> Result<RigidTransform, PoseError> {
    if correspondences.is_empty() {
        return Err(PoseError::NotEnoughCorrespondences(0));
    }
    let mut best: Option<(usize, &RigidTransform)> = None;
    for cand in candidates {
        let count = cheirality_count(cand, correspondences, k);
        if count > best.map_or(0, |b| b.0) {
            best = Some((count, cand));
        }
    }
    best.map(|b| *b.1).ok_or(PoseError::CheiralityFailed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{decompose_essential, essential_from_pose, PixelPoint};
    use nalgebra::Vector3;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(400.0, 400.0, 200.0, 150.0).unwrap()
    }

    fn scene(pose: &RigidTransform, n: usize) -> Vec<Correspondence> {
        let k = k();
        (0..n)
            .filter_map(|i| {
                let f = i as f64;
                let p = Vector3::new((f * 0.37).sin(), (f * 0.61).cos() * 0.7, 4.0 + (f * 0.23).sin());
                Some(Correspondence::new(k.project(&p)?, k.project(&pose.transform_point(&p))?))
            })
            .collect()
    }

    #[test]
    fn cheirality_recovers_ground_truth() {
        let pose = RigidTransform::from_axis_angle(
            Vector3::new(0.2, 1.0, -0.1),
            0.15,
            Vector3::new(0.5, -0.1, 0.2),
        );
        let (unit, _) = pose.normalized().unwrap();
        let cands = decompose_essential(&essential_from_pose(&pose).unwrap()).unwrap();
        for n in [50, 1] {
            let sel = select_by_cheirality(&cands, &scene(&pose, n), &k()).unwrap();
            assert!((sel.rotation() - unit.rotation()).norm() < 1e-9);
            assert!((sel.translation() - unit.translation()).norm() < 1e-9);
        }
    }

    #[test]
    fn mirrored_pair_selects_front_solution() {
        let pose = RigidTransform::identity().with_translation(Vector3::new(1.0, 0.0, 0.0));
        let mirrored = pose.with_translation(-pose.translation());
        let corr = scene(&pose, 20);
        let sel = select_by_cheirality(&[mirrored, pose], &corr, &k()).unwrap();
        assert_eq!(sel, pose);
    }

    #[test]
    fn all_behind_fails() {
        let pose = RigidTransform::identity().with_translation(Vector3::new(1.0, 0.0, 0.0));
        let mirrored = pose.with_translation(-pose.translation());
        let corr = scene(&pose, 10);
        assert_eq!(
            select_by_cheirality(&[mirrored], &corr, &k()),
            Err(PoseError::CheiralityFailed)
        );
        let zero = Correspondence::new(PixelPoint::new(1.0, 1.0), PixelPoint::new(1.0, 1.0));
        assert_eq!(
            select_by_cheirality(&[pose], &[zero], &k()),
            Err(PoseError::CheiralityFailed)
        );
    }
}
