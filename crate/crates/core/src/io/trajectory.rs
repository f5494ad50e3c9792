use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{io_err, IoError};
use crate::geometry::RigidTransform;

/// Rotation drift accepted (and projected away) when parsing text poses,
/// which are commonly printed with few significant digits.
const TEXT_ROTATION_TOLERANCE: f64 = 1e-4;

/// Absolute camera poses (camera-to-world) with strictly increasing frame
/// indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    poses: Vec<RigidTransform>,
    frames: Vec<usize>,
}

impl Trajectory {
    /// Frames numbered `0..poses.len()`.
    pub fn new(poses: Vec<RigidTransform>) -> Self {
        let frames = (0..poses.len()).collect();
        Self { poses, frames }
    }

    pub fn with_frames(poses: Vec<RigidTransform>, frames: Vec<usize>) -> Option<Self> {
        let increasing = frames.windows(2).all(|w| w[0] < w[1]);
        (poses.len() == frames.len() && increasing).then_some(Self { poses, frames })
    }

    pub fn poses(&self) -> &[RigidTransform] {
        &self.poses
    }

    pub fn frames(&self) -> &[usize] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn positions(&self) -> Vec<nalgebra::Vector3<f64>> {
        self.poses.iter().map(|p| *p.translation()).collect()
    }
}

fn format_pose(pose: &RigidTransform) -> String {
    let mut line = String::new();
    for (i, v) in pose.to_row_major().iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        // Shortest representation that parses back to the same f64.
        write!(line, "{v}").expect("write to string");
    }
    line
}

/// Parses one KITTI pose line (12 floats, row-major 3×4).
pub fn parse_pose_line(line: &str) -> Result<RigidTransform, String> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; 12] = values
        .as_slice()
        .try_into()
        .map_err(|_| format!("expected 12 values, found {}", values.len()))?;
    RigidTransform::from_row_major_with(&arr, TEXT_ROTATION_TOLERANCE).map_err(|e| e.to_string())
}

pub fn format_pose_line(pose: &RigidTransform) -> String {
    format_pose(pose)
}

/// Reads a KITTI odometry pose file; blank lines are skipped.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pose = parse_pose_line(line).map_err(|reason| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        })?;
        poses.push(pose);
    }
    Ok(Trajectory::new(poses))
}

pub fn write_trajectory(path: impl AsRef<Path>, traj: &Trajectory) -> Result<(), IoError> {
    let path = path.as_ref();
    let mut text = String::new();
    for pose in traj.poses() {
        text.push_str(&format_pose(pose));
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_line() {
        assert_eq!(format_pose(&RigidTransform::identity()), "1 0 0 0 0 1 0 0 0 0 1 0");
    }

    #[test]
    fn random_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let poses: Vec<_> = (0..100)
            .map(|_| {
                let v = |rng: &mut rand_chacha::ChaCha8Rng| {
                    Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
                };
                let rot = v(&mut rng);
                RigidTransform::from_rotation_vector(rot * 0.5, v(&mut rng) * 100.0)
            })
            .collect();
        let traj = Trajectory::new(poses);
        write_trajectory(&p, &traj).unwrap();
        let back = read_trajectory(&p).unwrap();
        assert_eq!(back.len(), 100);
        for (a, b) in traj.poses().iter().zip(back.poses()) {
            assert!((a.rotation() - b.rotation()).norm() < 1e-12);
            assert!((a.translation() - b.translation()).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_file_and_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "").unwrap();
        assert!(read_trajectory(&p).unwrap().is_empty());
        fs::write(&p, "1 0 0 0 0 1 0 0 0 0 1\n").unwrap();
        assert!(matches!(read_trajectory(&p), Err(IoError::Parse { line: 1, .. })));
        fs::write(&p, "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 x\n").unwrap();
        assert!(matches!(read_trajectory(&p), Err(IoError::Parse { line: 2, .. })));
    }

    #[test]
    fn frames_must_increase() {
        let p = vec![RigidTransform::identity(); 2];
        assert!(Trajectory::with_frames(p.clone(), vec![0, 0]).is_none());
        assert!(Trajectory::with_frames(p, vec![3, 7]).is_some());
    }
}
