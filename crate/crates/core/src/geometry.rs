//! Projective two-view geometry: cameras, rigid motion, essential matrices,
//! triangulation and epipolar residuals.
//!
//! Conventions: the first camera is `K[I | 0]`, the second is `K[R | t]`, so a
//! point `X` in the first camera frame appears at `R·X + t` in the second.
//! Pixel `(col, row)` has image coordinates `(col, row)`.

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector2, Vector3, Vector4};
use thiserror::Error;

use crate::raster::{DepthMap, FlowField};

/// Library tolerances. Every operation that uses one also has a `_with`
/// variant taking an explicit value.
pub mod tol {
    /// Largest `‖RᵀR − I‖_F` that is silently projected back onto SO(3).
    pub const ROTATION_PROJECTION: f64 = 1e-6;
    /// Orthonormality drift below which a rotation is stored untouched.
    pub const ROTATION_EXACT: f64 = 1e-12;
    /// Minimum angle between back-projected rays for triangulation.
    pub const PARALLAX_ANGLE: f64 = 1e-8;
    /// Relative size of the second singular value below which `E` is rank 1.
    pub const ESSENTIAL_RANK: f64 = 1e-9;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate: no epipolar geometry (zero translation)")]
    ZeroTranslation,
    #[error("degenerate essential matrix")]
    DegenerateEssential,
    #[error("no parallax between viewing rays")]
    NoParallax,
    #[error("invalid rotation: orthonormality drift {drift:e}, det {det}")]
    InvalidRotation { drift: f64, det: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// A point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn homogeneous(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, 1.0)
    }

    pub fn offset(&self, du: f64, dv: f64) -> Self {
        Self::new(self.x + du, self.y + dv)
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A point on the normalized image plane (`K⁻¹·x`, last coordinate 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint {
    pub x: f64,
    pub y: f64,
}

impl NormalizedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn homogeneous(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, 1.0)
    }
}

/// A 3D point expressed in the first camera frame.
pub type Point3D = Vector3<f64>;

/// A pixel correspondence `x ↔ x′` between view 1 and view 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub first: PixelPoint,
    pub second: PixelPoint,
}

impl Correspondence {
    pub fn new(first: PixelPoint, second: PixelPoint) -> Self {
        Self { first, second }
    }

    pub fn displacement(&self) -> f64 {
        self.first.distance(&self.second)
    }
}

/// Pinhole intrinsics without skew or distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if ![fx, fy, cx, cy].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("intrinsics"));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Closed-form `K⁻¹`.
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn normalize(&self, p: &PixelPoint) -> NormalizedPoint {
        NormalizedPoint::new((p.x - self.cx) / self.fx, (p.y - self.cy) / self.fy)
    }

    pub fn denormalize(&self, n: &NormalizedPoint) -> PixelPoint {
        PixelPoint::new(n.x * self.fx + self.cx, n.y * self.fy + self.cy)
    }

    /// Projects a camera-frame point; `None` when it is not strictly in
    /// front of the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<PixelPoint> {
        if p.z <= 0.0 {
            return None;
        }
        Some(PixelPoint::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Back-projects a pixel to the camera-frame point at depth `depth`.
    pub fn backproject(&self, p: &PixelPoint, depth: f64) -> Vector3<f64> {
        self.normalize(p).homogeneous() * depth
    }
}

/// Relative camera motion `(R, t)`; maps first-camera coordinates into the
/// second camera: `X₂ = R·X₁ + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Validates `rotation`, projecting small drift onto SO(3).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        Self::new_with(rotation, translation, tol::ROTATION_PROJECTION)
    }

    pub fn new_with(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        projection_tol: f64,
    ) -> Result<Self, GeometryError> {
        if !rotation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("rotation"));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("translation"));
        }
        let drift = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        let det = rotation.determinant();
        if drift <= tol::ROTATION_EXACT && (det - 1.0).abs() <= tol::ROTATION_EXACT {
            return Ok(Self {
                rotation,
                translation,
            });
        }
        if drift >= projection_tol || det <= 0.0 {
            return Err(GeometryError::InvalidRotation { drift, det });
        }
        Ok(Self {
            rotation: nearest_rotation(&rotation),
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation of `angle` radians about `axis` followed by `translation`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = if axis.norm() == 0.0 || angle == 0.0 {
            Matrix3::identity()
        } else {
            *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix()
        };
        Self {
            rotation,
            translation,
        }
    }

    /// Builds from a rotation vector (axis × angle).
    pub fn from_rotation_vector(rotvec: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::from_axis_angle(rotvec, rotvec.norm(), translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Self {
        Self {
            rotation: self.rotation,
            translation,
        }
    }

    /// `(R, t/‖t‖)` together with `‖t‖`.
    pub fn normalized(&self) -> Result<(Self, f64), GeometryError> {
        let alpha = self.translation.norm();
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(GeometryError::ZeroTranslation);
        }
        Ok((self.with_translation(self.translation / alpha), alpha))
    }

    /// Row-major 3×4 `[R | t]`.
    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z,
        ]
    }

    pub fn from_row_major(v: &[f64; 12]) -> Result<Self, GeometryError> {
        Self::from_row_major_with(v, tol::ROTATION_PROJECTION)
    }

    pub fn from_row_major_with(v: &[f64; 12], projection_tol: f64) -> Result<Self, GeometryError> {
        let r = Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        Self::new_with(r, Vector3::new(v[3], v[7], v[11]), projection_tol)
    }
}

/// Polar projection of `m` onto SO(3).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

/// Geodesic angle of a rotation matrix, accurate near zero.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let s = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    )
    .norm()
        * 0.5;
    let c = (r.trace() - 1.0) * 0.5;
    s.atan2(c)
}

/// Geodesic distance between two rotations in radians.
pub fn rotation_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    rotation_angle(&(a.transpose() * b))
}

/// Angle between two vectors in radians, `[0, π]`.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A 3×3 essential matrix, meaningful up to scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialMatrix(Matrix3<f64>);

impl EssentialMatrix {
    /// Wraps a matrix without checking the essential constraints.
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    /// `E = [t]×R`.
    pub fn from_pose(pose: &RigidTransform) -> Result<Self, GeometryError> {
        if pose.translation.norm() == 0.0 {
            return Err(GeometryError::ZeroTranslation);
        }
        Ok(Self(skew(&pose.translation) * pose.rotation))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Scaled to unit Frobenius norm.
    pub fn unit(&self) -> Self {
        Self(self.0 / self.0.norm())
    }

    /// Algebraic epipolar residual `x̂′ᵀ E x̂` on normalized points.
    pub fn residual(&self, x: &NormalizedPoint, xp: &NormalizedPoint) -> f64 {
        xp.homogeneous().dot(&(self.0 * x.homogeneous()))
    }

    /// Pixel-space fundamental matrix `K⁻ᵀ E K⁻¹`.
    pub fn fundamental(&self, k: &CameraIntrinsics) -> Matrix3<f64> {
        let kinv = k.inverse_matrix();
        kinv.transpose() * self.0 * kinv
    }

    /// `min(‖Â − B̂‖, ‖Â + B̂‖)` at unit norm.
    pub fn distance_up_to_scale(&self, other: &EssentialMatrix) -> f64 {
        let a = self.unit().0;
        let b = other.unit().0;
        (a - b).norm().min((a + b).norm())
    }

    pub fn decompose(&self) -> Result<[RigidTransform; 4], GeometryError> {
        decompose_essential_with(self, tol::ESSENTIAL_RANK)
    }
}

pub fn essential_from_pose(pose: &RigidTransform) -> Result<EssentialMatrix, GeometryError> {
    EssentialMatrix::from_pose(pose)
}

/// The four `(R, ±t̂)` factorizations of `E`, in canonical order
/// `(R₁, t̂), (R₁, −t̂), (R₂, t̂), (R₂, −t̂)`.
pub fn decompose_essential(e: &EssentialMatrix) -> Result<[RigidTransform; 4], GeometryError> {
    decompose_essential_with(e, tol::ESSENTIAL_RANK)
}

pub fn decompose_essential_with(
    e: &EssentialMatrix,
    rank_tol: f64,
) -> Result<[RigidTransform; 4], GeometryError> {
    if !e.0.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::NonFinite("essential matrix"));
    }
    let svd = e.0.svd(true, true);
    let s = svd.singular_values;
    let (mut u, mut vt) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
    // nalgebra sorts singular values in decreasing order.
    if s[0] <= 0.0 || s[1] / s[0] < rank_tol {
        return Err(GeometryError::DegenerateEssential);
    }
    if u.determinant() < 0.0 {
        u = -u;
    }
    if vt.determinant() < 0.0 {
        vt = -vt;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * vt;
    let r2 = u * w.transpose() * vt;
    let t: Vector3<f64> = u.column(2).into_owned().normalize();
    let make = |r: Matrix3<f64>, t: Vector3<f64>| RigidTransform {
        rotation: r,
        translation: t,
    };
    Ok([make(r1, t), make(r1, -t), make(r2, t), make(r2, -t)])
}

/// Result of two-view triangulation; depths carry the cheirality sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulated {
    pub point: Point3D,
    pub depth_first: f64,
    pub depth_second: f64,
}

impl Triangulated {
    pub fn in_front(&self) -> bool {
        self.depth_first > 0.0 && self.depth_second > 0.0
    }

    /// Reprojection error (pixels) in both views; infinite when behind.
    pub fn reprojection_error(
        &self,
        x: &PixelPoint,
        xp: &PixelPoint,
        k: &CameraIntrinsics,
        pose: &RigidTransform,
    ) -> (f64, f64) {
        let e1 = k.project(&self.point).map_or(f64::INFINITY, |p| p.distance(x));
        let e2 = k
            .project(&pose.transform_point(&self.point))
            .map_or(f64::INFINITY, |p| p.distance(xp));
        (e1, e2)
    }
}

/// Homogeneous DLT triangulation.
pub fn triangulate(
    x: &PixelPoint,
    xp: &PixelPoint,
    k: &CameraIntrinsics,
    pose: &RigidTransform,
) -> Result<Triangulated, GeometryError> {
    triangulate_normalized(&k.normalize(x), &k.normalize(xp), pose, tol::PARALLAX_ANGLE)
}

pub fn triangulate_with(
    x: &PixelPoint,
    xp: &PixelPoint,
    k: &CameraIntrinsics,
    pose: &RigidTransform,
    parallax_tol: f64,
) -> Result<Triangulated, GeometryError> {
    triangulate_normalized(&k.normalize(x), &k.normalize(xp), pose, parallax_tol)
}

/// DLT on normalized coordinates: the smallest right singular vector of the
/// stacked 4×4 system built from `[I | 0]` and `[R | t]`.
pub fn triangulate_normalized(
    x: &NormalizedPoint,
    xp: &NormalizedPoint,
    pose: &RigidTransform,
    parallax_tol: f64,
) -> Result<Triangulated, GeometryError> {
    if pose.translation.norm() == 0.0 {
        return Err(GeometryError::ZeroTranslation);
    }
    let ray1 = x.homogeneous();
    let ray2 = pose.rotation.transpose() * xp.homogeneous();
    if angle_between(&ray1, &ray2) < parallax_tol {
        return Err(GeometryError::NoParallax);
    }

    let r = &pose.rotation;
    let t = &pose.translation;
    let p2 = |i: usize| Vector4::new(r[(i, 0)], r[(i, 1)], r[(i, 2)], t[i]);
    let rows = [
        Vector4::new(-1.0, 0.0, x.x, 0.0),
        Vector4::new(0.0, -1.0, x.y, 0.0),
        p2(2) * xp.x - p2(0),
        p2(2) * xp.y - p2(1),
    ];
    let mut a = Matrix4::zeros();
    for (i, row) in rows.iter().enumerate() {
        let n = row.norm();
        let row = if n > 0.0 { row / n } else { *row };
        a.set_row(i, &row.transpose());
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let h = vt.row(imin).transpose();
    let w = h[3];
    let point = Vector3::new(h[0], h[1], h[2]) / w;
    let second = pose.transform_point(&point);
    Ok(Triangulated {
        point,
        depth_first: point.z,
        depth_second: second.z,
    })
}

/// Precomputed `F = K⁻ᵀEK⁻¹` for repeated Sampson evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EpipolarScorer {
    f: Matrix3<f64>,
}

impl EpipolarScorer {
    pub fn new(e: &EssentialMatrix, k: &CameraIntrinsics) -> Self {
        Self {
            f: e.fundamental(k),
        }
    }

    pub fn fundamental(&self) -> &Matrix3<f64> {
        &self.f
    }

    /// Sampson distance in squared pixels.
    pub fn sampson(&self, x: &PixelPoint, xp: &PixelPoint) -> f64 {
        let (x1, x2) = (x.homogeneous(), xp.homogeneous());
        let fx = self.f * x1;
        let ftx = self.f.transpose() * x2;
        let num = x2.dot(&fx);
        let den = fx.x * fx.x + fx.y * fx.y + ftx.x * ftx.x + ftx.y * ftx.y;
        if den <= 0.0 || !den.is_finite() {
            return f64::INFINITY;
        }
        num * num / den
    }

    /// Epipolar line of `x` in the second image, `(a, b, c)` with `a² + b² = 1`.
    pub fn epipolar_line(&self, x: &PixelPoint) -> Option<Vector3<f64>> {
        let l = self.f * x.homogeneous();
        let n = Vector2::new(l.x, l.y).norm();
        (n > 0.0).then(|| l / n)
    }
}

/// First-order geometric error of `x ↔ x′` under `E`, in squared pixels.
pub fn sampson_distance(
    x: &PixelPoint,
    xp: &PixelPoint,
    e: &EssentialMatrix,
    k: &CameraIntrinsics,
) -> f64 {
    EpipolarScorer::new(e, k).sampson(x, xp)
}

/// Distance (pixels) from `p` to a line `(a, b, c)`.
pub fn point_line_distance(p: &PixelPoint, line: &Vector3<f64>) -> f64 {
    line.dot(&p.homogeneous()).abs() / line.x.hypot(line.y)
}

/// Flow induced by camera motion over a depth map:
/// `u = π(K(R·K⁻¹x·d + t)) − x`.
pub fn rigid_flow(depth: &DepthMap, pose: &RigidTransform, k: &CameraIntrinsics) -> FlowField {
    let (w, h) = (depth.width(), depth.height());
    let mut flow = FlowField::new_invalid(w, h);
    for row in 0..h {
        for col in 0..w {
            let Some(d) = depth.get(col, row) else {
                continue;
            };
            let x = PixelPoint::new(col as f64, row as f64);
            let p2 = pose.transform_point(&k.backproject(&x, d));
            if let Some(xp) = k.project(&p2) {
                flow.set(col, row, xp.x - x.x, xp.y - x.y);
            }
        }
    }
    flow
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 480.0, 320.0, 240.0).unwrap()
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> RigidTransform {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let t = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        RigidTransform::from_axis_angle(axis, rng.random_range(0.0..0.5), t)
    }

    #[test]
    fn intrinsics_inverse_is_exact_enough() {
        let k = k();
        let err = (k.inverse_matrix() * k.matrix() - Matrix3::identity()).norm();
        assert!(err < 1e-12);
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(CameraIntrinsics::new(1.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pixel_normalized_round_trip() {
        let k = k();
        let p = PixelPoint::new(12.25, 400.5);
        let q = k.denormalize(&k.normalize(&p));
        assert!(p.distance(&q) < 1e-9);
    }

    #[test]
    fn rotation_drift_is_projected_or_rejected() {
        let mut r = *Rotation3::from_euler_angles(0.1, 0.2, 0.3).matrix();
        r[(0, 0)] += 1e-8;
        let pose = RigidTransform::new(r, Vector3::x()).unwrap();
        let rr = pose.rotation();
        assert!((rr.transpose() * rr - Matrix3::identity()).norm() < 1e-12);
        r[(0, 0)] += 1e-3;
        assert!(matches!(
            RigidTransform::new(r, Vector3::x()),
            Err(GeometryError::InvalidRotation { .. })
        ));
        let mirror = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidTransform::new(mirror, Vector3::x()).is_err());
    }

    #[test]
    fn essential_of_x_translation() {
        let e = essential_from_pose(&RigidTransform::from_axis_angle(
            Vector3::x(),
            0.0,
            Vector3::x(),
        ))
        .unwrap();
        let expected = Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_eq!(*e.matrix(), expected);
    }

    #[test]
    fn essential_of_z_translation() {
        let pose = RigidTransform::identity().with_translation(Vector3::z());
        let e = essential_from_pose(&pose).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(*e.matrix(), expected);
    }

    #[test]
    fn zero_translation_has_no_essential_matrix() {
        assert_eq!(
            essential_from_pose(&RigidTransform::identity()),
            Err(GeometryError::ZeroTranslation)
        );
    }

    #[test]
    fn essential_scales_linearly_with_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pose = random_pose(&mut rng);
            let alpha = 2.0f64;
            let e1 = essential_from_pose(&pose).unwrap();
            let e2 = essential_from_pose(&pose.with_translation(pose.translation() * alpha)).unwrap();
            assert_eq!(*e2.matrix(), *e1.matrix() * alpha);
        }
    }

    #[test]
    fn essential_has_equal_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let e = essential_from_pose(&random_pose(&mut rng)).unwrap();
            let s = e.matrix().singular_values();
            assert_relative_eq!(s[0], s[1], max_relative = 1e-9);
            assert!(s[2] < 1e-12 * s[0]);
        }
    }

    #[test]
    fn decomposition_contains_identity_rotation_candidate() {
        let pose = RigidTransform::identity().with_translation(Vector3::x());
        let cands = decompose_essential(&essential_from_pose(&pose).unwrap()).unwrap();
        assert_eq!(cands.len(), 4);
        assert!(cands.iter().any(|c| {
            (c.rotation() - Matrix3::identity()).norm() < 1e-9
                && (c.translation() - Vector3::x()).norm() < 1e-9
        }));
        for c in &cands {
            assert_relative_eq!(c.translation().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn decomposition_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pose = random_pose(&mut rng);
        let e = essential_from_pose(&pose).unwrap();
        let a = decompose_essential(&e).unwrap();
        let b = decompose_essential(&EssentialMatrix::from_matrix(e.matrix() * 5.0)).unwrap();
        for ca in &a {
            assert!(b.iter().any(|cb| (ca.rotation() - cb.rotation()).norm() < 1e-12
                && (ca.translation() - cb.translation()).norm() < 1e-12));
        }
    }

    #[test]
    fn rank_one_matrix_is_degenerate() {
        let m = Vector3::new(1.0, 2.0, 3.0) * Vector3::new(0.0, 1.0, 1.0).transpose();
        assert_eq!(
            decompose_essential(&EssentialMatrix::from_matrix(m)).unwrap_err(),
            GeometryError::DegenerateEssential
        );
    }

    #[test]
    fn triangulates_principal_point_on_axis() {
        let k = k();
        // Forward-project (0, 0, 5) with a translation orthogonal to the ray.
        let pose = RigidTransform::identity().with_translation(Vector3::new(0.7, 0.0, 0.0));
        let x = k.project(&Vector3::new(0.0, 0.0, 5.0)).unwrap();
        let xp = k.project(&pose.transform_point(&Vector3::new(0.0, 0.0, 5.0))).unwrap();
        assert_eq!(x, PixelPoint::new(320.0, 240.0));
        let tri = triangulate(&x, &xp, &k, &pose).unwrap();
        assert!((tri.point - Vector3::new(0.0, 0.0, 5.0)).norm() < 1e-9);
        assert!(tri.in_front());
    }

    #[test]
    fn triangulation_inverts_forward_projection() {
        let k = k();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let pose = random_pose(&mut rng);
            let x = PixelPoint::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
            let depth = rng.random_range(1.0..20.0);
            let p = k.backproject(&x, depth);
            let Some(xp) = k.project(&pose.transform_point(&p)) else {
                continue;
            };
            let Ok(tri) = triangulate(&x, &xp, &k, &pose) else {
                continue;
            };
            assert!((tri.depth_first / depth - 1.0).abs() < 1e-6, "{}", tri.depth_first / depth);
            let (e1, e2) = tri.reprojection_error(&x, &xp, &k, &pose);
            assert!(e1 < 1e-6 && e2 < 1e-6);

            // Unit-norm translation shrinks depth by ‖t‖.
            let (unit, alpha) = pose.normalized().unwrap();
            let tri_unit = triangulate(&x, &xp, &k, &unit).unwrap();
            assert!((tri_unit.depth_first - depth / alpha).abs() < 1e-6 * depth / alpha);
        }
    }

    #[test]
    fn parallel_rays_have_no_parallax() {
        let k = k();
        let pose = RigidTransform::identity().with_translation(Vector3::x());
        let x = PixelPoint::new(100.0, 100.0);
        assert_eq!(triangulate(&x, &x, &k, &pose), Err(GeometryError::NoParallax));
    }

    #[test]
    fn point_behind_camera_is_flagged_not_rejected() {
        let k = k();
        let pose = RigidTransform::identity().with_translation(Vector3::x());
        // Correct point at depth 4 seen with the mirrored translation.
        let p = Vector3::new(0.3, -0.2, 4.0);
        let x = k.project(&p).unwrap();
        let xp = k.project(&pose.transform_point(&p)).unwrap();
        let flipped = pose.with_translation(-Vector3::x());
        let tri = triangulate(&x, &xp, &k, &flipped).unwrap();
        assert!(!tri.in_front());
    }

    #[test]
    fn sampson_zero_on_exact_correspondence() {
        let k = k();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pose = random_pose(&mut rng);
        let e = essential_from_pose(&pose).unwrap();
        let p = Vector3::new(0.5, 0.2, 6.0);
        let x = k.project(&p).unwrap();
        let xp = k.project(&pose.transform_point(&p)).unwrap();
        assert!(sampson_distance(&x, &xp, &e, &k) < 1e-12);
        let scaled = EssentialMatrix::from_matrix(e.matrix() * 1e3);
        let off = xp.offset(0.7, -0.3);
        assert_relative_eq!(
            sampson_distance(&x, &off, &e, &k),
            sampson_distance(&x, &off, &scaled, &k),
            max_relative = 1e-12
        );
    }

    #[test]
    fn sampson_matches_point_line_distances() {
        // Orthogonal 1 px offset: d₂ = 1 exactly, and the Sampson value is the
        // harmonic combination 1/(1/d₁² + 1/d₂²) of the two exact
        // point-to-epipolar-line distances.
        let k = k();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let pose = random_pose(&mut rng);
            let e = essential_from_pose(&pose).unwrap();
            let scorer = EpipolarScorer::new(&e, &k);
            let p = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 6.0);
            let (Some(x), Some(xp)) = (k.project(&p), k.project(&pose.transform_point(&p))) else {
                continue;
            };
            let line2 = scorer.epipolar_line(&x).unwrap();
            let moved = xp.offset(line2.x, line2.y);
            let d2 = point_line_distance(&moved, &line2);
            assert_relative_eq!(d2, 1.0, epsilon = 1e-9);
            let line1 = scorer.fundamental().transpose() * moved.homogeneous();
            let d1 = point_line_distance(&x, &line1);
            let expected = 1.0 / (1.0 / (d1 * d1) + 1.0 / (d2 * d2));
            let s = scorer.sampson(&x, &moved);
            assert!((s - expected).abs() < 0.1 * expected, "{s} vs {expected}");
            assert!(s <= 1.0 + 1e-9);

            let along = xp.offset(-line2.y * 3.0, line2.x * 3.0);
            assert!(scorer.sampson(&x, &along) < 1e-6 * s);
        }
    }

    #[test]
    fn identity_pose_gives_zero_flow() {
        let depth = DepthMap::filled(8, 6, 3.0);
        let flow = rigid_flow(&depth, &RigidTransform::identity(), &k());
        for row in 0..6 {
            for col in 0..8 {
                let [u, v] = flow.get(col, row).unwrap();
                assert!(u.abs() < 1e-12 && v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lateral_translation_gives_uniform_flow() {
        let k = k();
        let (beta, d) = (0.4, 8.0);
        let depth = DepthMap::filled(10, 7, d);
        let pose = RigidTransform::identity().with_translation(Vector3::new(beta, 0.0, 0.0));
        let flow = rigid_flow(&depth, &pose, &k);
        // Second camera coordinates are X + t, so x′ moves by +fx·β/d.
        for row in 0..7 {
            for col in 0..10 {
                let [u, v] = flow.get(col, row).unwrap();
                assert_relative_eq!(u, k.fx() * beta / d, epsilon = 1e-9);
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rigid_flow_satisfies_epipolar_constraint() {
        let k = k();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pose = random_pose(&mut rng);
        let mut depth = DepthMap::new_invalid(32, 24);
        for row in 0..24 {
            for col in 0..32 {
                depth.set(col, row, rng.random_range(2.0..30.0));
            }
        }
        let flow = rigid_flow(&depth, &pose, &k);
        let e = essential_from_pose(&pose.normalized().unwrap().0).unwrap();
        let mut checked = 0;
        for row in 0..24 {
            for col in 0..32 {
                if let Some([u, v]) = flow.get(col, row) {
                    let x = PixelPoint::new(col as f64, row as f64);
                    let r = e.residual(&k.normalize(&x), &k.normalize(&x.offset(u, v)));
                    assert!(r.abs() < 1e-9);
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }
}
