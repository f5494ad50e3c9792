use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::geometry::{skew, CameraIntrinsics, Correspondence, RigidTransform};

type Params = SVector<f64, 5>;

/// Signed Sampson residuals (pixels) of `pose` over `points`. With a
/// Cauchy scale `c` each residual `r` becomes `sign(r)·√(c²·ln(1 + r²/c²))`,
/// so the squared sum is the robust cost.
fn residuals(
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
    k_inv: &Matrix3<f64>,
    points: &[Correspondence],
    cauchy: Option<f64>,
    out: &mut Vec<f64>,
) {
    let f = k_inv.transpose() * skew(translation) * rotation * k_inv;
    out.clear();
    out.extend(points.iter().map(|c| {
        let (x1, x2) = (c.first.homogeneous(), c.second.homogeneous());
        let fx = f * x1;
        let ftx = f.transpose() * x2;
        let den = fx.x * fx.x + fx.y * fx.y + ftx.x * ftx.x + ftx.y * ftx.y;
        let r = if den > 0.0 { x2.dot(&fx) / den.sqrt() } else { 0.0 };
        match cauchy {
            Some(c) => r.signum() * (c * c * (r * r / (c * c)).ln_1p()).sqrt(),
            None => r,
        }
    }));
}

/// Two unit vectors spanning the plane orthogonal to `t`.
fn tangent_basis(t: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let a = t.cross(&seed).normalize();
    let b = t.cross(&a).normalize();
    (a, b)
}

fn apply(
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
    p: &Params,
) -> (Matrix3<f64>, Vector3<f64>) {
    let (a, b) = tangent_basis(translation);
    let w = Vector3::new(p[0], p[1], p[2]);
    let r = *RigidTransform::from_rotation_vector(w, Vector3::zeros()).rotation() * rotation;
    let t = (translation + a * p[3] + b * p[4]).normalize();
    (r, t)
}

/// Levenberg-Marquardt on the Sampson error of `points`, over rotation and
/// translation direction, optionally under a Cauchy loss with scale `cauchy`
/// (pixels). The returned pose has a unit translation; if the cost does not
/// drop, the normalized input comes back.
pub fn refine_pose(
    pose: &RigidTransform,
    points: &[Correspondence],
    k: &CameraIntrinsics,
    cauchy: Option<f64>,
    max_iterations: usize,
) -> RigidTransform {
    let Ok((unit, _)) = pose.normalized() else {
        return *pose;
    };
    if points.len() < 6 {
        return unit;
    }
    let k_inv = k.inverse_matrix();
    let mut r = *unit.rotation();
    let mut t = *unit.translation();
    let (mut res, mut probe) = (Vec::new(), Vec::new());
    residuals(&r, &t, &k_inv, points, cauchy, &mut res);
    let mut cost: f64 = res.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    const H: f64 = 1e-7;

    for _ in 0..max_iterations {
        let mut jtj = SMatrix::<f64, 5, 5>::zeros();
        let mut jtr = Params::zeros();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(5);
        for j in 0..5 {
            let mut p = Params::zeros();
            p[j] = H;
            let (rj, tj) = apply(&r, &t, &p);
            residuals(&rj, &tj, &k_inv, points, cauchy, &mut probe);
            cols.push(probe.iter().zip(&res).map(|(a, b)| (a - b) / H).collect());
        }
        for i in 0..5 {
            jtr[i] = cols[i].iter().zip(&res).map(|(a, b)| a * b).sum();
            for j in i..5 {
                let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                jtj[(i, j)] = v;
                jtj[(j, i)] = v;
            }
        }
        let mut improved = false;
        while lambda < 1e10 {
            let mut a = jtj;
            for i in 0..5 {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let (rn, tn) = apply(&r, &t, &step);
            residuals(&rn, &tn, &k_inv, points, cauchy, &mut probe);
            let new_cost: f64 = probe.iter().map(|v| v * v).sum();
            if new_cost < cost {
                let gain = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                r = rn;
                t = tn;
                std::mem::swap(&mut res, &mut probe);
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = gain > 1e-12;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    RigidTransform::new(r, t).unwrap_or(unit)
}
