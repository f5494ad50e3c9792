//! Minimal five-point essential matrix solver.
//!
//! The five epipolar equations leave a four-dimensional nullspace
//! `E = x·X + y·Y + z·Z + W`. Substituting it into `det(E) = 0` and the nine
//! trace constraints `2EEᵀE − tr(EEᵀ)E = 0` gives ten cubics in `(x, y, z)`.
//! Gauss-Jordan elimination on the 10×20 coefficient matrix followed by the
//! row differences `⟨e⟩−z⟨f⟩`, `⟨g⟩−z⟨h⟩`, `⟨i⟩−z⟨j⟩` yields a 3×3 matrix of
//! polynomials in `z` whose determinant is a degree-10 polynomial. Its real
//! roots come from the eigenvalues of the companion matrix.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};

use super::PoseError;
use crate::geometry::{EssentialMatrix, NormalizedPoint};

/// Monomial exponents `(x, y, z)` in elimination order.
const MONOMIALS: [(u8, u8, u8); 20] = [
    (3, 0, 0),
    (0, 3, 0),
    (2, 1, 0),
    (1, 2, 0),
    (2, 0, 1),
    (2, 0, 0),
    (0, 2, 1),
    (0, 2, 0),
    (1, 1, 1),
    (1, 1, 0),
    (1, 0, 2),
    (1, 0, 1),
    (1, 0, 0),
    (0, 1, 2),
    (0, 1, 1),
    (0, 1, 0),
    (0, 0, 3),
    (0, 0, 2),
    (0, 0, 1),
    (0, 0, 0),
];

const fn build_index() -> [[[u8; 4]; 4]; 4] {
    let mut table = [[[u8::MAX; 4]; 4]; 4];
    let mut i = 0;
    while i < 20 {
        let (a, b, c) = MONOMIALS[i];
        table[a as usize][b as usize][c as usize] = i as u8;
        i += 1;
    }
    table
}

const MONOMIAL_INDEX: [[[u8; 4]; 4]; 4] = build_index();

/// Polynomial in `x, y, z` of total degree at most three.
#[derive(Clone, Copy)]
struct Cubic([f64; 20]);

impl Cubic {
    fn zero() -> Self {
        Self([0.0; 20])
    }

    fn linear(x: f64, y: f64, z: f64, w: f64) -> Self {
        let mut p = Self::zero();
        p.0[12] = x;
        p.0[15] = y;
        p.0[18] = z;
        p.0[19] = w;
        p
    }

    fn mul(&self, other: &Cubic) -> Cubic {
        let mut out = Cubic::zero();
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let (ea, eb, ec) = MONOMIALS[i];
            for (j, &b) in other.0.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let (fa, fb, fc) = MONOMIALS[j];
                let idx = MONOMIAL_INDEX[(ea + fa) as usize][(eb + fb) as usize]
                    [(ec + fc) as usize];
                debug_assert!(idx != u8::MAX, "degree overflow");
                out.0[idx as usize] += a * b;
            }
        }
        out
    }

    fn add(&self, other: &Cubic) -> Cubic {
        let mut out = *self;
        for (o, b) in out.0.iter_mut().zip(other.0.iter()) {
            *o += b;
        }
        out
    }

    fn scale(&self, s: f64) -> Cubic {
        let mut out = *self;
        out.0.iter_mut().for_each(|c| *c *= s);
        out
    }
}

/// Univariate polynomial helpers; coefficients are in ascending powers.
mod univariate {
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] += ai * bj;
            }
        }
        out
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn eval(p: &[f64], z: f64) -> f64 {
        p.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn derivative(p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect()
    }
}

/// Real roots of a polynomial (ascending coefficients) via companion-matrix
/// eigenvalues, each polished by a few Newton steps.
pub(crate) fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let mut degree = coeffs.len() - 1;
    while degree > 0 && coeffs[degree].abs() <= 1e-14 * scale {
        degree -= 1;
    }
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let poly = &coeffs[..=degree];
    let dpoly = univariate::derivative(poly);
    let mut roots = Vec::new();
    for ev in companion.complex_eigenvalues().iter() {
        if !(ev.re.is_finite() && ev.im.is_finite()) {
            continue;
        }
        if ev.im.abs() > 1e-6 * (1.0 + ev.re.abs()) {
            continue;
        }
        let mut z = ev.re;
        for _ in 0..4 {
            let d = univariate::eval(&dpoly, z);
            if d == 0.0 {
                break;
            }
            let step = univariate::eval(poly, z) / d;
            if !step.is_finite() {
                break;
            }
            z -= step;
            if step.abs() <= 1e-15 * (1.0 + z.abs()) {
                break;
            }
        }
        if z.is_finite() {
            roots.push(z);
        }
    }
    roots
}

fn monomial_values(v: &Vector3<f64>) -> ([f64; 20], [[f64; 3]; 20]) {
    let pow = |b: f64, e: u8| if e == 0 { 1.0 } else { b.powi(e as i32) };
    let mut val = [0.0; 20];
    let mut grad = [[0.0; 3]; 20];
    for (i, &(a, b, c)) in MONOMIALS.iter().enumerate() {
        let (px, py, pz) = (pow(v.x, a), pow(v.y, b), pow(v.z, c));
        val[i] = px * py * pz;
        let d = |base: f64, e: u8| if e == 0 { 0.0 } else { e as f64 * pow(base, e - 1) };
        grad[i] = [d(v.x, a) * py * pz, px * d(v.y, b) * pz, px * py * d(v.z, c)];
    }
    (val, grad)
}

/// Gauss-Newton on all ten cubic constraints, starting from a root of the
/// eliminated system. Only steps that lower the residual are kept.
fn polish(m: &SMatrix<f64, 10, 20>, start: Vector3<f64>) -> Vector3<f64> {
    let eval = |v: &Vector3<f64>| {
        let (val, grad) = monomial_values(v);
        let mut f = SVector::<f64, 10>::zeros();
        let mut j = SMatrix::<f64, 10, 3>::zeros();
        for r in 0..10 {
            for c in 0..20 {
                f[r] += m[(r, c)] * val[c];
                for k in 0..3 {
                    j[(r, k)] += m[(r, c)] * grad[c][k];
                }
            }
        }
        (f, j)
    };
    let mut v = start;
    let (mut f, mut j) = eval(&v);
    for _ in 0..5 {
        let Some(step) = j.svd(true, true).solve(&f, 1e-14).ok() else {
            break;
        };
        let next = v - step;
        let (nf, nj) = eval(&next);
        if !(nf.norm() < f.norm()) {
            break;
        }
        v = next;
        f = nf;
        j = nj;
    }
    v
}

/// Orthonormal basis of the nullspace of the 5×9 epipolar design matrix.
fn nullspace_basis(
    first: &[NormalizedPoint; 5],
    second: &[NormalizedPoint; 5],
) -> Result<[Matrix3<f64>; 4], PoseError> {
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for (r, (p, q)) in first.iter().zip(second.iter()).enumerate() {
        let x = p.homogeneous();
        let xp = q.homogeneous();
        let mut row = SVector::<f64, 9>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                row[3 * i + j] = xp[i] * x[j];
            }
        }
        let n = row.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(PoseError::DegenerateSample);
        }
        a.set_row(r, &(row / n).transpose());
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or(PoseError::DegenerateSample)?;
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = &svd.singular_values;
    if s[order[4]] < 1e-10 * s[order[0]] {
        return Err(PoseError::DegenerateSample);
    }
    let basis = |k: usize| {
        let row = vt.row(order[5 + k]);
        Matrix3::new(
            row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7], row[8],
        )
    };
    Ok([basis(0), basis(1), basis(2), basis(3)])
}

/// The ten cubic constraints as a 10×20 coefficient matrix.
fn constraint_matrix(basis: &[Matrix3<f64>; 4]) -> SMatrix<f64, 10, 20> {
    let [bx, by, bz, bw] = basis;
    let e: [[Cubic; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| Cubic::linear(bx[(i, j)], by[(i, j)], bz[(i, j)], bw[(i, j)]))
    });

    let mut eet = [[Cubic::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = Cubic::zero();
            for k in 0..3 {
                acc = acc.add(&e[i][k].mul(&e[j][k]));
            }
            eet[i][j] = acc;
        }
    }
    let trace = eet[0][0].add(&eet[1][1]).add(&eet[2][2]);

    let mut rows = Vec::with_capacity(10);
    let minor = |a: usize, b: usize, c: usize, d: usize| {
        e[a][b].mul(&e[c][d]).add(&e[a][d].mul(&e[c][b]).scale(-1.0))
    };
    let det = e[0][0]
        .mul(&minor(1, 1, 2, 2))
        .add(&e[0][1].mul(&minor(1, 0, 2, 2)).scale(-1.0))
        .add(&e[0][2].mul(&minor(1, 0, 2, 1)));
    rows.push(det);
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = Cubic::zero();
            for k in 0..3 {
                acc = acc.add(&eet[i][k].mul(&e[k][j]));
            }
            rows.push(acc.scale(2.0).add(&trace.mul(&e[i][j]).scale(-1.0)));
        }
    }

    let mut m = SMatrix::<f64, 10, 20>::zeros();
    for (r, poly) in rows.iter().enumerate() {
        for c in 0..20 {
            m[(r, c)] = poly.0[c];
        }
    }
    m
}

/// Up to ten essential matrices consistent with five calibrated
/// correspondences, each scaled to unit Frobenius norm.
pub fn five_point(
    first: &[NormalizedPoint; 5],
    second: &[NormalizedPoint; 5],
) -> Result<Vec<EssentialMatrix>, PoseError> {
    for i in 0..5 {
        for j in (i + 1)..5 {
            if first[i] == first[j] || second[i] == second[j] {
                return Err(PoseError::DegenerateSample);
            }
        }
    }
    let basis = nullspace_basis(first, second)?;
    let m = constraint_matrix(&basis);

    let left: SMatrix<f64, 10, 10> = m.fixed_view::<10, 10>(0, 0).into_owned();
    let right: SMatrix<f64, 10, 10> = m.fixed_view::<10, 10>(0, 10).into_owned();
    let lu = left.full_piv_lu();
    let reduced = lu.solve(&right).ok_or(PoseError::DegenerateSample)?;
    if !reduced.iter().all(|v| v.is_finite()) {
        return Err(PoseError::DegenerateSample);
    }

    // Polynomials in z for the x, y and constant parts of ⟨p⟩ − z⟨q⟩.
    let row_pair = |p: usize, q: usize| -> [Vec<f64>; 3] {
        let rp = reduced.row(p);
        let rq = reduced.row(q);
        [
            vec![rp[2], rp[1] - rq[2], rp[0] - rq[1], -rq[0]],
            vec![rp[5], rp[4] - rq[5], rp[3] - rq[4], -rq[3]],
            vec![rp[9], rp[8] - rq[9], rp[7] - rq[8], rp[6] - rq[7], -rq[6]],
        ]
    };
    let b = [row_pair(4, 5), row_pair(6, 7), row_pair(8, 9)];

    let cofactor = |r1: usize, r2: usize, c1: usize, c2: usize| {
        univariate::sub(
            &univariate::mul(&b[r1][c1], &b[r2][c2]),
            &univariate::mul(&b[r1][c2], &b[r2][c1]),
        )
    };
    let det = univariate::add(
        &univariate::sub(
            &univariate::mul(&b[0][0], &cofactor(1, 2, 1, 2)),
            &univariate::mul(&b[0][1], &cofactor(1, 2, 0, 2)),
        ),
        &univariate::mul(&b[0][2], &cofactor(1, 2, 0, 1)),
    );

    let mut out: Vec<EssentialMatrix> = Vec::new();
    for z in real_roots(&det) {
        let bz = Matrix3::from_fn(|r, c| univariate::eval(&b[r][c], z));
        let rows = [
            Vector3::new(bz[(0, 0)], bz[(0, 1)], bz[(0, 2)]),
            Vector3::new(bz[(1, 0)], bz[(1, 1)], bz[(1, 2)]),
            Vector3::new(bz[(2, 0)], bz[(2, 1)], bz[(2, 2)]),
        ];
        let null = [
            rows[0].cross(&rows[1]),
            rows[0].cross(&rows[2]),
            rows[1].cross(&rows[2]),
        ]
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("three candidates");
        if null.z.abs() <= 1e-12 * null.norm() || !null.iter().all(|v| v.is_finite()) {
            continue;
        }
        let v = polish(&m, Vector3::new(null.x / null.z, null.y / null.z, z));
        let e = basis[0] * v.x + basis[1] * v.y + basis[2] * v.z + basis[3];
        let n = e.norm();
        if n == 0.0 || !n.is_finite() {
            continue;
        }
        let e = EssentialMatrix::from_matrix(e / n);
        // Repeated roots can yield the same matrix twice.
        if out.iter().any(|o| o.distance_up_to_scale(&e) < 1e-12) {
            continue;
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(PoseError::DegenerateSample);
    }
    out.truncate(10);
    Ok(out)
}

/// Maximum violation of the essential-matrix constraints for a unit-norm `E`
/// against a five-point sample: `(epipolar, det, trace)`.
pub fn constraint_residuals(
    e: &EssentialMatrix,
    first: &[NormalizedPoint],
    second: &[NormalizedPoint],
) -> (f64, f64, f64) {
    let e = e.unit();
    let m = e.matrix();
    let epi = first
        .iter()
        .zip(second)
        .map(|(x, xp)| e.residual(x, xp).abs())
        .fold(0.0, f64::max);
    let det = m.determinant().abs();
    let eet = m * m.transpose();
    let trace = (2.0 * eet * m - eet.trace() * m).norm();
    (epi, det, trace)
}
