//! Closed-form eigen-decomposition of real symmetric 3x3 matrices.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic
//! cubic. The eigenvector of the best-separated eigenvalue is taken from the
//! largest cross product of rows of `M - λI`; the remaining pair is resolved
//! as a 2x2 problem in the orthogonal complement. When the normalized cubic
//! discriminant is within `DISCRIMINANT_FALLBACK` of zero the routine falls
//! back to cyclic Jacobi rotations.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

/// Normalized discriminant `1 - r²` below which Jacobi rotations are used.
pub const DISCRIMINANT_FALLBACK: f64 = 1e-12;

/// Eigenvalues in descending order with matching unit eigenvectors.
pub(crate) fn symmetric_eigen(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let shift = m.trace() / 3.0;
    let a = m - Matrix3::identity() * shift;
    let norm2 = a.norm_squared();
    if norm2 == 0.0 {
        return (
            [shift; 3],
            [Vector3::x(), Vector3::y(), Vector3::z()],
        );
    }
    let p = (norm2 / 6.0).sqrt();
    let r = ((a / p).determinant() / 2.0).clamp(-1.0, 1.0);
    let (vals, vecs) = if 1.0 - r * r < DISCRIMINANT_FALLBACK {
        jacobi(&a)
    } else {
        let phi = r.acos() / 3.0;
        let l1 = 2.0 * p * phi.cos();
        let l3 = 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        let l2 = -l1 - l3;
        closed_form_vectors(&a, [l1, l2, l3])
    };
    let mut vals = vals;
    for v in vals.iter_mut() {
        *v += shift;
    }
    (vals, vecs)
}

fn closed_form_vectors(a: &Matrix3<f64>, l: [f64; 3]) -> ([f64; 3], [Vector3<f64>; 3]) {
    let (n1, n2, n3);
    if l[0] - l[1] >= l[1] - l[2] {
        n1 = kernel_vector(&(a - Matrix3::identity() * l[0]));
        let (u, v) = complement_basis(&n1);
        n2 = leading_in_plane(a, &u, &v);
        n3 = n1.cross(&n2).normalize();
    } else {
        n3 = kernel_vector(&(a - Matrix3::identity() * l[2]));
        let (u, v) = complement_basis(&n3);
        n1 = leading_in_plane(a, &u, &v);
        n2 = n3.cross(&n1).normalize();
    }
    let mut vecs = [n1, n2, n3];
    let mut vals = [0.0; 3];
    for (val, n) in vals.iter_mut().zip(vecs.iter()) {
        *val = n.dot(&(a * n));
    }
    sort_desc(&mut vals, &mut vecs);
    (vals, vecs)
}

/// Unit vector spanning the (numerical) kernel of a rank-2 symmetric matrix.
fn kernel_vector(b: &Matrix3<f64>) -> Vector3<f64> {
    let r0 = b.row(0).transpose();
    let r1 = b.row(1).transpose();
    let r2 = b.row(2).transpose();
    let c = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let mut best = c[0];
    for x in &c[1..] {
        if x.norm_squared() > best.norm_squared() {
            best = *x;
        }
    }
    best.normalize()
}

fn complement_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() > n.y.abs() {
        Vector3::y()
    } else {
        Vector3::x()
    };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u).normalize();
    (u, v)
}

/// Eigenvector of the larger eigenvalue of `a` restricted to span{u, v}.
fn leading_in_plane(a: &Matrix3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    let au = a * u;
    let av = a * v;
    let (p, q, r) = (u.dot(&au), u.dot(&av), v.dot(&av));
    let half = 0.5 * (p - r);
    let mu = 0.5 * (p + r) + (half * half + q * q).sqrt();
    let row0 = (p - mu, q);
    let row1 = (q, r - mu);
    let n0 = row0.0 * row0.0 + row0.1 * row0.1;
    let n1 = row1.0 * row1.0 + row1.1 * row1.1;
    let (x, y) = if n0.max(n1) == 0.0 {
        (1.0, 0.0)
    } else if n0 >= n1 {
        (-row0.1, row0.0)
    } else {
        (-row1.1, row1.0)
    };
    (u * x + v * y).normalize()
}

/// Cyclic Jacobi rotations on a symmetric matrix.
pub(crate) fn jacobi(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();
    for _ in 0..64 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off <= 1e-300 || off <= (f64::EPSILON * a.norm()).powi(2) * 1e-4 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::<f64>::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= rot;
        }
    }
    let mut vals = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
    let mut vecs = [
        v.column(0).into_owned(),
        v.column(1).into_owned(),
        v.column(2).into_owned(),
    ];
    for n in vecs.iter_mut() {
        *n = n.normalize();
    }
    sort_desc(&mut vals, &mut vecs);
    (vals, vecs)
}

fn sort_desc(vals: &mut [f64; 3], vecs: &mut [Vector3<f64>; 3]) {
    for i in 0..3 {
        for j in 0..2 - i {
            if vals[j] < vals[j + 1] {
                vals.swap(j, j + 1);
                vecs.swap(j, j + 1);
            }
        }
    }
}

/// Flips `n` so that its first component with magnitude above 1e-12 is positive.
pub(crate) fn canonical_sign(n: Vector3<f64>) -> Vector3<f64> {
    for k in 0..3 {
        if n[k].abs() > 1e-12 {
            return if n[k] < 0.0 { -n } else { n };
        }
    }
    n
}
