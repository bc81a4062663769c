//! Algebra of traceless symmetric 3x3 tensors (Q-tensors), the vacuum
//! manifold of uniaxial states and the maps built on the spectral
//! decomposition: scalar order parameters `s`, `r`, the eigenvalue gap `phi`,
//! the nearest-point retraction onto the vacuum manifold and its Lipschitz
//! companion `tau`.
//!
//! Components are stored in a fixed orthonormal basis of the 5-dimensional
//! space of traceless symmetric matrices (Frobenius inner product):
//!
//! | k | basis element                       |
//! |---|-------------------------------------|
//! | 0 | `diag(-1, -1, 2) / √6`              |
//! | 1 | `diag(1, -1, 0) / √2`               |
//! | 2 | `(e1⊗e2 + e2⊗e1) / √2`              |
//! | 3 | `(e1⊗e3 + e3⊗e1) / √2`              |
//! | 4 | `(e2⊗e3 + e3⊗e2) / √2`              |
//!
//! Field files store components in this order.

mod eigen;

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use thiserror::Error;

pub use eigen::DISCRIMINANT_FALLBACK;

const INV_SQRT6: f64 = 0.408_248_290_463_863_f64;

/// Relative tolerance on `λ1 - λ2` below which a tensor counts as lying on
/// the cone of degenerate leading eigenvalue.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QTensorError {
    #[error("tensor norm {0:e} is below 1e-14")]
    ZeroTensor(f64),
    #[error("2λ1 + λ2 = {0:e} is too small for r to be defined")]
    DegenerateLeading(f64),
    #[error("leading eigenvalue is degenerate (phi = {0:e}); retraction undefined")]
    OnCone(f64),
    #[error("vector norm {0} differs from 1 by more than 1e-10")]
    NotUnit(f64),
}

/// A traceless symmetric 3x3 tensor stored by its 5 basis components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor(pub [f64; 5]);

impl QTensor {
    pub const ZERO: QTensor = QTensor([0.0; 5]);

    pub fn new(c: [f64; 5]) -> Self {
        QTensor(c)
    }

    pub fn components(&self) -> [f64; 5] {
        self.0
    }

    /// Projects an arbitrary 3x3 matrix onto the traceless symmetric part.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let s01 = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        let s02 = 0.5 * (m[(0, 2)] + m[(2, 0)]);
        let s12 = 0.5 * (m[(1, 2)] + m[(2, 1)]);
        QTensor([
            (2.0 * m[(2, 2)] - m[(0, 0)] - m[(1, 1)]) * INV_SQRT6,
            (m[(0, 0)] - m[(1, 1)]) * FRAC_1_SQRT_2,
            2.0 * s01 * FRAC_1_SQRT_2,
            2.0 * s02 * FRAC_1_SQRT_2,
            2.0 * s12 * FRAC_1_SQRT_2,
        ])
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [q0, q1, q2, q3, q4] = self.0;
        let d0 = -q0 * INV_SQRT6;
        let m00 = d0 + q1 * FRAC_1_SQRT_2;
        let m11 = d0 - q1 * FRAC_1_SQRT_2;
        let m22 = 2.0 * q0 * INV_SQRT6;
        let m01 = q2 * FRAC_1_SQRT_2;
        let m02 = q3 * FRAC_1_SQRT_2;
        let m12 = q4 * FRAC_1_SQRT_2;
        Matrix3::new(m00, m01, m02, m01, m11, m12, m02, m12, m22)
    }

    /// `s (n⊗n - Id/3)` for an arbitrary (not necessarily unit) vector `n`.
    pub fn uniaxial(s: f64, n: &Vector3<f64>) -> Self {
        QTensor::from_matrix(&(n * n.transpose() * s))
    }

    pub fn dot(&self, other: &QTensor) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `tr Q³`, which equals `3 det Q` for traceless matrices.
    pub fn trace_cube(&self) -> f64 {
        3.0 * self.to_matrix().determinant()
    }

    /// Traceless part of `Q²`, i.e. `Q² - |Q|² Id / 3`.
    pub fn square_traceless(&self) -> QTensor {
        let m = self.to_matrix();
        QTensor::from_matrix(&(m * m))
    }

    /// Conjugation `R Q Rᵀ` by an orthogonal matrix.
    pub fn rotate(&self, r: &Matrix3<f64>) -> QTensor {
        QTensor::from_matrix(&(r * self.to_matrix() * r.transpose()))
    }

    pub fn scale(&self, t: f64) -> QTensor {
        *self * t
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(mut self, rhs: QTensor) -> QTensor {
        self += rhs;
        self
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(mut self, rhs: QTensor) -> QTensor {
        self -= rhs;
        self
    }
}

impl SubAssign for QTensor {
    fn sub_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a -= b;
        }
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(mut self, t: f64) -> QTensor {
        for a in self.0.iter_mut() {
            *a *= t;
        }
        self
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        self * -1.0
    }
}

/// Ordered eigen-decomposition `λ1 ≥ λ2 ≥ λ3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub values: [f64; 3],
    pub vectors: [Vector3<f64>; 3],
    /// Set when `λ1 - λ2 ≤ DEGENERACY_TOL · max(1, |Q|)`.
    pub degenerate12: bool,
}

impl Spectrum {
    pub fn leading(&self) -> Vector3<f64> {
        self.vectors[0]
    }
}

/// Eigen-decomposition with eigenvectors normalized so that their first
/// nonzero component is positive.
pub fn eigen(q: &QTensor) -> Spectrum {
    let (values, vecs) = eigen::symmetric_eigen(&q.to_matrix());
    let vectors = [
        eigen::canonical_sign(vecs[0]),
        eigen::canonical_sign(vecs[1]),
        eigen::canonical_sign(vecs[2]),
    ];
    let degenerate12 = values[0] - values[1] <= DEGENERACY_TOL * q.norm().max(1.0);
    Spectrum {
        values,
        vectors,
        degenerate12,
    }
}

/// Scalar order parameters `(s, r)` of the representation
/// `Q = s (n⊗n - Id/3) + s r (m⊗m - Id/3)`.
pub fn s_r_of(q: &QTensor) -> Result<(f64, f64), QTensorError> {
    let norm = q.norm();
    if norm < 1e-14 {
        return Err(QTensorError::ZeroTensor(norm));
    }
    let [l1, l2, _] = eigen(q).values;
    let s = 2.0 * l1 + l2;
    if s <= DEGENERACY_TOL * norm {
        return Err(QTensorError::DegenerateLeading(s));
    }
    Ok((s, (l1 + 2.0 * l2) / s))
}

/// Assembles `s (n⊗n - Id/3) + s r (m⊗m - Id/3)`.
pub fn from_representation(s: f64, r: f64, n: &Vector3<f64>, m: &Vector3<f64>) -> QTensor {
    QTensor::uniaxial(s, n) + QTensor::uniaxial(s * r, m)
}

/// Normalized eigenvalue gap `(λ1 - λ2) / s*`.
pub fn phi(q: &QTensor, s_star: f64) -> f64 {
    let [l1, l2, _] = eigen(q).values;
    ((l1 - l2) / s_star).max(0.0)
}

/// The covering map `n ↦ s* (n⊗n - Id/3)` from the unit sphere onto the
/// vacuum manifold.
pub fn lift(n: &Vector3<f64>, s_star: f64) -> Result<QTensor, QTensorError> {
    let len = n.norm();
    if (len - 1.0).abs() > 1e-10 {
        return Err(QTensorError::NotUnit(len));
    }
    Ok(QTensor::uniaxial(s_star, n))
}

/// Nearest point of the vacuum manifold: `s* (n1⊗n1 - Id/3)` with `n1` the
/// leading eigenvector.
pub fn retract(q: &QTensor, s_star: f64) -> Result<QTensor, QTensorError> {
    let sp = eigen(q);
    if sp.degenerate12 {
        return Err(QTensorError::OnCone((sp.values[0] - sp.values[1]) / s_star));
    }
    Ok(QTensor::uniaxial(s_star, &sp.leading()))
}

/// `s* φ(Q) ρ(Q)` off the cone, `0` on it. Globally Lipschitz.
pub fn tau(q: &QTensor, s_star: f64) -> QTensor {
    let sp = eigen(q);
    if sp.degenerate12 {
        return QTensor::ZERO;
    }
    let gap = sp.values[0] - sp.values[1];
    // s* · φ · s* (n⊗n - Id/3) with φ = gap / s*
    QTensor::uniaxial(s_star * gap, &sp.leading())
}

/// Director of the minimal non-trivial geodesic loop, `(cos θ/2, sin θ/2, 0)`.
pub fn geodesic_director(theta: f64) -> Vector3<f64> {
    Vector3::new((0.5 * theta).cos(), (0.5 * theta).sin(), 0.0)
}

/// The half-turn geodesic loop `θ ↦ ψ(n*(θ))`, closed on `[0, 2π]`.
pub fn geodesic_p0(theta: f64, s_star: f64) -> QTensor {
    QTensor::uniaxial(s_star, &geodesic_director(theta))
}

/// Derivative of `geodesic_p0` in closed form.
pub fn geodesic_p0_derivative(theta: f64, s_star: f64) -> QTensor {
    let n = geodesic_director(theta);
    let dn = Vector3::new(-0.5 * (0.5 * theta).sin(), 0.5 * (0.5 * theta).cos(), 0.0);
    QTensor::from_matrix(&((dn * n.transpose() + n * dn.transpose()) * s_star))
}

/// `π s*² / 2`.
pub fn kappa_star(s_star: f64) -> f64 {
    0.5 * PI * s_star * s_star
}

impl approx::AbsDiffEq for QTensor {
    type Epsilon = f64;
    fn default_epsilon() -> f64 {
        f64::EPSILON
    }
    fn abs_diff_eq(&self, other: &Self, epsilon: f64) -> bool {
        (*self - *other).max_abs() <= epsilon
    }
}

impl approx::RelativeEq for QTensor {
    fn default_max_relative() -> f64 {
        f64::EPSILON
    }
    fn relative_eq(&self, other: &Self, epsilon: f64, max_relative: f64) -> bool {
        let scale = self.max_abs().max(other.max_abs());
        let d = (*self - *other).max_abs();
        d <= epsilon || d <= max_relative * scale
    }
}
