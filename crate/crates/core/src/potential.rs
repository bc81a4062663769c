//! Quartic bulk potential
//! `f(Q) = k - (a/2) tr Q² - (b/3) tr Q³ + (c/4) (tr Q²)²`
//! with `k` fixed so that `inf f = 0`, its gradient on the traceless
//! symmetric space, and sampled checks of its non-degeneracy near the
//! vacuum manifold.

use crate::qtensor::{self, QTensor};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("coefficients must be positive (a = {a}, b = {b}, c = {c})")]
    NonPositive { a: f64, b: f64, c: f64 },
    #[error("at least 1000 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("property {predicate} violated at Q = {witness:?}: {detail}")]
    PropertyViolated {
        predicate: &'static str,
        witness: [f64; 5],
        detail: String,
    },
}

/// Material coefficients and the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Coefficients", into = "Coefficients")]
pub struct MaterialParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub s_star: f64,
    pub k: f64,
    pub kappa_star: f64,
    pub delta0: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Coefficients {
    a: f64,
    b: f64,
    c: f64,
}

impl From<Coefficients> for MaterialParams {
    fn from(c: Coefficients) -> Self {
        MaterialParams::derive(c.a, c.b, c.c)
    }
}

impl From<MaterialParams> for Coefficients {
    fn from(p: MaterialParams) -> Self {
        Coefficients {
            a: p.a,
            b: p.b,
            c: p.c,
        }
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams::derive(1.0, 1.0, 1.0)
    }
}

impl MaterialParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, PotentialError> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(PotentialError::NonPositive { a, b, c });
        }
        Ok(Self::derive(a, b, c))
    }

    fn derive(a: f64, b: f64, c: f64) -> Self {
        let s_star = (b + (b * b + 24.0 * a * c).sqrt()) / (4.0 * c);
        let s2 = s_star * s_star;
        let k = a * s2 / 3.0 + 2.0 * b * s2 * s_star / 27.0 - c * s2 * s2 / 9.0;
        MaterialParams {
            a,
            b,
            c,
            s_star,
            k,
            kappa_star: qtensor::kappa_star(s_star),
            delta0: 0.1 * s_star,
        }
    }

    /// Radius `√(2/3) s*` beyond which the bulk gradient points outward.
    pub fn linfty_radius(&self) -> f64 {
        (2.0f64 / 3.0).sqrt() * self.s_star
    }

    /// Upper bound for the operator norm of the bulk Hessian on `|Q| ≤ m`.
    pub fn hessian_bound(&self, m: f64) -> f64 {
        self.a + 2.0 * self.b * m + 3.0 * self.c * m * m
    }

    /// The potential written in the scalar order parameters
    /// `s` and `t = s r` of the biaxial representation.
    pub fn reduced_f(&self, s: f64, t: f64) -> f64 {
        let q2 = s * s - s * t + t * t;
        let cube = 2.0 * s.powi(3) - 3.0 * s * s * t - 3.0 * s * t * t + 2.0 * t.powi(3);
        self.k - self.a / 3.0 * q2 - self.b / 27.0 * cube + self.c / 9.0 * q2 * q2
    }
}

pub fn bulk_f(params: &MaterialParams, q: &QTensor) -> f64 {
    let m = q.to_matrix();
    let tr2 = q.norm_squared();
    let tr3 = 3.0 * m.determinant();
    params.k - 0.5 * params.a * tr2 - params.b / 3.0 * tr3 + 0.25 * params.c * tr2 * tr2
}

/// Gradient of `f` in the traceless symmetric space:
/// `-a Q - b (Q² - |Q|² Id / 3) + c |Q|² Q`.
pub fn bulk_grad(params: &MaterialParams, q: &QTensor) -> QTensor {
    let tr2 = q.norm_squared();
    let sq = q.square_traceless();
    *q * (params.c * tr2 - params.a) - sq * params.b
}

/// `f` and its gradient in one pass, for the relaxation kernel.
#[inline]
pub(crate) fn bulk_f_and_grad(params: &MaterialParams, q: &QTensor) -> (f64, QTensor) {
    const R2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    const R6: f64 = 0.408_248_290_463_863_f64;
    let [q0, q1, q2, q3, q4] = q.0;
    // symmetric matrix entries
    let d = -q0 * R6;
    let (a00, a11, a22) = (d + q1 * R2, d - q1 * R2, 2.0 * q0 * R6);
    let (a01, a02, a12) = (q2 * R2, q3 * R2, q4 * R2);
    // entries of the square
    let b00 = a00 * a00 + a01 * a01 + a02 * a02;
    let b11 = a01 * a01 + a11 * a11 + a12 * a12;
    let b22 = a02 * a02 + a12 * a12 + a22 * a22;
    let b01 = a00 * a01 + a01 * a11 + a02 * a12;
    let b02 = a00 * a02 + a01 * a12 + a02 * a22;
    let b12 = a01 * a02 + a11 * a12 + a12 * a22;
    let tr2 = b00 + b11 + b22;
    let tr3 = b00 * a00 + b11 * a11 + b22 * a22 + 2.0 * (b01 * a01 + b02 * a02 + b12 * a12);
    let f = params.k - 0.5 * params.a * tr2 - params.b / 3.0 * tr3 + 0.25 * params.c * tr2 * tr2;
    let sq = QTensor([
        (2.0 * b22 - b00 - b11) * R6,
        (b00 - b11) * R2,
        2.0 * b01 * R2,
        2.0 * b02 * R2,
        2.0 * b12 * R2,
    ]);
    let lin = params.c * tr2 - params.a;
    let mut g = [0.0; 5];
    for m in 0..5 {
        g[m] = lin * q.0[m] - params.b * sq.0[m];
    }
    (f, QTensor(g))
}

/// Sampled infima and suprema for the non-degeneracy properties of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct FPropertyReport {
    pub samples: usize,
    /// `inf f(Q) / (1 - φ(Q))²` over samples with `φ ≠ 1`.
    pub gamma_f0: f64,
    /// `inf ∂²_t f(Q0 + tP)` over unit normal directions `P` at vacuum points.
    pub gamma_f1: f64,
    /// `inf f(Q) / dist²(Q, N)` over samples with `0 < dist ≤ δ0`.
    pub gamma_f2: f64,
    /// `sup f(tQ + (1-t)ρ(Q)) / (t² f(Q))` over samples with `dist ≤ δ0`.
    pub gamma_prime_f3: f64,
}

/// Distance to the vacuum manifold; exact off the cone, brute-force sampled
/// on it.
pub fn dist_to_vacuum(params: &MaterialParams, q: &QTensor) -> f64 {
    match qtensor::retract(q, params.s_star) {
        Ok(p) => (*q - p).norm(),
        Err(_) => {
            let n = 2000;
            (0..n)
                .map(|i| {
                    let v = fibonacci_sphere(i, n);
                    (*q - QTensor::uniaxial(params.s_star, &v)).norm()
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// `i`-th of `n` quasi-uniform points on the unit sphere.
pub fn fibonacci_sphere(i: usize, n: usize) -> Vector3<f64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let th = golden * i as f64;
    Vector3::new(rho * th.cos(), rho * th.sin(), z)
}

fn random_q(rng: &mut ChaCha8Rng, radius: f64) -> QTensor {
    let mut c = [0.0; 5];
    for x in c.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let dir = QTensor(c);
    let r = radius * rng.gen::<f64>().powf(0.2);
    dir * (r / dir.norm())
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let v = Vector3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    v.normalize()
}

/// Samples the four non-degeneracy properties of `f` and reports the
/// empirical constants. Fails if any sampled constant is not strictly
/// positive and finite.
pub fn check_f_properties(
    params: &MaterialParams,
    samples: usize,
    seed: u64,
) -> Result<FPropertyReport, PotentialError> {
    if samples < 1000 {
        return Err(PotentialError::TooFewSamples(samples));
    }
    let s = params.s_star;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gamma_f0 = f64::INFINITY;
    let mut witness_f0 = QTensor::ZERO;
    for i in 0..samples {
        // alternate global samples with samples near the cone and near N
        let q = match i % 3 {
            0 => random_q(&mut rng, 10.0),
            1 => {
                let p = random_unit(&mut rng);
                QTensor::uniaxial(-rng.gen::<f64>() * 10.0, &p)
            }
            _ => {
                let n = random_unit(&mut rng);
                QTensor::uniaxial(s, &n) + random_q(&mut rng, 0.5 * s)
            }
        };
        let ph = qtensor::phi(&q, s);
        if (1.0 - ph).abs() < 1e-9 {
            continue;
        }
        let ratio = bulk_f(params, &q) / (1.0 - ph).powi(2);
        if ratio < gamma_f0 {
            gamma_f0 = ratio;
            witness_f0 = q;
        }
    }
    if !(gamma_f0 > 0.0 && gamma_f0.is_finite()) {
        return Err(PotentialError::PropertyViolated {
            predicate: "F0",
            witness: witness_f0.0,
            detail: format!("inf f/(1-phi)^2 = {gamma_f0:e}"),
        });
    }

    // F1: second derivative along normal directions at vacuum points
    let mut gamma_f1 = f64::INFINITY;
    let mut witness_f1 = QTensor::ZERO;
    let step = 1e-4;
    for _ in 0..(samples / 10).max(100) {
        let n = random_unit(&mut rng);
        let q0 = QTensor::uniaxial(s, &n);
        let p = normal_direction(&mut rng, &n);
        let d2 = (bulk_f(params, &(q0 + p * step)) - 2.0 * bulk_f(params, &q0)
            + bulk_f(params, &(q0 - p * step)))
            / (step * step);
        if d2 < gamma_f1 {
            gamma_f1 = d2;
            witness_f1 = q0;
        }
    }
    if !(gamma_f1 > 0.0) {
        return Err(PotentialError::PropertyViolated {
            predicate: "F1",
            witness: witness_f1.0,
            detail: format!("inf normal second derivative = {gamma_f1:e}"),
        });
    }

    // F2, F3: neighbourhood of N of radius δ0
    let mut gamma_f2 = f64::INFINITY;
    let mut gamma_f3 = 0.0f64;
    let mut witness = QTensor::ZERO;
    for _ in 0..samples {
        let n = random_unit(&mut rng);
        let q = QTensor::uniaxial(s, &n) + random_q(&mut rng, params.delta0);
        let dist = dist_to_vacuum(params, &q);
        if dist <= 1e-9 || dist > params.delta0 {
            continue;
        }
        let fq = bulk_f(params, &q);
        let r2 = fq / (dist * dist);
        if r2 < gamma_f2 {
            gamma_f2 = r2;
            witness = q;
        }
        let rho = qtensor::retract(&q, s).expect("near-vacuum sample off the cone");
        for j in 1..=10 {
            let t = j as f64 / 10.0;
            let ft = bulk_f(params, &(q * t + rho * (1.0 - t)));
            gamma_f3 = gamma_f3.max(ft / (t * t * fq));
        }
    }
    if !(gamma_f2 > 0.0 && gamma_f2.is_finite()) {
        return Err(PotentialError::PropertyViolated {
            predicate: "F2",
            witness: witness.0,
            detail: format!("inf f/dist^2 = {gamma_f2:e}"),
        });
    }
    if !(gamma_f3 > 0.0 && gamma_f3.is_finite()) {
        return Err(PotentialError::PropertyViolated {
            predicate: "F3",
            witness: witness.0,
            detail: format!("sup ratio = {gamma_f3:e}"),
        });
    }
    Ok(FPropertyReport {
        samples,
        gamma_f0,
        gamma_f1,
        gamma_f2,
        gamma_prime_f3: gamma_f3,
    })
}

/// Random unit tensor orthogonal to the tangent space of N at `ψ(n)`.
fn normal_direction(rng: &mut ChaCha8Rng, n: &Vector3<f64>) -> QTensor {
    let (u, v) = {
        let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = n.cross(&helper).normalize();
        (u, n.cross(&u))
    };
    // tangent space spanned by n⊗u + u⊗n and n⊗v + v⊗n
    let tangents = [
        QTensor::from_matrix(&(n * u.transpose() + u * n.transpose())),
        QTensor::from_matrix(&(n * v.transpose() + v * n.transpose())),
    ];
    let mut p = random_q(rng, 1.0);
    for t in &tangents {
        let tn = *t * (1.0 / t.norm());
        p -= tn * p.dot(&tn);
    }
    p * (1.0 / p.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_coefficients() {
        let p = MaterialParams::default();
        assert_relative_eq!(p.s_star, 1.5, epsilon = 1e-15);
        assert_relative_eq!(p.k, 0.4375, epsilon = 1e-15);
        assert_relative_eq!(p.kappa_star, 1.125 * std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(bulk_f(&p, &QTensor::ZERO), 0.4375, epsilon = 1e-15);
    }

    #[test]
    fn s_star_is_root() {
        for &(a, b, c) in &[(1.0, 1.0, 1.0), (0.3, 2.0, 0.7), (5.0, 0.1, 2.0)] {
            let p = MaterialParams::new(a, b, c).unwrap();
            let s = p.s_star;
            assert!((2.0 * c * s.powi(3) - b * s * s - 3.0 * a * s).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(MaterialParams::new(0.0, 1.0, 1.0).is_err());
        assert!(MaterialParams::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn zero_and_critical_on_vacuum() {
        let p = MaterialParams::new(0.7, 1.3, 0.9).unwrap();
        let n = Vector3::new(0.1, -0.7, 0.3).normalize();
        let q = QTensor::uniaxial(p.s_star, &n);
        assert!(bulk_f(&p, &q).abs() < 1e-12);
        assert!(bulk_grad(&p, &q).norm() < 1e-12);
        assert_eq!(bulk_grad(&p, &QTensor::ZERO), QTensor::ZERO);
    }

    #[test]
    fn fused_matches_separate() {
        let p = MaterialParams::default();
        let q = QTensor([0.3, -0.2, 0.5, 0.1, -0.4]);
        let (f, g) = bulk_f_and_grad(&p, &q);
        assert_relative_eq!(f, bulk_f(&p, &q), epsilon = 1e-14);
        assert_relative_eq!(g, bulk_grad(&p, &q), epsilon = 1e-14);
    }

    #[test]
    fn reduced_matches_full() {
        let p = MaterialParams::default();
        let n = Vector3::new(1.0, 2.0, 0.0).normalize();
        let m = Vector3::new(-2.0, 1.0, 0.5).normalize();
        let m = (m - n * n.dot(&m)).normalize();
        let (s, r) = (1.2, 0.3);
        let q = qtensor::from_representation(s, r, &n, &m);
        assert_relative_eq!(bulk_f(&p, &q), p.reduced_f(s, s * r), epsilon = 1e-13);
    }

    #[test]
    fn config_round_trip_uses_coefficients_only() {
        let p: MaterialParams = toml::from_str("a = 1.0\nb = 1.0\nc = 1.0").unwrap();
        assert_eq!(p, MaterialParams::default());
    }
}
