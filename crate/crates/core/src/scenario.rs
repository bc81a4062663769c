//! Preset domains and boundary data: planar disclination disks, the
//! straight disclination cylinder, the radial hedgehog ball, the solid
//! torus (3D and its axisymmetric section) and the two-ball dumbbell.
//!
//! `resolution` is the number of cells across the reference length 2 (the
//! unit ball, disk or section diameter), so `h = 2 / resolution`.

use crate::field::{Center, Domain, FieldError, Grid, QField, StarRule};
use crate::potential::MaterialParams;
use crate::qtensor::QTensor;
use crate::solver::{InitStrategy, ProfileFn};
use nalgebra::Vector3;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("disclination index {0} must be a non-zero half-integer")]
    InvalidIndex(f64),
    #[error("resolution {resolution} gives h = {h}, too coarse for epsilon = {eps} (need epsilon >= 2h)")]
    ResolutionTooCoarse { resolution: usize, h: f64, eps: f64 },
    #[error("geometry unresolved: {0}")]
    GeometryUnresolved(String),
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// What the acceptance harness expects a minimizer to show.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    None,
    /// One point defect near `center`.
    PointAt(Vector3<f64>),
    /// One straight line defect along `dir` through `origin`, of `length`.
    LineAlong {
        origin: Vector3<f64>,
        dir: Vector3<f64>,
        length: f64,
    },
    /// One defect in the section, drifting towards `(1, 0)`.
    SectionDefect,
    /// Lines confined to `x1 ≥ 0`, a point in `x1 ≤ -half_length / 2`.
    Dumbbell { half_length: f64 },
}

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: Arc<Domain>,
    pub epsilon: f64,
    pub params: MaterialParams,
    pub expected: Expectation,
    /// Recommended initialization.
    pub init: InitStrategy,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("shape", &self.domain.shape())
            .field("h", &self.domain.h())
            .field("epsilon", &self.epsilon)
            .field("expected", &self.expected)
            .field("init", &self.init)
            .finish()
    }
}

fn check_resolution(resolution: usize, eps: f64) -> Result<f64, ScenarioError> {
    let h = 2.0 / resolution.max(1) as f64;
    if resolution == 0 || eps < 2.0 * h * (1.0 - 1e-9) {
        return Err(ScenarioError::ResolutionTooCoarse { resolution, h, eps });
    }
    Ok(h)
}

/// Linear ramp `ρ / ε` below `ε`, then `1`.
pub fn eta(rho: f64, eps: f64) -> f64 {
    if rho >= eps {
        1.0
    } else {
        (rho / eps).max(0.0)
    }
}

/// Director `τ1 cos kθ + τ2 sin kθ` with `(τ1, τ2) = (e1, e2)`.
pub fn winding_director(k: f64, theta: f64) -> Vector3<f64> {
    Vector3::new((k * theta).cos(), (k * theta).sin(), 0.0)
}

fn check_index(k: f64) -> Result<(), ScenarioError> {
    let twice = 2.0 * k;
    if k == 0.0 || !k.is_finite() || (twice - twice.round()).abs() > 1e-12 {
        return Err(ScenarioError::InvalidIndex(k));
    }
    Ok(())
}

/// Planar disclination datum of index `k` centred on the `x3` axis, with
/// the core melted by `η_ε`: `g(x) = η_ε(ρ) s* (n_k(θ)⊗n_k(θ) - Id/3)`.
pub fn disclination_datum(
    k: f64,
    epsilon: f64,
    params: &MaterialParams,
) -> Result<impl Fn(&Vector3<f64>) -> QTensor + Send + Sync + Clone, ScenarioError> {
    check_index(k)?;
    let s = params.s_star;
    Ok(move |x: &Vector3<f64>| {
        let rho = x.x.hypot(x.y);
        let theta = x.y.atan2(x.x).rem_euclid(TAU);
        QTensor::uniaxial(s * eta(rho, epsilon), &winding_director(k, theta))
    })
}

/// Energy of the disclination datum on the disk of radius `radius` by
/// radial quadrature of the closed-form density.
pub fn datum_energy_on_disk(k: f64, epsilon: f64, radius: f64, params: &MaterialParams, nodes: usize) -> f64 {
    let s = params.s_star;
    let density = |rho: f64| -> f64 {
        let e = eta(rho, epsilon);
        let de = if rho < epsilon { 1.0 / epsilon } else { 0.0 };
        let grad2 = de * de * (2.0 / 3.0) * s * s + e * e * 2.0 * s * s * k * k / (rho * rho);
        let f = params.reduced_f(s * e, 0.0);
        (0.5 * grad2 + f / (epsilon * epsilon)) * TAU * rho
    };
    // midpoint rule separately on [0, ε] and [ε, R] so the kink is a node
    let mid = |a: f64, b: f64, n: usize| -> f64 {
        let w = (b - a) / n as f64;
        (0..n).map(|i| density(a + (i as f64 + 0.5) * w)).sum::<f64>() * w
    };
    let outer = if radius > epsilon {
        // geometric nodes resolve the 1/ρ tail
        let n = nodes.max(16);
        let ratio = (radius / epsilon).powf(1.0 / n as f64);
        (0..n)
            .map(|i| {
                let a = epsilon * ratio.powi(i as i32);
                let b = a * ratio;
                mid(a, b, 8)
            })
            .sum()
    } else {
        0.0
    };
    mid(0.0, epsilon.min(radius), nodes.max(16)) + outer
}

fn disk_domain(h: f64, datum: impl Fn(&Vector3<f64>) -> QTensor) -> Result<Domain, ScenarioError> {
    let grid = Grid::centered(Vector3::zeros(), Vector3::new(1.0, 1.0, 0.0), h);
    Ok(Domain::build(grid, false, |x| x.x * x.x + x.y * x.y < 1.0, datum)?.with_star_rules(vec![StarRule {
        region: None,
        center: Center::Point(Vector3::zeros()),
    }]))
}

/// Melted-core profile `η_ε(|x|) ψ(n_k(θ))` as a field initializer.
pub fn profile_fn(k: f64, epsilon: f64, params: &MaterialParams) -> Result<ProfileFn, ScenarioError> {
    let g = disclination_datum(k, epsilon, params)?;
    Ok(Arc::new(move |x: &Vector3<f64>| g(x)))
}

/// Unit disk with the disclination datum of index `k` on its boundary.
pub fn disk(k: f64, epsilon: f64, resolution: usize, params: &MaterialParams) -> Result<Scenario, ScenarioError> {
    let h = check_resolution(resolution, epsilon)?;
    let g = disclination_datum(k, epsilon, params)?;
    let domain = disk_domain(h, g)?;
    let integer = (k - k.round()).abs() < 1e-12;
    Ok(Scenario {
        name: format!("disk(k={k})"),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: if integer {
            Expectation::None
        } else {
            Expectation::PointAt(Vector3::zeros())
        },
        init: InitStrategy::Profile(profile_fn(k, epsilon, params)?),
    })
}

/// Unit disk with the constant datum `ψ(e1)`.
pub fn disk_trivial(epsilon: f64, resolution: usize, params: &MaterialParams) -> Result<Scenario, ScenarioError> {
    let h = check_resolution(resolution, epsilon)?;
    let q = QTensor::uniaxial(params.s_star, &Vector3::x());
    let domain = disk_domain(h, move |_| q)?;
    Ok(Scenario {
        name: "disk_trivial".into(),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: Expectation::None,
        init: InitStrategy::HarmonicLikeSmooth,
    })
}

/// The melted-core profile sampled on the unit disk of radius `radius`
/// with spacing `h`.
pub fn disclination_profile(
    radius: f64,
    k: f64,
    epsilon: f64,
    h: f64,
    params: &MaterialParams,
) -> Result<QField, ScenarioError> {
    if epsilon < 2.0 * h * (1.0 - 1e-9) {
        return Err(ScenarioError::ResolutionTooCoarse {
            resolution: (2.0 * radius / h).round() as usize,
            h,
            eps: epsilon,
        });
    }
    let g = disclination_datum(k, epsilon, params)?;
    let grid = Grid::centered(Vector3::zeros(), Vector3::new(radius, radius, 0.0), h);
    let domain = Arc::new(Domain::build(grid, false, |x| x.x * x.x + x.y * x.y < radius * radius, &g)?);
    let values = (0..domain.len()).map(|i| g(&domain.center(i))).collect();
    Ok(QField::new(domain, values, epsilon)?)
}

/// Cylinder of radius 1 and the given height about the `x3` axis with the
/// disclination datum on its whole boundary.
pub fn cylinder(
    k: f64,
    epsilon: f64,
    resolution: usize,
    height: f64,
    params: &MaterialParams,
) -> Result<Scenario, ScenarioError> {
    let h = check_resolution(resolution, epsilon)?;
    if height < 4.0 * h {
        return Err(ScenarioError::GeometryUnresolved(format!("height {height} spans fewer than 4 cells")));
    }
    let g = disclination_datum(k, epsilon, params)?;
    let half = 0.5 * height;
    let grid = Grid::centered(Vector3::zeros(), Vector3::new(1.0, 1.0, half), h);
    let domain = Domain::build(grid, false, |x| x.x * x.x + x.y * x.y < 1.0 && x.z.abs() < half, g)?
        .with_star_rules(vec![StarRule {
            region: None,
            center: Center::Line {
                origin: Vector3::zeros(),
                dir: Vector3::z(),
            },
        }]);
    Ok(Scenario {
        name: format!("cylinder(k={k})"),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: Expectation::LineAlong {
            origin: Vector3::zeros(),
            dir: Vector3::z(),
            length: height,
        },
        init: InitStrategy::Profile(profile_fn(k, epsilon, params)?),
    })
}

/// Unit ball with the radial datum `ψ(x / |x|)`.
pub fn hedgehog(epsilon: f64, resolution: usize, params: &MaterialParams) -> Result<Scenario, ScenarioError> {
    let h = check_resolution(resolution, epsilon)?;
    let s = params.s_star;
    let grid = Grid::centered(Vector3::zeros(), Vector3::repeat(1.0), h);
    let domain = Domain::build(grid, false, |x| x.norm() < 1.0, move |x| {
        QTensor::uniaxial(s, &x.normalize())
    })?
    .with_star_rules(vec![StarRule {
        region: None,
        center: Center::Point(Vector3::zeros()),
    }]);
    Ok(Scenario {
        name: "hedgehog".into(),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: Expectation::PointAt(Vector3::zeros()),
        init: InitStrategy::RadialFromBoundary,
    })
}

/// Torus datum in section coordinates: the director turns by half the
/// polar angle about `(2, 0)` in the `(e1, e3)` plane.
pub fn torus_datum(params: &MaterialParams) -> impl Fn(f64, f64) -> QTensor + Send + Sync + Clone {
    let s = params.s_star;
    move |rho: f64, z: f64| {
        let phi = z.atan2(rho - 2.0).rem_euclid(TAU);
        let n = Vector3::new((0.5 * phi).cos(), 0.0, (0.5 * phi).sin());
        QTensor::uniaxial(s, &n)
    }
}

/// Axisymmetric section `D = B1((2, 0))` of the solid torus, stored with
/// `x = ρ`, `y = z`.
pub fn torus_section(epsilon: f64, resolution: usize, params: &MaterialParams) -> Result<Scenario, ScenarioError> {
    let h = check_resolution(resolution, epsilon)?;
    let datum = torus_datum(params);
    let grid = Grid::centered(Vector3::new(2.0, 0.0, 0.0), Vector3::new(1.0, 1.0, 0.0), h);
    let c = Vector3::new(2.0, 0.0, 0.0);
    let domain = Domain::build(grid, true, |x| (x - c).norm() < 1.0, |x| datum(x.x, x.y))?.with_star_rules(vec![
        StarRule {
            region: None,
            center: Center::Point(c),
        },
    ]);
    Ok(Scenario {
        name: "torus_section".into(),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: Expectation::SectionDefect,
        init: InitStrategy::RadialFromBoundary,
    })
}

/// Voxelized solid torus `(√(x1² + x2²) - 2)² + x3² < 1` with datum
/// `h(ρ, x3)`.
pub fn torus_3d(epsilon: f64, resolution: usize, params: &MaterialParams) -> Result<Scenario, ScenarioError> {
    let h = check_resolution(resolution, epsilon)?;
    let datum = torus_datum(params);
    let grid = Grid::centered(Vector3::zeros(), Vector3::new(3.0, 3.0, 1.0), h);
    let rho = |x: &Vector3<f64>| x.x.hypot(x.y);
    let domain = Domain::build(
        grid,
        false,
        |x| (rho(x) - 2.0).powi(2) + x.z * x.z < 1.0,
        |x| datum(rho(x), x.z),
    )?;
    Ok(Scenario {
        name: "torus_3d".into(),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: Expectation::None,
        init: InitStrategy::HarmonicLikeSmooth,
    })
}

/// Piecewise-linear angle profile of the right-ball datum.
pub fn chi(theta: f64) -> f64 {
    if theta <= 5.0 * PI / 6.0 {
        0.5 * PI - 0.6 * theta
    } else if theta < 7.0 * PI / 6.0 {
        0.0
    } else {
        0.7 * PI - 0.6 * theta
    }
}

/// Two-sided ramp of width `ε` at both ends of `[0, π]`.
pub fn eta_polar(phi: f64, eps: f64) -> f64 {
    if phi <= eps {
        (phi / eps).max(0.0)
    } else if phi < PI - eps {
        1.0
    } else {
        ((PI - phi) / eps).max(0.0)
    }
}

/// Polar-angle reparametrization of the left-ball datum: `0` up to
/// `arcsin r`, linear up to `arcsin 2r`, identity beyond.
pub fn xi(phi: f64, r: f64) -> f64 {
    let (lo, hi) = (r.asin(), (2.0 * r).asin());
    if phi <= lo {
        0.0
    } else if phi < hi {
        hi * (phi - lo) / (hi - lo)
    } else {
        phi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumbbellPart {
    Left,
    Neck,
    Right,
}

/// Dumbbell datum on the piece of boundary nearest to `x`.
#[derive(Debug, Clone, Copy)]
pub struct DumbbellDatum {
    pub half_length: f64,
    pub neck_radius: f64,
    pub epsilon: f64,
    pub s_star: f64,
}

impl DumbbellDatum {
    pub fn centers(&self) -> (Vector3<f64>, Vector3<f64>) {
        let c = self.half_length + 1.0;
        (Vector3::new(-c, 0.0, 0.0), Vector3::new(c, 0.0, 0.0))
    }

    pub fn inside(&self, x: &Vector3<f64>) -> bool {
        let (pm, pp) = self.centers();
        (x - pm).norm() < 1.0
            || (x - pp).norm() < 1.0
            || (x.x.abs() <= self.half_length + 1.0 && x.y.hypot(x.z) < self.neck_radius)
    }

    /// Boundary piece whose surface is closest to `x`.
    pub fn part(&self, x: &Vector3<f64>) -> DumbbellPart {
        let (pm, pp) = self.centers();
        let r = self.neck_radius;
        let radial = x.y.hypot(x.z);
        let junction = self.half_length + 1.0 - (1.0 - r * r).sqrt();
        let neck = if x.x.abs() <= junction {
            (radial - r).abs()
        } else {
            f64::INFINITY
        };
        let sphere = |p: &Vector3<f64>| {
            let d = x - p;
            let n = d.norm();
            let foot = if n > 0.0 { d / n } else { Vector3::x() };
            // feet inside the neck opening are not boundary
            if foot.y.hypot(foot.z) < r && foot.x * p.x < 0.0 {
                f64::INFINITY
            } else {
                (n - 1.0).abs()
            }
        };
        let (dl, dr) = (sphere(&pm), sphere(&pp));
        if neck <= dl && neck <= dr {
            DumbbellPart::Neck
        } else if dl <= dr {
            DumbbellPart::Left
        } else {
            DumbbellPart::Right
        }
    }

    pub fn value(&self, x: &Vector3<f64>) -> QTensor {
        let (pm, pp) = self.centers();
        let s = self.s_star;
        match self.part(x) {
            DumbbellPart::Neck => QTensor::uniaxial(s, &Vector3::x()),
            DumbbellPart::Right => {
                let u = (x - pp).try_normalize(0.0).unwrap_or_else(Vector3::z);
                let phi = u.z.clamp(-1.0, 1.0).acos();
                let theta = u.y.atan2(u.x).rem_euclid(TAU);
                let c = chi(theta);
                let n = Vector3::new(c.cos(), c.sin(), 0.0);
                QTensor::uniaxial(s * eta_polar(phi, self.epsilon), &n)
            }
            DumbbellPart::Left => {
                let u = (x - pm).try_normalize(0.0).unwrap_or_else(Vector3::x);
                let phi = u.x.clamp(-1.0, 1.0).acos();
                let theta = u.z.atan2(u.y);
                let a = xi(phi, self.neck_radius);
                let n = Vector3::new(a.cos(), a.sin() * theta.cos(), a.sin() * theta.sin());
                QTensor::uniaxial(s, &n)
            }
        }
    }
}

/// Two unit balls centred at `(±(L + 1), 0, 0)` joined by a cylinder of
/// radius `r` about the `x1` axis.
pub fn dumbbell(
    half_length: f64,
    neck_radius: f64,
    epsilon: f64,
    resolution: usize,
    params: &MaterialParams,
) -> Result<Scenario, ScenarioError> {
    if !(half_length > 0.0) || !(neck_radius > 0.0 && neck_radius < 0.5) {
        return Err(ScenarioError::GeometryUnresolved(format!(
            "need L > 0 and 0 < r < 1/2, got L = {half_length}, r = {neck_radius}"
        )));
    }
    let h = 2.0 / resolution.max(1) as f64;
    if neck_radius < 3.0 * h || epsilon < 2.0 * h * (1.0 - 1e-9) {
        return Err(ScenarioError::GeometryUnresolved(format!(
            "h = {h} must satisfy r >= 3h (r = {neck_radius}) and epsilon >= 2h (epsilon = {epsilon})"
        )));
    }
    let datum = DumbbellDatum {
        half_length,
        neck_radius,
        epsilon,
        s_star: params.s_star,
    };
    let (pm, pp) = datum.centers();
    let grid = Grid::centered(Vector3::zeros(), Vector3::new(half_length + 2.0, 1.0, 1.0), h);
    let domain = Domain::build(grid, false, |x| datum.inside(x), |x| datum.value(x))?.with_star_rules(vec![
        StarRule {
            region: Some((pp, 1.0)),
            center: Center::Point(pp),
        },
        StarRule {
            region: Some((pm, 1.0)),
            center: Center::Point(pm),
        },
        StarRule {
            region: None,
            center: Center::Line {
                origin: Vector3::zeros(),
                dir: Vector3::x(),
            },
        },
    ]);
    Ok(Scenario {
        name: format!("dumbbell(L={half_length},r={neck_radius})"),
        domain: Arc::new(domain),
        epsilon,
        params: *params,
        expected: Expectation::Dumbbell { half_length },
        init: InitStrategy::RadialFromBoundary,
    })
}
