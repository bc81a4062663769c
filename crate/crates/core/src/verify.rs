//! Numerical checks of the identities and scaling laws satisfied by
//! critical points: Euler-Lagrange residual, stress-energy balance,
//! Pohozaev identity, monotonicity, star-shaped bound and the logarithmic
//! energy slope.

use crate::field::{self, CellClass, QField, Region};
use crate::potential::{self, MaterialParams};
use crate::qtensor::QTensor;
use crate::reduce::tree_sum;
use crate::scenario::{Scenario, ScenarioError};
use crate::solver::{self, SolveConfig, SolverError};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

/// Every tolerance used by the checks.
pub mod tol {
    /// EL residual may exceed the solver's stopping tolerance by this factor.
    pub const EL_FACTOR: f64 = 10.0;
    /// Allowed relative drop of `E(r)/r` between consecutive radii.
    pub const MONOTONICITY_SLACK: f64 = 0.03;
    /// Relative mismatch between the two sides of the Pohozaev identity.
    pub const POHOZAEV: f64 = 0.05;
    /// Multiplicative slack on the star-shaped bound.
    pub const STAR_SLACK: f64 = 0.10;
    /// Relative error of the fitted log-slope against `κ*`.
    pub const KAPPA_SLOPE: f64 = 0.10;
    /// Relative error of the line density against `κ*`.
    pub const LINE_DENSITY: f64 = 0.15;
    /// Stress-energy residual per unit of `h`, relative to `‖DX‖ E`.
    pub const STRESS_ENERGY_PER_H: f64 = 1.0;
    /// Random test fields drawn by the stress-energy check.
    pub const STRESS_ENERGY_SAMPLES: usize = 20;
    /// Smallest ball, in cells across, for surface quadrature.
    pub const MIN_BALL_CELLS: f64 = 6.0;
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("ball of radius {radius} spans {cells:.1} cells, fewer than 6")]
    BallTooSmall { radius: f64, cells: f64 },
    #[error("region reaches outside the interior of the domain")]
    RegionNotInterior,
    #[error("sweep needs at least 3 epsilons, got {0}")]
    SweepTooShort(usize),
    #[error("axisymmetric sections are not supported by this check")]
    Axisymmetric,
    #[error(transparent)]
    Field(#[from] field::FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// One named quantity compared against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub residuals: Vec<Residual>,
    pub pass: bool,
    pub epsilon: f64,
    pub h: f64,
    pub region: String,
}

impl CheckReport {
    fn new(name: &str, epsilon: f64, h: f64, region: String, residuals: Vec<Residual>) -> CheckReport {
        let pass = residuals.iter().all(|r| r.value <= r.tolerance);
        CheckReport {
            name: name.into(),
            residuals,
            pass,
            epsilon,
            h,
            region,
        }
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.label == label).map(|r| r.value)
    }

    pub const CSV_HEADER: &'static str = "check,quantity,value,tolerance,pass,epsilon,h,region";

    /// One CSV row per residual.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for r in &self.residuals {
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{:e},{:e},{}",
                self.name,
                r.label,
                r.value,
                r.tolerance,
                r.value <= r.tolerance,
                self.epsilon,
                self.h,
                self.region
            );
        }
        s
    }
}

fn res(label: &str, value: f64, tolerance: f64) -> Residual {
    Residual {
        label: label.into(),
        value,
        tolerance,
    }
}

fn region_label(r: &Region) -> String {
    match r {
        Region::Ball { center, radius } => format!("ball({} {} {}; {})", center.x, center.y, center.z, radius),
        Region::Box { min, max } => format!("box({} {} {}; {} {} {})", min.x, min.y, min.z, max.x, max.y, max.z),
    }
}

/// `ε² sup|−Δ_h Q + ε⁻² ∇f(Q)|` against `EL_FACTOR · grad_tol · (1 + ε²)`.
pub fn check_el_residual(field: &QField, params: &MaterialParams, grad_tol: f64) -> CheckReport {
    let eps2 = field.epsilon().powi(2);
    let value = eps2 * field::el_residual_sup(field, params);
    CheckReport::new(
        "el_residual",
        field.epsilon(),
        field.h(),
        "interior".into(),
        vec![res("sup_residual", value, tol::EL_FACTOR * grad_tol * (1.0 + eps2))],
    )
}

/// Central-difference gradient at an active cell, one-sided next to
/// outside cells; `None` when an axis has no active neighbour.
fn gradient(field: &QField, i: usize) -> Option<[QTensor; 3]> {
    let dom = field.domain();
    let g = dom.grid();
    let c = g.coords(i);
    let strides = g.strides();
    let mut out = [QTensor::ZERO; 3];
    for a in 0..g.dim() {
        let s = strides[a];
        let lo = (c[a] > 0).then(|| i - s).filter(|&j| dom.class(j) != CellClass::Outside);
        let hi = (c[a] + 1 < g.shape[a])
            .then(|| i + s)
            .filter(|&j| dom.class(j) != CellClass::Outside);
        let q = field.value(i);
        out[a] = match (lo, hi) {
            (Some(l), Some(u)) => (field.value(u) - field.value(l)).scale(0.5 / g.h),
            (None, Some(u)) => (field.value(u) - q).scale(1.0 / g.h),
            (Some(l), None) => (q - field.value(l)).scale(1.0 / g.h),
            (None, None) => return None,
        };
    }
    Some(out)
}

/// Pointwise data used by the surface and volume integrals.
#[derive(Clone, Copy)]
struct Local {
    grad: [QTensor; 3],
    bulk: f64,
}

impl Local {
    fn grad_sq(&self) -> f64 {
        self.grad.iter().map(|d| d.norm_squared()).sum()
    }

    fn density(&self) -> f64 {
        0.5 * self.grad_sq() + self.bulk
    }

    fn directional(&self, v: &Vector3<f64>) -> QTensor {
        self.grad[0].scale(v.x) + self.grad[1].scale(v.y) + self.grad[2].scale(v.z)
    }

    fn mean(a: &Local, b: &Local) -> Local {
        Local {
            grad: [0, 1, 2].map(|k| (a.grad[k] + b.grad[k]).scale(0.5)),
            bulk: 0.5 * (a.bulk + b.bulk),
        }
    }
}

/// Cells with centres in `region`, all of them interior; gradients and
/// scaled bulk density per cell.
struct RegionData {
    cells: Vec<usize>,
    local: std::collections::HashMap<usize, Local>,
}

fn region_data(field: &QField, params: &MaterialParams, region: &Region) -> Result<RegionData, VerifyError> {
    let dom = field.domain();
    if dom.is_axisymmetric() {
        return Err(VerifyError::Axisymmetric);
    }
    let inv_eps2 = field.epsilon().powi(-2);
    let cells: Vec<usize> = (0..dom.len()).filter(|&i| region.contains(&dom.center(i))).collect();
    if cells.is_empty() || cells.iter().any(|&i| dom.class(i) != CellClass::Interior) {
        return Err(VerifyError::RegionNotInterior);
    }
    let g = dom.grid();
    let strides = g.strides();
    let mut local = std::collections::HashMap::new();
    let mut add = |i: usize| -> Result<(), VerifyError> {
        if let std::collections::hash_map::Entry::Vacant(e) = local.entry(i) {
            let grad = gradient(field, i).ok_or(VerifyError::RegionNotInterior)?;
            e.insert(Local {
                grad,
                bulk: potential::bulk_f(params, &field.value(i)) * inv_eps2,
            });
        }
        Ok(())
    };
    for &i in &cells {
        add(i)?;
        for &s in strides.iter().take(g.dim()) {
            add(i - s)?;
            add(i + s)?;
        }
    }
    Ok(RegionData { cells, local })
}

/// A face of the voxelized boundary: centre, axis normal, and the
/// averaged local data of its two cells.
struct Face {
    x: Vector3<f64>,
    n: Vector3<f64>,
    local: Local,
}

fn boundary_faces(field: &QField, data: &RegionData, region: &Region) -> Vec<Face> {
    let dom = field.domain();
    let g = dom.grid();
    let strides = g.strides();
    let mut faces = Vec::new();
    for &i in &data.cells {
        let x = dom.center(i);
        for (a, &s) in strides.iter().enumerate().take(g.dim()) {
            for sign in [-1.0, 1.0] {
                let j = if sign > 0.0 { i + s } else { i - s };
                if region.contains(&dom.center(j)) {
                    continue;
                }
                let mut n = Vector3::zeros();
                n[a] = sign;
                faces.push(Face {
                    x: x + n * (0.5 * g.h),
                    n,
                    local: Local::mean(&data.local[&i], &data.local[&j]),
                });
            }
        }
    }
    faces
}

/// Outward unit normal of the smooth boundary near a face.
fn smooth_normal(region: &Region, face: &Face) -> Vector3<f64> {
    match region {
        Region::Ball { center, .. } => (face.x - center).normalize(),
        Region::Box { .. } => face.n,
    }
}

/// `∫_∂G F dS` by face-area weighting: each face contributes
/// `F (ν · n_face) h²`.
fn surface_integral(faces: &[Face], h: f64, region: &Region, f: impl Fn(&Face, &Vector3<f64>) -> f64) -> f64 {
    let terms: Vec<f64> = faces
        .iter()
        .map(|fc| {
            let nu = smooth_normal(region, fc);
            f(fc, &nu) * nu.dot(&fc.n) * h * h
        })
        .collect();
    tree_sum(&terms)
}

fn volume_integral(data: &RegionData, h: f64, f: impl Fn(&Local) -> f64) -> f64 {
    let terms: Vec<f64> = data.cells.iter().map(|i| f(&data.local[i])).collect();
    tree_sum(&terms) * h.powi(3)
}

fn ball_guard(h: f64, radius: f64) -> Result<(), VerifyError> {
    let cells = 2.0 * radius / h;
    if cells < tol::MIN_BALL_CELLS {
        return Err(VerifyError::BallTooSmall { radius, cells });
    }
    Ok(())
}

/// The two sides of the Pohozaev identity on a ball about `x0`:
/// `∫_G (½|∇Q|² + 3ε⁻²f) + ∫_∂G (ν·X)|∂_νQ|²` and
/// `∫_∂G (ν·X) e − ∫_∂G ∂_νQ · ∂_{PX}Q` with `X = x − x0`.
pub fn pohozaev_sides(
    field: &QField,
    params: &MaterialParams,
    center: &Vector3<f64>,
    radius: f64,
) -> Result<(f64, f64), VerifyError> {
    let h = field.h();
    ball_guard(h, radius)?;
    let region = Region::Ball {
        center: *center,
        radius,
    };
    let data = region_data(field, params, &region)?;
    let faces = boundary_faces(field, &data, &region);
    let volume = volume_integral(&data, h, |l| 0.5 * l.grad_sq() + 3.0 * l.bulk);
    let normal = surface_integral(&faces, h, &region, |fc, nu| {
        (fc.x - center).dot(nu) * fc.local.directional(nu).norm_squared()
    });
    let energy = surface_integral(&faces, h, &region, |fc, nu| (fc.x - center).dot(nu) * fc.local.density());
    let tangential = surface_integral(&faces, h, &region, |fc, nu| {
        let x = fc.x - center;
        let px = x - nu * nu.dot(&x);
        fc.local.directional(nu).dot(&fc.local.directional(&px))
    });
    Ok((volume + normal, energy - tangential))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-14 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn check_pohozaev(
    field: &QField,
    params: &MaterialParams,
    center: &Vector3<f64>,
    radius: f64,
) -> Result<CheckReport, VerifyError> {
    let (lhs, rhs) = pohozaev_sides(field, params, center, radius)?;
    Ok(CheckReport::new(
        "pohozaev",
        field.epsilon(),
        field.h(),
        region_label(&Region::Ball {
            center: *center,
            radius,
        }),
        vec![
            res("relative_gap", relative_gap(lhs, rhs), tol::POHOZAEV),
            res("volume_side", lhs, f64::INFINITY),
            res("surface_side", rhs, f64::INFINITY),
        ],
    ))
}

/// `E(B_r)/r` for each radius; pass when no step drops by more than the
/// slack. The reported residual is the largest relative drop.
pub fn check_monotonicity(
    field: &QField,
    params: &MaterialParams,
    center: &Vector3<f64>,
    radii: &[f64],
) -> Result<CheckReport, VerifyError> {
    let dom = field.domain();
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let region = Region::Ball { center: *center, radius: r };
        let inside: Vec<usize> = (0..dom.len()).filter(|&i| region.contains(&dom.center(i))).collect();
        if inside.iter().any(|&i| dom.class(i) != CellClass::Interior) {
            return Err(VerifyError::RegionNotInterior);
        }
        ratios.push(field::energy_in_ball(field, params, center, r)? / r);
    }
    let drop = ratios
        .windows(2)
        .map(|w| if w[0] > 0.0 { (w[0] - w[1]) / w[0] } else { 0.0 })
        .fold(0.0, f64::max);
    let mut residuals = vec![res("max_relative_drop", drop, tol::MONOTONICITY_SLACK)];
    for (r, q) in radii.iter().zip(&ratios) {
        residuals.push(res(&format!("ratio_r{r}"), *q, f64::INFINITY));
    }
    Ok(CheckReport::new(
        "monotonicity",
        field.epsilon(),
        field.h(),
        format!("balls about ({} {} {})", center.x, center.y, center.z),
        residuals,
    ))
}

/// Energy of `G` and the boundary energy `∫_∂G ½|∇_T Q|² + ε⁻² f`.
pub fn star_sides(field: &QField, params: &MaterialParams, region: &Region) -> Result<(f64, f64), VerifyError> {
    let h = field.h();
    let data = region_data(field, params, region)?;
    let faces = boundary_faces(field, &data, region);
    let volume = volume_integral(&data, h, |l| l.density());
    let surface = surface_integral(&faces, h, region, |fc, nu| {
        let dn = fc.local.directional(nu).norm_squared();
        0.5 * (fc.local.grad_sq() - dn) + fc.local.bulk
    });
    Ok((volume, surface))
}

fn diameter(region: &Region) -> f64 {
    match region {
        Region::Ball { radius, .. } => 2.0 * radius,
        Region::Box { min, max } => (max - min).norm(),
    }
}

/// `E(G) ≤ 3 diam(G) E(∂G)`; the residual is the ratio of the two sides.
pub fn check_star_bound(field: &QField, params: &MaterialParams, region: &Region) -> Result<CheckReport, VerifyError> {
    let (inner, boundary) = star_sides(field, params, region)?;
    let bound = 3.0 * diameter(region) * boundary;
    let ratio = if inner <= 1e-14 { 0.0 } else { inner / bound };
    Ok(CheckReport::new(
        "star_bound",
        field.epsilon(),
        field.h(),
        region_label(region),
        vec![
            res("energy_over_bound", ratio, 1.0 + tol::STAR_SLACK),
            res("energy", inner, f64::INFINITY),
            res("bound", bound, f64::INFINITY),
        ],
    ))
}

/// Smooth compactly supported vector field `a (1 − |x−c|²/ρ²)³`.
#[derive(Debug, Clone, Copy)]
pub struct BumpField {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub amplitude: Vector3<f64>,
}

impl BumpField {
    /// Jacobian `∂_j X_i` at `x`.
    pub fn jacobian(&self, x: &Vector3<f64>) -> nalgebra::Matrix3<f64> {
        let y = (x - self.center) / self.radius;
        let s = 1.0 - y.norm_squared();
        if s <= 0.0 {
            return nalgebra::Matrix3::zeros();
        }
        // d/dx (1 - |y|²)³ = -6 s² y / ρ
        let grad = y * (-6.0 * s * s / self.radius);
        self.amplitude * grad.transpose()
    }

    /// Bound on `sup |DX|`.
    pub fn lipschitz(&self) -> f64 {
        // max of 6 s² |y| over |y| < 1 is at |y| = 1/√5
        let y = 1.0 / 5f64.sqrt();
        self.amplitude.norm() * 6.0 * (1.0 - y * y).powi(2) * y / self.radius
    }
}

/// Deterministic family of bump fields supported in the box.
pub fn bump_family(region: &Region, count: usize, seed: u64) -> Vec<BumpField> {
    let (min, max) = match region {
        Region::Box { min, max } => (*min, *max),
        Region::Ball { center, radius } => {
            let half = Vector3::repeat(radius / 3f64.sqrt());
            (center - half, center + half)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_width = (max - min).min() / 2.0;
    (0..count)
        .map(|_| {
            let radius = half_width * rng.gen_range(0.4..0.95);
            let center = Vector3::from_fn(|k, _| rng.gen_range(min[k] + radius..=max[k] - radius));
            let amplitude = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            BumpField {
                center,
                radius,
                amplitude,
            }
        })
        .collect()
}

/// `∫ (e δ_ij − ∂_iQ·∂_jQ) ∂_j X_i` over the region.
pub fn stress_pairing(field: &QField, params: &MaterialParams, region: &Region, x: &BumpField) -> Result<f64, VerifyError> {
    let data = region_data(field, params, region)?;
    Ok(pairing(field, &data, x))
}

fn pairing(field: &QField, data: &RegionData, x: &BumpField) -> f64 {
    let dom = field.domain();
    let terms: Vec<f64> = data
        .cells
        .iter()
        .map(|&i| {
            let l = &data.local[&i];
            let dx = x.jacobian(&dom.center(i));
            let e = l.density();
            let mut t = 0.0;
            for a in 0..3 {
                t += e * dx[(a, a)];
                for b in 0..3 {
                    t -= l.grad[a].dot(&l.grad[b]) * dx[(a, b)];
                }
            }
            t
        })
        .collect();
    tree_sum(&terms) * field.h().powi(3)
}

/// Stress-energy balance against 20 seeded bump fields; the residual is
/// `max |∫ T : DX| / (sup|DX| E(box))`, allowed to be `O(h)`.
pub fn check_stress_energy(
    field: &QField,
    params: &MaterialParams,
    region: &Region,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    let data = region_data(field, params, region)?;
    let h = field.h();
    let energy = volume_integral(&data, h, |l| l.density());
    let worst = bump_family(region, tol::STRESS_ENERGY_SAMPLES, seed)
        .iter()
        .map(|x| {
            let p = pairing(field, &data, x).abs();
            if energy <= 1e-14 {
                0.0
            } else {
                p / (x.lipschitz() * energy)
            }
        })
        .fold(0.0, f64::max);
    Ok(CheckReport::new(
        "stress_energy",
        field.epsilon(),
        h,
        region_label(region),
        vec![res("normalized_pairing", worst, tol::STRESS_ENERGY_PER_H * h)],
    ))
}

/// Least-squares line through `(log(1/ε), energy)`: `(slope, intercept)`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope check on precomputed `(ε, minimal energy)` pairs. With
/// `expect_defect` the slope must match `κ*`, otherwise vanish, both to
/// `KAPPA_SLOPE κ*`.
pub fn sweep_report(points: &[(f64, f64)], params: &MaterialParams, expect_defect: bool) -> Result<CheckReport, VerifyError> {
    if points.len() < 3 {
        return Err(VerifyError::SweepTooShort(points.len()));
    }
    let (slope, intercept) = fit_log_slope(points);
    let k = params.kappa_star;
    let target = if expect_defect { k } else { 0.0 };
    let mut residuals = vec![
        res("slope_error", (slope - target).abs(), tol::KAPPA_SLOPE * k),
        res("slope", slope, f64::INFINITY),
        res("intercept", intercept, f64::INFINITY),
    ];
    for (e, en) in points {
        residuals.push(res(&format!("energy_eps{e}"), *en, f64::INFINITY));
    }
    let eps_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    Ok(CheckReport::new(
        if expect_defect { "kappa_sweep" } else { "kappa_sweep_trivial" },
        eps_min,
        f64::NAN,
        "domain".into(),
        residuals,
    ))
}

/// Relaxes each member of the family and fits the energy slope.
pub fn kappa_sweep(
    family: impl Fn(f64) -> Result<Scenario, ScenarioError>,
    epsilons: &[f64],
    params: &MaterialParams,
    cfg: &SolveConfig,
    expect_defect: bool,
) -> Result<CheckReport, VerifyError> {
    if epsilons.len() < 3 {
        return Err(VerifyError::SweepTooShort(epsilons.len()));
    }
    let mut points = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        let sc = family(e)?;
        let init = solver::initialize(sc.domain.clone(), &sc.init, e)?;
        let (_, report) = if sc.domain.is_axisymmetric() {
            solver::relax_axisym(&init, params, cfg)?
        } else {
            solver::relax(&init, params, cfg)?
        };
        points.push((e, report.energy.total));
    }
    sweep_report(&points, params, expect_defect)
}

/// `μ(B̄_r)/2r`: energy of the ball over `2r |log ε|`.
pub fn line_density(field: &QField, params: &MaterialParams, center: &Vector3<f64>, radius: f64) -> Result<f64, VerifyError> {
    let region = Region::Ball { center: *center, radius };
    Ok(field::mu_measure(field, params, &region)? / (2.0 * radius))
}

pub fn check_line_density(
    field: &QField,
    params: &MaterialParams,
    center: &Vector3<f64>,
    radius: f64,
) -> Result<CheckReport, VerifyError> {
    let d = line_density(field, params, center, radius)?;
    let k = params.kappa_star;
    Ok(CheckReport::new(
        "line_density",
        field.epsilon(),
        field.h(),
        region_label(&Region::Ball { center: *center, radius }),
        vec![
            res("relative_error", (d - k).abs() / k, tol::LINE_DENSITY),
            res("density", d, f64::INFINITY),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Domain, Grid};
    use std::sync::Arc;

    fn ball(n: usize, q: QTensor) -> Arc<Domain> {
        let g = Grid::centered(Vector3::zeros(), Vector3::repeat(1.0), 2.0 / n as f64);
        Arc::new(Domain::build(g, false, |x| x.norm() < 1.0, |_| q).unwrap())
    }

    #[test]
    fn constant_field_passes_everything() {
        let p = MaterialParams::default();
        let q = QTensor::uniaxial(p.s_star, &Vector3::new(1.0, 2.0, 2.0).normalize());
        let f = QField::constant(ball(24, q), q, 0.2).unwrap();
        let c = Vector3::zeros();
        assert!(check_el_residual(&f, &p, 1e-6).pass);
        let po = check_pohozaev(&f, &p, &c, 0.5).unwrap();
        assert!(po.pass && po.value("volume_side").unwrap().abs() < 1e-9);
        assert!(check_monotonicity(&f, &p, &c, &[0.2, 0.3, 0.4, 0.5]).unwrap().pass);
        let bx = Region::Box {
            min: Vector3::repeat(-0.5),
            max: Vector3::repeat(0.5),
        };
        assert!(check_star_bound(&f, &p, &bx).unwrap().pass);
        let se = check_stress_energy(&f, &p, &bx, 1).unwrap();
        assert!(se.pass && se.residuals[0].value == 0.0);
    }

    #[test]
    fn small_ball_is_rejected() {
        let p = MaterialParams::default();
        let q = QTensor::uniaxial(p.s_star, &Vector3::x());
        let f = QField::constant(ball(16, q), q, 0.25).unwrap();
        assert!(matches!(
            check_pohozaev(&f, &p, &Vector3::zeros(), 0.2),
            Err(VerifyError::BallTooSmall { .. })
        ));
    }

    #[test]
    fn bump_jacobian_matches_differences() {
        let x = BumpField {
            center: Vector3::new(0.1, 0.0, -0.1),
            radius: 0.4,
            amplitude: Vector3::new(0.3, -0.7, 0.2),
        };
        let val = |p: &Vector3<f64>| {
            let s = 1.0 - ((p - x.center) / x.radius).norm_squared();
            x.amplitude * s.max(0.0).powi(3)
        };
        let p = Vector3::new(0.2, 0.1, 0.0);
        let j = x.jacobian(&p);
        let d = 1e-6;
        for b in 0..3 {
            let mut e = Vector3::zeros();
            e[b] = d;
            let col = (val(&(p + e)) - val(&(p - e))) / (2.0 * d);
            for a in 0..3 {
                assert!((col[a] - j[(a, b)]).abs() < 1e-7);
            }
        }
        // the bound dominates sampled values
        for k in 0..200 {
            let t = k as f64 / 200.0;
            let q = x.center + Vector3::new(t, 0.3 * t, -0.2 * t) * x.radius;
            assert!(x.jacobian(&q).norm() <= x.lipschitz() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn log_slope_recovers_a_line() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&e: &f64| (e, 3.0 * (1.0 / e).ln() + 2.0)).collect();
        let (s, c) = fit_log_slope(&pts);
        assert!((s - 3.0).abs() < 1e-12 && (c - 2.0).abs() < 1e-12);
        assert!(matches!(
            sweep_report(&pts[..2], &MaterialParams::default(), true),
            Err(VerifyError::SweepTooShort(2))
        ));
    }
}
