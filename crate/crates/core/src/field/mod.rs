//! Q-tensor fields on structured grids.
//!
//! A [`Domain`] is a box of cubic cells of side `h`, each tagged interior,
//! Dirichlet (one-cell layer carrying boundary values) or outside. Planar
//! domains have `nz = 1` and no derivatives along `z`. Axisymmetric domains
//! are planar sections in the `(ρ, z)` half-plane stored as `(x, y)`; their
//! energies carry the weight `2πρ`.
//!
//! The discrete energy uses forward differences across faces and the
//! midpoint rule on cells:
//!
//! ```text
//! E = Σ_faces ½ w_f |Q_j - Q_i|² h^(d-2) + Σ_interior w_i f(Q_i) h^d / ε²
//! ```
//!
//! where a face counts when both cells are active and at least one is
//! interior. The weights are `1` in Cartesian domains and `ρ` (times a
//! global `2π`) in axisymmetric ones.

pub mod vtk;

use crate::potential::{self, MaterialParams};
use crate::qtensor::{self, QTensor};
use crate::reduce::{tree_sum, CHUNK};
use nalgebra::Vector3;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("domain has no interior cell")]
    NoInterior,
    #[error("grid shape {0:?} must have nx, ny >= 3 and nz = 1 or nz >= 3")]
    BadShape([usize; 3]),
    #[error("epsilon = {eps} is below 2h = {two_h}; the defect core would not be resolved")]
    EpsilonTooSmall { eps: f64, two_h: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("axisymmetric section needs every cell at ρ > 0 (leftmost centre at {0})")]
    NonPositiveRadius(f64),
    #[error("ball centre {0:?} lies outside the grid bounding box")]
    BallOutsideDomain([f64; 3]),
    #[error("|log ε| = {0:e} is too small to normalise by")]
    EpsilonTooLarge(f64),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellClass {
    Outside = 0,
    Interior = 1,
    Dirichlet = 2,
}

/// Cell-centred box: `shape` cells with centre of cell `(0,0,0)` at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub shape: [usize; 3],
    pub h: f64,
    pub origin: Vector3<f64>,
}

impl Grid {
    /// Grid symmetric about `center` that covers `[center - half, center + half]`
    /// with one spare layer of cells on each side. Pass `half.z = 0` for a
    /// planar grid.
    pub fn centered(center: Vector3<f64>, half: Vector3<f64>, h: f64) -> Grid {
        let count = |e: f64| -> usize {
            if e <= 0.0 {
                1
            } else {
                (2.0 * e / h - 1e-9).ceil() as usize + 2
            }
        };
        let shape = [count(half.x), count(half.y), count(half.z)];
        let origin = Vector3::new(
            center.x - 0.5 * (shape[0] - 1) as f64 * h,
            center.y - 0.5 * (shape[1] - 1) as f64 * h,
            center.z - 0.5 * (shape[2] - 1) as f64 * h,
        );
        Grid { shape, h, origin }
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.shape[0] * (iy + self.shape[1] * iz)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let nx = self.shape[0];
        let ny = self.shape[1];
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    #[inline]
    pub fn center(&self, i: usize) -> Vector3<f64> {
        let [ix, iy, iz] = self.coords(i);
        self.origin + Vector3::new(ix as f64, iy as f64, iz as f64) * self.h
    }

    pub fn is_planar(&self) -> bool {
        self.shape[2] == 1
    }

    pub fn dim(&self) -> usize {
        if self.is_planar() {
            2
        } else {
            3
        }
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.shape[0], self.shape[0] * self.shape[1]]
    }
}

/// Where the homogeneous extension of the boundary datum is centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Center {
    Point(Vector3<f64>),
    /// Nearest point on the line through `origin` with direction `dir`.
    Line {
        origin: Vector3<f64>,
        dir: Vector3<f64>,
    },
}

/// A star centre, optionally restricted to the ball `(centre, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarRule {
    pub region: Option<(Vector3<f64>, f64)>,
    pub center: Center,
}

#[derive(Debug, Clone)]
pub struct Domain {
    grid: Grid,
    axisymmetric: bool,
    class: Vec<CellClass>,
    boundary: Vec<QTensor>,
    interior: Vec<u32>,
    dirichlet: Vec<u32>,
    star: Vec<StarRule>,
    // per-ix weights: cell, face towards -x, face towards +x
    w_cell: Vec<f64>,
    w_minus: Vec<f64>,
    w_plus: Vec<f64>,
}

impl Domain {
    /// Voxelizes `inside` on `grid`: cells with centres inside are interior,
    /// their outside face neighbours form the Dirichlet layer, and inside
    /// cells on the edge of the array are Dirichlet too. The datum is
    /// sampled at Dirichlet cell centres.
    pub fn build(
        grid: Grid,
        axisymmetric: bool,
        inside: impl Fn(&Vector3<f64>) -> bool,
        datum: impl Fn(&Vector3<f64>) -> QTensor,
    ) -> Result<Domain, FieldError> {
        let [nx, ny, nz] = grid.shape;
        if nx < 3 || ny < 3 || nz == 2 || (axisymmetric && nz != 1) {
            return Err(FieldError::BadShape(grid.shape));
        }
        if axisymmetric && grid.origin.x <= 0.0 {
            return Err(FieldError::NonPositiveRadius(grid.origin.x));
        }
        let n = grid.len();
        let planar = grid.is_planar();
        let mask: Vec<bool> = (0..n).map(|i| inside(&grid.center(i))).collect();
        let on_edge = |i: usize| {
            let [ix, iy, iz] = grid.coords(i);
            ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 || (!planar && (iz == 0 || iz == nz - 1))
        };
        let mut class = vec![CellClass::Outside; n];
        for i in 0..n {
            if mask[i] {
                class[i] = if on_edge(i) {
                    CellClass::Dirichlet
                } else {
                    CellClass::Interior
                };
            }
        }
        let strides = grid.strides();
        let dims = grid.dim();
        for i in 0..n {
            if class[i] != CellClass::Interior {
                continue;
            }
            for s in strides.iter().take(dims) {
                for j in [i - s, i + s] {
                    if class[j] == CellClass::Outside {
                        class[j] = CellClass::Dirichlet;
                    }
                }
            }
        }
        let interior: Vec<u32> = (0..n)
            .filter(|&i| class[i] == CellClass::Interior)
            .map(|i| i as u32)
            .collect();
        if interior.is_empty() {
            return Err(FieldError::NoInterior);
        }
        let dirichlet: Vec<u32> = (0..n)
            .filter(|&i| class[i] == CellClass::Dirichlet)
            .map(|i| i as u32)
            .collect();
        let mut boundary = vec![QTensor::ZERO; n];
        for &i in &dirichlet {
            boundary[i as usize] = datum(&grid.center(i as usize));
        }
        let (w_cell, w_minus, w_plus) = if axisymmetric {
            let rho = |ix: usize| grid.origin.x + ix as f64 * grid.h;
            (
                (0..nx).map(rho).collect(),
                (0..nx).map(|ix| rho(ix) - 0.5 * grid.h).collect(),
                (0..nx).map(|ix| rho(ix) + 0.5 * grid.h).collect(),
            )
        } else {
            (vec![1.0; nx], vec![1.0; nx], vec![1.0; nx])
        };
        Ok(Domain {
            grid,
            axisymmetric,
            class,
            boundary,
            interior,
            dirichlet,
            star: Vec::new(),
            w_cell,
            w_minus,
            w_plus,
        })
    }

    pub fn with_star_rules(mut self, rules: Vec<StarRule>) -> Self {
        self.star = rules;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> [usize; 3] {
        self.grid.shape
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.axisymmetric
    }

    pub fn class(&self, i: usize) -> CellClass {
        self.class[i]
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.class
    }

    pub fn boundary_value(&self, i: usize) -> QTensor {
        self.boundary[i]
    }

    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    pub fn dirichlet(&self) -> &[u32] {
        &self.dirichlet
    }

    pub fn center(&self, i: usize) -> Vector3<f64> {
        self.grid.center(i)
    }

    pub fn star_rules(&self) -> &[StarRule] {
        &self.star
    }

    /// First star rule whose region contains `x`.
    pub fn star_rule(&self, x: &Vector3<f64>) -> Option<&StarRule> {
        self.star.iter().find(|r| match r.region {
            None => true,
            Some((c, rad)) => (x - c).norm() <= rad,
        })
    }

    /// Star centre governing the point `x`, from the first matching rule.
    pub fn star_center(&self, x: &Vector3<f64>) -> Option<Vector3<f64>> {
        let rule = self.star_rule(x)?;
        Some(match rule.center {
            Center::Point(c) => c,
            Center::Line { origin, dir } => {
                let d = dir.normalize();
                origin + d * (x - origin).dot(&d)
            }
        })
    }

    /// Volume of one cell: `h^d`, times `2π` for axisymmetric sections
    /// (multiply by the cell weight for the physical volume).
    pub fn cell_measure(&self) -> f64 {
        let base = self.grid.h.powi(self.grid.dim() as i32);
        if self.axisymmetric {
            2.0 * PI * base
        } else {
            base
        }
    }

    /// Weight of cell `i` in the energy (`ρ` for axisymmetric sections, else 1).
    pub fn cell_weight(&self, i: usize) -> f64 {
        self.w_cell[self.grid.coords(i)[0]]
    }

    /// Largest boundary value norm.
    pub fn boundary_sup(&self) -> f64 {
        self.dirichlet
            .iter()
            .map(|&i| self.boundary[i as usize].norm())
            .fold(0.0, f64::max)
    }

    /// Radius of the invariant ball of the flow: `max(√(2/3) s*, sup |g|)`.
    pub fn linfty_radius(&self, params: &MaterialParams) -> f64 {
        params.linfty_radius().max(self.boundary_sup())
    }

    /// `max_i Σ_faces w_f / w_i` over interior cells: `2d` for Cartesian grids.
    pub fn max_face_weight_ratio(&self) -> f64 {
        let d = self.grid.dim() as f64;
        (0..self.grid.shape[0])
            .map(|ix| (self.w_minus[ix] + self.w_plus[ix] + 2.0 * (d - 1.0) * self.w_cell[ix]) / self.w_cell[ix])
            .fold(0.0, f64::max)
    }

    /// Replaces the boundary values by `datum` evaluated at Dirichlet centres.
    pub fn set_boundary(&mut self, datum: impl Fn(&Vector3<f64>) -> QTensor) {
        for &i in &self.dirichlet {
            self.boundary[i as usize] = datum(&self.grid.center(i as usize));
        }
    }
}

/// Discrete Q-tensor field with its coherence length.
#[derive(Debug, Clone)]
pub struct QField {
    domain: Arc<Domain>,
    values: Vec<QTensor>,
    epsilon: f64,
}

impl QField {
    /// Boundary values are copied into the Dirichlet cells and outside cells
    /// are zeroed, whatever `values` holds there.
    pub fn new(domain: Arc<Domain>, mut values: Vec<QTensor>, epsilon: f64) -> Result<QField, FieldError> {
        if values.len() != domain.len() {
            return Err(FieldError::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        let two_h = 2.0 * domain.h();
        if !(epsilon >= two_h * (1.0 - 1e-9)) {
            return Err(FieldError::EpsilonTooSmall { eps: epsilon, two_h });
        }
        for (i, v) in values.iter_mut().enumerate() {
            match domain.class(i) {
                CellClass::Outside => *v = QTensor::ZERO,
                CellClass::Dirichlet => *v = domain.boundary_value(i),
                CellClass::Interior => {}
            }
        }
        Ok(QField {
            domain,
            values,
            epsilon,
        })
    }

    pub fn constant(domain: Arc<Domain>, q: QTensor, epsilon: f64) -> Result<QField, FieldError> {
        let n = domain.len();
        QField::new(domain, vec![q; n], epsilon)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[QTensor] {
        &self.values
    }

    pub fn value(&self, i: usize) -> QTensor {
        self.values[i]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn h(&self) -> f64 {
        self.domain.h()
    }

    pub fn into_values(self) -> Vec<QTensor> {
        self.values
    }

    /// Applies `f` to every interior value.
    pub fn map_interior(&self, f: impl Fn(usize, &QTensor) -> QTensor + Sync) -> QField {
        let mut out = self.clone();
        for &i in self.domain.interior() {
            let i = i as usize;
            out.values[i] = f(i, &self.values[i]);
        }
        out
    }

    /// Same cellwise map applied to interior and boundary alike, with the
    /// domain's boundary values transformed accordingly.
    pub fn map_all(&self, f: impl Fn(&QTensor) -> QTensor) -> QField {
        let mut domain = (*self.domain).clone();
        let dirichlet: Vec<u32> = domain.dirichlet.clone();
        for &i in &dirichlet {
            domain.boundary[i as usize] = f(&domain.boundary[i as usize]);
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, q)| match self.domain.class(i) {
                CellClass::Outside => QTensor::ZERO,
                _ => f(q),
            })
            .collect();
        QField {
            domain: Arc::new(domain),
            values,
            epsilon: self.epsilon,
        }
    }

    /// The same values with a different coherence length.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<QField, FieldError> {
        QField::new(self.domain.clone(), self.values.clone(), epsilon)
    }

    /// `φ` at every cell (zero outside the domain).
    pub fn phi_map(&self, s_star: f64) -> Vec<f64> {
        self.values
            .par_iter()
            .with_min_len(CHUNK)
            .enumerate()
            .map(|(i, q)| match self.domain.class(i) {
                CellClass::Outside => 0.0,
                _ => qtensor::phi(q, s_star),
            })
            .collect()
    }

    /// Radial truncation `Q ↦ Q min(1, m / |Q|)` on interior cells.
    pub fn truncated(&self, m: f64) -> QField {
        self.map_interior(|_, q| truncate(q, m))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn truncate(q: &QTensor, m: f64) -> QTensor {
    let n = q.norm();
    if n > m {
        *q * (m / n)
    } else {
        *q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub bulk: f64,
    pub total: f64,
    /// `½|∇Q|² + ε⁻² f(Q)` per cell, with each face's share split evenly
    /// between its two cells. Zero outside the domain.
    pub per_cell_density: Vec<f64>,
}

/// Totals of one sweep over the interior cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Sweep {
    pub elastic: f64,
    pub bulk: f64,
    pub sup_residual: f64,
}

impl Sweep {
    pub fn total(&self) -> f64 {
        self.elastic + self.bulk
    }
}

/// Evaluates both energy parts and writes the discrete Euler-Lagrange
/// residual `-Δ_h Q + ε⁻² ∇f(Q)` of each interior cell (in interior order)
/// into `residual`.
pub(crate) fn sweep(
    domain: &Domain,
    values: &[QTensor],
    epsilon: f64,
    params: &MaterialParams,
    residual: &mut [QTensor],
) -> Sweep {
    let grid = &domain.grid;
    let h2 = grid.h * grid.h;
    let inv_eps2 = 1.0 / (epsilon * epsilon);
    let strides = grid.strides();
    let dims = grid.dim();
    let nx = grid.shape[0];
    let class = &domain.class;
    let interior = &domain.interior;
    let (w_cell, w_minus, w_plus) = (&domain.w_cell, &domain.w_minus, &domain.w_plus);
    let partial: Vec<(f64, f64, f64)> = residual
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, out)| {
            let base = c * CHUNK;
            let mut el = 0.0;
            let mut bulk = 0.0;
            let mut sup = 0.0f64;
            for (k, r) in out.iter_mut().enumerate() {
                let i = interior[base + k] as usize;
                let ix = i % nx;
                let q = values[i];
                let wc = w_cell[ix];
                let mut lap = [0.0; 5];
                let mut face = 0.0;
                for (d, &s) in strides.iter().enumerate().take(dims) {
                    for (j, wf, forward) in [
                        (i - s, if d == 0 { w_minus[ix] } else { wc }, false),
                        (i + s, if d == 0 { w_plus[ix] } else { wc }, true),
                    ] {
                        let p = &values[j].0;
                        let mut sq = 0.0;
                        for m in 0..5 {
                            let diff = p[m] - q.0[m];
                            lap[m] += wf * diff;
                            sq += diff * diff;
                        }
                        if forward || class[j] == CellClass::Dirichlet {
                            face += wf * sq;
                        }
                    }
                }
                let (f, g) = potential::bulk_f_and_grad(params, &q);
                let scale = 1.0 / (h2 * wc);
                let mut rn = 0.0;
                for m in 0..5 {
                    let v = -lap[m] * scale + g.0[m] * inv_eps2;
                    r.0[m] = v;
                    rn += v * v;
                }
                sup = sup.max(rn);
                el += 0.5 * face / h2;
                bulk += wc * f * inv_eps2;
            }
            (el, bulk, sup.sqrt())
        })
        .collect();
    let measure = domain.cell_measure();
    let els: Vec<f64> = partial.iter().map(|p| p.0).collect();
    let bulks: Vec<f64> = partial.iter().map(|p| p.1).collect();
    Sweep {
        elastic: tree_sum(&els) * measure,
        bulk: tree_sum(&bulks) * measure,
        sup_residual: partial.iter().map(|p| p.2).fold(0.0, f64::max),
    }
}

/// Discrete energy with its per-cell density.
pub fn energy(field: &QField, params: &MaterialParams) -> EnergyBreakdown {
    let domain = &*field.domain;
    let mut scratch = vec![QTensor::ZERO; domain.interior.len()];
    let s = sweep(domain, &field.values, field.epsilon, params, &mut scratch);
    EnergyBreakdown {
        elastic: s.elastic,
        bulk: s.bulk,
        total: s.elastic + s.bulk,
        per_cell_density: density(field, params),
    }
}

/// Interior sup-norm of the discrete Euler-Lagrange residual
/// `-Δ_h Q + ε⁻² ∇f(Q)`.
pub fn el_residual_sup(field: &QField, params: &MaterialParams) -> f64 {
    let mut scratch = vec![QTensor::ZERO; field.domain.interior.len()];
    sweep(&field.domain, &field.values, field.epsilon, params, &mut scratch).sup_residual
}

/// Discrete Euler-Lagrange residual per interior cell, in interior order.
pub fn el_residual(field: &QField, params: &MaterialParams) -> Vec<QTensor> {
    let mut out = vec![QTensor::ZERO; field.domain.interior.len()];
    sweep(&field.domain, &field.values, field.epsilon, params, &mut out);
    out
}

fn density(field: &QField, params: &MaterialParams) -> Vec<f64> {
    let domain = &*field.domain;
    let grid = &domain.grid;
    let h2 = grid.h * grid.h;
    let inv_eps2 = 1.0 / (field.epsilon * field.epsilon);
    let strides = grid.strides();
    let nx = grid.shape[0];
    let mut dens = vec![0.0; domain.len()];
    for &i in &domain.interior {
        let i = i as usize;
        let ix = i % nx;
        let q = field.values[i];
        dens[i] += potential::bulk_f(params, &q) * inv_eps2;
        for (d, &s) in strides.iter().enumerate().take(grid.dim()) {
            for (j, wf, forward) in [
                (i - s, if d == 0 { domain.w_minus[ix] } else { domain.w_cell[ix] }, false),
                (i + s, if d == 0 { domain.w_plus[ix] } else { domain.w_cell[ix] }, true),
            ] {
                if !(forward || domain.class[j] == CellClass::Dirichlet) {
                    continue;
                }
                let e = 0.5 * wf * (field.values[j] - q).norm_squared() / h2;
                dens[i] += 0.5 * e / domain.w_cell[ix];
                dens[j] += 0.5 * e / domain.w_cell[j % nx];
            }
        }
    }
    dens
}

fn sum_density_where(field: &QField, params: &MaterialParams, keep: impl Fn(&Vector3<f64>) -> bool) -> f64 {
    let domain = &*field.domain;
    let dens = density(field, params);
    let terms: Vec<f64> = (0..domain.len())
        .filter(|&i| domain.class[i] != CellClass::Outside && keep(&domain.center(i)))
        .map(|i| dens[i] * domain.cell_weight(i))
        .collect();
    tree_sum(&terms) * domain.cell_measure()
}

fn check_center(field: &QField, c: &Vector3<f64>) -> Result<(), FieldError> {
    let g = field.domain.grid();
    let lo = g.origin - Vector3::repeat(0.5 * g.h);
    let hi = lo + Vector3::new(g.shape[0] as f64, g.shape[1] as f64, g.shape[2] as f64) * g.h;
    let planar = g.is_planar();
    let ok = (0..3).all(|k| (planar && k == 2) || (c[k] >= lo[k] && c[k] <= hi[k]));
    if ok {
        Ok(())
    } else {
        Err(FieldError::BallOutsideDomain([c.x, c.y, c.z]))
    }
}

/// Energy of the cells whose centres lie in the closed ball.
pub fn energy_in_ball(
    field: &QField,
    params: &MaterialParams,
    center: &Vector3<f64>,
    radius: f64,
) -> Result<f64, FieldError> {
    check_center(field, center)?;
    Ok(sum_density_where(field, params, |x| (x - center).norm() <= radius))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball { center: Vector3<f64>, radius: f64 },
    Box { min: Vector3<f64>, max: Vector3<f64> },
}

impl Region {
    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        match self {
            Region::Ball { center, radius } => (x - center).norm() <= *radius,
            Region::Box { min, max } => (0..3).all(|k| x[k] >= min[k] && x[k] <= max[k]),
        }
    }
}

/// Energy of `region` normalised by `|log ε|`.
pub fn mu_measure(field: &QField, params: &MaterialParams, region: &Region) -> Result<f64, FieldError> {
    let log = field.epsilon.ln().abs();
    if log < 1e-6 {
        return Err(FieldError::EpsilonTooLarge(log));
    }
    if let Region::Ball { center, .. } = region {
        check_center(field, center)?;
    }
    Ok(sum_density_where(field, params, |x| region.contains(x)) / log)
}
