//! Explicit gradient flow for the discrete energy with Dirichlet data.
//!
//! Each step moves interior cells by `-dt (-Δ_h Q + ε⁻² ∇f(Q))`, optionally
//! plus a heavy-ball term. A step that would raise the energy is rejected:
//! first the momentum is dropped, then the time step is halved. After 100
//! accepted steps a reduced step may double again, up to its initial value.
//! The accepted energies therefore never increase.

use crate::field::{self, CellClass, Domain, EnergyBreakdown, FieldError, QField};
use crate::potential::MaterialParams;
use crate::qtensor::QTensor;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("energy kept increasing after {halvings} consecutive step halvings at iteration {iteration}")]
    NoDescent { iteration: usize, halvings: usize },
    #[error("radial initialization needs a star centre for the point {0:?}")]
    NoCenter([f64; 3]),
    #[error("the section domain is not axisymmetric")]
    NotAxisymmetric,
    #[error("invalid solver setting: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub dt_safety: f64,
    pub max_iters: usize,
    /// Convergence when `sup |R| ≤ grad_tol (1 + ε⁻²)` with `R` the
    /// discrete Euler-Lagrange residual.
    pub grad_tol: f64,
    pub linfty_projection: bool,
    /// Heavy-ball extrapolation `β_k (Q_k - Q_{k-1})` with `β_k = (k-1)/(k+2)`,
    /// reset whenever the extrapolated step would raise the energy.
    pub momentum: bool,
    pub seed: u64,
    /// Trace stride in accepted iterations (0 keeps only the endpoints).
    pub log_every: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            dt_safety: 0.9,
            max_iters: 200_000,
            grad_tol: 1e-4,
            linfty_projection: true,
            momentum: true,
            seed: 0,
            log_every: 100,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(SolverError::BadConfig(format!("dt_safety = {} not in (0, 1]", self.dt_safety)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(SolverError::BadConfig(format!("grad_tol = {} must be positive", self.grad_tol)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::BadConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub elastic: f64,
    pub bulk: f64,
    pub total: f64,
    pub residual: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy: EnergyBreakdown,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// Final sup-norm of the discrete Euler-Lagrange residual.
    pub residual: f64,
    pub dt_initial: f64,
    pub halvings: usize,
    /// Momentum resets after a rejected extrapolated step.
    pub restarts: usize,
    pub seed: u64,
    pub init: String,
}

impl SolveReport {
    pub fn write_trace_csv(&self, path: &Path, header: &str) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for line in header.lines() {
            writeln!(f, "# {line}")?;
        }
        writeln!(f, "iter,elastic,bulk,total,residual,dt")?;
        for r in &self.trace {
            writeln!(
                f,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.iter, r.elastic, r.bulk, r.total, r.residual, r.dt
            )?;
        }
        f.flush()
    }
}

/// Initial time step: `safety · min(h² / (2 max Σ w_f / w_i), ε² / Λ)` with
/// `Λ` bounding the bulk Hessian on the invariant ball.
pub fn time_step(domain: &Domain, epsilon: f64, params: &MaterialParams, safety: f64) -> f64 {
    let h = domain.h();
    let lap = h * h / (2.0 * domain.max_face_weight_ratio());
    let lam = params.hessian_bound(domain.linfty_radius(params));
    safety * lap.min(epsilon * epsilon / lam)
}

/// Relaxes a field on a Cartesian domain.
pub fn relax(field: &QField, params: &MaterialParams, cfg: &SolveConfig) -> Result<(QField, SolveReport), SolverError> {
    flow(field, params, cfg, 0, &mut |_, _| {})
}

/// Observer called with the iteration and current field.
pub type Observer<'a> = dyn FnMut(usize, &QField) + 'a;

/// Relaxes either kind of domain, handing the field to `observer` at the
/// start and every `every` accepted iterations (never when `every` is 0).
pub fn relax_observed(
    field: &QField,
    params: &MaterialParams,
    cfg: &SolveConfig,
    every: usize,
    observer: &mut Observer<'_>,
) -> Result<(QField, SolveReport), SolverError> {
    flow(field, params, cfg, every, observer)
}

/// Relaxes a field on an axisymmetric `(ρ, z)` section with the weighted
/// energy `2π ∫ (½|∇P|² + ε⁻² f(P)) ρ`.
pub fn relax_axisym(
    field: &QField,
    params: &MaterialParams,
    cfg: &SolveConfig,
) -> Result<(QField, SolveReport), SolverError> {
    if !field.domain().is_axisymmetric() {
        return Err(SolverError::NotAxisymmetric);
    }
    flow(field, params, cfg, 0, &mut |_, _| {})
}

fn flow(
    field: &QField,
    params: &MaterialParams,
    cfg: &SolveConfig,
    every: usize,
    observer: &mut Observer<'_>,
) -> Result<(QField, SolveReport), SolverError> {
    cfg.validate()?;
    let domain = field.domain().clone();
    let eps = field.epsilon();
    let interior = domain.interior();
    let m = domain.linfty_radius(params);
    let dt0 = time_step(&domain, eps, params, cfg.dt_safety);
    let tol = cfg.grad_tol * (1.0 + 1.0 / (eps * eps));

    let mut cur = field.values().to_vec();
    if cfg.linfty_projection {
        for &i in interior {
            cur[i as usize] = field::truncate(&cur[i as usize], m);
        }
    }
    let mut next = cur.clone();
    let mut prev = cur.clone();
    let mut res_cur = vec![QTensor::ZERO; interior.len()];
    let mut res_next = res_cur.clone();
    let mut s_cur = field::sweep(&domain, &cur, eps, params, &mut res_cur);
    let e0 = s_cur.total();
    let slack = 1e-12 * e0.abs().max(f64::MIN_POSITIVE);

    let row = |iter: usize, s: &field::Sweep, dt: f64| TraceRow {
        iter,
        elastic: s.elastic,
        bulk: s.bulk,
        total: s.total(),
        residual: s.sup_residual,
        dt,
    };
    let clamp = cfg.linfty_projection.then_some(m);
    let mut trace = vec![row(0, &s_cur, dt0)];
    let mut dt = dt0;
    let mut converged = false;
    let mut iterations = 0;
    let mut halvings = 0;
    let mut restarts = 0;
    let mut since_cut = 0usize;
    let mut streak = 0usize;
    if every > 0 {
        observer(0, &QField::new(domain.clone(), cur.clone(), eps)?);
    }
    for iter in 1..=cfg.max_iters {
        iterations = iter;
        if s_cur.sup_residual <= tol {
            converged = true;
            break;
        }
        let mut consecutive = 0;
        let mut coast = cfg.momentum && streak > 0;
        let s_next = loop {
            let beta = if coast {
                (streak as f64 - 1.0) / (streak as f64 + 2.0)
            } else {
                0.0
            };
            step(interior, &cur, &prev, &res_cur, dt, beta, clamp, &mut next);
            let s = field::sweep(&domain, &next, eps, params, &mut res_next);
            if s.total() <= s_cur.total() + slack {
                break s;
            }
            if coast {
                coast = false;
                streak = 0;
                restarts += 1;
                continue;
            }
            consecutive += 1;
            halvings += 1;
            if consecutive > 30 {
                return Err(SolverError::NoDescent {
                    iteration: iter,
                    halvings: consecutive,
                });
            }
            dt *= 0.5;
            since_cut = 0;
        };
        // prev <- cur <- next, recycling the oldest buffer
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        std::mem::swap(&mut res_cur, &mut res_next);
        s_cur = s_next;
        streak += 1;
        since_cut += 1;
        if dt < dt0 && since_cut >= 100 {
            dt = (2.0 * dt).min(dt0);
            since_cut = 0;
        }
        if cfg.log_every > 0 && iter % cfg.log_every == 0 {
            trace.push(row(iter, &s_cur, dt));
        }
        if every > 0 && iter % every == 0 {
            observer(iter, &QField::new(domain.clone(), cur.clone(), eps)?);
        }
    }
    if trace.last().map(|r| r.iter) != Some(iterations) {
        trace.push(row(iterations, &s_cur, dt));
    }
    let out = QField::new(domain, cur, eps)?;
    let energy = field::energy(&out, params);
    Ok((
        out,
        SolveReport {
            iterations,
            energy,
            trace,
            converged,
            residual: s_cur.sup_residual,
            dt_initial: dt0,
            halvings,
            restarts,
            seed: cfg.seed,
            init: String::new(),
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn step(
    interior: &[u32],
    cur: &[QTensor],
    prev: &[QTensor],
    res: &[QTensor],
    dt: f64,
    beta: f64,
    clamp: Option<f64>,
    next: &mut [QTensor],
) {
    for (&i, r) in interior.iter().zip(res) {
        let i = i as usize;
        let (c, p) = (&cur[i].0, &prev[i].0);
        let mut q = [0.0; 5];
        for m in 0..5 {
            q[m] = c[m] - dt * r.0[m] + beta * (c[m] - p[m]);
        }
        let q = QTensor(q);
        next[i] = match clamp {
            Some(m) => field::truncate(&q, m),
            None => q,
        };
    }
}

/// Closure giving an initial value at a point.
pub type ProfileFn = Arc<dyn Fn(&Vector3<f64>) -> QTensor + Send + Sync>;

#[derive(Clone)]
pub enum InitStrategy {
    /// Discrete harmonic extension of the boundary values (SOR sweeps).
    HarmonicLikeSmooth,
    /// Degree-zero homogeneous extension of the boundary values from the
    /// domain's star centres.
    RadialFromBoundary,
    Random(u64),
    Profile(ProfileFn),
}

impl fmt::Debug for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitStrategy::HarmonicLikeSmooth => write!(f, "harmonic"),
            InitStrategy::RadialFromBoundary => write!(f, "radial"),
            InitStrategy::Random(s) => write!(f, "random({s})"),
            InitStrategy::Profile(_) => write!(f, "profile"),
        }
    }
}

pub fn initialize(domain: Arc<Domain>, strategy: &InitStrategy, epsilon: f64) -> Result<QField, SolverError> {
    let n = domain.len();
    let mut values = vec![QTensor::ZERO; n];
    for &i in domain.dirichlet() {
        values[i as usize] = domain.boundary_value(i as usize);
    }
    match strategy {
        InitStrategy::Profile(p) => {
            for &i in domain.interior() {
                values[i as usize] = p(&domain.center(i as usize));
            }
        }
        InitStrategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let scale = 0.5 * domain.boundary_sup().max(1e-3) / 5f64.sqrt();
            for &i in domain.interior() {
                let mut c = [0.0; 5];
                for x in c.iter_mut() {
                    *x = scale * rng.sample::<f64, _>(StandardNormal);
                }
                values[i as usize] = QTensor(c);
            }
        }
        InitStrategy::HarmonicLikeSmooth => harmonic_fill(&domain, &mut values),
        InitStrategy::RadialFromBoundary => {
            let filled: Result<Vec<(usize, QTensor)>, SolverError> = domain
                .interior()
                .par_iter()
                .with_min_len(256)
                .map(|&i| {
                    let i = i as usize;
                    radial_value(&domain, i).map(|q| (i, q))
                })
                .collect();
            for (i, q) in filled? {
                values[i] = q;
            }
        }
    }
    Ok(QField::new(domain, values, epsilon)?)
}

/// Relaxes from an initialization and records it in the report.
pub fn solve(
    domain: Arc<Domain>,
    strategy: &InitStrategy,
    epsilon: f64,
    params: &MaterialParams,
    cfg: &SolveConfig,
) -> Result<(QField, SolveReport), SolverError> {
    let init = initialize(domain, strategy, epsilon)?;
    let (f, mut rep) = flow(&init, params, cfg, 0, &mut |_, _| {})?;
    rep.init = format!("{strategy:?}");
    Ok((f, rep))
}

fn harmonic_fill(domain: &Domain, values: &mut [QTensor]) {
    let interior = domain.interior();
    let n_dir = domain.dirichlet().len().max(1) as f64;
    let mean = domain
        .dirichlet()
        .iter()
        .fold(QTensor::ZERO, |acc, &i| acc + domain.boundary_value(i as usize))
        * (1.0 / n_dir);
    for &i in interior {
        values[i as usize] = mean;
    }
    let grid = domain.grid();
    let strides = grid.strides();
    let dims = grid.dim();
    let nx = grid.shape[0];
    let h = grid.h;
    let x0 = grid.origin.x;
    let axis = domain.is_axisymmetric();
    let omega = 1.85;
    let scale = domain.boundary_sup().max(1e-12);
    for _ in 0..4000 {
        let mut change = 0.0f64;
        for &i in interior {
            let i = i as usize;
            let ix = i % nx;
            let (wm, wp, wc) = if axis {
                let rho = x0 + ix as f64 * h;
                (rho - 0.5 * h, rho + 0.5 * h, rho)
            } else {
                (1.0, 1.0, 1.0)
            };
            let mut acc = QTensor::ZERO;
            let mut wsum = 0.0;
            for (d, &s) in strides.iter().enumerate().take(dims) {
                let (a, b) = if d == 0 { (wm, wp) } else { (wc, wc) };
                acc += values[i - s] * a + values[i + s] * b;
                wsum += a + b;
            }
            let target = acc * (1.0 / wsum);
            let delta = (target - values[i]) * omega;
            change = change.max(delta.max_abs());
            values[i] += delta;
        }
        if change < 1e-9 * scale {
            break;
        }
    }
}

/// Boundary value where the ray from the star centre through cell `i`
/// leaves the domain.
fn radial_value(domain: &Domain, i: usize) -> Result<QTensor, SolverError> {
    let x = domain.center(i);
    let c = domain
        .star_center(&x)
        .ok_or(SolverError::NoCenter([x.x, x.y, x.z]))?;
    let region = domain.star_rule(&x).and_then(|r| r.region);
    let grid = domain.grid();
    let h = grid.h;
    let mut dir = x - c;
    if grid.is_planar() {
        dir.z = 0.0;
    }
    let len = dir.norm();
    if len < 1e-12 * h {
        return Ok(QTensor::ZERO);
    }
    let dir = dir / len;
    let locate = |p: &Vector3<f64>| -> Option<usize> {
        let rel = (p - grid.origin) / h;
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let r = rel[k].round();
            if r < 0.0 || r >= grid.shape[k] as f64 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(grid.index(idx[0], idx[1], idx[2]))
    };
    let mut last = i;
    let mut t = 0.0;
    let limit = 4.0 * (grid.shape[0] + grid.shape[1] + grid.shape[2]) as f64 * h;
    while t < limit {
        t += 0.25 * h;
        let p = x + dir * t;
        if let Some((rc, rad)) = region {
            if (p - rc).norm() > rad {
                break;
            }
        }
        match locate(&p) {
            Some(j) => match domain.class(j) {
                CellClass::Dirichlet => return Ok(domain.boundary_value(j)),
                CellClass::Interior => last = j,
                CellClass::Outside => break,
            },
            None => break,
        }
    }
    Ok(nearest_boundary(domain, last, &(x + dir * t)))
}

/// Dirichlet cell closest to `p` among growing cubes around cell `from`.
fn nearest_boundary(domain: &Domain, from: usize, p: &Vector3<f64>) -> QTensor {
    let grid = domain.grid();
    let [cx, cy, cz] = grid.coords(from);
    let planar = grid.is_planar();
    for reach in 1..=grid.shape.iter().copied().max().unwrap_or(1) {
        let r = reach as isize;
        let mut best: Option<(f64, usize)> = None;
        let zr = if planar { 0 } else { r };
        for dz in -zr..=zr {
            for dy in -r..=r {
                for dx in -r..=r {
                    let (x, y, z) = (cx as isize + dx, cy as isize + dy, cz as isize + dz);
                    if x < 0
                        || y < 0
                        || z < 0
                        || x >= grid.shape[0] as isize
                        || y >= grid.shape[1] as isize
                        || z >= grid.shape[2] as isize
                    {
                        continue;
                    }
                    let j = grid.index(x as usize, y as usize, z as usize);
                    if domain.class(j) == CellClass::Dirichlet {
                        let d = (grid.center(j) - p).norm();
                        if best.map_or(true, |(bd, bj)| d < bd || (d == bd && j < bj)) {
                            best = Some((d, j));
                        }
                    }
                }
            }
        }
        if let Some((_, j)) = best {
            return domain.boundary_value(j);
        }
    }
    QTensor::ZERO
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Center, Grid, StarRule};

    fn ball(n: usize, datum: impl Fn(&Vector3<f64>) -> QTensor) -> Arc<Domain> {
        let grid = Grid::centered(Vector3::zeros(), Vector3::repeat(1.0), 2.0 / n as f64);
        Arc::new(
            Domain::build(grid, false, |x| x.norm() < 1.0, datum)
                .unwrap()
                .with_star_rules(vec![StarRule {
                    region: None,
                    center: Center::Point(Vector3::zeros()),
                }]),
        )
    }

    #[test]
    fn constant_field_converges_immediately() {
        let p = MaterialParams::default();
        let q = QTensor::uniaxial(p.s_star, &Vector3::x());
        let d = ball(12, |_| q);
        let f = QField::constant(d, q, 0.4).unwrap();
        let (_, rep) = relax(&f, &p, &SolveConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert!(rep.energy.total.abs() < 1e-14);
    }

    #[test]
    fn time_step_matches_cartesian_bounds() {
        let p = MaterialParams::default();
        let d = ball(12, |_| QTensor::ZERO);
        let h = d.h();
        let dt = time_step(&d, 10.0, &p, 1.0);
        assert!((dt - h * h / 12.0).abs() < 1e-15);
    }

    #[test]
    fn radial_init_reproduces_hedgehog() {
        let p = MaterialParams::default();
        let hedgehog = |x: &Vector3<f64>| QTensor::uniaxial(p.s_star, &x.normalize());
        let d = ball(16, hedgehog);
        let f = initialize(d.clone(), &InitStrategy::RadialFromBoundary, 0.25).unwrap();
        for &i in d.interior() {
            let x = d.center(i as usize);
            let err = (f.value(i as usize) - hedgehog(&x)).norm();
            assert!(err < 0.6, "cell at {x:?} off by {err}");
        }
    }

    #[test]
    fn random_init_is_deterministic() {
        let d = ball(10, |_| QTensor::uniaxial(1.5, &Vector3::z()));
        let a = initialize(d.clone(), &InitStrategy::Random(7), 0.4).unwrap();
        let b = initialize(d, &InitStrategy::Random(7), 0.4).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn flow_decreases_energy_and_keeps_boundary() {
        let p = MaterialParams::default();
        let d = ball(12, |x| QTensor::uniaxial(p.s_star, &x.normalize()));
        let f = initialize(d.clone(), &InitStrategy::Random(3), 0.35).unwrap();
        let cfg = SolveConfig {
            max_iters: 300,
            log_every: 1,
            ..Default::default()
        };
        let (g, rep) = relax(&f, &p, &cfg).unwrap();
        for w in rep.trace.windows(2) {
            assert!(w[1].total <= w[0].total + 1e-12 * rep.trace[0].total);
        }
        for &i in d.dirichlet() {
            assert_eq!(g.value(i as usize), d.boundary_value(i as usize));
        }
    }
}
