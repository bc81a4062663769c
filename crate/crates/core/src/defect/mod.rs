//! Defect extraction: connected sublevel sets of the biaxiality gap `φ`,
//! classified into lines and points, with loop classes for lines and
//! degrees for points.

pub mod skeleton;
pub mod topology;

use crate::field::{CellClass, QField};
use crate::potential::MaterialParams;
use crate::qtensor::{self, QTensor};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub use skeleton::{junctions, skeletonize, Junction, Skeleton};
pub use topology::{
    closed_degree, disk_degree, icosphere, loop_class, polar_disk, Loop, LoopClass, SurfaceSamples, TopologyError,
};

/// Default `φ` cutoff separating cores from the far field.
pub const DEFAULT_THRESHOLD: f64 = 0.3;
/// Minimum principal extent, in cells, of a line component.
pub const LINE_MIN_EXTENT: f64 = 4.0;
/// Minimum number of skeleton nodes of a line component.
pub const LINE_MIN_NODES: usize = 3;
/// A component is a point when its diameter is at most this many `ε`.
pub const POINT_DIAMETER: f64 = 3.0;
/// Smoothing rounds applied to the skeleton before measuring length.
pub const SMOOTHING_PASSES: usize = 4;
/// Probe radii, in units of `ε`, tried in turn for loops and spheres.
pub const PROBE_RADII: [f64; 5] = [2.0, 3.0, 4.0, 6.0, 8.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DefectError {
    #[error("threshold {0} must lie in (0, 1)")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    Line,
    Point,
    Ambiguous,
}

impl DefectKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DefectKind::Line => "line",
            DefectKind::Point => "point",
            DefectKind::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Cell indices, ascending.
    pub cells: Vec<usize>,
    pub kind: DefectKind,
    pub skeleton: Skeleton,
    pub length: f64,
    pub loop_class: Option<LoopClass>,
    pub degree: Option<i32>,
    pub centroid: Vector3<f64>,
    pub diameter: f64,
    /// Unit principal axis of the cell cloud.
    pub axis: Vector3<f64>,
    /// Extent along `axis` in cells.
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectSet {
    pub threshold: f64,
    pub epsilon: f64,
    pub h: f64,
    pub components: Vec<Component>,
}

impl DefectSet {
    pub fn of_kind(&self, kind: DefectKind) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(move |c| c.kind == kind)
    }

    /// One CSV row per component after `#`-prefixed header lines.
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::new();
        for line in header.lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str("id,kind,cells,length,loop_class,degree,cx,cy,cz,threshold,epsilon,h\n");
        for (i, c) in self.components.iter().enumerate() {
            let lc = match c.loop_class {
                Some(LoopClass::Trivial) => "trivial",
                Some(LoopClass::NonTrivial) => "nontrivial",
                Some(LoopClass::Unknown) => "unknown",
                None if c.kind == DefectKind::Line => "unknown",
                _ => "",
            };
            let deg = match (c.kind, c.degree) {
                (_, Some(d)) => d.to_string(),
                (DefectKind::Point, None) if c.loop_class.is_none() => "unknown".into(),
                _ => String::new(),
            };
            let _ = writeln!(
                s,
                "{i},{},{},{:e},{lc},{deg},{:e},{:e},{:e},{:e},{:e},{:e}",
                c.kind.as_str(),
                c.cells.len(),
                c.length,
                c.centroid.x,
                c.centroid.y,
                c.centroid.z,
                self.threshold,
                self.epsilon,
                self.h
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path, header: &str) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv(header))
    }
}

/// Multilinear interpolation over the active cells around `x`; `None` when
/// less than half of the stencil weight lies on active cells.
pub fn sample(field: &QField, x: &Vector3<f64>) -> Option<QTensor> {
    let dom = field.domain();
    let g = dom.grid();
    let f = (x - g.origin) / g.h;
    let fs = [f.x, f.y, f.z];
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        if g.shape[a] == 1 {
            continue;
        }
        let fl = fs[a].floor();
        base[a] = fl as i64;
        frac[a] = fs[a] - fl;
    }
    let mut acc = QTensor::ZERO;
    let mut wsum = 0.0;
    for corner in 0..8usize {
        let mut idx = [0usize; 3];
        let mut w = 1.0;
        let mut valid = true;
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            if g.shape[a] == 1 {
                if bit == 1 {
                    valid = false;
                }
                continue;
            }
            let c = base[a] + bit as i64;
            if c < 0 || c >= g.shape[a] as i64 {
                valid = false;
                break;
            }
            idx[a] = c as usize;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if !valid || w == 0.0 {
            continue;
        }
        let i = g.index(idx[0], idx[1], idx[2]);
        if dom.class(i) == CellClass::Outside {
            continue;
        }
        acc += field.value(i).scale(w);
        wsum += w;
    }
    (wsum >= 0.5).then(|| acc.scale(1.0 / wsum))
}

/// Two unit vectors completing `t` to an orthonormal frame.
fn frame(t: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let t = t.normalize();
    let helper = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = t.cross(&helper).normalize();
    (u, t.cross(&u))
}

/// Circle of radius `radius` about `center` in the plane normal to
/// `tangent`, sampled at `n` points by interpolation.
pub fn encircling_loop(
    field: &QField,
    center: &Vector3<f64>,
    tangent: &Vector3<f64>,
    radius: f64,
    n: usize,
) -> Option<Loop> {
    let (u, v) = frame(tangent);
    let mut pts = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let th = std::f64::consts::TAU * i as f64 / n as f64;
        let p = center + radius * (th.cos() * u + th.sin() * v);
        vals.push(sample(field, &p)?);
        pts.push(p);
    }
    Some(Loop::closed(pts, vals))
}

/// Loop class of `lp` with midpoint refinement drawn from `field`.
pub fn field_loop_class(field: &QField, lp: &Loop, s_star: f64) -> Result<LoopClass, TopologyError> {
    let refine = |x: &Vector3<f64>| sample(field, x);
    loop_class(lp, s_star, Some(&refine))
}

/// Icosphere of radius `radius` about `center` sampled from `field`.
pub fn sphere_samples(field: &QField, center: &Vector3<f64>, radius: f64, levels: usize) -> Option<SurfaceSamples> {
    let (v, triangles) = icosphere(levels);
    let values = v
        .iter()
        .map(|d| sample(field, &(center + radius * d)))
        .collect::<Option<Vec<_>>>()?;
    Some(SurfaceSamples {
        values,
        triangles,
        boundary: vec![],
    })
}

/// Degree of the director lift on a sphere about `center`.
pub fn sphere_degree(field: &QField, center: &Vector3<f64>, radius: f64, s_star: f64) -> Result<Option<i32>, TopologyError> {
    match sphere_samples(field, center, radius, 3) {
        Some(s) => closed_degree(&s, s_star).map(Some),
        None => Ok(None),
    }
}

/// Mean and unit principal axis of a point cloud.
fn principal_axis(points: &[Vector3<f64>]) -> (Vector3<f64>, Vector3<f64>) {
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let k = eig.eigenvalues.imax();
    (mean, eig.eigenvectors.column(k).into_owned())
}

fn diameter(points: &[Vector3<f64>]) -> f64 {
    const EXACT: usize = 6000;
    if points.len() <= EXACT {
        let mut d2: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                d2 = d2.max((a - b).norm_squared());
            }
        }
        return d2.sqrt();
    }
    // bounding-box diagonal bounds it from above
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// 26-connected components of `{φ < threshold}` over interior cells.
pub fn extract_defects(field: &QField, threshold: f64, params: &MaterialParams) -> Result<DefectSet, DefectError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(DefectError::InvalidThreshold(threshold));
    }
    let dom = field.domain();
    let g = *dom.grid();
    let eps = field.epsilon();
    let phi = field.phi_map(params.s_star);
    let mask: Vec<bool> = (0..dom.len())
        .map(|i| dom.class(i) == CellClass::Interior && phi[i] < threshold)
        .collect();
    let mut label = vec![false; dom.len()];
    let mut components = Vec::new();
    for seed in 0..dom.len() {
        if !mask[seed] || label[seed] {
            continue;
        }
        let mut cells = vec![seed];
        label[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(i) = queue.pop_front() {
            let c = g.coords(i);
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let n = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                        if (0..3).any(|a| n[a] < 0 || n[a] >= g.shape[a] as i64) {
                            continue;
                        }
                        let j = g.index(n[0] as usize, n[1] as usize, n[2] as usize);
                        if mask[j] && !label[j] {
                            label[j] = true;
                            cells.push(j);
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        cells.sort_unstable();
        components.push(classify(field, cells, params));
    }
    Ok(DefectSet {
        threshold,
        epsilon: eps,
        h: g.h,
        components,
    })
}

fn classify(field: &QField, cells: Vec<usize>, params: &MaterialParams) -> Component {
    let g = *field.domain().grid();
    let eps = field.epsilon();
    let pts: Vec<Vector3<f64>> = cells.iter().map(|&i| g.center(i)).collect();
    let (centroid, axis) = principal_axis(&pts);
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = (p - centroid).dot(&axis);
        (lo.min(t), hi.max(t))
    });
    let extent = (hi - lo) / g.h + 1.0;
    let diameter = diameter(&pts);
    let voxels: Vec<[i64; 3]> = cells
        .iter()
        .map(|&i| {
            let c = g.coords(i);
            [c[0] as i64, c[1] as i64, c[2] as i64]
        })
        .collect();
    let skeleton = skeletonize(&voxels, |v| {
        g.origin + Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64) * g.h
    });
    let length = skeleton.smoothed_length(SMOOTHING_PASSES) + skeleton.tip_extension(&pts, 1.5 * g.h, 5);
    let kind = if diameter <= POINT_DIAMETER * eps {
        DefectKind::Point
    } else if extent >= LINE_MIN_EXTENT && skeleton.nodes.len() >= LINE_MIN_NODES {
        DefectKind::Line
    } else {
        DefectKind::Ambiguous
    };
    let mut comp = Component {
        cells,
        kind,
        skeleton,
        length,
        loop_class: None,
        degree: None,
        centroid,
        diameter,
        axis,
        extent,
    };
    match kind {
        DefectKind::Line => comp.loop_class = Some(line_loop_class(field, &comp, params.s_star)),
        DefectKind::Point if g.is_planar() => {
            comp.loop_class = Some(probe_loops(field, &centroid, &Vector3::z(), params.s_star));
        }
        DefectKind::Point => {
            comp.degree = PROBE_RADII
                .iter()
                .find_map(|&k| sphere_degree(field, &centroid, k * eps, params.s_star).ok().flatten());
        }
        _ => {}
    }
    comp
}

/// Skeleton node nearest the centroid and the local tangent there.
pub fn line_anchor(comp: &Component, reach: f64) -> (Vector3<f64>, Vector3<f64>) {
    let sk = &comp.skeleton;
    if sk.nodes.is_empty() {
        return (comp.centroid, comp.axis);
    }
    let anchor = *sk
        .nodes
        .iter()
        .min_by(|a, b| (*a - comp.centroid).norm().total_cmp(&(*b - comp.centroid).norm()))
        .expect("nonempty");
    let near: Vec<Vector3<f64>> = sk.nodes.iter().copied().filter(|p| (p - anchor).norm() <= reach).collect();
    let tangent = if near.len() >= 3 { principal_axis(&near).1 } else { comp.axis };
    (anchor, tangent)
}

fn line_loop_class(field: &QField, comp: &Component, s_star: f64) -> LoopClass {
    let reach = (3.0 * field.epsilon()).max(4.0 * field.h());
    let (anchor, tangent) = line_anchor(comp, reach);
    probe_loops(field, &anchor, &tangent, s_star)
}

/// Class of the first orientable circle about `center` among the probe
/// radii.
fn probe_loops(field: &QField, center: &Vector3<f64>, tangent: &Vector3<f64>, s_star: f64) -> LoopClass {
    let eps = field.epsilon();
    let h = field.h();
    for k in PROBE_RADII {
        let r = k * eps;
        let n = 64.max((std::f64::consts::TAU * r / (0.5 * h)).ceil() as usize);
        if let Some(lp) = encircling_loop(field, center, tangent, r, n) {
            if let Ok(c) = field_loop_class(field, &lp, s_star) {
                return c;
            }
        }
    }
    LoopClass::Unknown
}

/// Junctions of every line skeleton.
pub fn branch_parity(defects: &DefectSet) -> Vec<(usize, Junction)> {
    defects
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == DefectKind::Line)
        .flat_map(|(i, c)| junctions(&c.skeleton, 3).into_iter().map(move |j| (i, j)))
        .collect()
}

/// Leading-eigenvector degree of a datum on the unit sphere about `center`
/// (scaled by `radius`), sampled on an icosphere.
pub fn datum_sphere_degree(
    datum: impl Fn(&Vector3<f64>) -> QTensor,
    center: &Vector3<f64>,
    radius: f64,
    s_star: f64,
) -> Result<i32, TopologyError> {
    let (v, triangles) = icosphere(3);
    let values = v.iter().map(|d| datum(&(center + radius * d))).collect();
    closed_degree(
        &SurfaceSamples {
            values,
            triangles,
            boundary: vec![],
        },
        s_star,
    )
}

/// `φ` of the sampled tensor, or `None` off the domain.
pub fn sample_phi(field: &QField, x: &Vector3<f64>, s_star: f64) -> Option<f64> {
    sample(field, x).map(|q| qtensor::phi(&q, s_star))
}
