//! Homotopy class of closed loops in the vacuum manifold and the degree of
//! unit-vector lifts over triangulated surfaces.

use crate::qtensor::{self, QTensor};
use nalgebra::Vector3;
use std::collections::VecDeque;
use std::f64::consts::PI;
use thiserror::Error;

/// Minimum `φ` along a loop or surface for the leading eigenvector to be
/// trusted.
pub const ORIENTABLE_PHI: f64 = 0.2;
/// Minimum `|n_i · n_{i+1}|` between consecutive loop samples.
pub const ALIGNMENT: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("loop needs at least 3 samples")]
    TooShort,
    #[error("loop is not closed")]
    NotClosed,
    #[error("phi = {phi:.3} at sample {index} is below {ORIENTABLE_PHI}")]
    NotOrientable { index: usize, phi: f64 },
    #[error("consecutive eigenvectors misaligned at sample {index} (|n·n'| = {dot:.3}) after refinement")]
    NotOrientableSampling { index: usize, dot: f64 },
    #[error("boundary is not constant (deviation {0:e})")]
    BoundaryNotConstant(f64),
    #[error("sign propagation inconsistent across edge ({0}, {1})")]
    LiftFailed(usize, usize),
    #[error("degree {0} is not within 0.1 of an integer")]
    NonIntegerDegree(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopClass {
    Trivial,
    NonTrivial,
    Unknown,
}

/// Closed polygonal loop with a tensor per sample; the last sample repeats
/// the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub points: Vec<Vector3<f64>>,
    pub values: Vec<QTensor>,
}

impl Loop {
    /// Closes the sequence by repeating its first sample.
    pub fn closed(points: Vec<Vector3<f64>>, values: Vec<QTensor>) -> Loop {
        let mut l = Loop { points, values };
        if let (Some(&p), Some(&v)) = (l.points.first(), l.values.first()) {
            l.points.push(p);
            l.values.push(v);
        }
        l
    }

    /// Loop sampled from a tensor-valued curve on `[0, 1)`.
    pub fn from_curve(n: usize, curve: impl Fn(f64) -> (Vector3<f64>, QTensor)) -> Loop {
        let (points, values) = (0..n).map(|i| curve(i as f64 / n as f64)).unzip();
        Loop::closed(points, values)
    }

    /// The same loop traversed twice.
    pub fn doubled(&self) -> Loop {
        let mut points = self.points.clone();
        let mut values = self.values.clone();
        points.extend_from_slice(&self.points[1..]);
        values.extend_from_slice(&self.values[1..]);
        Loop { points, values }
    }

    pub fn reversed(&self) -> Loop {
        let mut l = self.clone();
        l.points.reverse();
        l.values.reverse();
        l
    }
}

/// Transports the leading eigenvector along the loop choosing at each step
/// the sign closest to the previous one; the loop is non-trivial when the
/// transported vector comes back reversed.
///
/// Misaligned steps are retried once on midpoints supplied by `refine`
/// (given the two endpoints' positions); without a sampler they fail.
pub fn loop_class(
    lp: &Loop,
    s_star: f64,
    refine: Option<&dyn Fn(&Vector3<f64>) -> Option<QTensor>>,
) -> Result<LoopClass, TopologyError> {
    let n = lp.values.len();
    if n < 4 {
        return Err(TopologyError::TooShort);
    }
    let (first, last) = (lp.values[0], lp.values[n - 1]);
    if (first - last).norm() > 1e-9 * first.norm().max(1.0) {
        return Err(TopologyError::NotClosed);
    }
    for (index, q) in lp.values.iter().enumerate() {
        let phi = qtensor::phi(q, s_star);
        if phi < ORIENTABLE_PHI {
            return Err(TopologyError::NotOrientable { index, phi });
        }
    }
    let lead = |q: &QTensor| qtensor::eigen(q).leading();
    let start = lead(&lp.values[0]);
    let mut cur = start;
    for i in 1..n {
        let next = lead(&lp.values[i]);
        let dot = cur.dot(&next);
        if dot.abs() >= ALIGNMENT {
            cur = next * dot.signum();
            continue;
        }
        // one refinement pass through the midpoint
        let mid = refine
            .and_then(|f| f(&(0.5 * (lp.points[i - 1] + lp.points[i]))))
            .filter(|q| qtensor::phi(q, s_star) >= ORIENTABLE_PHI)
            .map(|q| lead(&q));
        let Some(m) = mid else {
            return Err(TopologyError::NotOrientableSampling { index: i, dot: dot.abs() });
        };
        let d1 = cur.dot(&m);
        let m = m * d1.signum();
        let d2 = m.dot(&next);
        if d1.abs() < ALIGNMENT || d2.abs() < ALIGNMENT {
            return Err(TopologyError::NotOrientableSampling {
                index: i,
                dot: d1.abs().min(d2.abs()),
            });
        }
        cur = next * d2.signum();
    }
    Ok(if cur.dot(&start) < 0.0 {
        LoopClass::NonTrivial
    } else {
        LoopClass::Trivial
    })
}

/// Signed solid angle of the spherical triangle spanned by three unit
/// vectors.
pub fn solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Triangulated surface carrying a tensor per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSamples {
    pub values: Vec<QTensor>,
    pub triangles: Vec<[usize; 3]>,
    /// Vertices on the boundary curve (empty for closed surfaces).
    pub boundary: Vec<usize>,
}

/// Lifts the leading eigenvectors to a continuous unit-vector field by
/// breadth-first sign propagation from vertex 0.
pub fn lift_field(values: &[QTensor], triangles: &[[usize; 3]], s_star: f64) -> Result<Vec<Vector3<f64>>, TopologyError> {
    for (index, q) in values.iter().enumerate() {
        let phi = qtensor::phi(q, s_star);
        if phi < ORIENTABLE_PHI {
            return Err(TopologyError::NotOrientable { index, phi });
        }
    }
    let n = values.len();
    let mut adj = vec![Vec::new(); n];
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let raw: Vec<Vector3<f64>> = values.iter().map(|q| qtensor::eigen(q).leading()).collect();
    let mut lifted: Vec<Option<Vector3<f64>>> = vec![None; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if lifted[root].is_some() || adj[root].is_empty() {
            continue;
        }
        lifted[root] = Some(raw[root]);
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            let ni = lifted[i].expect("queued vertices are lifted");
            for &j in &adj[i] {
                if lifted[j].is_none() {
                    let d = ni.dot(&raw[j]);
                    lifted[j] = Some(raw[j] * if d < 0.0 { -1.0 } else { 1.0 });
                    queue.push_back(j);
                }
            }
        }
    }
    let lifted: Vec<Vector3<f64>> = lifted.into_iter().map(|v| v.unwrap_or(Vector3::zeros())).collect();
    for (i, nb) in adj.iter().enumerate() {
        for &j in nb {
            if lifted[i].dot(&lifted[j]) < 0.0 {
                return Err(TopologyError::LiftFailed(i.min(j), i.max(j)));
            }
        }
    }
    Ok(lifted)
}

/// Sum of signed solid angles over `4π`, without rounding.
pub fn raw_degree(lift: &[Vector3<f64>], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| solid_angle(&lift[t[0]], &lift[t[1]], &lift[t[2]]))
        .sum::<f64>()
        / (4.0 * PI)
}

fn round_degree(raw: f64) -> Result<i32, TopologyError> {
    let r = raw.round();
    if (raw - r).abs() > 0.1 {
        return Err(TopologyError::NonIntegerDegree(raw));
    }
    Ok(r as i32)
}

/// Degree of the lift of a disk sample whose boundary value is constant;
/// collapsing the boundary makes the disk a sphere.
pub fn disk_degree(samples: &SurfaceSamples, s_star: f64) -> Result<i32, TopologyError> {
    if let Some(&b0) = samples.boundary.first() {
        let q0 = samples.values[b0];
        let dev = samples
            .boundary
            .iter()
            .map(|&i| (samples.values[i] - q0).norm())
            .fold(0.0, f64::max);
        if dev > 1e-6 {
            return Err(TopologyError::BoundaryNotConstant(dev));
        }
    }
    let lift = lift_field(&samples.values, &samples.triangles, s_star)?;
    round_degree(raw_degree(&lift, &samples.triangles))
}

/// Degree of the lift over a closed triangulated surface.
pub fn closed_degree(samples: &SurfaceSamples, s_star: f64) -> Result<i32, TopologyError> {
    let lift = lift_field(&samples.values, &samples.triangles, s_star)?;
    round_degree(raw_degree(&lift, &samples.triangles))
}

/// Unit icosphere: vertices and outward-oriented triangles after
/// `levels` rounds of 4-fold subdivision.
pub fn icosphere(levels: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut cache = std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, v: &mut Vec<Vector3<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                v.push((v[a] + v[b]).normalize());
                v.len() - 1
            })
        };
        let mut g = Vec::with_capacity(4 * f.len());
        for &[a, b, c] in &f {
            let ab = mid(a, b, &mut v);
            let bc = mid(b, c, &mut v);
            let ca = mid(c, a, &mut v);
            g.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = g;
    }
    (v, f)
}

/// Polar grid on the unit disk: `rings` rings of `sectors` vertices plus
/// the centre; returns vertices, counter-clockwise triangles and the
/// indices of the outer ring.
pub fn polar_disk(rings: usize, sectors: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<usize>) {
    let mut v = vec![[0.0, 0.0]];
    for r in 1..=rings {
        let rad = r as f64 / rings as f64;
        for s in 0..sectors {
            let th = 2.0 * PI * s as f64 / sectors as f64;
            v.push([rad * th.cos(), rad * th.sin()]);
        }
    }
    let at = |r: usize, s: usize| 1 + (r - 1) * sectors + s % sectors;
    let mut t = Vec::new();
    for s in 0..sectors {
        t.push([0, at(1, s), at(1, s + 1)]);
    }
    for r in 1..rings {
        for s in 0..sectors {
            let (a, b, c, d) = (at(r, s), at(r, s + 1), at(r + 1, s), at(r + 1, s + 1));
            t.push([a, c, d]);
            t.push([a, d, b]);
        }
    }
    let boundary = (0..sectors).map(|s| at(rings, s)).collect();
    (v, t, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtensor::{geodesic_p0, lift};
    use std::f64::consts::TAU;

    const S: f64 = 1.5;

    fn planar_loop(n: usize, k: f64) -> Loop {
        Loop::from_curve(n, |t| {
            let th = TAU * t;
            let dir = Vector3::new((k * th).cos(), (k * th).sin(), 0.0);
            (Vector3::new(th.cos(), th.sin(), 0.0), lift(&dir, S).unwrap())
        })
    }

    #[test]
    fn geodesic_loop_is_nontrivial() {
        let l = Loop::from_curve(64, |t| (Vector3::new(t, 0.0, 0.0), geodesic_p0(TAU * t, S)));
        assert_eq!(loop_class(&l, S, None).unwrap(), LoopClass::NonTrivial);
        assert_eq!(loop_class(&l.doubled(), S, None).unwrap(), LoopClass::Trivial);
        assert_eq!(loop_class(&l.reversed(), S, None).unwrap(), LoopClass::NonTrivial);
    }

    #[test]
    fn full_winding_is_trivial() {
        assert_eq!(loop_class(&planar_loop(64, 1.0), S, None).unwrap(), LoopClass::Trivial);
        let c = Loop::from_curve(10, |t| (Vector3::new(t, 0.0, 0.0), lift(&Vector3::z(), S).unwrap()));
        assert_eq!(loop_class(&c, S, None).unwrap(), LoopClass::Trivial);
    }

    #[test]
    fn coarse_sampling_needs_refinement() {
        // 6 samples of a k = 3/2 winding: consecutive directions 90° apart
        let l = planar_loop(6, 1.5);
        assert!(matches!(
            loop_class(&l, S, None),
            Err(TopologyError::NotOrientableSampling { .. })
        ));
        let sampler = |x: &Vector3<f64>| {
            let th = x.y.atan2(x.x).rem_euclid(TAU);
            Some(lift(&Vector3::new((1.5 * th).cos(), (1.5 * th).sin(), 0.0), S).unwrap())
        };
        // midpoints of chords sit at the right angles
        assert_eq!(loop_class(&l, S, Some(&sampler)).unwrap(), LoopClass::NonTrivial);
    }

    #[test]
    fn melted_sample_is_rejected() {
        let mut l = planar_loop(16, 0.5);
        l.values[3] = QTensor::ZERO;
        assert!(matches!(loop_class(&l, S, None), Err(TopologyError::NotOrientable { .. })));
    }

    #[test]
    fn icosphere_identity_has_degree_one() {
        let (v, f) = icosphere(2);
        let q: Vec<QTensor> = v.iter().map(|x| lift(x, S).unwrap()).collect();
        let s = SurfaceSamples {
            values: q,
            triangles: f,
            boundary: vec![],
        };
        assert_eq!(closed_degree(&s, S).unwrap().abs(), 1);
    }

    #[test]
    fn octant_solid_angle() {
        let w = solid_angle(&Vector3::x(), &Vector3::y(), &Vector3::z());
        assert!((w - PI / 2.0).abs() < 1e-14);
    }
}
