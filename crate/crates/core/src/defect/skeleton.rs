//! Morphological thinning of voxel sets and the polyline graphs built on
//! the result.

use nalgebra::Vector3;
use std::collections::{HashMap, HashSet, VecDeque};

/// Spurs with fewer nodes than this hanging off a junction are pruned.
pub const SPUR_NODES: usize = 3;

/// Voxel offsets of the 26-neighbourhood.
fn n26() -> impl Iterator<Item = [i64; 3]> {
    (-1..=1).flat_map(|x| (-1..=1).flat_map(move |y| (-1..=1).map(move |z| [x, y, z])))
        .filter(|d| *d != [0, 0, 0])
}

const FACES: [[i64; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

fn add(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Index into a 3x3x3 neighbourhood cube, offsets in -1..=1.
fn cube(d: [i64; 3]) -> usize {
    ((d[0] + 1) * 9 + (d[1] + 1) * 3 + (d[2] + 1)) as usize
}

fn offset(i: usize) -> [i64; 3] {
    [(i / 9) as i64 - 1, (i / 3 % 3) as i64 - 1, (i % 3) as i64 - 1]
}

/// Simple point test for (26, 6) connectivity: removing the centre keeps
/// exactly one object component in the punctured 26-neighbourhood and
/// exactly one 6-adjacent background component in the 18-neighbourhood.
fn is_simple(nb: &[bool; 27]) -> bool {
    // object components, 26-adjacency
    let mut seen = [false; 27];
    let mut comps = 0;
    for s in 0..27 {
        if s == 13 || !nb[s] || seen[s] {
            continue;
        }
        comps += 1;
        if comps > 1 {
            return false;
        }
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            let o = offset(i);
            for d in n26() {
                let p = add(o, d);
                if p.iter().any(|c| c.abs() > 1) {
                    continue;
                }
                let j = cube(p);
                if j != 13 && nb[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    if comps != 1 {
        return false;
    }
    // background components in N18, 6-adjacency, touching a face neighbour
    let in18 = |o: [i64; 3]| o.iter().map(|c| c.abs()).sum::<i64>() <= 2;
    let mut seen = [false; 27];
    let mut comps = 0;
    for f in FACES {
        let s = cube(f);
        if nb[s] || seen[s] {
            continue;
        }
        comps += 1;
        if comps > 1 {
            return false;
        }
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            let o = offset(i);
            for d in FACES {
                let p = add(o, d);
                if p.iter().any(|c| c.abs() > 1) || !in18(p) {
                    continue;
                }
                let j = cube(p);
                if j != 13 && !nb[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    comps == 1
}

/// Iterative directional thinning preserving 26-connectivity; voxels with
/// a single neighbour are kept as curve ends.
pub fn thin(voxels: &[[i64; 3]]) -> Vec<[i64; 3]> {
    let mut set: HashSet<[i64; 3]> = voxels.iter().copied().collect();
    let mut order: Vec<[i64; 3]> = voxels.to_vec();
    order.sort_unstable();
    order.dedup();
    let hood = |set: &HashSet<[i64; 3]>, v: [i64; 3]| {
        let mut nb = [false; 27];
        for (i, slot) in nb.iter_mut().enumerate() {
            *slot = set.contains(&add(v, offset(i)));
        }
        nb
    };
    loop {
        let mut changed = false;
        for f in FACES {
            let border: Vec<[i64; 3]> = order
                .iter()
                .copied()
                .filter(|v| set.contains(v) && !set.contains(&add(*v, f)))
                .collect();
            let mut removed: HashSet<[i64; 3]> = HashSet::new();
            for v in border {
                if n26().any(|d| removed.contains(&add(v, d))) {
                    continue;
                }
                let nb = hood(&set, v);
                let count = nb.iter().filter(|&&b| b).count() - 1;
                if count > 1 && is_simple(&nb) {
                    set.remove(&v);
                    removed.insert(v);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        order.retain(|v| set.contains(v));
    }
    order
}

/// Polyline graph: node positions and undirected edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Skeleton {
    pub nodes: Vec<Vector3<f64>>,
    pub edges: Vec<(usize, usize)>,
}

impl Skeleton {
    /// Total edge length.
    pub fn length(&self) -> f64 {
        self.edges.iter().map(|&(a, b)| (self.nodes[a] - self.nodes[b]).norm()).sum()
    }

    /// Length after `passes` rounds of averaging interior chain nodes with
    /// their two neighbours; ends and junctions stay put. Removes most of
    /// the staircase excess of oblique voxel curves.
    pub fn smoothed_length(&self, passes: usize) -> f64 {
        let adj = self.adjacency();
        let mut pts = self.nodes.clone();
        for _ in 0..passes {
            pts = (0..pts.len())
                .map(|i| match adj[i][..] {
                    [a, b] => (pts[a] + pts[i] * 2.0 + pts[b]) / 4.0,
                    _ => pts[i],
                })
                .collect();
        }
        self.edges.iter().map(|&(a, b)| (pts[a] - pts[b]).norm()).sum()
    }

    /// Length lost to thinning at free ends: for each leaf, how far the
    /// `cloud` reaches past it along the end tangent within `radius` of the
    /// tangent ray. The tangent is taken `reach` nodes back along the chain.
    pub fn tip_extension(&self, cloud: &[Vector3<f64>], radius: f64, reach: usize) -> f64 {
        let adj = self.adjacency();
        let mut total = 0.0;
        for leaf in (0..self.nodes.len()).filter(|&i| adj[i].len() == 1) {
            let (mut prev, mut cur) = (leaf, adj[leaf][0]);
            for _ in 1..reach {
                match adj[cur][..] {
                    [a, b] => {
                        let next = if a == prev { b } else { a };
                        prev = cur;
                        cur = next;
                    }
                    _ => break,
                }
            }
            let t = self.nodes[leaf] - self.nodes[cur];
            if t.norm() == 0.0 {
                continue;
            }
            let t = t.normalize();
            total += cloud
                .iter()
                .map(|p| p - self.nodes[leaf])
                .filter(|d| (d - t * d.dot(&t)).norm() <= radius)
                .map(|d| d.dot(&t))
                .fold(0.0, f64::max);
        }
        total
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Straight chain through the given points.
    pub fn polyline(points: &[Vector3<f64>]) -> Skeleton {
        Skeleton {
            nodes: points.to_vec(),
            edges: (1..points.len()).map(|i| (i - 1, i)).collect(),
        }
    }

    /// Removes short leaf branches attached to junctions, repeatedly.
    pub fn prune_spurs(&self, min_nodes: usize) -> Skeleton {
        let mut alive = vec![true; self.nodes.len()];
        let adj = self.adjacency();
        loop {
            let deg = |i: usize, alive: &[bool]| adj[i].iter().filter(|&&j| alive[j]).count();
            let mut removed = false;
            for leaf in 0..self.nodes.len() {
                if !alive[leaf] || deg(leaf, &alive) != 1 {
                    continue;
                }
                let mut path = vec![leaf];
                let mut prev = leaf;
                let mut cur = adj[leaf].iter().copied().find(|&j| alive[j]).expect("leaf has a neighbour");
                while deg(cur, &alive) == 2 && path.len() < min_nodes {
                    path.push(cur);
                    let next = adj[cur].iter().copied().find(|&j| alive[j] && j != prev).expect("chain continues");
                    prev = cur;
                    cur = next;
                }
                if deg(cur, &alive) >= 3 && path.len() < min_nodes {
                    for &p in &path {
                        alive[p] = false;
                    }
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, p) in self.nodes.iter().enumerate() {
            if alive[i] {
                remap[i] = nodes.len();
                nodes.push(*p);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| alive[a] && alive[b])
            .map(|&(a, b)| (remap[a], remap[b]))
            .collect();
        Skeleton { nodes, edges }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Thins the voxel set, links 26-adjacent skeleton voxels, keeps a minimum
/// spanning forest and prunes spurs. `position` maps voxel coordinates to
/// space.
pub fn skeletonize(voxels: &[[i64; 3]], position: impl Fn([i64; 3]) -> Vector3<f64>) -> Skeleton {
    let thin = thin(voxels);
    let index: HashMap<[i64; 3], usize> = thin.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let nodes: Vec<Vector3<f64>> = thin.iter().map(|&v| position(v)).collect();
    let mut cand = Vec::new();
    for (i, &v) in thin.iter().enumerate() {
        for d in n26() {
            if let Some(&j) = index.get(&add(v, d)) {
                if j > i {
                    cand.push(((nodes[i] - nodes[j]).norm(), i, j));
                }
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    let mut edges = Vec::new();
    for (_, i, j) in cand {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            edges.push((i, j));
        }
    }
    Skeleton { nodes, edges }.prune_spurs(SPUR_NODES)
}

/// A junction of a skeleton: adjacent nodes of degree ≥ 3 are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub position: Vector3<f64>,
    pub branches: usize,
    pub even: bool,
    /// Length of the sum of unit outgoing branch directions.
    pub direction_sum: f64,
}

/// Junctions of a skeleton with branch counts and balance of directions.
/// Directions are measured `reach` nodes along each branch.
pub fn junctions(sk: &Skeleton, reach: usize) -> Vec<Junction> {
    let adj = sk.adjacency();
    let deg = sk.degrees();
    let mut cluster = vec![usize::MAX; sk.nodes.len()];
    let mut out = Vec::new();
    for s in 0..sk.nodes.len() {
        if deg[s] < 3 || cluster[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        let mut queue = VecDeque::from([s]);
        cluster[s] = id;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if deg[j] >= 3 && cluster[j] == usize::MAX {
                    cluster[j] = id;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        let position = members.iter().map(|&i| sk.nodes[i]).sum::<Vector3<f64>>() / members.len() as f64;
        let mut sum = Vector3::zeros();
        let mut branches = 0;
        for &m in &members {
            for &first in &adj[m] {
                if cluster[first] == id {
                    continue;
                }
                branches += 1;
                let (mut prev, mut cur) = (m, first);
                for _ in 1..reach {
                    if deg[cur] != 2 {
                        break;
                    }
                    let next = adj[cur].iter().copied().find(|&j| j != prev).expect("degree two");
                    prev = cur;
                    cur = next;
                }
                let d = sk.nodes[cur] - position;
                if d.norm() > 0.0 {
                    sum += d.normalize();
                }
            }
        }
        out.push(Junction {
            position,
            branches,
            even: branches % 2 == 0,
            direction_sum: sum.norm(),
        });
    }
    out
}
