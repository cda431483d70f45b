//! Open clusters of the bond percolation `{mu_e > a_p}`.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::env::Conductances;
use crate::error::{Error, Result};
use crate::lattice::{Edge, LatticeRegion, Site, MAX_DIM};

/// Bond percolation thresholds of `Z^d`, `d = 2..=5`.
pub fn critical_probability(d: usize) -> Option<f64> {
    match d {
        2 => Some(0.5),
        3 => Some(0.248_812_6),
        4 => Some(0.160_131_4),
        5 => Some(0.118_171_8),
        _ => None,
    }
}

/// Disjoint sets with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = self.parent[x] as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Size and sup-norm diameter of a vertex set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterStats {
    pub size: usize,
    pub diameter: i64,
}

#[derive(Clone, Copy, Debug)]
struct Bounds {
    lo: [i32; MAX_DIM],
    hi: [i32; MAX_DIM],
}

impl Bounds {
    fn point(x: &Site) -> Self {
        let mut b = Bounds { lo: [0; MAX_DIM], hi: [0; MAX_DIM] };
        b.lo[..x.dim()].copy_from_slice(x.coords());
        b.hi[..x.dim()].copy_from_slice(x.coords());
        b
    }

    fn merge(&mut self, o: &Bounds) {
        for i in 0..MAX_DIM {
            self.lo[i] = self.lo[i].min(o.lo[i]);
            self.hi[i] = self.hi[i].max(o.hi[i]);
        }
    }

    fn diameter(&self) -> i64 {
        (0..MAX_DIM).map(|i| self.hi[i] as i64 - self.lo[i] as i64).max().unwrap_or(0)
    }
}

/// Cluster labels of the open bonds inside a region. A label is the smallest
/// site index of its cluster.
#[derive(Clone, Debug)]
pub struct ClusterMap {
    region: LatticeRegion,
    threshold: f64,
    labels: Vec<u32>,
    sizes: Vec<u32>,
    bounds: Vec<Bounds>,
}

impl ClusterMap {
    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn label(&self, x: &Site) -> Option<usize> {
        self.region.index(x).map(|i| self.labels[i] as usize)
    }

    /// Statistics of the cluster whose label is `label`.
    pub fn cluster(&self, label: usize) -> ClusterStats {
        ClusterStats { size: self.sizes[label] as usize, diameter: self.bounds[label].diameter() }
    }

    /// `C(e)`: the union of the clusters of both endpoints, always containing
    /// both endpoints. Errors if an endpoint lies outside the region.
    pub fn edge_cluster(&self, e: &Edge) -> Result<ClusterStats> {
        let (x, y) = e.endpoints();
        let lx = self.label(&x).ok_or(Error::OutsideRegion)?;
        let ly = self.label(&y).ok_or(Error::OutsideRegion)?;
        if lx == ly {
            return Ok(self.cluster(lx));
        }
        let mut b = self.bounds[lx];
        b.merge(&self.bounds[ly]);
        Ok(ClusterStats { size: (self.sizes[lx] + self.sizes[ly]) as usize, diameter: b.diameter() })
    }

    /// Labels of all clusters (one entry per distinct label).
    pub fn cluster_labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(|(i, l)| **l as usize == *i).map(|(i, _)| i)
    }
}

/// Union-find labelling of the clusters of `{e : mu_e > a_p}` in `region`.
///
/// `open_probability` is `P(mu_e > a_p)` under the environment's law; only
/// the subcritical regime is accepted.
pub fn percolation_clusters<C: Conductances + ?Sized>(
    env: &C,
    region: &LatticeRegion,
    a_p: f64,
    open_probability: f64,
) -> Result<ClusterMap> {
    let d = region.dim();
    let critical = critical_probability(d)
        .ok_or_else(|| Error::invalid("d", "no critical probability on record for this dimension"))?;
    if open_probability >= critical {
        return Err(Error::Supercritical { open_probability, critical });
    }
    let n = region.len();
    let mut uf = UnionFind::new(n);
    for e in region.edges() {
        if env.conductance(&e) > a_p {
            let i = region.index(e.lo()).unwrap();
            let j = region.index(&e.hi()).unwrap();
            uf.union(i, j);
        }
    }
    // canonical label: smallest index in the cluster; since we scan indices
    // in increasing order the first member seen is the smallest
    let mut root_label = vec![u32::MAX; n];
    let mut labels = vec![0u32; n];
    let mut sizes = vec![0u32; n];
    let mut bounds: Vec<Bounds> = Vec::with_capacity(n);
    for i in 0..n {
        let x = region.site(i);
        bounds.push(Bounds::point(&x));
        let r = uf.find(i);
        if root_label[r] == u32::MAX {
            root_label[r] = i as u32;
        }
        let l = root_label[r] as usize;
        labels[i] = l as u32;
        sizes[l] += 1;
        if l != i {
            let b = Bounds::point(&x);
            bounds[l].merge(&b);
        }
    }
    Ok(ClusterMap { region: *region, threshold: a_p, labels, sizes, bounds })
}

/// Explore `C(e)` by breadth-first search without a bounding region.
/// Stops once `cap` vertices are found; the flag reports truncation.
pub fn explore_edge_cluster<C: Conductances + ?Sized>(
    env: &C,
    e: &Edge,
    a_p: f64,
    cap: usize,
) -> (ClusterStats, bool) {
    let d = env.dim();
    let (x, y) = e.endpoints();
    let mut seen: BTreeSet<Site> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let mut bounds = Bounds::point(&x);
    for s in [x, y] {
        seen.insert(s);
        queue.push_back(s);
        bounds.merge(&Bounds::point(&s));
    }
    let mut truncated = false;
    while let Some(s) = queue.pop_front() {
        for dir in 0..2 * d {
            if env.conductance(&Edge::from_dir(&s, dir)) > a_p {
                let t = s.neighbor(dir);
                if seen.insert(t) {
                    bounds.merge(&Bounds::point(&t));
                    if seen.len() >= cap {
                        truncated = true;
                        queue.clear();
                        break;
                    }
                    queue.push_back(t);
                }
            }
        }
    }
    (ClusterStats { size: seen.len(), diameter: bounds.diameter() }, truncated)
}
