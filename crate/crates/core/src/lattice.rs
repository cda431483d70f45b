//! Sites, canonical edges and finite windows onto `Z^d`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 8;

/// A point of `Z^d`. Coordinates beyond the dimension are kept at zero so
/// that equality and ordering are plain lexicographic comparisons.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    d: u8,
    c: [i32; MAX_DIM],
}

impl Site {
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "site dimension {} outside 1..={MAX_DIM}",
            coords.len()
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site { d: coords.len() as u8, c }
    }

    pub fn origin(d: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&d));
        Site { d: d as u8, c: [0; MAX_DIM] }
    }

    /// `n * x` rounded to the nearest lattice point.
    pub fn scaled(x: &[f64], n: f64) -> Self {
        let mut c = [0; MAX_DIM];
        for (ci, xi) in c.iter_mut().zip(x) {
            *ci = libm::round(xi * n) as i32;
        }
        Site { d: x.len() as u8, c }
    }

    #[inline(always)]
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    #[inline(always)]
    pub fn coords(&self) -> &[i32] {
        &self.c[..self.d as usize]
    }

    #[inline(always)]
    pub fn coord(&self, axis: usize) -> i32 {
        self.c[axis]
    }

    /// Neighbour in direction `dir`: axis `dir / 2`, positive when `dir` is even.
    #[inline(always)]
    pub fn neighbor(&self, dir: usize) -> Site {
        let mut s = *self;
        if dir & 1 == 0 {
            s.c[dir >> 1] += 1;
        } else {
            s.c[dir >> 1] -= 1;
        }
        s
    }

    pub fn offset(&self, delta: &[i32]) -> Site {
        let mut s = *self;
        for (ci, di) in s.c.iter_mut().zip(delta) {
            *ci += di;
        }
        s
    }

    /// Squared Euclidean distance.
    #[inline]
    pub fn dist2(&self, other: &Site) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| {
                let z = a as i64 - b as i64;
                z * z
            })
            .sum()
    }

    #[inline]
    pub fn norm2(&self) -> i64 {
        self.coords().iter().map(|&a| (a as i64) * (a as i64)).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm2() as f64)
    }

    pub fn sup_dist(&self, other: &Site) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| (a as i64 - b as i64).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn is_neighbor(&self, other: &Site) -> bool {
        self.d == other.d && self.coords().iter().zip(other.coords()).map(|(&a, &b)| (a as i64 - b as i64).abs()).sum::<i64>() == 1
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords().iter().map(|&c| c as f64).collect()
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

/// A nonoriented nearest-neighbour bond, stored as its lexicographically
/// smaller endpoint and the axis along which the other endpoint lies.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Edge {
    lo: Site,
    axis: u8,
}

impl Edge {
    /// The canonical edge `{x, y}`; errors unless `x ~ y`.
    pub fn between(x: &Site, y: &Site) -> Result<Edge> {
        if !x.is_neighbor(y) {
            return Err(Error::NotNeighbors);
        }
        let axis = x.coords().iter().zip(y.coords()).position(|(a, b)| a != b).unwrap();
        let lo = if x < y { *x } else { *y };
        Ok(Edge { lo, axis: axis as u8 })
    }

    /// Edge from `x` in direction `dir` (see [`Site::neighbor`]).
    #[inline(always)]
    pub fn from_dir(x: &Site, dir: usize) -> Edge {
        let axis = (dir >> 1) as u8;
        if dir & 1 == 0 {
            Edge { lo: *x, axis }
        } else {
            let mut lo = *x;
            lo.c[axis as usize] -= 1;
            Edge { lo, axis }
        }
    }

    #[inline(always)]
    pub fn lo(&self) -> &Site {
        &self.lo
    }

    #[inline(always)]
    pub fn axis(&self) -> usize {
        self.axis as usize
    }

    pub fn hi(&self) -> Site {
        self.lo.neighbor(2 * self.axis as usize)
    }

    pub fn endpoints(&self) -> (Site, Site) {
        (self.lo, self.hi())
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }
}

/// Boundary behaviour of a finite window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Bonds leaving the window are absent.
    Free,
    /// The complement of the window is absorbing (value zero).
    Dirichlet,
}

/// The cube `{x : |x - center|_inf <= half_side}` with a boundary rule.
/// Sites are indexed with axis 0 varying fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeRegion {
    center: Site,
    half_side: u32,
    boundary: Boundary,
}

impl LatticeRegion {
    pub fn new(center: Site, half_side: u32, boundary: Boundary) -> Result<Self> {
        if half_side < 1 {
            return Err(Error::invalid("half_side", "must be at least 1"));
        }
        let side = 2 * half_side as u64 + 1;
        let total = (0..center.dim()).try_fold(1u64, |acc, _| acc.checked_mul(side));
        if total.is_none_or(|t| t > (u32::MAX as u64) * 16) {
            return Err(Error::invalid("half_side", "region too large to index"));
        }
        Ok(LatticeRegion { center, half_side, boundary })
    }

    /// Cube of the given half side centred at the origin.
    pub fn cube(d: usize, half_side: u32, boundary: Boundary) -> Result<Self> {
        LatticeRegion::new(Site::origin(d), half_side, boundary)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn center(&self) -> &Site {
        &self.center
    }

    pub fn half_side(&self) -> u32 {
        self.half_side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        LatticeRegion { boundary, ..*self }
    }

    pub fn side(&self) -> usize {
        2 * self.half_side as usize + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, x: &Site) -> bool {
        let h = self.half_side as i64;
        x.coords()
            .iter()
            .zip(self.center.coords())
            .all(|(&a, &c)| (a as i64 - c as i64).abs() <= h)
    }

    #[inline]
    pub fn index(&self, x: &Site) -> Option<usize> {
        let h = self.half_side as i64;
        let side = self.side();
        let mut idx = 0usize;
        let mut stride = 1usize;
        for (&a, &c) in x.coords().iter().zip(self.center.coords()) {
            let off = a as i64 - c as i64 + h;
            if off < 0 || off > 2 * h {
                return None;
            }
            idx += off as usize * stride;
            stride *= side;
        }
        Some(idx)
    }

    pub fn site(&self, mut index: usize) -> Site {
        let side = self.side();
        let h = self.half_side as i32;
        let mut s = self.center;
        for axis in 0..self.dim() {
            s.c[axis] += (index % side) as i32 - h;
            index /= side;
        }
        s
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// Edges with both endpoints inside, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let d = self.dim();
        self.sites().flat_map(move |x| {
            (0..d).filter_map(move |axis| {
                let e = Edge { lo: x, axis: axis as u8 };
                self.contains(&e.hi()).then_some(e)
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        let side = self.side();
        self.dim() * (side - 1) * side.pow(self.dim() as u32 - 1)
    }

    /// Whether the whole region fits inside `other`.
    pub fn is_inside(&self, other: &LatticeRegion) -> bool {
        let diff = self.center.sup_dist(&other.center);
        diff + self.half_side as i64 <= other.half_side as i64
    }
}

/// Sites of the Euclidean ball `{y : |y - x| <= r}` in lexicographic order.
pub fn ball(x: &Site, r: f64) -> Vec<Site> {
    let d = x.dim();
    let h = libm::floor(r) as i32;
    let r2 = r * r;
    let mut out = Vec::new();
    let mut off = [0i32; MAX_DIM];
    off[..d].iter_mut().for_each(|o| *o = -h);
    loop {
        let n2: i64 = off[..d].iter().map(|&o| (o as i64) * (o as i64)).sum();
        if (n2 as f64) <= r2 + 1e-9 {
            out.push(x.offset(&off[..d]));
        }
        // odometer over the cube [-h, h]^d, last axis slowest
        let mut axis = 0;
        loop {
            if axis == d {
                out.sort_unstable();
                return out;
            }
            if off[axis] < h {
                off[axis] += 1;
                break;
            }
            off[axis] = -h;
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_a_bijection() {
        let r = LatticeRegion::new(Site::new(&[3, -2, 1]), 2, Boundary::Free).unwrap();
        assert_eq!(r.len(), 125);
        for i in 0..r.len() {
            let s = r.site(i);
            assert!(r.contains(&s));
            assert_eq!(r.index(&s), Some(i));
        }
        assert_eq!(r.index(&Site::new(&[6, -2, 1])), None);
    }

    #[test]
    fn rejects_empty_region() {
        assert!(LatticeRegion::cube(3, 0, Boundary::Free).is_err());
    }

    #[test]
    fn canonical_edges_are_symmetric() {
        let x = Site::new(&[1, 2, 3]);
        for dir in 0..6 {
            let y = x.neighbor(dir);
            let e = Edge::between(&x, &y).unwrap();
            assert_eq!(e, Edge::between(&y, &x).unwrap());
            assert_eq!(e, Edge::from_dir(&x, dir));
            let (a, b) = e.endpoints();
            assert!(a < b);
        }
        assert_eq!(
            Edge::between(&x, &Site::new(&[2, 3, 3])),
            Err(Error::NotNeighbors)
        );
    }

    #[test]
    fn edge_enumeration_matches_count() {
        let r = LatticeRegion::cube(2, 3, Boundary::Free).unwrap();
        assert_eq!(r.edges().count(), r.edge_count());
        assert_eq!(r.edge_count(), 2 * 6 * 7);
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(ball(&Site::origin(3), 1.0).len(), 7);
        assert_eq!(ball(&Site::origin(2), 2.0).len(), 13);
        assert_eq!(ball(&Site::origin(3), 0.0).len(), 1);
    }
}
