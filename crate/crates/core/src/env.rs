//! Random conductance environments.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{Edge, LatticeRegion, Site};
use crate::law::TailLaw;
use crate::rng::{derive_seed, mix64, unit_f64_open, Namespace};

/// Read access to edge conductances on `Z^d`.
pub trait Conductances {
    fn dim(&self) -> usize;

    /// `mu_e`; zero for absent bonds.
    fn conductance(&self, e: &Edge) -> f64;

    /// Conductances of the `2d` bonds at `x` in direction order (see
    /// [`Site::neighbor`]); returns their sum `mu_x`.
    #[inline]
    fn incident(&self, x: &Site, out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (dir, slot) in out.iter_mut().enumerate().take(2 * self.dim()) {
            let c = self.conductance(&Edge::from_dir(x, dir));
            *slot = c;
            total += c;
        }
        total
    }
}

impl<C: Conductances + ?Sized> Conductances for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    #[inline]
    fn conductance(&self, e: &Edge) -> f64 {
        (**self).conductance(e)
    }
    #[inline]
    fn incident(&self, x: &Site, out: &mut [f64]) -> f64 {
        (**self).incident(x, out)
    }
}

/// `mu_x = sum_{y ~ x} mu_xy`.
pub fn site_conductance<C: Conductances + ?Sized>(env: &C, x: &Site) -> f64 {
    let mut buf = [0.0; 2 * crate::lattice::MAX_DIM];
    env.incident(x, &mut buf)
}

#[derive(Clone, Debug)]
enum Kind {
    Random { cache: Option<(LatticeRegion, Vec<f64>)> },
    Constant(f64),
}

/// An environment `omega`: i.i.d. conductances drawn from a [`TailLaw`],
/// each a pure function of `(seed, canonical edge)`.
///
/// Values can be materialised over a region up front ([`Self::eager`]);
/// queries outside that region fall through to the same hash, so eager and
/// lazy fields with one seed agree bit for bit everywhere.
#[derive(Clone, Debug)]
pub struct ConductanceField {
    law: TailLaw,
    seed: u64,
    key: u64,
    kind: Kind,
}

impl ConductanceField {
    pub fn lazy(law: TailLaw, seed: u64) -> Self {
        let key = derive_seed(seed, Namespace::Environment, 0);
        ConductanceField { law, seed, key, kind: Kind::Random { cache: None } }
    }

    pub fn eager(law: TailLaw, seed: u64, region: LatticeRegion) -> Result<Self> {
        if region.dim() != law.dim() {
            return Err(Error::invalid("region", "dimension differs from the law"));
        }
        let mut field = ConductanceField::lazy(law, seed);
        let d = law.dim();
        let mut values = Vec::with_capacity(region.len() * d);
        for x in region.sites() {
            for axis in 0..d {
                values.push(field.evaluate(&Edge::from_dir(&x, 2 * axis)));
            }
        }
        field.kind = Kind::Random { cache: Some((region, values)) };
        Ok(field)
    }

    /// `mu == value` on every bond (the law is kept only for bookkeeping).
    pub fn homogeneous(d: usize, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::invalid("value", "homogeneous conductance must be positive and finite"));
        }
        let law = TailLaw::cauchy(d)?;
        Ok(ConductanceField { law, seed: 0, key: 0, kind: Kind::Constant(value) })
    }

    pub fn law(&self) -> &TailLaw {
        &self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_homogeneous(&self) -> Option<f64> {
        match self.kind {
            Kind::Constant(c) => Some(c),
            Kind::Random { .. } => None,
        }
    }

    pub fn cached_region(&self) -> Option<&LatticeRegion> {
        match &self.kind {
            Kind::Random { cache: Some((r, _)) } => Some(r),
            _ => None,
        }
    }

    /// `P(mu_e > threshold)` under this field's law.
    pub fn open_probability(&self, threshold: f64) -> f64 {
        match self.kind {
            Kind::Constant(c) => (c > threshold) as u8 as f64,
            Kind::Random { .. } => self.law.survival_strict(threshold),
        }
    }

    /// Uniform in `(0, 1]` attached to an edge.
    #[inline(always)]
    fn edge_uniform(&self, e: &Edge) -> f64 {
        let c = e.lo().coords();
        let mut h = self.key;
        let mut i = 0;
        while i + 1 < c.len() {
            let w = (c[i] as u32 as u64) | ((c[i + 1] as u32 as u64) << 32);
            h = mix64(h ^ w);
            i += 2;
        }
        let last = if i < c.len() { c[i] as u32 as u64 } else { 0xffff_ffff };
        h = mix64(h ^ last ^ ((e.axis() as u64 + 1) << 40));
        unit_f64_open(h)
    }

    #[inline(always)]
    fn evaluate(&self, e: &Edge) -> f64 {
        self.law.sample_from_uniform(self.edge_uniform(e))
    }

    /// Conductance of the bond `{x, y}`; errors unless `x ~ y`.
    pub fn sample_edge(&self, x: &Site, y: &Site) -> Result<f64> {
        Ok(self.conductance(&Edge::between(x, y)?))
    }
}

impl Conductances for ConductanceField {
    fn dim(&self) -> usize {
        self.law.dim()
    }

    #[inline]
    fn conductance(&self, e: &Edge) -> f64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Random { cache: None } => self.evaluate(e),
            Kind::Random { cache: Some((region, values)) } => {
                match (region.index(e.lo()), region.contains(&e.hi())) {
                    (Some(i), true) => values[i * self.law.dim() + e.axis()],
                    _ => self.evaluate(e),
                }
            }
        }
    }
}

/// The truncation `mu~_e = mu_e 1{mu_e <= a n^2}`.
#[derive(Clone, Debug)]
pub struct TruncatedView<C> {
    base: C,
    a: f64,
    n: f64,
    cutoff: f64,
}

impl<C: Conductances> TruncatedView<C> {
    pub fn new(base: C, a: f64, n: f64) -> Result<Self> {
        if !(a > 0.0) || !(n > 0.0) {
            return Err(Error::invalid("a", "truncation level and scale must be positive"));
        }
        Ok(TruncatedView { base, a, n, cutoff: a * n * n })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn base(&self) -> &C {
        &self.base
    }
}

impl<C: Conductances> Conductances for TruncatedView<C> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    #[inline]
    fn conductance(&self, e: &Edge) -> f64 {
        let c = self.base.conductance(e);
        if c <= self.cutoff {
            c
        } else {
            0.0
        }
    }
}

/// Conductances given by a closure; handy for hand-built networks.
pub struct FnField<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&Edge) -> f64> FnField<F> {
    pub fn new(d: usize, f: F) -> Self {
        FnField { d, f }
    }
}

impl<F: Fn(&Edge) -> f64> Conductances for FnField<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn conductance(&self, e: &Edge) -> f64 {
        (self.f)(e)
    }
}

/// `E_n(a, b) = {e : a n^2 <= mu_e < b n^2}` restricted to bonds inside
/// `region`, sorted canonically. `b = None` means `b = inf`.
pub fn big_edge_set<C: Conductances + ?Sized>(
    env: &C,
    region: &LatticeRegion,
    a: f64,
    b: Option<f64>,
    n: f64,
) -> Result<Vec<Edge>> {
    if !(a > 0.0) {
        return Err(Error::invalid("a", "must be positive"));
    }
    if let Some(b) = b {
        if a >= b {
            return Err(Error::invalid("b", "need a < b"));
        }
    }
    let lo = a * n * n;
    let hi = b.map_or(f64::INFINITY, |b| b * n * n);
    let mut out: Vec<Edge> = region
        .edges()
        .filter(|e| {
            let c = env.conductance(e);
            lo <= c && c < hi
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn law3() -> TailLaw {
        TailLaw::cauchy(3).unwrap()
    }

    #[test]
    fn evaluation_is_pure_and_symmetric() {
        let f = ConductanceField::lazy(law3(), 42);
        let x = Site::new(&[4, -1, 7]);
        for dir in 0..6 {
            let y = x.neighbor(dir);
            let a = f.sample_edge(&x, &y).unwrap();
            let b = f.sample_edge(&y, &x).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(a >= 1.0);
        }
        assert!(f.sample_edge(&x, &Site::new(&[5, 0, 7])).is_err());
    }

    #[test]
    fn eager_and_lazy_agree_bitwise() {
        let region = LatticeRegion::cube(3, 4, Boundary::Free).unwrap();
        let eager = ConductanceField::eager(law3(), 9, region).unwrap();
        let lazy = ConductanceField::lazy(law3(), 9);
        for e in region.edges() {
            assert_eq!(eager.conductance(&e).to_bits(), lazy.conductance(&e).to_bits());
        }
        // bond leaving the cached region
        let e = Edge::from_dir(&Site::new(&[4, 0, 0]), 0);
        assert_eq!(eager.conductance(&e).to_bits(), lazy.conductance(&e).to_bits());
    }

    #[test]
    fn homogeneous_site_conductance() {
        let f = ConductanceField::homogeneous(3, 1.0).unwrap();
        assert_eq!(site_conductance(&f, &Site::origin(3)), 6.0);
    }

    #[test]
    fn truncation_below_one_cuts_everything() {
        let f = ConductanceField::lazy(law3(), 1);
        let t = TruncatedView::new(&f, 0.5, 1.0).unwrap();
        assert_eq!(site_conductance(&t, &Site::origin(3)), 0.0);
    }

    #[test]
    fn truncation_is_monotone() {
        let f = ConductanceField::lazy(law3(), 3);
        let region = LatticeRegion::cube(3, 3, Boundary::Free).unwrap();
        let t1 = TruncatedView::new(&f, 1.0, 2.0).unwrap();
        let t2 = TruncatedView::new(&f, 3.0, 2.0).unwrap();
        for e in region.edges() {
            let (m, a, b) = (f.conductance(&e), t1.conductance(&e), t2.conductance(&e));
            assert!(a <= b && b <= m);
            assert!(a == 0.0 || (1.0..=4.0).contains(&a));
        }
    }

    #[test]
    fn big_edges_on_homogeneous_field() {
        let f = ConductanceField::homogeneous(3, 1.0).unwrap();
        let region = LatticeRegion::cube(3, 3, Boundary::Free).unwrap();
        assert!(big_edge_set(&f, &region, 2.0, None, 1.0).unwrap().is_empty());
        assert_eq!(big_edge_set(&f, &region, 1.0, None, 1.0).unwrap().len(), region.edge_count());
        assert!(big_edge_set(&f, &region, 2.0, Some(1.0), 1.0).is_err());
    }

    #[test]
    fn big_edge_set_is_sorted_and_exact() {
        let f = ConductanceField::lazy(law3(), 17);
        let region = LatticeRegion::cube(3, 6, Boundary::Free).unwrap();
        let set = big_edge_set(&f, &region, 0.5, Some(2.0), 4.0).unwrap();
        assert!(set.windows(2).all(|w| w[0] < w[1]));
        let brute = region
            .edges()
            .filter(|e| (8.0..32.0).contains(&f.conductance(e)))
            .count();
        assert_eq!(set.len(), brute);
    }
}
