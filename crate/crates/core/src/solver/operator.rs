//! The generator restricted to a box, stored as a fixed-degree sparse
//! matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::Conductances;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Edge, LatticeRegion, MAX_DIM};

pub(crate) const NONE: u32 = u32::MAX;

/// `-L` on a box: `(-L v)(x) = sum_y mu_xy (v(x) - v(y))`.
///
/// With a free boundary only bonds inside the box exist, so the operator
/// conserves mass. With a Dirichlet boundary bonds to the outside are kept
/// and the outside is held at zero, which makes the operator positive
/// definite.
#[derive(Clone, Debug)]
pub struct BoxOperator {
    region: LatticeRegion,
    degree: usize,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    diag: Vec<f64>,
}

impl BoxOperator {
    pub fn new<C: Conductances + ?Sized>(env: &C, region: LatticeRegion) -> Result<Self> {
        let d = region.dim();
        if env.dim() != d {
            return Err(Error::invalid("region", "dimension differs from the environment"));
        }
        if region.len() >= NONE as usize {
            return Err(Error::invalid("region", "too many sites"));
        }
        let k = 2 * d;
        let mut neighbors = vec![NONE; region.len() * k];
        let mut weights = vec![0.0; region.len() * k];
        let mut diag = vec![0.0; region.len()];
        let mut buf = [0.0; 2 * MAX_DIM];
        for (i, x) in region.sites().enumerate() {
            env.incident(&x, &mut buf);
            for dir in 0..k {
                let c = buf[dir];
                match region.index(&x.neighbor(dir)) {
                    Some(j) => {
                        neighbors[i * k + dir] = j as u32;
                        weights[i * k + dir] = c;
                        diag[i] += c;
                    }
                    None if region.boundary() == Boundary::Dirichlet => diag[i] += c,
                    None => {}
                }
            }
        }
        Ok(BoxOperator { region, degree: k, neighbors, weights, diag })
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Diagonal of `-L`: the total rate out of each site.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `max_x mu_x` over the box.
    pub fn max_rate(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    /// Number of stored off-diagonal entries.
    pub fn nnz(&self) -> usize {
        self.neighbors.iter().filter(|&&j| j != NONE).count()
    }

    /// Conductance of an edge as seen by the operator (zero if either end is
    /// outside the box).
    pub fn weight(&self, e: &Edge) -> f64 {
        let (x, _) = e.endpoints();
        match self.region.index(&x) {
            Some(i) if self.neighbors[i * self.degree + 2 * e.axis()] != NONE => {
                self.weights[i * self.degree + 2 * e.axis()]
            }
            _ => 0.0,
        }
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let k = self.degree;
        (&self.neighbors[i * k..(i + 1) * k], &self.weights[i * k..(i + 1) * k])
    }

    /// `out = -L v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (nb, w) = self.row(i);
            let mut acc = self.diag[i] * v[i];
            for (&j, &c) in nb.iter().zip(w) {
                if j != NONE {
                    acc -= c * v[j as usize];
                }
            }
            *o = acc;
        }
    }

    /// `out = v - (-L v) / lambda`, one step of the uniformized chain.
    pub(crate) fn uniform_step(&self, v: &[f64], out: &mut [f64], inv_lambda: f64) {
        for (i, o) in out.iter_mut().enumerate() {
            let (nb, w) = self.row(i);
            let mut flow = 0.0;
            for (&j, &c) in nb.iter().zip(w) {
                if j != NONE {
                    flow += c * v[j as usize];
                }
            }
            *o = v[i] + (flow - self.diag[i] * v[i]) * inv_lambda;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ConductanceField;
    use crate::law::TailLaw;

    #[test]
    fn free_operator_annihilates_constants() {
        let env = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), 4);
        let region = LatticeRegion::cube(3, 3, Boundary::Free).unwrap();
        let op = BoxOperator::new(&env, region).unwrap();
        let ones = vec![1.0; op.len()];
        let mut out = vec![0.0; op.len()];
        op.apply(&ones, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn operator_is_symmetric() {
        let env = ConductanceField::lazy(TailLaw::cauchy(2).unwrap(), 5);
        let region = LatticeRegion::cube(2, 3, Boundary::Dirichlet).unwrap();
        let op = BoxOperator::new(&env, region).unwrap();
        let n = op.len();
        let mut ei = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            ei.iter_mut().for_each(|v| *v = 0.0);
            ei[i] = 1.0;
            op.apply(&ei, &mut col);
            for j in 0..n {
                m[j * n + i] = col[j];
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m[i * n + j], m[j * n + i]);
            }
        }
    }

    #[test]
    fn dirichlet_diagonal_counts_outside_bonds() {
        let env = ConductanceField::homogeneous(3, 1.0).unwrap();
        let region = LatticeRegion::cube(3, 1, Boundary::Dirichlet).unwrap();
        let op = BoxOperator::new(&env, region).unwrap();
        assert!(op.diag().iter().all(|&v| v == 6.0));
        let free = BoxOperator::new(&env, region.with_boundary(Boundary::Free)).unwrap();
        // the corner has three bonds inside
        assert_eq!(free.diag()[0], 3.0);
    }
}
