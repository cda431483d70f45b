//! Green's functions on a box killed at its boundary.

use alloc::vec;
use alloc::vec::Vec;

use super::cg::pcg;
use super::operator::BoxOperator;
use crate::env::Conductances;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeRegion, Site};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions { tol: 1e-10, max_iter: 100_000 }
    }
}

/// `g(x0, .)` on a Dirichlet box: the solution of `L g = -delta_{x0}` with
/// `g = 0` outside.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenField {
    source: Site,
    region: LatticeRegion,
    values: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl GreenField {
    pub fn source(&self) -> &Site {
        &self.source
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `g(x0, y)`; zero outside the box.
    pub fn value(&self, y: &Site) -> f64 {
        self.region.index(y).map_or(0.0, |i| self.values[i])
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

pub fn green<C: Conductances + ?Sized>(env: &C, x0: &Site, region: LatticeRegion, opts: &GreenOptions) -> Result<GreenField> {
    if region.dim() < 3 {
        return Err(Error::invalid("d", "Green's function needs d >= 3"));
    }
    if region.boundary() != Boundary::Dirichlet {
        return Err(Error::invalid("region", "Green's function needs a Dirichlet box"));
    }
    let op = BoxOperator::new(env, region)?;
    let i0 = region.index(x0).ok_or(Error::OutsideRegion)?;
    let mut b = vec![0.0; op.len()];
    b[i0] = 1.0;
    let mut x = vec![0.0; op.len()];
    let rep = pcg(|v, out| op.apply(v, out), op.diag(), &b, &mut x, opts.tol, opts.max_iter)?;
    Ok(GreenField { source: *x0, region, values: x, residual: rep.residual, iterations: rep.iterations })
}

/// Two-box extrapolation of a quantity converging like `g_inf - c / L`
/// with `L = half_side + 1`.
pub fn richardson(value1: f64, half_side1: u32, value2: f64, half_side2: u32) -> f64 {
    let l1 = half_side1 as f64 + 1.0;
    let l2 = half_side2 as f64 + 1.0;
    (l2 * value2 - l1 * value1) / (l2 - l1)
}
