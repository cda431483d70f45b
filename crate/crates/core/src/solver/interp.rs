//! Multilinear interpolation of lattice fields.

use crate::error::{Error, Result};
use crate::lattice::{LatticeRegion, Site, MAX_DIM};

use super::uniformization::KernelField;

/// Multilinear interpolation of `values` (in region index order) at a real
/// point, using the `2^d` corners of the containing unit cube.
pub fn multilinear(region: &LatticeRegion, values: &[f64], point: &[f64]) -> Result<f64> {
    let d = region.dim();
    if point.len() != d {
        return Err(Error::invalid("point", "dimension differs from the region"));
    }
    let h = region.half_side() as f64;
    let mut base = [0i32; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for i in 0..d {
        let c = region.center().coord(i) as f64;
        let p = point[i];
        if !(p >= c - h && p <= c + h) {
            return Err(Error::OutsideRegion);
        }
        // keep the cube inside the box on its upper faces
        let lo = libm::floor(p).min(c + h - 1.0);
        base[i] = lo as i32;
        frac[i] = p - lo;
    }
    let mut total = 0.0;
    for corner in 0..(1usize << d) {
        let mut coords = [0i32; MAX_DIM];
        let mut weight = 1.0;
        for i in 0..d {
            let up = (corner >> i) & 1 == 1;
            coords[i] = base[i] + up as i32;
            weight *= if up { frac[i] } else { 1.0 - frac[i] };
        }
        if weight != 0.0 {
            let idx = region.index(&Site::new(&coords[..d])).ok_or(Error::OutsideRegion)?;
            total += weight * values[idx];
        }
    }
    Ok(total)
}

/// Interpolate the `k`-th time slice of a kernel field at a real point.
pub fn kernel_interpolate(kf: &KernelField, k: usize, point: &[f64]) -> Result<f64> {
    if k >= kf.times().len() {
        return Err(Error::invalid("k", "no such time"));
    }
    multilinear(kf.region(), kf.values(k), point)
}
