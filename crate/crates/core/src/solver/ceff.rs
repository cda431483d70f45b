//! Effective conductances `C_eff[A, B]`: the Dirichlet energy of the
//! potential that is 1 on `A`, 0 on `B` and harmonic elsewhere.

use alloc::vec;
use alloc::vec::Vec;

use super::cg::pcg;
use super::operator::NONE;
use crate::env::Conductances;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Edge, LatticeRegion, Site, MAX_DIM};

const ABSENT: u8 = 0;
const FREE: u8 = 1;
const ONE: u8 = 2;
const ZERO: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CeffResult {
    /// `E(h, h) = sum_e mu_e (grad h)^2`.
    pub conductance: f64,
    /// Current out of `A`.
    pub flux: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub iterations: usize,
}

/// Solve for the potential on a window whose sites are tagged; bonds that
/// leave the window go to zero potential if `outside_zero`, else are absent.
fn solve_tagged<C: Conductances + ?Sized>(
    env: &C,
    window: &LatticeRegion,
    tags: &[u8],
    outside_zero: bool,
    tol: f64,
) -> Result<CeffResult> {
    let d = window.dim();
    let k = 2 * d;
    let tag_of = |y: &Site| match window.index(y) {
        Some(j) => tags[j],
        None if outside_zero => ZERO,
        None => ABSENT,
    };
    // unknowns in window order
    let mut unknown = vec![NONE; window.len()];
    let mut sites = Vec::new();
    for (i, &t) in tags.iter().enumerate() {
        if t == FREE {
            unknown[i] = sites.len() as u32;
            sites.push(i);
        }
    }
    let m = sites.len();
    let mut nbr = vec![NONE; m * k];
    let mut w = vec![0.0; m * k];
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut buf = [0.0; 2 * MAX_DIM];
    for (u, &i) in sites.iter().enumerate() {
        let x = window.site(i);
        env.incident(&x, &mut buf);
        for dir in 0..k {
            let y = x.neighbor(dir);
            let c = buf[dir];
            match tag_of(&y) {
                ABSENT => {}
                FREE => {
                    nbr[u * k + dir] = unknown[window.index(&y).unwrap()];
                    w[u * k + dir] = c;
                    diag[u] += c;
                }
                ONE => {
                    rhs[u] += c;
                    diag[u] += c;
                }
                _ => diag[u] += c,
            }
        }
        if diag[u] == 0.0 {
            // isolated site; its row is trivially h = 0
            diag[u] = 1.0;
        }
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for (u, o) in out.iter_mut().enumerate() {
            let mut acc = diag[u] * v[u];
            for dir in 0..k {
                let j = nbr[u * k + dir];
                if j != NONE {
                    acc -= w[u * k + dir] * v[j as usize];
                }
            }
            *o = acc;
        }
    };
    let mut h = vec![0.0; m];
    let rep = pcg(apply, &diag, &rhs, &mut h, tol, 200_000)?;

    let potential = |y: &Site| -> Option<f64> {
        match tag_of(y) {
            ABSENT => None,
            ONE => Some(1.0),
            ZERO => Some(0.0),
            _ => Some(h[unknown[window.index(y).unwrap()] as usize]),
        }
    };
    let mut energy = 0.0;
    let mut flux = 0.0;
    for (i, &t) in tags.iter().enumerate() {
        if t == ABSENT {
            continue;
        }
        let x = window.site(i);
        let hx = potential(&x).unwrap();
        env.incident(&x, &mut buf);
        for dir in 0..k {
            let y = x.neighbor(dir);
            let Some(hy) = potential(&y) else { continue };
            // count each bond once; bonds leaving the window are seen once
            if dir % 2 == 0 || !window.contains(&y) {
                energy += buf[dir] * (hx - hy) * (hx - hy);
            }
            if t == ONE {
                flux += buf[dir] * (1.0 - hy);
            }
        }
    }
    Ok(CeffResult { conductance: energy, flux, residual: rep.residual, iterations: rep.iterations })
}

/// `C_eff[A, B]` inside `region`. With a Dirichlet region the outside counts
/// as part of `B` (which may then be empty); with a free region bonds
/// leaving it are absent.
pub fn effective_conductance<C: Conductances + ?Sized>(
    env: &C,
    region: &LatticeRegion,
    a: &[Site],
    b: &[Site],
    tol: f64,
) -> Result<CeffResult> {
    let dirichlet = region.boundary() == Boundary::Dirichlet;
    if a.is_empty() {
        return Err(Error::Empty("A"));
    }
    if b.is_empty() && !dirichlet {
        return Err(Error::Empty("B"));
    }
    let mut tags = vec![FREE; region.len()];
    for x in b {
        tags[region.index(x).ok_or(Error::OutsideRegion)?] = ZERO;
    }
    for x in a {
        let i = region.index(x).ok_or(Error::OutsideRegion)?;
        if tags[i] == ZERO {
            return Err(Error::Overlap);
        }
        tags[i] = ONE;
    }
    solve_tagged(env, region, &tags, dirichlet, tol)
}

fn ball_window(center: &Site, radius: f64, within: Option<&LatticeRegion>) -> Result<LatticeRegion> {
    if !(radius >= 0.0) {
        return Err(Error::invalid("b", "radius must be nonnegative"));
    }
    // one layer of zero-potential sites around the ball
    let half = libm::ceil(radius) as u32 + 2;
    let window = LatticeRegion::new(*center, half, Boundary::Free)?;
    if let Some(r) = within {
        if !window.is_inside(r) {
            return Err(Error::invalid("region", "too small for the ball and its margin"));
        }
    }
    Ok(window)
}

/// `gamma_n(e) = C_eff[{x_e, y_e}, B(e, b)^c]` with
/// `B(e, b) = B(x_e, b) intersect B(y_e, b)`. Passing `within` checks that
/// the ball plus a margin fits in that region.
pub fn gamma_n<C: Conductances + ?Sized>(env: &C, e: &Edge, b: f64, within: Option<&LatticeRegion>, tol: f64) -> Result<f64> {
    let (x, y) = e.endpoints();
    let window = ball_window(&x, b + 1.0, within)?;
    let r2 = b * b;
    let tags: Vec<u8> = window
        .sites()
        .map(|s| {
            if s == x || s == y {
                ONE
            } else if s.dist2(&x) as f64 <= r2 && s.dist2(&y) as f64 <= r2 {
                FREE
            } else {
                ZERO
            }
        })
        .collect();
    Ok(solve_tagged(env, &window, &tags, false, tol)?.conductance)
}

/// `C_eff[{z}, B(z, r)^c]`; the site version uses `r = b + 1`.
pub fn gamma_n_site<C: Conductances + ?Sized>(env: &C, z: &Site, r: f64, within: Option<&LatticeRegion>, tol: f64) -> Result<f64> {
    let window = ball_window(z, r, within)?;
    let r2 = r * r;
    let tags: Vec<u8> = window
        .sites()
        .map(|s| {
            if s == *z {
                ONE
            } else if s.dist2(z) as f64 <= r2 {
                FREE
            } else {
                ZERO
            }
        })
        .collect();
    Ok(solve_tagged(env, &window, &tags, false, tol)?.conductance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ConductanceField, FnField};
    use crate::law::TailLaw;
    use crate::solver::green::{green, GreenOptions};

    #[test]
    fn series_law_on_a_path() {
        let (m1, m2) = (2.0, 5.0);
        let env = FnField::new(2, move |e: &Edge| {
            if e.axis() != 0 || e.lo().coord(1) != 0 {
                return 0.0;
            }
            match e.lo().coord(0) {
                -1 => m1,
                0 => m2,
                _ => 0.0,
            }
        });
        let region = LatticeRegion::cube(2, 2, Boundary::Free).unwrap();
        let r = effective_conductance(&env, &region, &[Site::new(&[-1, 0])], &[Site::new(&[1, 0])], 1e-12).unwrap();
        let exact = m1 * m2 / (m1 + m2);
        assert!((r.conductance - exact).abs() < 1e-10);
        assert!((r.flux - exact).abs() < 1e-10);
    }

    #[test]
    fn duality_with_green() {
        let env = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), 99);
        let region = LatticeRegion::cube(3, 5, Boundary::Dirichlet).unwrap();
        let x = Site::new(&[1, -2, 0]);
        let c = effective_conductance(&env, &region, &[x], &[], 1e-12).unwrap();
        let g = green(&env, &x, region, &GreenOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!((c.conductance * g.value(&x) - 1.0).abs() < 1e-8);
        assert!((c.conductance - c.flux).abs() < 1e-8 * c.conductance);
    }

    #[test]
    fn overlap_and_empty_rejected() {
        let env = ConductanceField::homogeneous(2, 1.0).unwrap();
        let region = LatticeRegion::cube(2, 2, Boundary::Free).unwrap();
        let o = Site::origin(2);
        assert_eq!(effective_conductance(&env, &region, &[o], &[o], 1e-10), Err(Error::Overlap));
        assert_eq!(effective_conductance(&env, &region, &[o], &[], 1e-10), Err(Error::Empty("B")));
    }

    #[test]
    fn gamma_decreasing_and_above_site_version() {
        let env = ConductanceField::lazy(TailLaw::cauchy(3).unwrap(), 3);
        let e = Edge::from_dir(&Site::origin(3), 0);
        let g3 = gamma_n(&env, &e, 3.0, None, 1e-10).unwrap();
        let g5 = gamma_n(&env, &e, 5.0, None, 1e-10).unwrap();
        assert!(g5 <= g3 * (1.0 + 1e-9));
        let gs = gamma_n_site(&env, &Site::origin(3), 4.0, None, 1e-10).unwrap();
        assert!(g3 >= gs * (1.0 - 1e-9));
    }

    #[test]
    fn gamma_respects_region() {
        let env = ConductanceField::homogeneous(3, 1.0).unwrap();
        let e = Edge::from_dir(&Site::origin(3), 0);
        let small = LatticeRegion::cube(3, 4, Boundary::Free).unwrap();
        assert!(gamma_n(&env, &e, 6.0, Some(&small), 1e-10).is_err());
    }
}
