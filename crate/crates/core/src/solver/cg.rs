//! Jacobi-preconditioned conjugate gradients.

use alloc::vec;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final `|b - A x| / |b|`, recomputed from scratch.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` for symmetric positive definite `A` given as a matvec,
/// starting from the contents of `x`.
pub fn pcg<F>(apply: F, diag: &[f64], b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<CgReport>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    if diag.len() != n || x.len() != n {
        return Err(Error::invalid("x", "dimensions differ"));
    }
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("diag", "preconditioner needs a positive diagonal"));
    }
    let b_norm = libm::sqrt(dot(b, b));
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: alloc::vec::Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    while libm::sqrt(dot(&r, &r)) > rel_tol * b_norm {
        if iterations == max_iter {
            return Err(Error::NotConverged { iterations, residual: libm::sqrt(dot(&r, &r)) / b_norm });
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        z.iter_mut().zip(r.iter().zip(diag)).for_each(|(zi, (ri, di))| *zi = ri / di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        iterations += 1;
    }
    // the recursive residual drifts; report the true one
    apply(x, &mut r);
    let true_res = libm::sqrt(r.iter().zip(b).map(|(ri, bi)| (bi - ri) * (bi - ri)).sum::<f64>()) / b_norm;
    Ok(CgReport { iterations, residual: true_res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        // A = tridiag(-1, 3, -1)
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut s = 3.0 * v[i];
                if i > 0 {
                    s -= v[i - 1];
                }
                if i + 1 < n {
                    s -= v[i + 1];
                }
                out[i] = s;
            }
        };
        let b: alloc::vec::Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let rep = pcg(apply, &vec![3.0; n], &b, &mut x, 1e-12, 1000).unwrap();
        assert!(rep.residual < 1e-11);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let n = 200;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut s = 2.0001 * v[i];
                if i > 0 {
                    s -= v[i - 1];
                }
                if i + 1 < n {
                    s -= v[i + 1];
                }
                out[i] = s;
            }
        };
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let mut x = vec![0.0; n];
        let err = pcg(apply, &vec![2.0001; n], &b, &mut x, 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 3, .. }));
    }
}
