//! Integrals of the Gaussian density that appear as limits of the clock's
//! first and second moments.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::special::{gamma_p, gaussian_ball_mass, normal_cdf, unit_sphere_area};

fn check(d: usize, k: f64, t: f64, delta: f64, sigma_v2: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("d", "must be positive"));
    }
    if !(k > 0.0) {
        return Err(Error::invalid("K", "must be positive"));
    }
    if !(sigma_v2 > 0.0) {
        return Err(Error::invalid("sigma_v2", "must be positive"));
    }
    if !(delta >= 0.0 && delta <= t) {
        return Err(Error::invalid("delta", "need 0 <= delta <= t"));
    }
    Ok(())
}

/// `A_1(K, t, delta) = int_delta^t int_{|x| <= K} k_s(x) dx ds`.
pub fn a1_integral(d: usize, k: f64, t: f64, delta: f64, sigma_v2: f64) -> Result<f64> {
    check(d, k, t, delta, sigma_v2)?;
    if delta == t {
        return Ok(0.0);
    }
    let f = |s: f64| if s <= 0.0 { 1.0 } else { gaussian_ball_mass(d, sigma_v2 * s, k) };
    Ok(adaptive_simpson(&f, delta, t, 1e-9 * (t - delta)))
}

/// `P(|x + sqrt(v) Z| <= K)` for `|x| = rho` and standard normal `Z` in `R^d`.
pub fn offset_ball_mass(d: usize, k: f64, rho: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return if rho <= k { 1.0 } else { 0.0 };
    }
    let tau = libm::sqrt(v);
    let a = (k - rho) / tau;
    let b = (-k - rho) / tau;
    if d == 1 {
        return normal_cdf(a) - normal_cdf(b);
    }
    if rho < 1e-9 * tau {
        return gaussian_ball_mass(d, v, k);
    }
    if d == 3 {
        let g = |z: f64| libm::exp(-0.5 * z * z);
        let c = tau / (rho * libm::sqrt(2.0 * PI));
        return (normal_cdf(a) - normal_cdf(b) - c * (g(a) - g((k + rho) / tau))).clamp(0.0, 1.0);
    }
    // condition on the radial coordinate along x
    let half = (d as f64 - 1.0) / 2.0;
    let f = |z: f64| {
        let p = rho + tau * z;
        let rest = (k * k - p * p) / (2.0 * v);
        crate::special::normal_pdf(z) * if rest > 0.0 { gamma_p(half, rest) } else { 0.0 }
    };
    adaptive_simpson(&f, b, a, 1e-9).clamp(0.0, 1.0)
}

/// `8 (1 + eps) int_{|x|,|y| <= K} int_delta^t k_s(x) int_0^{t-s} k_r(x, y) dr ds dx dy`.
pub fn second_moment_bound(d: usize, k: f64, t: f64, delta: f64, sigma_v2: f64, eps: f64) -> Result<f64> {
    check(d, k, t, delta, sigma_v2)?;
    if !(eps >= 0.0) {
        return Err(Error::invalid("eps", "must be nonnegative"));
    }
    if delta == t {
        return Ok(0.0);
    }
    let area = if d == 1 { 2.0 } else { unit_sphere_area(d) };
    let tol = 1e-7;
    // occupation of B(0, K) by a Gaussian started at distance rho, up to u
    let occupation = |rho: f64, u: f64| adaptive_simpson(&|r: f64| offset_ball_mass(d, k, rho, sigma_v2 * r), 0.0, u, tol * u.max(1e-300));
    let inner = |s: f64| {
        let var = sigma_v2 * s;
        let norm = libm::pow(2.0 * PI * var, -(d as f64) / 2.0);
        let radial = |rho: f64| {
            area * libm::pow(rho, d as f64 - 1.0) * norm * libm::exp(-rho * rho / (2.0 * var)) * occupation(rho, t - s)
        };
        // the integrand lives within a few standard deviations of the origin
        let top = k.min(12.0 * libm::sqrt(var));
        (0..8).map(|i| adaptive_simpson(&radial, top * i as f64 / 8.0, top * (i + 1) as f64 / 8.0, tol / 8.0)).sum::<f64>()
    };
    Ok(8.0 * (1.0 + eps) * adaptive_simpson(&inner, delta, t, tol))
}
