//! One-dimensional quadrature.

/// Adaptive Simpson rule to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Composite trapezoid rule, doubling the panel count until two successive
/// estimates agree to relative tolerance `rel_tol`. Returns the estimate and
/// the number of panels used.
pub fn adaptive_trapezoid<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, rel_tol: f64) -> (f64, usize) {
    if a == b {
        return (0.0, 0);
    }
    let mut panels = 1usize;
    let mut h = b - a;
    let mut estimate = 0.5 * h * (f(a) + f(b));
    loop {
        // add the midpoints of the current panels
        let mut mid = 0.0;
        for i in 0..panels {
            mid += f(a + (i as f64 + 0.5) * h);
        }
        let refined = 0.5 * estimate + 0.5 * h * mid;
        panels *= 2;
        h *= 0.5;
        let converged = libm::fabs(refined - estimate) <= rel_tol * libm::fabs(refined);
        estimate = refined;
        if (converged && panels >= 8) || panels >= 1 << 22 {
            return (estimate, panels);
        }
    }
}
