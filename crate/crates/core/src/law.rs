//! The conductance law: an atom at 1 mixed with a heavy branch on `[1, inf)`.
//!
//! With probability `1 - tail_c` the conductance equals 1; otherwise it is
//! drawn from a branch with survival `h(u)`. For `rho = 0` the branch is
//! Pareto with index `alpha`, so for `u >= 1`
//!
//! ```text
//! P(mu >= u) = tail_c * u^(-alpha)
//! ```
//!
//! holds exactly. The default `tail_c = 1/(2d)` with `alpha = 1` gives the
//! Cauchy-type tail `P(mu >= u) = 1/(2du)`.
//!
//! For `rho != 0` the branch survival is `(u0/u)^alpha (ln u / ln u0)^rho`
//! above `u0 = exp(max(rho/alpha, 1))` and 1 below it, which keeps it
//! monotone and continuous; sampling then inverts it numerically.

use crate::error::{Error, Result};
use crate::lattice::MAX_DIM;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailLaw {
    d: usize,
    tail_c: f64,
    rho: f64,
    alpha: f64,
    u0: f64,
}

impl TailLaw {
    /// Law with the default tail constant `1/(2d)`.
    pub fn new(d: usize, rho: f64, alpha: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::invalid("d", alloc::format!("dimension {d} outside 2..={MAX_DIM}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", "tail index must lie in (0, 1]"));
        }
        if !(rho >= -1.0) || !rho.is_finite() {
            return Err(Error::invalid("rho", "log exponent must be finite and at least -1"));
        }
        let u0 = if rho == 0.0 { 1.0 } else { libm::exp(f64::max(rho / alpha, 1.0)) };
        Ok(TailLaw { d, tail_c: 1.0 / (2 * d) as f64, rho, alpha, u0 })
    }

    /// Cauchy-tailed law in dimension `d`.
    pub fn cauchy(d: usize) -> Result<Self> {
        TailLaw::new(d, 0.0, 1.0)
    }

    pub fn with_tail_c(mut self, tail_c: f64) -> Result<Self> {
        if !(tail_c > 0.0 && tail_c <= 1.0) {
            return Err(Error::invalid("tail_c", "must lie in (0, 1]"));
        }
        self.tail_c = tail_c;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tail_c(&self) -> f64 {
        self.tail_c
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Lower end of the heavy branch (1 when `rho = 0`).
    pub fn branch_floor(&self) -> f64 {
        self.u0
    }

    fn is_pure_power(&self) -> bool {
        self.rho == 0.0
    }

    /// Survival of the heavy branch, `P(branch > u)`, for `u >= 1`.
    fn branch_survival(&self, u: f64) -> f64 {
        if self.is_pure_power() {
            if self.alpha == 1.0 {
                1.0 / u
            } else {
                libm::pow(u, -self.alpha)
            }
        } else if u <= self.u0 {
            1.0
        } else {
            libm::pow(self.u0 / u, self.alpha) * libm::pow(libm::log(u) / libm::log(self.u0), self.rho)
        }
    }

    /// Inverse of the branch survival on `(0, 1]`.
    fn branch_inverse(&self, s: f64) -> f64 {
        if self.is_pure_power() {
            return if self.alpha == 1.0 { 1.0 / s } else { libm::pow(s, -1.0 / self.alpha) };
        }
        if s >= 1.0 {
            return self.u0;
        }
        // Solve alpha*L - rho*ln L = alpha*ln u0 - rho*ln ln u0 - ln s for L = ln u;
        // the left side increases for L >= ln u0 >= rho/alpha.
        let l0 = libm::log(self.u0);
        let target = self.alpha * l0 - self.rho * libm::log(l0) - libm::log(s);
        let g = |l: f64| self.alpha * l - self.rho * libm::log(l) - target;
        let (mut lo, mut hi) = (l0, l0 + 1.0);
        while g(hi) < 0.0 {
            lo = hi;
            hi = 2.0 * hi + 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        libm::exp(0.5 * (lo + hi))
    }

    /// `P(mu >= u)`.
    pub fn survival(&self, u: f64) -> f64 {
        if u <= 1.0 {
            1.0
        } else {
            self.tail_c * self.branch_survival(u)
        }
    }

    /// `P(mu > u)`.
    pub fn survival_strict(&self, u: f64) -> f64 {
        if u < 1.0 {
            1.0
        } else {
            self.tail_c * self.branch_survival(u)
        }
    }

    /// `F(u) = P(mu <= u)`; zero below 1, jumps by `1 - tail_c` at 1.
    pub fn cdf(&self, u: f64) -> f64 {
        1.0 - self.survival_strict(u)
    }

    /// Left limit `P(mu < u)`.
    pub fn cdf_left(&self, u: f64) -> f64 {
        1.0 - self.survival(u)
    }

    /// Generalised inverse: the smallest `u` with `F(u) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 1.0 - self.tail_c {
            1.0
        } else if p >= 1.0 {
            f64::INFINITY
        } else {
            self.branch_inverse((1.0 - p) / self.tail_c)
        }
    }

    /// Conductance from a uniform `v` in `(0, 1]`, via `quantile(1 - v)`
    /// evaluated without the cancellation in `1 - v`.
    #[inline]
    pub fn sample_from_uniform(&self, v: f64) -> f64 {
        if v >= self.tail_c {
            1.0
        } else {
            self.branch_inverse(v / self.tail_c)
        }
    }

    /// `E[mu 1{mu <= c}]`, closed form; `None` when `rho != 0`.
    pub fn truncated_mean(&self, c: f64) -> Option<f64> {
        if !self.is_pure_power() {
            return None;
        }
        if c < 1.0 {
            return Some(0.0);
        }
        let branch = if self.alpha == 1.0 {
            libm::log(c)
        } else {
            self.alpha / (1.0 - self.alpha) * (libm::pow(c, 1.0 - self.alpha) - 1.0)
        };
        Some((1.0 - self.tail_c) + self.tail_c * branch)
    }

    /// `E[mu^2 1{mu <= c}]`, closed form; `None` when `rho != 0`.
    pub fn truncated_second_moment(&self, c: f64) -> Option<f64> {
        if !self.is_pure_power() {
            return None;
        }
        if c < 1.0 {
            return Some(0.0);
        }
        let a = self.alpha;
        let branch = a / (2.0 - a) * (libm::pow(c, 2.0 - a) - 1.0);
        Some((1.0 - self.tail_c) + self.tail_c * branch)
    }

    /// `E[min(mu, c)]`; `None` when `rho != 0`.
    pub fn mean_of_min(&self, c: f64) -> Option<f64> {
        if c < 1.0 {
            return self.is_pure_power().then_some(c);
        }
        Some(self.truncated_mean(c)? + c * self.survival_strict(c))
    }

    /// Mean of a truncated site conductance `sum_{y~x} mu_xy 1{mu_xy <= c}`.
    pub fn truncated_site_mean(&self, c: f64) -> Option<f64> {
        Some(2.0 * self.d as f64 * self.truncated_mean(c)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(TailLaw::new(1, 0.0, 1.0).is_err());
        assert!(TailLaw::new(3, 0.0, 0.0).is_err());
        assert!(TailLaw::new(3, 0.0, 1.5).is_err());
        assert!(TailLaw::new(3, -2.0, 1.0).is_err());
        assert!(TailLaw::new(3, 0.0, 0.5).is_ok());
    }

    #[test]
    fn unit_atom_and_exact_tail() {
        let law = TailLaw::cauchy(3).unwrap();
        assert_eq!(law.survival(1.0), 1.0);
        assert!((law.survival(10.0) - 1.0 / 60.0).abs() < 1e-15);
        for &u in &[1.0, 1.5, 7.0, 1e3, 1e9] {
            assert!((law.survival_strict(u) * 6.0 * u - 1.0).abs() < 1e-14);
        }
        assert_eq!(law.cdf(0.999), 0.0);
        assert!((law.cdf(1.0) - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(law.cdf_left(1.0), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = TailLaw::cauchy(3).unwrap();
        assert_eq!(law.quantile(5.0 / 6.0), 1.0);
        assert_eq!(law.quantile(0.1), 1.0);
        for &u in &[1.0, 1.01, 2.0, 33.3, 500.0] {
            let q = law.quantile(law.cdf(u));
            assert!((q - u).abs() <= 1e-12 * u, "{u} -> {q}");
        }
        // far in the tail the cdf rounds to within eps of one, which alone
        // costs a relative error of about eps * u / tail_c
        for &u in &[1e4, 1e7] {
            let q = law.quantile(law.cdf(u));
            assert!((q - u).abs() <= 4.0 * f64::EPSILON * u * u * 6.0, "{u} -> {q}");
        }
    }

    #[test]
    fn log_corrected_branch_is_monotone_and_invertible() {
        for &rho in &[-1.0, -0.5, 0.5, 2.0] {
            let law = TailLaw::new(3, rho, 1.0).unwrap();
            let mut prev = 1.0;
            for k in 0..200 {
                let u = 1.0 + k as f64 * 0.7;
                let s = law.survival(u);
                assert!(s <= prev + 1e-15);
                prev = s;
            }
            for &u in &[law.branch_floor() * 1.5, 50.0_f64.max(law.branch_floor() + 1.0), 1e6] {
                let q = law.quantile(law.cdf(u));
                assert!((q - u).abs() <= 1e-9 * u, "rho {rho}: {u} -> {q}");
            }
        }
    }

    #[test]
    fn closed_form_truncated_moments() {
        let law = TailLaw::cauchy(3).unwrap();
        let c = 1e3;
        let m = law.truncated_mean(c).unwrap();
        assert!((m - (5.0 / 6.0 + libm::log(c) / 6.0)).abs() < 1e-14);
        let mm = law.mean_of_min(c).unwrap();
        assert!((mm - (5.0 / 6.0 + (1.0 + libm::log(c)) / 6.0)).abs() < 1e-14);
        assert!((law.truncated_site_mean(c).unwrap() - (5.0 + libm::log(c))).abs() < 1e-12);
        assert_eq!(law.truncated_site_mean(0.5), Some(0.0));
    }

    #[test]
    fn truncated_mean_matches_quadrature() {
        // E[mu 1{mu<=c}] = int_0^c P(mu > u) du - c P(mu > c)
        let law = TailLaw::new(3, 0.0, 0.6).unwrap();
        let c = 40.0;
        let f = |u: f64| law.survival_strict(u);
        let int = crate::quad::adaptive_simpson(&f, 1.0, c, 1e-12) + 1.0;
        let expect = int - c * law.survival_strict(c);
        assert!((law.truncated_mean(c).unwrap() - expect).abs() < 1e-8);
    }
}
