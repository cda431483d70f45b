//! The Gaussian comparison density `k_t(x)` with covariance `sigma_V^2 t I`.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// `k_t(x) = (2 pi sigma_V^2 t)^{-d/2} exp(-|x|^2 / (2 sigma_V^2 t))`.
pub fn gaussian_density(sigma_v2: f64, d: usize, t: f64, x: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), d);
    let var = sigma_v2 * t;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    libm::pow(2.0 * PI * var, -(d as f64) / 2.0) * libm::exp(-r2 / (2.0 * var))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDensity {
    sigma_v2: f64,
    d: usize,
}

impl GaussianDensity {
    pub fn new(sigma_v2: f64, d: usize) -> Result<Self> {
        if !(sigma_v2 > 0.0 && sigma_v2.is_finite()) {
            return Err(Error::invalid("sigma_v2", "must be positive and finite"));
        }
        if d == 0 {
            return Err(Error::invalid("d", "must be positive"));
        }
        Ok(GaussianDensity { sigma_v2, d })
    }

    pub fn sigma_v2(&self) -> f64 {
        self.sigma_v2
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `k_t(x)`.
    pub fn at(&self, t: f64, x: &[f64]) -> f64 {
        gaussian_density(self.sigma_v2, self.d, t, x)
    }

    /// `k_t(x, y) = k_t(y - x)`.
    pub fn between(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        let mut diff = [0.0; crate::lattice::MAX_DIM];
        for (i, (a, b)) in x.iter().zip(y).enumerate() {
            diff[i] = b - a;
        }
        self.at(t, &diff[..self.d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_value_in_two_dimensions() {
        assert!((gaussian_density(1.0, 2, 1.0, &[0.0, 0.0]) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn integrates_to_one_on_a_grid() {
        let (s2, t) = (1.7, 0.6);
        let sd = libm::sqrt(s2 * t);
        let h = sd / 40.0;
        let m = (6.0 * sd / h) as i32;
        let mut total = 0.0;
        for i in -m..=m {
            for j in -m..=m {
                let x = [i as f64 * h, j as f64 * h];
                if x[0] * x[0] + x[1] * x[1] <= 36.0 * sd * sd {
                    total += gaussian_density(s2, 2, t, &x) * h * h;
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn diffusive_scaling() {
        let g = GaussianDensity::new(2.0, 3).unwrap();
        let x = [0.3, -1.2, 0.8];
        let t: f64 = 2.5;
        let scaled: [f64; 3] = core::array::from_fn(|i| x[i] / libm::sqrt(t));
        let lhs = g.at(t, &x);
        let rhs = libm::pow(t, -1.5) * g.at(1.0, &scaled);
        assert!((lhs - rhs).abs() < 1e-15 * lhs.max(1.0));
        assert_eq!(g.between(t, &[1.0, 1.0, 1.0], &[1.3, -0.2, 1.8]), g.at(t, &x));
    }
}
