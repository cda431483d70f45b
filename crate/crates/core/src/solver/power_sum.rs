//! Exact lattice sums `sum_{1 <= |x| <= R} |x|^p`.

use alloc::vec;

use crate::error::{Error, Result};

/// Largest `(R + 1)^d` enumerated.
pub const ENUMERATION_BUDGET: f64 = 5e8;

/// `sum_{1 <= |x| <= K n} |x|^p` over `Z^d`, counting lattice points by
/// squared norm in one orthant and weighting by sign multiplicity.
pub fn lattice_power_sum(d: usize, k: f64, n: u32, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("d", "must be positive"));
    }
    if !(k >= 0.0) {
        return Err(Error::invalid("K", "must be nonnegative"));
    }
    let radius = k * n as f64;
    let r_max = libm::floor(radius) as i64;
    let required = libm::pow(r_max as f64 + 1.0, d as f64);
    if required > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { required, budget: ENUMERATION_BUDGET, hint: "reduce K n or the dimension" });
    }
    let r2_max = libm::floor(radius * radius) as i64;
    // weighted number of points at each squared norm
    let mut counts = vec![0.0f64; r2_max as usize + 1];
    let mut coords = vec![0i64; d];
    loop {
        let r2: i64 = coords.iter().map(|c| c * c).sum();
        if r2 <= r2_max {
            let nonzero = coords.iter().filter(|&&c| c != 0).count();
            counts[r2 as usize] += (1u64 << nonzero) as f64;
        }
        // odometer over the orthant, pruning by the partial norm
        let mut axis = 0;
        loop {
            if axis == d {
                let total = counts.iter().enumerate().skip(1).map(|(m, &c)| c * libm::pow(m as f64, p / 2.0)).sum();
                return Ok(total);
            }
            coords[axis] += 1;
            let partial: i64 = coords[axis..].iter().map(|c| c * c).sum();
            if partial <= r2_max {
                break;
            }
            coords[axis] = 0;
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(d: usize, r: f64, p: f64) -> f64 {
        let m = r as i64;
        let mut total = 0.0;
        let side = 2 * m + 1;
        for idx in 0..side.pow(d as u32) {
            let mut rest = idx;
            let mut r2 = 0i64;
            for _ in 0..d {
                let c = rest % side - m;
                rest /= side;
                r2 += c * c;
            }
            if r2 >= 1 && (r2 as f64) <= r * r {
                total += libm::pow(r2 as f64, p / 2.0);
            }
        }
        total
    }

    #[test]
    fn unit_vectors() {
        assert_eq!(lattice_power_sum(3, 1.0, 1, -1.0).unwrap(), 6.0);
    }

    #[test]
    fn matches_brute_force() {
        for &(d, k, n, p) in &[(2usize, 1.5, 4u32, -0.5), (3, 1.0, 5, -1.0), (4, 0.7, 6, -4.0), (3, 2.0, 3, 2.0)] {
            let a = lattice_power_sum(d, k, n, p).unwrap();
            let b = brute(d, k * n as f64, p);
            assert!((a - b).abs() < 1e-10 * b.abs(), "{d} {k} {n} {p}: {a} vs {b}");
        }
    }

    #[test]
    fn budget_enforced() {
        assert!(lattice_power_sum(6, 10.0, 100, -1.0).is_err());
    }
}
