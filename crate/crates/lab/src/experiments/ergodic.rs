//! Ergodic averages of truncated site conductances:
//! `I_n = (n^d ln n)^{-1} sum_{|x| <= Kn} mu~_x f(x/n)` and the double sum
//! `J_n` with weights `mu~_x mu~_y g(x/n, y/n)`.

use rcm_core::special::unit_ball_volume;
use rcm_core::stats::Moments;
use rcm_core::{Conductances, ConductanceField, Error as CoreError, Site, TailLaw, TruncatedView, MAX_DIM};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::Driver;
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

/// Largest number of sites enumerated for `I_n`.
pub const SITE_BUDGET: f64 = 2e8;
/// Largest number of pairs enumerated for `J_n`.
pub const PAIR_BUDGET: f64 = 5e9;

/// Call `visit` for every site of the Euclidean ball `|x| <= r`.
pub fn for_each_in_ball(d: usize, r: f64, mut visit: impl FnMut(&Site)) {
    let h = r.floor() as i32;
    let r2 = r * r;
    let mut c = [0i32; MAX_DIM];
    // odometer over coordinates 1..d, explicit range on coordinate 0
    for v in c.iter_mut().take(d).skip(1) {
        *v = -h;
    }
    loop {
        let rest: f64 = (1..d).map(|i| (c[i] as f64) * (c[i] as f64)).sum();
        if rest <= r2 {
            let w = (r2 - rest).sqrt().floor() as i32;
            for x0 in -w..=w {
                c[0] = x0;
                visit(&Site::new(&c[..d]));
            }
        }
        let mut axis = 1;
        loop {
            if axis >= d {
                return;
            }
            c[axis] += 1;
            if c[axis] <= h {
                break;
            }
            c[axis] = -h;
            axis += 1;
        }
    }
}

/// Number of lattice points in `|x| <= r`.
pub fn ball_count(d: usize, r: f64) -> u64 {
    let mut n = 0u64;
    for_each_in_ball(d, r, |_| n += 1);
    n
}

fn budget(required: f64, budget: f64) -> Result<()> {
    if required > budget {
        return Err(CoreError::BudgetExceeded { required, budget, hint: "use a smaller n or K" }.into());
    }
    Ok(())
}

/// `sum_{|x| <= Kn} mu~_x f(x/n)` on a truncated view, each bond hashed once.
pub fn weighted_site_sum<C: Conductances>(view: &C, n: u32, k: f64, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let d = view.dim();
    let nf = n as f64;
    let r = k * nf;
    let r2 = r * r;
    let inside = |x: &Site| x.norm2() as f64 <= r2;
    let weight = |x: &Site| {
        let p: Vec<f64> = x.coords().iter().map(|&c| c as f64 / nf).collect();
        f(&p)
    };
    let mut total = 0.0;
    for_each_in_ball(d, r, |x| {
        let wx = weight(x);
        for axis in 0..d {
            let up = x.neighbor(2 * axis);
            let e = rcm_core::Edge::from_dir(x, 2 * axis);
            let mu = view.conductance(&e);
            if mu != 0.0 {
                total += mu * wx;
                if inside(&up) {
                    total += mu * weight(&up);
                }
            }
            let down = x.neighbor(2 * axis + 1);
            if !inside(&down) {
                total += view.conductance(&rcm_core::Edge::from_dir(x, 2 * axis + 1)) * wx;
            }
        }
    });
    total
}

/// `n^{-d} sum_{|x| <= Kn} f(x/n)`, the lattice Riemann sum of `int_{|x|<=K} f`.
pub fn riemann_sum(d: usize, n: u32, k: f64, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let nf = n as f64;
    let mut total = 0.0;
    for_each_in_ball(d, k * nf, |x| {
        let p: Vec<f64> = x.coords().iter().map(|&c| c as f64 / nf).collect();
        total += f(&p);
    });
    total / nf.powi(d as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicI {
    pub values: Vec<f64>,
    /// `E I_n` from the closed form of `E mu~_x`.
    pub mean_exact: f64,
    /// `E I_n / (2 R_n)` with `R_n` the lattice Riemann sum; equals
    /// `(2 ln n + 2d - 1 + ln a) / (2 ln n)` under the mixture law.
    pub bias_ratio: f64,
    pub bias_closed_form: f64,
    pub riemann: f64,
}

/// `I_n` over environment seeds `seeds`.
pub fn ergodic_i(
    law: &TailLaw,
    n: u32,
    k: f64,
    a: f64,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    seeds: &[u64],
    driver: &Driver,
) -> Result<ErgodicI> {
    let d = law.dim();
    let nf = n as f64;
    budget(unit_ball_volume(d) * (k * nf + 2.0).powi(d as i32), SITE_BUDGET)?;
    let norm = nf.powi(d as i32) * nf.ln();
    let values = driver.try_map(seeds.len(), |i| -> Result<f64> {
        let view = TruncatedView::new(ConductanceField::lazy(*law, seeds[i]), a, nf)?;
        Ok(weighted_site_sum(&view, n, k, f) / norm)
    })?;
    let cutoff = a * nf * nf;
    let site_mean = law.truncated_site_mean(cutoff).ok_or_else(|| LabError::config("closed form needs rho = 0"))?;
    let riemann = riemann_sum(d, n, k, f);
    let mean_exact = site_mean * riemann / nf.ln();
    let bias_closed_form = (2.0 * nf.ln() + 2.0 * d as f64 - 1.0 + a.ln()) / (2.0 * nf.ln());
    Ok(ErgodicI { values, mean_exact, bias_ratio: mean_exact / (2.0 * riemann), bias_closed_form, riemann })
}

/// `J_n = (n^{2d} ln^2 n)^{-1} sum_{|x|,|y| <= Kn} mu~_x mu~_y g(x/n, y/n)`
/// and its exact mean.
pub fn ergodic_j(
    law: &TailLaw,
    n: u32,
    k: f64,
    a: f64,
    g: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync),
    seed: u64,
) -> Result<(f64, f64)> {
    let d = law.dim();
    let nf = n as f64;
    let mut sites = Vec::new();
    for_each_in_ball(d, k * nf, |x| sites.push(*x));
    budget((sites.len() as f64).powi(2), PAIR_BUDGET)?;
    let view = TruncatedView::new(ConductanceField::lazy(*law, seed), a, nf)?;
    let mut buf = [0.0; 2 * MAX_DIM];
    let mu: Vec<f64> = sites.iter().map(|x| view.incident(x, &mut buf)).collect();
    let pts: Vec<Vec<f64>> = sites.iter().map(|x| x.coords().iter().map(|&c| c as f64 / nf).collect()).collect();
    let cutoff = a * nf * nf;
    let m1 = law.truncated_mean(cutoff).ok_or_else(|| LabError::config("closed form needs rho = 0"))?;
    let m2 = law.truncated_second_moment(cutoff).unwrap();
    let dd = 2.0 * d as f64;
    let same = dd * m2 + dd * (dd - 1.0) * m1 * m1;
    let adjacent = m2 + (dd * dd - 1.0) * m1 * m1;
    let apart = dd * dd * m1 * m1;
    let (mut value, mut mean) = (0.0, 0.0);
    for (i, x) in sites.iter().enumerate() {
        for (j, y) in sites.iter().enumerate() {
            let w = g(&pts[i], &pts[j]);
            value += mu[i] * mu[j] * w;
            let e = if i == j {
                same
            } else if x.is_neighbor(y) {
                adjacent
            } else {
                apart
            };
            mean += e * w;
        }
    }
    let norm = nf.powi(2 * d as i32) * nf.ln() * nf.ln();
    Ok((value / norm, mean / norm))
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let law = cfg.law.tail_law()?;
    let one = |_: &[f64]| 1.0;
    let seeds: Vec<u64> = (0..cfg.environments as u64).map(|i| cfg.env_seed_at(i)).collect();
    let mut report = ExperimentReport::new("ergodic", cfg);
    let mut table = Table::new("ergodic", &["n", "seed_index", "i_n", "mean_exact", "relative_deviation"]);
    let target = 2.0 * unit_ball_volume(cfg.law.d) * cfg.k.powi(cfg.law.d as i32);
    report.stat(Stat::exact("limit_target_2_int_f", target));
    let tol = cfg.threshold("relative_tolerance", 0.05);
    for &n in &cfg.n {
        let r = ergodic_i(&law, n, cfg.k, cfg.a, &one, &seeds, driver)?;
        let dev: Vec<f64> = r.values.iter().map(|v| v / r.mean_exact - 1.0).collect();
        for (i, (v, e)) in r.values.iter().zip(&dev).enumerate() {
            table.push(vec![n.into(), i.into(), (*v).into(), r.mean_exact.into(), (*e).into()]);
        }
        let m: Moments = r.values.iter().copied().collect();
        let within = dev.iter().filter(|e| e.abs() <= tol).count() as f64 / dev.len() as f64;
        report
            .stat(Stat::new(format!("mean_i_n{n}"), m.mean(), m.std_err(), m.count()))
            .stat(Stat::exact(format!("exact_mean_i_n{n}"), r.mean_exact))
            .stat(Stat::exact(format!("bias_ratio_n{n}"), r.bias_ratio))
            .stat(Stat::exact(format!("bias_over_continuum_n{n}"), r.mean_exact / target))
            .stat(Stat::new(format!("within_tolerance_n{n}"), within, 0.0, dev.len() as u64))
            .check(Check::at_most(format!("bias_identity_n{n}"), (r.bias_ratio - r.bias_closed_form).abs(), 1e-12))
            .check(Check::at_least(format!("within_tolerance_n{n}"), within, cfg.threshold("within_fraction", 0.9)));
    }
    RunOutput::new(report, vec![table])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_enumeration_matches_brute_force() {
        for (d, r) in [(1usize, 3.5), (2, 4.0), (3, 3.2)] {
            let mut fast = Vec::new();
            for_each_in_ball(d, r, |x| fast.push(*x));
            fast.sort();
            let slow = rcm_core::lattice::ball(&Site::origin(d), r);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn site_sum_counts_every_bond_of_every_site() {
        // against a direct per-site evaluation
        let law = TailLaw::cauchy(2).unwrap();
        let view = TruncatedView::new(ConductanceField::lazy(law, 3), 1.0, 4.0).unwrap();
        let f = |p: &[f64]| 1.0 + p[0] - 0.5 * p[1] * p[1];
        let fast = weighted_site_sum(&view, 4, 1.5, &f);
        let mut slow = 0.0;
        for x in rcm_core::lattice::ball(&Site::origin(2), 6.0) {
            let p = [x.coord(0) as f64 / 4.0, x.coord(1) as f64 / 4.0];
            slow += rcm_core::env::site_conductance(&view, &x) * f(&p);
        }
        assert!((fast - slow).abs() < 1e-9 * slow.abs(), "{fast} {slow}");
    }
}
