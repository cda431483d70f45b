//! Diffusivity `sigma_V^2` of the variable speed walk.

use rcm_core::walk::{Medium, Stop, Walker};
use rcm_core::{RngStream, Site, MAX_DIM};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::{Driver, WALKER_CHUNK};
use super::{cached, walk_window};
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaVEstimate {
    /// Per-coordinate variance of `Y_{n^2 t} / n`, divided by `t` and
    /// averaged over coordinates.
    pub sigma_v2: f64,
    /// 95% half-width from batch means over walker chunks.
    pub ci_half_width: f64,
    pub n: u32,
    pub walkers: u64,
    pub t: f64,
    pub per_axis: Vec<f64>,
    /// Largest `|cov_ij| / se(cov_ij)` over `i < j`.
    pub max_cov_z: f64,
}

impl SigmaVEstimate {
    pub fn std_err(&self) -> f64 {
        self.ci_half_width / 1.96
    }
}

/// Displacement sums of one chunk of walkers.
#[derive(Clone, Debug)]
struct Sums {
    count: f64,
    s1: [f64; MAX_DIM],
    s2: [[f64; MAX_DIM]; MAX_DIM],
}

impl Sums {
    fn new() -> Self {
        Sums { count: 0.0, s1: [0.0; MAX_DIM], s2: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    fn add(&mut self, o: &Sums) {
        self.count += o.count;
        for i in 0..MAX_DIM {
            self.s1[i] += o.s1[i];
            for j in 0..MAX_DIM {
                self.s2[i][j] += o.s2[i][j];
            }
        }
    }

    fn cov(&self, i: usize, j: usize) -> f64 {
        let m = self.count;
        (self.s2[i][j] - self.s1[i] * self.s1[j] / m) / (m - 1.0)
    }
}

/// Estimate `sigma_V^2` from `walkers` walks of length `n^2 t` started at
/// `start`. Needs `n >= 16` and at least `10^4` walkers.
pub fn estimate_sigma_v<M: Medium + Sync + ?Sized>(
    medium: &M,
    start: Site,
    n: u32,
    t: f64,
    walkers: u64,
    seed: u64,
    driver: &Driver,
) -> Result<SigmaVEstimate> {
    if n < 16 {
        return Err(LabError::config("sigma estimate needs n >= 16"));
    }
    if walkers < 10_000 {
        return Err(LabError::config("sigma estimate needs at least 10^4 walkers"));
    }
    if !(t > 0.0) {
        return Err(LabError::config("sigma estimate needs t > 0"));
    }
    let d = medium.dim();
    let nf = n as f64;
    let horizon = nf * nf * t;
    let chunks = driver.try_map_chunks(walkers, WALKER_CHUNK, |range| {
        let mut s = Sums::new();
        for w in range {
            let mut rng = RngStream::new(seed, w);
            let mut walker = Walker::new(medium, start)?;
            walker.advance(&mut rng, Stop::Time(horizon));
            let mut x = [0.0; MAX_DIM];
            for (i, xi) in x.iter_mut().enumerate().take(d) {
                *xi = (walker.site().coord(i) - start.coord(i)) as f64 / nf;
            }
            s.count += 1.0;
            for i in 0..d {
                s.s1[i] += x[i];
                for j in 0..d {
                    s.s2[i][j] += x[i] * x[j];
                }
            }
        }
        Ok(s)
    })?;
    let mut total = Sums::new();
    for c in &chunks {
        total.add(c);
    }
    let estimate = |s: &Sums| (0..d).map(|i| s.cov(i, i)).sum::<f64>() / (d as f64 * t);
    let sigma_v2 = estimate(&total);
    let per_axis: Vec<f64> = (0..d).map(|i| total.cov(i, i) / t).collect();
    let batches: rcm_core::stats::Moments = chunks.iter().filter(|c| c.count >= 2.0).map(estimate).collect();
    // batches of unequal size only at the tail; the correction is negligible
    let ci_half_width = 1.96 * batches.std_dev() / (batches.count() as f64).sqrt();
    let mut max_cov_z: f64 = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            let se = (total.cov(i, i) * total.cov(j, j) / total.count).sqrt();
            max_cov_z = max_cov_z.max(total.cov(i, j).abs() / se);
        }
    }
    Ok(SigmaVEstimate { sigma_v2, ci_half_width, n, walkers, t, per_axis, max_cov_z })
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let field = cfg.law.field(cfg.env_seed())?;
    let n_max = cfg.n.iter().copied().max().unwrap_or(1);
    let medium = cached(&field, walk_window(n_max, cfg.t))?;
    let mut report = ExperimentReport::new("sigma", cfg);
    let mut table = Table::new("sigma", &["n", "t", "walkers", "sigma_v2", "ci_half_width", "max_cov_z"]);
    let mut estimates = Vec::new();
    for (k, &n) in cfg.n.iter().enumerate() {
        let e = estimate_sigma_v(&medium, Site::origin(cfg.law.d), n, cfg.t, cfg.walkers, cfg.walk_seed_at(k as u64), driver)?;
        table.push(vec![n.into(), cfg.t.into(), e.walkers.into(), e.sigma_v2.into(), e.ci_half_width.into(), e.max_cov_z.into()]);
        report.stat(Stat::new(format!("sigma_v2_n{n}"), e.sigma_v2, e.std_err(), e.walkers));
        report.check(Check::at_most(format!("cov_z_n{n}"), e.max_cov_z, cfg.threshold("cov_z", 4.0)));
        estimates.push(e);
    }
    for w in estimates.windows(2) {
        let z = (w[0].sigma_v2 - w[1].sigma_v2).abs() / (w[0].std_err().powi(2) + w[1].std_err().powi(2)).sqrt();
        report.check(Check::at_most(format!("stability_z_n{}_n{}", w[0].n, w[1].n), z, cfg.threshold("stability_z", 3.0)));
    }
    if let Some(c) = cfg.law.homogeneous {
        // each coordinate moves +-1 at rate c in each direction
        let e = &estimates[0];
        let z = (e.sigma_v2 - 2.0 * c).abs() / e.std_err();
        report.stat(Stat::exact("sigma_v2_exact", 2.0 * c));
        report.check(Check::at_most("exact_z", z, cfg.threshold("exact_z", 4.0)));
    }
    RunOutput::new(report, vec![table])
}
