//! Marginals of the rescaled constant speed walk
//! `X^(n)_t = X_{n^2 ln(n) t} / n` against centred normals.

use rcm_core::special::normal_cdf;
use rcm_core::stats::{ks_statistic, Moments};
use rcm_core::walk::{rescaled_csrw_marginal, Medium};
use rcm_core::{RngStream, Site, MAX_DIM};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::{Driver, WALKER_CHUNK};
use super::{cached, walk_window};
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

use super::sigma::estimate_sigma_v;
use super::strictly_decreasing;

/// KS distances of each coordinate of `X^(n)_t` and the largest
/// cross-coordinate correlation z-score.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTest {
    pub n: u32,
    pub t: f64,
    pub variance: f64,
    pub ks: Vec<f64>,
    pub max_cov_z: f64,
    pub walkers: u64,
}

impl MarginalTest {
    pub fn max_ks(&self) -> f64 {
        self.ks.iter().copied().fold(0.0, f64::max)
    }
}

/// Compare every coordinate of `X^(n)_t` with `N(0, variance)`. Samples sit
/// on `n^{-1} Z`, so the reference is the normal law discretised to that
/// lattice (cell `[k - 1/2, k + 1/2] / n` onto `k / n`).
#[allow(clippy::too_many_arguments)]
pub fn marginal_test<M: Medium + Sync + ?Sized>(
    medium: &M,
    n: u32,
    t: f64,
    variance: f64,
    walkers: u64,
    seed: u64,
    driver: &Driver,
) -> Result<MarginalTest> {
    if walkers < 10_000 {
        return Err(LabError::config("marginal test needs at least 10^4 walkers"));
    }
    if !(t > 0.0) || !(variance > 0.0) {
        return Err(LabError::config("marginal test needs t > 0 and a positive variance"));
    }
    let d = medium.dim();
    let chunks = driver.try_map_chunks(walkers, WALKER_CHUNK, |range| {
        range
            .map(|w| Ok(rescaled_csrw_marginal(medium, Site::origin(d), n, t, &mut RngStream::new(seed, w))?))
            .collect::<Result<Vec<Vec<f64>>>>()
    })?;
    let points: Vec<Vec<f64>> = chunks.into_iter().flatten().collect();
    let sd = variance.sqrt();
    let half = 0.5 / n as f64;
    let mut ks = Vec::with_capacity(d);
    for axis in 0..d {
        let mut xs: Vec<f64> = points.iter().map(|p| p[axis]).collect();
        ks.push(ks_statistic(&mut xs, |u| normal_cdf((u + half) / sd), |u| normal_cdf((u - half) / sd))?);
    }
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    let mut var = [Moments::new(); MAX_DIM];
    for p in &points {
        for i in 0..d {
            var[i].push(p[i]);
            for j in i + 1..d {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let count = points.len() as f64;
    let mut max_cov_z: f64 = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            let cov = m[i][j] / count - var[i].mean() * var[j].mean();
            let se = (var[i].variance() * var[j].variance() / count).sqrt();
            max_cov_z = max_cov_z.max(cov.abs() / se);
        }
    }
    Ok(MarginalTest { n, t, variance, ks, max_cov_z, walkers })
}

/// Limiting variance of each coordinate of `X^(n)_t`: `sigma_V^2 t / 2`.
/// For a homogeneous field the clock grows like `2d c s`, not like
/// `2 s ln n`, and the exact variance at scale `n` is `ln(n) t / d`.
pub fn reference_variance(homogeneous: Option<f64>, d: usize, n: u32, t: f64, sigma_v2: f64) -> f64 {
    match homogeneous {
        Some(_) => (n as f64).ln() * t / d as f64,
        None => sigma_v2 * t / 2.0,
    }
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let mut report = ExperimentReport::new("qfclt", cfg);
    let mut table = Table::new("qfclt", &["env_index", "n", "axis", "ks", "variance", "walkers"]);
    if cfg.t == 0.0 {
        report.stat(Stat::exact("skipped_t_zero", 1.0));
        report.note("t = 0: the marginal is degenerate at the origin; test skipped");
        return RunOutput::new(report, vec![table]);
    }
    let sigma_n = cfg.n.iter().copied().max().unwrap().max(16);
    let mut decreasing = 0usize;
    let mut worst_ks: f64 = 0.0;
    let mut worst_cov: f64 = 0.0;
    for e in 0..cfg.environments as u64 {
        let field = cfg.law.field(cfg.env_seed_at(e))?;
        let medium = cached(&field, walk_window(sigma_n, cfg.t))?;
        let base = cfg.walk_seed_at(e);
        let sigma_v2 = match cfg.law.homogeneous {
            Some(c) => 2.0 * c,
            None => {
                let s = rcm_core::rng::derive_seed(base, rcm_core::rng::Namespace::Sampling, 0);
                estimate_sigma_v(&medium, Site::origin(d), sigma_n, 1.0, cfg.walkers, s, driver)?.sigma_v2
            }
        };
        let mut series = Vec::with_capacity(cfg.n.len());
        for (j, &n) in cfg.n.iter().enumerate() {
            let var = reference_variance(cfg.law.homogeneous, d, n, cfg.t, sigma_v2);
            let seed = rcm_core::rng::derive_seed(base, rcm_core::rng::Namespace::Walk, j as u64 + 1);
            let m = marginal_test(&medium, n, cfg.t, var, cfg.walkers, seed, driver)?;
            for (axis, ks) in m.ks.iter().enumerate() {
                table.push(vec![e.into(), n.into(), axis.into(), (*ks).into(), var.into(), m.walkers.into()]);
            }
            worst_cov = worst_cov.max(m.max_cov_z);
            worst_ks = worst_ks.max(m.max_ks());
            report.stat(Stat::new(format!("ks_env{e}_n{n}"), m.max_ks(), 0.0, m.walkers));
            series.push(m.max_ks());
        }
        if strictly_decreasing(&series) {
            decreasing += 1;
        }
    }
    report.check(Check::at_most("max_cov_z", worst_cov, cfg.threshold("cov_z", 4.0)));
    if cfg.n.len() > 1 {
        let frac = decreasing as f64 / cfg.environments as f64;
        report
            .stat(Stat::new("decreasing_fraction", frac, 0.0, cfg.environments as u64))
            .check(Check::at_least("decreasing_fraction", frac, cfg.threshold("decreasing_fraction", 0.8)));
    }
    if cfg.law.homogeneous.is_some() {
        report.check(Check::at_most("control_ks", worst_ks, cfg.threshold("control_ks", 0.02)));
    }
    RunOutput::new(report, vec![table])
}
