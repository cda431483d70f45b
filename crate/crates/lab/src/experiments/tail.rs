//! Samples of the conductance law drawn through the environment itself.

use rcm_core::stats::{ks_statistic, Moments};
use rcm_core::{Boundary, ConductanceField, Conductances, LatticeRegion};

use crate::config::RunConfig;
use crate::error::Result;
use crate::formats::{EnvTable, Provenance};
use crate::parallel::Driver;
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

/// Cap used for the `E[min(mu, c)]` comparison.
pub const MIN_CAP: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct TailSample {
    pub samples: usize,
    pub ks: f64,
    /// 99% Kolmogorov band `1.63 / sqrt(N)`.
    pub band: f64,
    pub min_mean: Moments,
    pub min_exact: f64,
    /// Empirical `P(mu >= 100)`.
    pub survival_100: f64,
    pub survival_100_exact: f64,
}

/// The first `samples` edges of a centred cube, in canonical order.
pub fn sample_edges(field: &ConductanceField, samples: usize) -> Result<Vec<f64>> {
    let d = field.dim();
    let mut half = 1u32;
    loop {
        let r = LatticeRegion::cube(d, half, Boundary::Free)?;
        if r.edge_count() >= samples {
            return Ok(r.edges().take(samples).map(|e| field.conductance(&e)).collect());
        }
        half += 1 + half / 4;
    }
}

pub fn tail_check(field: &ConductanceField, samples: usize) -> Result<TailSample> {
    let mut values = sample_edges(field, samples)?;
    let law = *field.law();
    let min_mean: Moments = values.iter().map(|&v| v.min(MIN_CAP)).collect();
    let survival_100 = values.iter().filter(|&&v| v >= 100.0).count() as f64 / samples as f64;
    let ks = ks_statistic(&mut values, |u| law.cdf(u), |u| law.cdf_left(u))?;
    Ok(TailSample {
        samples,
        ks,
        band: 1.63 / (samples as f64).sqrt(),
        min_mean,
        min_exact: law.mean_of_min(MIN_CAP).unwrap_or(f64::NAN),
        survival_100,
        survival_100_exact: law.survival(100.0),
    })
}

pub fn run(cfg: &RunConfig, _driver: &Driver) -> Result<RunOutput> {
    let field = cfg.law.field(cfg.env_seed())?;
    let mut report = ExperimentReport::new("env-sample", cfg);
    let mut tables = Vec::new();
    if cfg.law.homogeneous.is_none() {
        let samples = cfg.walkers as usize;
        let s = tail_check(&field, samples)?;
        report
            .stat(Stat::new("ks", s.ks, 0.0, s.samples as u64))
            .stat(Stat::new("mean_min_1e3", s.min_mean.mean(), s.min_mean.std_err(), s.samples as u64))
            .stat(Stat::exact("mean_min_1e3_exact", s.min_exact))
            .stat(Stat::new(
                "survival_100",
                s.survival_100,
                (s.survival_100_exact * (1.0 - s.survival_100_exact) / s.samples as f64).sqrt(),
                s.samples as u64,
            ))
            .stat(Stat::exact("survival_100_exact", s.survival_100_exact))
            .check(Check::at_most("ks", s.ks, cfg.threshold("ks", s.band)))
            .check(Check::at_most(
                "mean_min_1e3_z",
                ((s.min_mean.mean() - s.min_exact) / s.min_mean.std_err()).abs(),
                cfg.threshold("mean_min_1e3_z", 4.0),
            ));
        let law = field.law();
        let mut t = Table::new("env-sample", &["u", "cdf_exact", "survival_exact"]);
        for k in 0..=40 {
            let u = 10f64.powf(k as f64 / 8.0);
            t.push(vec![u.into(), law.cdf(u).into(), law.survival(u).into()]);
        }
        tables.push(t);
    } else if let Some(v) = cfg.law.homogeneous {
        report.stat(Stat::exact("homogeneous_value", v));
    }
    let half = cfg.box_half.unwrap_or(4);
    let region = LatticeRegion::cube(cfg.law.d, half, Boundary::Free)?;
    let table = EnvTable::capture(&field, region, cfg.env_seed(), cfg.law.clone());
    report.stat(Stat::exact("dumped_edges", table.values().len() as f64));
    let prov = Provenance::new(&report.config_hash, cfg.seed);
    let csv = table.to_csv(&prov).into_bytes();
    Ok(RunOutput::new(report, tables)?.with_file("env.bin", table.to_bytes(&prov)).with_file("env.csv", csv))
}
