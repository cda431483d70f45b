//! The i.i.d. analogue of the clock: sums of Pareto(1) variables.
//!
//! `U^(n)_t = (n ln n)^{-1} sum_{i <= nt} xi_i`, the truncated sums `V^(n)`
//! with `xi'_i = xi_i 1{xi_i <= a_i}`, `a_i = i (ln i)^beta`, and the centred
//! `M^(n)`. All scales of one seed share the same sequence.

use rcm_core::rng::{derive_seed, Namespace};
use rcm_core::stats::Moments;
use rcm_core::RngStream;

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::Driver;
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

use super::{merged, strictly_decreasing};

/// `a_i = i (ln i)^beta` (so `a_1 = 0`).
pub fn truncation_level(i: u64, beta: f64) -> f64 {
    let x = i as f64;
    x * x.ln().powf(beta)
}

/// `E[xi 1{xi <= a}]` for survival `1/u` on `[1, inf)`: `ln a` for `a >= 1`.
pub fn truncated_pareto_mean(a: f64) -> f64 {
    if a < 1.0 {
        0.0
    } else {
        a.ln()
    }
}

/// `P(xi_i != xi'_i) = P(xi_i > a_i) = min(1, 1/a_i)`.
pub fn mismatch_probability(i: u64, beta: f64) -> f64 {
    let a = truncation_level(i, beta);
    if a <= 1.0 {
        1.0
    } else {
        1.0 / a
    }
}

/// Sum and variance of mismatch indicators over `i <= n`.
pub fn mismatch_moments(n: u64, beta: f64) -> (f64, f64) {
    (1..=n).map(|i| mismatch_probability(i, beta)).fold((0.0, 0.0), |(m, v), p| (m + p, v + p * (1.0 - p)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalRun {
    pub ladder: Vec<u64>,
    /// `sup_{t <= 1} |U^(n)_t - t|` per scale.
    pub sup_u: Vec<f64>,
    /// `V^(n)_1` and `M^(n)_1` per scale.
    pub v1: Vec<f64>,
    pub m1: Vec<f64>,
    /// Number of `i <= max(ladder)` with `xi_i > a_i`.
    pub mismatches: u64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(LabError::config("beta must lie in (1, 2)"));
    }
    Ok(())
}

/// One sequence `xi_1, xi_2, ...` from `seed`, evaluated at every scale of
/// the increasing `ladder`.
pub fn classical_sums(ladder: &[u64], beta: f64, seed: u64) -> Result<ClassicalRun> {
    check_beta(beta)?;
    if ladder.is_empty() || ladder[0] < 2 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::config("ladder must be increasing and start at >= 2"));
    }
    let n_max = *ladder.last().unwrap();
    let mut rng = RngStream::new(seed, 0);
    let scale: Vec<f64> = ladder.iter().map(|&n| n as f64 * (n as f64).ln()).collect();
    let mut sup_u = vec![0.0f64; ladder.len()];
    let (mut s, mut sv, mut sm) = (0.0, 0.0, 0.0);
    let mut v1 = vec![0.0; ladder.len()];
    let mut m1 = vec![0.0; ladder.len()];
    let mut mismatches = 0;
    let mut first = 0;
    for k in 0..=n_max {
        // S_k is the value of U^(n) on [k/n, (k+1)/n)
        for j in first..ladder.len() {
            let n = ladder[j] as f64;
            let u = s / scale[j];
            let lo = k as f64 / n;
            let dev = if k == ladder[j] { (u - 1.0).abs() } else { (u - lo).abs().max((u - lo - 1.0 / n).abs()) };
            sup_u[j] = sup_u[j].max(dev);
            if k == ladder[j] {
                v1[j] = sv / scale[j];
                m1[j] = sm / scale[j];
                first = j + 1;
            }
        }
        if k == n_max {
            break;
        }
        let i = k + 1;
        let xi = 1.0 / rng.uniform_open();
        let a = truncation_level(i, beta);
        let kept = if xi <= a { xi } else { 0.0 };
        if xi > a {
            mismatches += 1;
        }
        s += xi;
        sv += kept;
        sm += kept - truncated_pareto_mean(a);
    }
    Ok(ClassicalRun { ladder: ladder.to_vec(), sup_u, v1, m1, mismatches })
}

#[derive(Clone, Debug)]
pub struct ClassicalSummary {
    pub runs: Vec<ClassicalRun>,
    /// Fraction of seeds whose `sup |U - t|` is strictly decreasing.
    pub decreasing_fraction: f64,
    /// Median of `sup |U - t|` over seeds, per scale.
    pub median_sup: Vec<f64>,
    pub mismatches_total: u64,
    pub mismatches_expected: f64,
    pub mismatches_sd: f64,
    pub m1: Vec<Moments>,
}

pub fn classical_study(ladder: &[u64], beta: f64, seeds: u64, master: u64, driver: &Driver) -> Result<ClassicalSummary> {
    let runs = driver.try_map(seeds as usize, |s| classical_sums(ladder, beta, derive_seed(master, Namespace::Classical, s as u64)))?;
    let decreasing = runs.iter().filter(|r| strictly_decreasing(&r.sup_u)).count();
    let median_sup = (0..ladder.len())
        .map(|j| {
            let v = rcm_core::stats::sorted(&runs.iter().map(|r| r.sup_u[j]).collect::<Vec<_>>());
            rcm_core::stats::quantile_sorted(&v, 0.5).unwrap()
        })
        .collect();
    let (mean, var) = mismatch_moments(*ladder.last().unwrap(), beta);
    let m1 = (0..ladder.len()).map(|j| merged(runs.iter().map(|r| [r.m1[j]].into_iter().collect::<Moments>()))).collect();
    Ok(ClassicalSummary {
        decreasing_fraction: decreasing as f64 / runs.len() as f64,
        median_sup,
        mismatches_total: runs.iter().map(|r| r.mismatches).sum(),
        mismatches_expected: mean * seeds as f64,
        mismatches_sd: (var * seeds as f64).sqrt(),
        m1,
        runs,
    })
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let ladder: Vec<u64> = cfg.n.iter().map(|&n| n as u64).collect();
    let seeds = cfg.environments as u64;
    let s = classical_study(&ladder, cfg.beta, seeds, cfg.seed, driver)?;
    let mut report = ExperimentReport::new("classical", cfg);
    let mut table = Table::new("classical", &["seed_index", "n", "sup_u_minus_t", "v1", "m1"]);
    for (k, r) in s.runs.iter().enumerate() {
        for j in 0..ladder.len() {
            table.push(vec![k.into(), ladder[j].into(), r.sup_u[j].into(), r.v1[j].into(), r.m1[j].into()]);
        }
    }
    for (j, &n) in ladder.iter().enumerate() {
        report.stat(Stat::new(format!("median_sup_n{n}"), s.median_sup[j], 0.0, seeds));
        report.stat(Stat::new(format!("mean_m1_n{n}"), s.m1[j].mean(), s.m1[j].std_err(), seeds));
    }
    report
        .stat(Stat::new("decreasing_fraction", s.decreasing_fraction, 0.0, seeds))
        .stat(Stat::new("mismatches", s.mismatches_total as f64, s.mismatches_sd, seeds))
        .stat(Stat::exact("mismatches_expected", s.mismatches_expected))
        .check(Check::at_least("decreasing_fraction", s.decreasing_fraction, cfg.threshold("decreasing_fraction", 0.8)))
        .check(Check::at_most(
            "mismatch_z",
            (s.mismatches_total as f64 - s.mismatches_expected).abs() / s.mismatches_sd,
            cfg.threshold("mismatch_z", 4.0),
        ));
    report.note("sup |U^(n)_t - t| decays like 1/ln n with fluctuations of the same order");
    RunOutput::new(report, vec![table])
}
