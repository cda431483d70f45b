//! Raw VSRW trajectories and per-walk summaries.

use rcm_core::stats::Moments;
use rcm_core::walk::{simulate_vsrw, WalkTrajectory};
use rcm_core::{RngStream, Site};

use crate::config::RunConfig;
use crate::error::Result;
use crate::formats::{trajectory_csv, Provenance};
use crate::parallel::{Driver, WALKER_CHUNK};
use super::{cached, walk_window};
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

/// Trajectories written to disk; summaries cover every walker.
pub const MAX_DUMPED: u64 = 100;

/// Per-walk summary over `[0, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSummary {
    pub walker: u64,
    pub jumps: u64,
    pub clock: f64,
    /// First time `|Y| > radius`, if before the horizon.
    pub exit: Option<f64>,
    pub end_norm2: i64,
}

pub fn summarize(traj: &WalkTrajectory, walker: u64, radius: f64) -> WalkSummary {
    let last = traj.sites().last().unwrap();
    WalkSummary {
        walker,
        jumps: traj.len() as u64 - 1,
        clock: traj.total_clock(),
        exit: traj.exit_time(traj.start(), radius),
        end_norm2: last.norm2(),
    }
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let field = cfg.law.field(cfg.env_seed())?;
    let n = cfg.n[0];
    let medium = cached(&field, walk_window(n, cfg.t))?;
    let nf = n as f64;
    let horizon = nf * nf * cfg.t;
    let seed = cfg.walk_seed_at(0);
    let mut report = ExperimentReport::new("walk", cfg);
    let prov = Provenance::new(&report.config_hash, cfg.seed);
    let chunks = driver.try_map_chunks(cfg.walkers, WALKER_CHUNK, |range| {
        let mut rows = Vec::with_capacity((range.end - range.start) as usize);
        let mut dumps = Vec::new();
        for w in range {
            let traj = simulate_vsrw(&medium, Site::origin(d), horizon, &mut RngStream::new(seed, w))?;
            rows.push(summarize(&traj, w, nf));
            if w < MAX_DUMPED {
                dumps.push(trajectory_csv(&traj, w, &prov));
            }
        }
        Ok::<_, crate::error::LabError>((rows, dumps))
    })?;
    let mut table = Table::new("walk", &["walker_id", "jumps", "clock", "exit_time", "end_norm2"]);
    let mut dump = String::new();
    let (mut jumps, mut clock, mut exited) = (Moments::new(), Moments::new(), Moments::new());
    for (rows, dumps) in &chunks {
        for r in rows {
            let exit = r.exit.unwrap_or(f64::NAN);
            table.push(vec![r.walker.into(), r.jumps.into(), r.clock.into(), exit.into(), r.end_norm2.into()]);
            jumps.push(r.jumps as f64);
            clock.push(r.clock);
            exited.push(if r.exit.is_some() { 1.0 } else { 0.0 });
        }
        for text in dumps {
            // keep a single provenance and header line
            let body = if dump.is_empty() { text.as_str() } else { text.splitn(3, '\n').nth(2).unwrap_or("") };
            dump.push_str(body);
        }
    }
    let clock_rate = clock.mean() / horizon;
    report
        .stat(Stat::new("mean_jumps", jumps.mean(), jumps.std_err(), jumps.count()))
        .stat(Stat::new("mean_clock", clock.mean(), clock.std_err(), clock.count()))
        .stat(Stat::new("clock_per_time", clock_rate, clock.std_err() / horizon, clock.count()))
        .stat(Stat::new("exit_fraction", exited.mean(), exited.std_err(), exited.count()));
    // the embedded chain jumps exactly at the epochs of the clock: E N = E S
    let z = (jumps.mean() - clock.mean()).abs() / (jumps.std_err().powi(2) + clock.std_err().powi(2)).sqrt().max(1e-300);
    report.check(Check::at_most("jumps_vs_clock_z", z, cfg.threshold("jumps_z", 5.0)));
    if let Some(c) = cfg.law.homogeneous {
        report.stat(Stat::exact("clock_per_time_exact", 2.0 * d as f64 * c));
    }
    Ok(RunOutput::new(report, vec![table])?.with_file("trajectories.csv", dump.into_bytes()))
}
