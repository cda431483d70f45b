//! Experiment harnesses. Each module exposes the computation with explicit
//! arguments and a `run(cfg, driver)` entry point used by the command line.

use rcm_core::stats::Moments;
use rcm_core::{Boundary, Cached, ConductanceField, Conductances, LatticeRegion};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::Driver;
use crate::report::RunOutput;

pub mod classical;
pub mod clock;
pub mod clusters;
pub mod ergodic;
pub mod hk_bounds;
pub mod homogenization;
pub mod kernels;
pub mod llt;
pub mod qfclt;
pub mod sigma;
pub mod tail;
pub mod truncation;
pub mod walks;

/// Experiment names accepted by [`run`].
pub const EXPERIMENTS: &[&str] = &[
    "env-sample",
    "walk",
    "clock",
    "heat-kernel",
    "green",
    "ceff",
    "llt",
    "classical",
    "ergodic",
    "truncation",
    "homogenization",
    "clusters",
    "qfclt",
    "sigma",
    "hk-bounds",
];

pub fn run(name: &str, cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    match name {
        "env-sample" => tail::run(cfg, driver),
        "walk" => walks::run(cfg, driver),
        "clock" => clock::run(cfg, driver),
        "heat-kernel" => kernels::run_heat_kernel(cfg, driver),
        "green" => kernels::run_green(cfg, driver),
        "ceff" => kernels::run_ceff(cfg, driver),
        "llt" => llt::run(cfg, driver),
        "classical" => classical::run(cfg, driver),
        "ergodic" => ergodic::run(cfg, driver),
        "truncation" => truncation::run(cfg, driver),
        "homogenization" => homogenization::run(cfg, driver),
        "clusters" => clusters::run(cfg, driver),
        "qfclt" => qfclt::run(cfg, driver),
        "sigma" => sigma::run(cfg, driver),
        "hk-bounds" => hk_bounds::run(cfg, driver),
        other => Err(LabError::UnknownExperiment(other.to_string())),
    }
}

pub(crate) fn merged(parts: impl IntoIterator<Item = Moments>) -> Moments {
    let mut m = Moments::new();
    for p in parts {
        m.merge(&p);
    }
    m
}

/// Whether `values` is strictly decreasing.
pub(crate) fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Most sites whose rates [`cached`] precomputes.
pub const CACHE_SITES: usize = 1 << 21;

/// `field` with its rates precomputed on the cube of half-side `half` around
/// the origin, shrunk to at most [`CACHE_SITES`] sites. Walks on it are
/// identical to walks on the bare field.
pub fn cached(field: &ConductanceField, half: u32) -> Result<Cached<&ConductanceField>> {
    let d = field.dim();
    let mut h = half.max(1);
    while h > 1 && (2.0 * h as f64 + 1.0).powi(d as i32) > CACHE_SITES as f64 {
        h -= 1;
    }
    Ok(Cached::new(field, LatticeRegion::cube(d, h, Boundary::Free)?)?)
}

/// Half-side of a cache covering walks at scale `n` up to time `t`.
pub(crate) fn walk_window(n: u32, t: f64) -> u32 {
    (6.0 * n as f64 * t.max(1.0).sqrt()).ceil() as u32
}
