//! Big edges `E_n(a, inf) = {mu_e >= a n^2}` tiled by cubes of side `m_n`:
//! per-tile sums of `gamma_n(e)` over big edges, their max-to-mean ratio, and
//! the big-edge counts against `d m_n^d P(mu_e >= a n^2)`.

use rcm_core::env::big_edge_set;
use rcm_core::solver::gamma_n;
use rcm_core::stats::Moments;
use rcm_core::{Boundary, ConductanceField, Edge, LatticeRegion, Site};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::Driver;
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

pub const MIN_TILES: usize = 8;
/// Edges sampled for the empirical `E gamma_n(e)`.
pub const GAMMA_SUBSAMPLE: usize = 200;

/// `m_n = max(ceil(n^theta1), 3 b_n)`.
pub fn tile_side(n: u32, theta1: f64, b_n: u32) -> u32 {
    ((n as f64).powf(theta1).ceil() as u32).max(3 * b_n)
}

/// Cubes of side `m` tiling the box `[-h, h]^d` from its low corner; the
/// leftover slab of width `(2h + 1) mod m` is not tiled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tiling {
    pub d: usize,
    pub h: i32,
    pub m: u32,
    pub per_axis: u32,
}

impl Tiling {
    pub fn new(d: usize, h: u32, m: u32) -> Result<Self> {
        let per_axis = (2 * h + 1) / m;
        let t = Tiling { d, h: h as i32, m, per_axis };
        if t.count() < MIN_TILES {
            return Err(LabError::config(format!("region too small: {} tiles of side {m}, need {MIN_TILES}", t.count())));
        }
        Ok(t)
    }

    pub fn count(&self) -> usize {
        (self.per_axis as usize).pow(self.d as u32)
    }

    /// Tile holding `x`, if any.
    pub fn tile_of(&self, x: &Site) -> Option<usize> {
        let mut idx = 0usize;
        for axis in (0..self.d).rev() {
            let c = (x.coord(axis) + self.h) as i64;
            if c < 0 {
                return None;
            }
            let k = c / self.m as i64;
            if k >= self.per_axis as i64 {
                return None;
            }
            idx = idx * self.per_axis as usize + k as usize;
        }
        Some(idx)
    }
}

/// Per-environment result.
#[derive(Clone, Debug, PartialEq)]
pub struct TileSums {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
    /// `gamma_n` on the evenly spaced subsample of all edges.
    pub gamma_subsample: Vec<f64>,
}

impl TileSums {
    pub fn max_to_mean(&self) -> f64 {
        let mean = self.sums.iter().sum::<f64>() / self.sums.len() as f64;
        let max = self.sums.iter().copied().fold(0.0, f64::max);
        if mean > 0.0 {
            max / mean
        } else {
            0.0
        }
    }
}

/// `E(Q)` holds the bonds whose lower endpoint lies in `Q`.
pub fn tile_sums(field: &ConductanceField, tiling: &Tiling, n: u32, a: f64, b_n: u32, tol: f64) -> Result<TileSums> {
    let d = tiling.d;
    let region = LatticeRegion::cube(d, tiling.h as u32, Boundary::Free)?;
    let big = big_edge_set(field, &region, a, None, n as f64)?;
    let mut sums = vec![0.0; tiling.count()];
    let mut counts = vec![0u64; tiling.count()];
    for e in &big {
        if let Some(q) = tiling.tile_of(e.lo()) {
            sums[q] += gamma_n(field, e, b_n as f64, None, tol)?;
            counts[q] += 1;
        }
    }
    let stride = (region.edge_count() / GAMMA_SUBSAMPLE).max(1);
    let gamma_subsample = region
        .edges()
        .step_by(stride)
        .take(GAMMA_SUBSAMPLE)
        .map(|e: Edge| gamma_n(field, &e, b_n as f64, None, tol))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(TileSums { sums, counts, gamma_subsample })
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let n = cfg.n[0];
    if !(cfg.theta1 > 2.0 / d as f64) {
        return Err(LabError::config("theta1 must exceed 2/d"));
    }
    let m = tile_side(n, cfg.theta1, cfg.b_n);
    let h = (cfg.k * n as f64).ceil() as u32;
    let tiling = Tiling::new(d, h, m)?;
    let law = cfg.law.tail_law()?;
    let margin = h + cfg.b_n + 2;
    let per_env = driver.try_map(cfg.environments as usize, |i| -> Result<TileSums> {
        let seed = cfg.env_seed_at(i as u64);
        let field = match cfg.law.homogeneous {
            Some(_) => cfg.law.field(seed)?,
            None => ConductanceField::eager(law, seed, LatticeRegion::cube(d, margin, Boundary::Free)?)?,
        };
        tile_sums(&field, &tiling, n, cfg.a, cfg.b_n, cfg.tol)
    })?;
    let nf = n as f64;
    let p_n = law.survival(cfg.a * nf * nf);
    let expected_count = d as f64 * (m as f64).powi(d as i32) * p_n;
    let mut report = ExperimentReport::new("homogenization", cfg);
    let mut table = Table::new("homogenization", &["env_index", "tiles", "max_tile_sum", "mean_tile_sum", "max_to_mean", "big_edges", "mean_gamma"]);
    let (mut ratio, mut counts, mut gamma) = (Moments::new(), Moments::new(), Moments::new());
    let mut worst: f64 = 0.0;
    for (i, t) in per_env.iter().enumerate() {
        let g: Moments = t.gamma_subsample.iter().copied().collect();
        let max = t.sums.iter().copied().fold(0.0, f64::max);
        let mean = t.sums.iter().sum::<f64>() / t.sums.len() as f64;
        let total: u64 = t.counts.iter().sum();
        table.push(vec![i.into(), t.sums.len().into(), max.into(), mean.into(), t.max_to_mean().into(), total.into(), g.mean().into()]);
        ratio.push(t.max_to_mean());
        worst = worst.max(t.max_to_mean());
        for &c in &t.counts {
            counts.push(c as f64);
        }
        gamma.merge(&g);
    }
    let count_z = (counts.mean() - expected_count).abs() / counts.std_err().max(f64::MIN_POSITIVE);
    // right-hand side of the tile bound with lambda = 1
    let unit_bound = (m as f64).powi(d as i32) / (cfg.a * nf * nf) * gamma.mean();
    report
        .stat(Stat::exact("tile_side", m as f64))
        .stat(Stat::exact("tiles", tiling.count() as f64))
        .stat(Stat::new("max_to_mean", ratio.mean(), ratio.std_err(), ratio.count()))
        .stat(Stat::new("worst_max_to_mean", worst, 0.0, ratio.count()))
        .stat(Stat::new("big_edges_per_tile", counts.mean(), counts.std_err(), counts.count()))
        .stat(Stat::exact("big_edges_per_tile_exact", expected_count))
        .stat(Stat::new("mean_gamma_n", gamma.mean(), gamma.std_err(), gamma.count()))
        .stat(Stat::exact("unit_lambda_bound", unit_bound))
        .check(Check::at_most("worst_max_to_mean", worst, cfg.threshold("lambda", 10.0)))
        .check(Check::at_most("big_edge_count_z", count_z, cfg.threshold("count_z", 4.0)));
    if tile_side(n, cfg.theta1, 0) < 3 * cfg.b_n {
        report.note("ceil(n^theta1) < 3 b_n; tile side raised to 3 b_n");
    }
    RunOutput::new(report, vec![table])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiles_partition_the_tiled_part() {
        let t = Tiling::new(2, 5, 3).unwrap();
        assert_eq!(t.per_axis, 3);
        let mut seen = vec![0; t.count()];
        for x in -5..=5 {
            for y in -5..=5 {
                if let Some(q) = t.tile_of(&Site::new(&[x, y])) {
                    seen[q] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 9));
    }

    #[test]
    fn too_few_tiles_rejected() {
        assert!(Tiling::new(3, 4, 9).is_err());
    }

    #[test]
    fn no_big_edges_means_zero_sums() {
        let field = ConductanceField::homogeneous(2, 1.0).unwrap();
        let t = Tiling::new(2, 6, 4).unwrap();
        let s = tile_sums(&field, &t, 4, 1.0, 1, 1e-10).unwrap();
        assert!(s.sums.iter().all(|&v| v == 0.0));
        assert_eq!(s.max_to_mean(), 0.0);
    }
}
