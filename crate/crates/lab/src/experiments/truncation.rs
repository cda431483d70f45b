//! Truncation probabilities: the chance that the walk leaves `B(0, Kn)`
//! before `n^2 t`, and the chance that it visits a site of `B(0, Kn)` with
//! `mu_x >= a n^2` before then.

use rcm_core::walk::{Medium, Stop, Walker};
use rcm_core::{RngStream, Site};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::{Driver, WALKER_CHUNK};
use super::{cached, walk_window};
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

pub const SWEEP_K: &[f64] = &[2.0, 3.0, 4.0, 6.0, 8.0];
pub const SWEEP_A: &[f64] = &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];
pub const PILOT_ENVIRONMENTS: u64 = 10;
pub const PILOT_WALKERS: u64 = 2000;
/// The sweep asks for half the final threshold so that the validation on
/// fresh environments has room for sampling noise.
pub const PILOT_TARGET: f64 = 0.025;

/// What one walk saw up to `n^2 t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Extremes {
    /// Largest `|Y_s|^2`.
    pub max_norm2: i64,
    /// Per radius `K_j n`: largest `mu_x` over visited `x` with `|x| <= K_j n`.
    pub max_mu: Vec<f64>,
}

pub fn walk_extremes<M: Medium + ?Sized>(medium: &M, n: u32, t: f64, ks: &[f64], rng: &mut RngStream) -> Result<Extremes> {
    let nf = n as f64;
    let r2: Vec<f64> = ks.iter().map(|k| (k * nf) * (k * nf)).collect();
    let mut w = Walker::new(medium, Site::origin(medium.dim()))?;
    let mut max_norm2 = 0;
    let mut max_mu = vec![0.0f64; ks.len()];
    w.run(rng, Stop::Time(nf * nf * t), |x, rate, _, _| {
        let q = x.norm2();
        max_norm2 = max_norm2.max(q);
        for (m, r) in max_mu.iter_mut().zip(&r2) {
            if q as f64 <= *r {
                *m = m.max(rate);
            }
        }
    });
    Ok(Extremes { max_norm2, max_mu })
}

/// `(P_exit, P_hit_big)` per `(K, a)` cell for one environment.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationGrid {
    pub n: u32,
    pub ks: Vec<f64>,
    pub a_values: Vec<f64>,
    pub walkers: u64,
    /// `p_exit[k]`
    pub p_exit: Vec<f64>,
    /// `p_hit[k][a]`
    pub p_hit: Vec<Vec<f64>>,
}

impl TruncationGrid {
    pub fn std_err(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.walkers as f64).sqrt()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn truncation_probs<M: Medium + Sync + ?Sized>(
    medium: &M,
    n: u32,
    t: f64,
    ks: &[f64],
    a_values: &[f64],
    walkers: u64,
    seed: u64,
    driver: &Driver,
) -> Result<TruncationGrid> {
    if walkers == 0 || ks.is_empty() || a_values.is_empty() {
        return Err(LabError::config("truncation sweep needs walkers, K values and a values"));
    }
    let nf = n as f64;
    let big: Vec<f64> = a_values.iter().map(|a| a * nf * nf).collect();
    let counts = driver.try_map_chunks(walkers, WALKER_CHUNK, |range| {
        let mut exit = vec![0u64; ks.len()];
        let mut hit = vec![vec![0u64; a_values.len()]; ks.len()];
        for w in range {
            let e = walk_extremes(medium, n, t, ks, &mut RngStream::new(seed, w))?;
            for (j, k) in ks.iter().enumerate() {
                if e.max_norm2 as f64 > (k * nf) * (k * nf) {
                    exit[j] += 1;
                }
                for (i, b) in big.iter().enumerate() {
                    if e.max_mu[j] >= *b {
                        hit[j][i] += 1;
                    }
                }
            }
        }
        Ok::<_, LabError>((exit, hit))
    })?;
    let wf = walkers as f64;
    let mut p_exit = vec![0.0; ks.len()];
    let mut p_hit = vec![vec![0.0; a_values.len()]; ks.len()];
    for (exit, hit) in &counts {
        for j in 0..ks.len() {
            p_exit[j] += exit[j] as f64 / wf;
            for i in 0..a_values.len() {
                p_hit[j][i] += hit[j][i] as f64 / wf;
            }
        }
    }
    Ok(TruncationGrid { n, ks: ks.to_vec(), a_values: a_values.to_vec(), walkers, p_exit, p_hit })
}

/// Smallest `K` whose worst-environment `P_exit` is at most `target`, then
/// the smallest `a` whose worst `P_hit_big` at that `K` is at most `target`.
pub fn select_pair(grids: &[TruncationGrid], target: f64) -> Option<(usize, usize)> {
    let first = grids.first()?;
    let worst_exit = |j: usize| grids.iter().map(|g| g.p_exit[j]).fold(0.0, f64::max);
    let j = (0..first.ks.len()).find(|&j| worst_exit(j) <= target)?;
    let i = (0..first.a_values.len()).find(|&i| grids.iter().all(|g| g.p_hit[j][i] <= target))?;
    Some((j, i))
}

/// Pilot sweep and validation on fresh environments.
#[derive(Clone, Debug)]
pub struct TruncationStudy {
    pub pilot: Vec<TruncationGrid>,
    pub chosen: Option<(f64, f64)>,
    /// Validation on fresh environments at the chosen pair.
    pub validation: Vec<(f64, f64)>,
    pub validation_walkers: u64,
}

impl TruncationStudy {
    pub fn worst(&self) -> (f64, f64) {
        self.validation.iter().fold((0.0, 0.0), |(e, h), &(pe, ph)| (e.max(pe), h.max(ph)))
    }
}

pub fn truncation_study(cfg: &RunConfig, pilot_envs: u64, pilot_walkers: u64, driver: &Driver) -> Result<TruncationStudy> {
    let n = cfg.n[0];
    let mut pilot = Vec::new();
    for i in 0..pilot_envs {
        let field = cfg.law.field(cfg.env_seed_at(i))?;
        pilot.push(truncation_probs(&cached(&field, walk_window(n, cfg.t))?, n, cfg.t, SWEEP_K, SWEEP_A, pilot_walkers, cfg.walk_seed_at(i), driver)?);
    }
    let target = cfg.threshold("pilot_target", PILOT_TARGET);
    let chosen = select_pair(&pilot, target).map(|(j, i)| (SWEEP_K[j], SWEEP_A[i]));
    let mut validation = Vec::new();
    if let Some((k, a)) = chosen {
        for i in 0..cfg.environments as u64 {
            // fresh environments and walks, disjoint from the pilot
            let idx = pilot_envs + i;
            let field = cfg.law.field(cfg.env_seed_at(idx))?;
            let g = truncation_probs(&cached(&field, walk_window(n, cfg.t))?, n, cfg.t, &[k], &[a], cfg.walkers, cfg.walk_seed_at(idx), driver)?;
            validation.push((g.p_exit[0], g.p_hit[0][0]));
        }
    }
    Ok(TruncationStudy { pilot, chosen, validation, validation_walkers: cfg.walkers })
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let s = truncation_study(cfg, PILOT_ENVIRONMENTS, PILOT_WALKERS, driver)?;
    let mut report = ExperimentReport::new("truncation", cfg);
    let mut sweep = Table::new("truncation_sweep", &["env_index", "K", "a", "p_exit", "p_hit_big"]);
    for (e, g) in s.pilot.iter().enumerate() {
        for (j, k) in g.ks.iter().enumerate() {
            for (i, a) in g.a_values.iter().enumerate() {
                sweep.push(vec![e.into(), (*k).into(), (*a).into(), g.p_exit[j].into(), g.p_hit[j][i].into()]);
            }
        }
    }
    let mut val = Table::new("truncation_validation", &["env_index", "K", "a", "p_exit", "p_hit_big"]);
    let threshold = cfg.threshold("probability", 0.05);
    match s.chosen {
        Some((k, a)) => {
            for (e, (pe, ph)) in s.validation.iter().enumerate() {
                val.push(vec![e.into(), k.into(), a.into(), (*pe).into(), (*ph).into()]);
            }
            let (we, wh) = s.worst();
            let nv = s.validation.len() as u64 * s.validation_walkers;
            report
                .stat(Stat::exact("chosen_k", k))
                .stat(Stat::exact("chosen_a", a))
                .stat(Stat::new("worst_p_exit", we, (we * (1.0 - we) / s.validation_walkers as f64).sqrt(), nv))
                .stat(Stat::new("worst_p_hit_big", wh, (wh * (1.0 - wh) / s.validation_walkers as f64).sqrt(), nv))
                .check(Check::at_most("worst_p_exit", we, threshold))
                .check(Check::at_most("worst_p_hit_big", wh, threshold));
        }
        None => {
            report.stat(Stat::new("pilot_environments", s.pilot.len() as f64, 0.0, s.pilot.len() as u64));
            report.check(Check::holds("pair_found", false));
        }
    }
    RunOutput::new(report, vec![sweep, val])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcm_core::Unbounded;

    fn grid(p_exit: Vec<f64>, p_hit: Vec<Vec<f64>>) -> TruncationGrid {
        TruncationGrid { n: 4, ks: vec![1.0, 2.0], a_values: vec![1.0, 2.0, 4.0], walkers: 10, p_exit, p_hit }
    }

    #[test]
    fn selection_takes_smallest_k_then_smallest_a() {
        let g1 = grid(vec![0.5, 0.01], vec![vec![0.0; 3], vec![0.3, 0.02, 0.0]]);
        let g2 = grid(vec![0.4, 0.02], vec![vec![0.0; 3], vec![0.2, 0.03, 0.01]]);
        assert_eq!(select_pair(&[g1.clone(), g2.clone()], 0.025), Some((1, 2)));
        assert_eq!(select_pair(&[g1], 0.025), Some((1, 1)));
        let g3 = grid(vec![0.5, 0.5], vec![vec![0.0; 3]; 2]);
        assert_eq!(select_pair(&[g3], 0.025), None);
    }

    #[test]
    fn homogeneous_field_never_hits_big_sites() {
        let env = rcm_core::ConductanceField::homogeneous(2, 1.0).unwrap();
        let driver = Driver::new(Some(1)).unwrap();
        let g = truncation_probs(&Unbounded(&env), 4, 1.0, &[8.0], &[1.0], 200, 5, &driver).unwrap();
        assert_eq!(g.p_hit[0][0], 0.0);
        assert!(g.p_exit[0] < 0.05);
    }
}
