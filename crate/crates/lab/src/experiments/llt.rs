//! Ball-averaged heat kernel against the Gaussian limit:
//! `n^d p_{n^2 t}(nx, B(ny, r)) / |B| / avg_{z in B} k_t(z/n - x)` over a grid
//! of `(t, x, y)`.

use rcm_core::solver::{gaussian_density, SiteBall};
use rcm_core::walk::{Medium, Stop, Walker};
use rcm_core::{RngStream, Site};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::{Driver, WALKER_CHUNK};
use super::cached;
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

use super::sigma::estimate_sigma_v;

/// Cells expecting fewer hits are excluded from the sup and inf.
pub const MIN_EXPECTED_HITS: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LltCell {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub hits: u64,
    pub ball_sites: usize,
    pub estimate: f64,
    pub reference: f64,
    pub expected_hits: f64,
    pub excluded: bool,
}

impl LltCell {
    pub fn ratio(&self) -> f64 {
        self.estimate / self.reference
    }

    /// Binomial standard error of the ratio.
    pub fn ratio_std_err(&self, walkers: u64) -> f64 {
        let p = self.hits as f64 / walkers as f64;
        let se = (p * (1.0 - p) / walkers as f64).sqrt();
        if p > 0.0 {
            self.ratio() * se / p
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LltResult {
    pub sigma_v2: f64,
    pub walkers: u64,
    pub cells: Vec<LltCell>,
}

impl LltResult {
    fn kept(&self) -> impl Iterator<Item = &LltCell> {
        self.cells.iter().filter(|c| !c.excluded)
    }

    pub fn sup_ratio(&self) -> f64 {
        self.kept().map(LltCell::ratio).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf_ratio(&self) -> f64 {
        self.kept().map(LltCell::ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn excluded(&self) -> usize {
        self.cells.iter().filter(|c| c.excluded).count()
    }
}

/// Starts `x` in `{0, +-K e_i}` and targets `y` on the grid of step `K/2`
/// inside `|y| <= K`.
pub fn llt_grid(d: usize, k: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut xs = vec![vec![0.0; d]];
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut x = vec![0.0; d];
            x[i] = s * k;
            xs.push(x);
        }
    }
    let steps = [-2i32, -1, 0, 1, 2];
    let mut ys = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let y: Vec<f64> = idx.iter().map(|&i| steps[i] as f64 * k / 2.0).collect();
        if y.iter().map(|v| v * v).sum::<f64>() <= k * k + 1e-12 {
            ys.push(y);
        }
        let mut a = 0;
        while a < d {
            idx[a] += 1;
            if idx[a] < steps.len() {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
        if a == d {
            break;
        }
    }
    (xs, ys)
}

/// Ratios on the grid `times x xs x ys`, with `walkers` walks from each start.
#[allow(clippy::too_many_arguments)]
pub fn llt_ratio<M: Medium + Sync + ?Sized>(
    medium: &M,
    sigma_v2: f64,
    n: u32,
    times: &[f64],
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    radius: f64,
    walkers: u64,
    seed: u64,
    driver: &Driver,
) -> Result<LltResult> {
    let d = medium.dim();
    if d < 2 {
        return Err(LabError::config("the local limit grid needs d >= 2"));
    }
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) || times[0] <= 0.0 {
        return Err(LabError::config("times must be positive and increasing"));
    }
    let nf = n as f64;
    let nd = nf.powi(d as i32);
    let balls: Vec<SiteBall> = ys.iter().map(|y| SiteBall::new(Site::scaled(y, nf), radius, None)).collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    for (ix, x) in xs.iter().enumerate() {
        let start = Site::scaled(x, nf);
        let stream = rcm_core::rng::derive_seed(seed, rcm_core::rng::Namespace::Walk, ix as u64);
        let parts = driver.try_map_chunks(walkers, WALKER_CHUNK, |range| {
            let mut hits = vec![0u64; times.len() * balls.len()];
            for w in range {
                let mut walker = Walker::new(medium, start)?;
                let mut rng = RngStream::new(stream, w);
                for (it, &t) in times.iter().enumerate() {
                    walker.advance(&mut rng, Stop::Time(nf * nf * t));
                    for (ib, b) in balls.iter().enumerate() {
                        if b.contains(walker.site()) {
                            hits[it * balls.len() + ib] += 1;
                        }
                    }
                }
            }
            Ok::<_, LabError>(hits)
        })?;
        let mut hits = vec![0u64; times.len() * balls.len()];
        for p in &parts {
            for (h, v) in hits.iter_mut().zip(p) {
                *h += v;
            }
        }
        let xs_site = start.to_f64();
        for (it, &t) in times.iter().enumerate() {
            for (ib, (y, b)) in ys.iter().zip(&balls).enumerate() {
                let sites = b.sites();
                let reference = sites
                    .iter()
                    .map(|z| {
                        let u: Vec<f64> = z.to_f64().iter().zip(&xs_site).map(|(a, c)| (a - c) / nf).collect();
                        gaussian_density(sigma_v2, d, t, &u)
                    })
                    .sum::<f64>()
                    / sites.len() as f64;
                let h = hits[it * balls.len() + ib];
                let expected_hits = walkers as f64 * reference * sites.len() as f64 / nd;
                cells.push(LltCell {
                    t,
                    x: x.clone(),
                    y: y.clone(),
                    hits: h,
                    ball_sites: sites.len(),
                    estimate: nd * h as f64 / walkers as f64 / sites.len() as f64,
                    reference,
                    expected_hits,
                    excluded: expected_hits < MIN_EXPECTED_HITS,
                });
            }
        }
    }
    Ok(LltResult { sigma_v2, walkers, cells })
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let n = cfg.n[0];
    if !(cfg.delta > 0.0 && cfg.delta < cfg.t) {
        return Err(LabError::config("need 0 < delta < t"));
    }
    let times = [cfg.delta, 0.5 * (cfg.delta + cfg.t), cfg.t];
    let (xs, ys) = llt_grid(d, cfg.k);
    let field = cfg.law.field(cfg.env_seed())?;
    let medium = cached(&field, cfg.box_half.unwrap_or(12 * n))?;
    let mut report = ExperimentReport::new("llt", cfg);
    let sigma_v2 = match cfg.law.homogeneous {
        Some(c) => {
            report.stat(Stat::exact("sigma_v2", 2.0 * c));
            2.0 * c
        }
        None => {
            let seed = rcm_core::rng::derive_seed(cfg.seed, rcm_core::rng::Namespace::Sampling, 0);
            let e = estimate_sigma_v(&medium, Site::origin(d), n.max(16), 1.0, cfg.walkers.clamp(10_000, 200_000), seed, driver)?;
            report.stat(Stat::new("sigma_v2", e.sigma_v2, e.std_err(), e.walkers));
            e.sigma_v2
        }
    };
    let r = llt_ratio(&medium, sigma_v2, n, &times, &xs, &ys, cfg.ball_radius, cfg.walkers, cfg.walk_seed_at(0), driver)?;
    let mut table = Table::new("llt", &["t", "x", "y", "hits", "ball_sites", "estimate", "reference", "ratio", "ratio_stderr", "excluded"]);
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(" ");
    for c in &r.cells {
        table.push(vec![
            c.t.into(),
            fmt(&c.x).into(),
            fmt(&c.y).into(),
            c.hits.into(),
            c.ball_sites.into(),
            c.estimate.into(),
            c.reference.into(),
            c.ratio().into(),
            c.ratio_std_err(r.walkers).into(),
            (c.excluded as u8 as u64).into(),
        ]);
    }
    let band = cfg.threshold("ratio_band", if cfg.law.homogeneous.is_some() { 1.2 } else { 1.35 });
    let total = r.cells.len() as u64 * r.walkers;
    report
        .stat(Stat::new("sup_ratio", r.sup_ratio(), 0.0, total))
        .stat(Stat::new("inf_ratio", r.inf_ratio(), 0.0, total))
        .stat(Stat::new("excluded_cells", r.excluded() as f64, 0.0, r.cells.len() as u64))
        .check(Check::at_most("sup_ratio", r.sup_ratio(), band))
        .check(Check::at_least("inf_ratio", r.inf_ratio(), 1.0 / band));
    if r.excluded() > 0 {
        report.note(format!("{} cells expected fewer than {MIN_EXPECTED_HITS} hits and were excluded", r.excluded()));
    }
    RunOutput::new(report, vec![table])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcm_core::{ConductanceField, Unbounded};

    #[test]
    fn grid_shape() {
        let (xs, ys) = llt_grid(2, 1.0);
        assert_eq!(xs.len(), 5);
        assert_eq!(ys.len(), 13);
        assert!(ys.contains(&vec![0.0, 0.0]));
        assert!(ys.contains(&vec![0.5, -0.5]));
        assert!(!ys.contains(&vec![1.0, 0.5]));
    }

    #[test]
    fn homogeneous_ratios_near_one() {
        let env = ConductanceField::homogeneous(2, 1.0).unwrap();
        let driver = Driver::new(Some(1)).unwrap();
        let r = llt_ratio(&Unbounded(&env), 2.0, 4, &[1.0], &[vec![0.0, 0.0]], &[vec![0.0, 0.0]], 1.0, 20_000, 3, &driver)
            .unwrap();
        let c = &r.cells[0];
        assert!((c.ratio() - 1.0).abs() < 0.15, "{}", c.ratio());
    }
}
