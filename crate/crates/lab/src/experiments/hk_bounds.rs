//! Fitted constants of the on- and off-diagonal heat kernel bounds and of the
//! Green's function decay, scanned on deterministic kernels.

use rcm_core::solver::{green, GreenOptions, HeatKernelOptions, Uniformizer};
use rcm_core::{Boundary, ConductanceField, Conductances, LatticeRegion, Site, TruncatedView};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::parallel::Driver;
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

/// Kernel values below this are dominated by the truncation error and are
/// left out of the fits.
pub const FLOOR: f64 = 1e-8;
/// Exponent in the lower-bound window `t >= |y|^(1 + eta)`.
pub const ETA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HkConstants {
    /// `sup_t t^{d/2} p_t(0, 0)`.
    pub diag: f64,
    /// Smallest Gaussian rate over `|y|^2 / t >= 1`.
    pub c5: f64,
    /// `sup p_t(0, y) t^{d/2} exp(c5 |y|^2 / t)`.
    pub upper: f64,
    /// Largest Gaussian rate inside `t >= |y|^(1 + eta)`.
    pub c8: f64,
    /// `inf p_t(0, y) t^{d/2} exp(c8 |y|^2 / t)` inside that window.
    pub lower: f64,
    pub half_side: u32,
    pub t_min: f64,
    pub t_max: f64,
}

/// Default scan: 16 geometric times on `[1, 100]` (d <= 2) or `[1, 25]`.
pub fn default_times(d: usize) -> Vec<f64> {
    let t_max: f64 = if d <= 2 { 100.0 } else { 25.0 };
    (0..16).map(|i| t_max.powf(i as f64 / 15.0)).collect()
}

/// Half-side keeping six diffusive spreads `sqrt(2 t_max)` away from the walls.
pub fn default_half_side(t_max: f64) -> u32 {
    (6.0 * (2.0 * t_max).sqrt()).ceil() as u32
}

/// Scan `p_t(0, y)` over `times` and `|y|_inf <= half_side / 2` on a free box.
pub fn hk_constants<C: Conductances + ?Sized>(env: &C, half_side: u32, times: &[f64], tol: f64) -> Result<HkConstants> {
    let d = env.dim();
    let region = LatticeRegion::cube(d, half_side, Boundary::Free)?;
    let o = Site::origin(d);
    let k = Uniformizer::new(env, region)?.kernel(&o, times, &HeatKernelOptions::with_tol(tol))?;
    let hd = d as f64 / 2.0;
    let diag = times.iter().enumerate().map(|(i, t)| t.powf(hd) * k.value(i, &o)).fold(0.0, f64::max);
    let inner = (half_side / 2) as i64;
    let sites: Vec<(usize, Site)> =
        region.sites().enumerate().filter(|(_, y)| y.coords().iter().all(|&c| (c as i64).abs() <= inner)).collect();
    // (scaled kernel, |y|^2 / t, inside the lower window)
    let mut points = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let vals = k.values(i);
        for (idx, y) in &sites {
            let p = vals[*idx];
            if p >= FLOOR {
                let r2 = y.norm2() as f64;
                points.push((p * t.powf(hd), r2 / t, t >= r2.sqrt().powf(1.0 + ETA)));
            }
        }
    }
    let rate = |q: f64, s: f64| (diag / q).ln() / s;
    let c5 = points.iter().filter(|p| p.1 >= 1.0).map(|p| rate(p.0, p.1).max(0.0)).fold(f64::INFINITY, f64::min);
    let c5 = if c5.is_finite() { c5 } else { 0.0 };
    let upper = points.iter().map(|p| p.0 * (c5 * p.1).exp()).fold(0.0, f64::max);
    let c8 = points.iter().filter(|p| p.2 && p.1 > 0.0).map(|p| rate(p.0, p.1)).fold(0.0, f64::max);
    let lower = points.iter().filter(|p| p.2).map(|p| p.0 * (c8 * p.1).exp()).fold(f64::INFINITY, f64::min);
    Ok(HkConstants { diag, c5, upper, c8, lower, half_side, t_min: times[0], t_max: *times.last().unwrap() })
}

/// `max g(0, x) |x|^{d-2}` over `r_min <= |x| <= r_max` on a Dirichlet cube.
pub fn green_decay<C: Conductances + ?Sized>(env: &C, half_side: u32, r_min: f64, r_max: f64, tol: f64) -> Result<f64> {
    let d = env.dim();
    if d < 3 {
        return Err(LabError::config("green decay needs d >= 3"));
    }
    let region = LatticeRegion::cube(d, half_side, Boundary::Dirichlet)?;
    let g = green(env, &Site::origin(d), region, &GreenOptions { tol, ..GreenOptions::default() })?;
    let mut best: f64 = 0.0;
    for (x, v) in region.sites().zip(g.values()) {
        let r = x.norm();
        if r >= r_min && r <= r_max {
            best = best.max(v * r.powi(d as i32 - 2));
        }
    }
    Ok(best)
}

pub fn run(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let mut times = if cfg.times.len() >= 2 { cfg.times.clone() } else { default_times(d) };
    times.sort_by(|a, b| a.total_cmp(b));
    if times[0] <= 0.0 {
        return Err(LabError::config("scan times must be positive"));
    }
    let h = cfg.box_half.unwrap_or_else(|| default_half_side(*times.last().unwrap()));
    let tol = cfg.tol.min(1e-6);
    let n = cfg.n[0] as f64;
    let envs = if cfg.law.homogeneous.is_some() { 1 } else { cfg.environments as usize };
    let rows = driver.try_map(envs, |i| -> Result<(HkConstants, Option<f64>)> {
        let field = cfg.law.field(cfg.env_seed_at(i as u64))?;
        let view = if cfg.law.homogeneous.is_some() {
            TruncatedView::new(field.clone(), f64::INFINITY, 1.0)?
        } else {
            TruncatedView::new(field.clone(), cfg.a, n)?
        };
        let c = hk_constants(&view, h, &times, tol)?;
        let g = if d >= 3 { Some(green_decay(&field, 24, 3.0, 12.0, cfg.tol)?) } else { None };
        Ok((c, g))
    })?;
    let mut report = ExperimentReport::new("hk-bounds", cfg);
    let mut table = Table::new("hk_bounds", &["env_index", "diag", "c5", "upper", "c8", "lower", "green_decay"]);
    for (i, (c, g)) in rows.iter().enumerate() {
        table.push(vec![
            i.into(),
            c.diag.into(),
            c.c5.into(),
            c.upper.into(),
            c.c8.into(),
            c.lower.into(),
            g.unwrap_or(f64::NAN).into(),
        ]);
    }
    let spread = |f: &dyn Fn(&HkConstants) -> f64| {
        let v: Vec<f64> = rows.iter().map(|r| f(&r.0)).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (min, max)
    };
    let count = rows.len() as u64;
    for (key, f) in [
        ("diag", &(|c: &HkConstants| c.diag) as &dyn Fn(&HkConstants) -> f64),
        ("upper", &|c: &HkConstants| c.upper),
        ("lower", &|c: &HkConstants| c.lower),
        ("c5", &|c: &HkConstants| c.c5),
        ("c8", &|c: &HkConstants| c.c8),
    ] {
        let (min, max) = spread(f);
        report.stat(Stat::new(format!("{key}_max"), max, 0.0, count));
        report.stat(Stat::new(format!("{key}_min"), min, 0.0, count));
        report.check(Check::holds(format!("{key}_finite_positive"), min > 0.0 && max.is_finite()));
        if count > 1 && key != "c5" && key != "c8" {
            report.check(Check::at_most(format!("{key}_spread"), max / min, cfg.threshold("spread", 3.0)));
        }
    }
    report
        .stat(Stat::exact("half_side", h as f64))
        .stat(Stat::exact("t_min", times[0]))
        .stat(Stat::exact("t_max", *times.last().unwrap()));
    if d >= 3 {
        let flat = ConductanceField::homogeneous(d, 1.0)?;
        let reference = green_decay(&flat, 24, 3.0, 12.0, cfg.tol)?;
        let worst = rows.iter().filter_map(|r| r.1).fold(0.0, f64::max);
        report
            .stat(Stat::exact("green_decay_homogeneous", reference))
            .stat(Stat::new("green_decay_max", worst, 0.0, count))
            .check(Check::at_most("green_decay_ratio", worst / reference, cfg.threshold("green_ratio", 3.0)));
    }
    RunOutput::new(report, vec![table])
}
