//! Deterministic kernels: heat kernels, Green's functions and effective
//! conductances, with their structural checks.

use rcm_core::solver::{
    effective_conductance, gamma_n, green, mc_ball_hits, richardson, BallEstimate, GreenOptions, HeatKernelOptions,
    SiteBall, Uniformizer,
};
use rcm_core::{Boundary, Boxed, ConductanceField, Conductances, Edge, LatticeRegion, Site, TruncatedView};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::formats::{Grid, GridKind, Provenance};
use crate::parallel::{Driver, WALKER_CHUNK};
use crate::report::{Check, ExperimentReport, RunOutput, Stat, Table};

/// Residuals of the kernel identities on one box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelInvariants {
    /// `|sum_y p_t(x, y) - 1|` (free box).
    pub mass: f64,
    /// `max_y |p_t(x, y) - p_t(y, x)|` over the probed `y`.
    pub symmetry: f64,
    /// `max_y |p_{2t}(x, y) - sum_z p_t(x, z) p_t(z, y)|`.
    pub semigroup: f64,
    pub tol: f64,
}

/// Check mass, symmetry (against the sources `probes`) and the semigroup
/// property at time `t` on a free box.
pub fn kernel_invariants<C: Conductances + ?Sized>(
    env: &C,
    region: LatticeRegion,
    x: &Site,
    probes: &[Site],
    t: f64,
    tol: f64,
) -> Result<KernelInvariants> {
    let u = Uniformizer::new(env, region.with_boundary(Boundary::Free))?;
    let opts = HeatKernelOptions::with_tol(tol);
    let k = u.kernel(x, &[t, 2.0 * t], &opts)?;
    let mass = (k.mass(0) - 1.0).abs();
    let mut symmetry: f64 = 0.0;
    for y in probes {
        let back = u.kernel(y, &[t], &opts)?;
        symmetry = symmetry.max((k.value(0, y) - back.value(0, x)).abs());
    }
    let two_step = u.propagate(k.values(0), t, &opts)?;
    let semigroup = two_step.iter().zip(k.values(1)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(KernelInvariants { mass, symmetry, semigroup, tol })
}

/// `C_eff[{x}, outside] * g(x, x)` on a Dirichlet box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Duality {
    pub ceff: f64,
    pub green: f64,
}

impl Duality {
    pub fn defect(&self) -> f64 {
        (self.ceff * self.green - 1.0).abs()
    }
}

pub fn duality<C: Conductances + ?Sized>(env: &C, region: LatticeRegion, x: &Site, tol: f64) -> Result<Duality> {
    let region = region.with_boundary(Boundary::Dirichlet);
    let c = effective_conductance(env, &region, &[*x], &[], tol)?;
    let g = green(env, x, region, &GreenOptions { tol, ..GreenOptions::default() })?;
    Ok(Duality { ceff: c.conductance, green: g.value(x) })
}

/// `g(0, 0)` on Dirichlet cubes of half-sides `h1 < h2` and the
/// extrapolation to the whole lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenExtrapolation {
    pub small: f64,
    pub large: f64,
    pub extrapolated: f64,
}

pub fn green_extrapolate<C: Conductances + ?Sized>(env: &C, h1: u32, h2: u32, tol: f64) -> Result<GreenExtrapolation> {
    let d = env.dim();
    let o = Site::origin(d);
    let opts = GreenOptions { tol, ..GreenOptions::default() };
    let small = green(env, &o, LatticeRegion::cube(d, h1, Boundary::Dirichlet)?, &opts)?.value(&o);
    let large = green(env, &o, LatticeRegion::cube(d, h2, Boundary::Dirichlet)?, &opts)?.value(&o);
    Ok(GreenExtrapolation { small, large, extrapolated: richardson(small, h1, large, h2) })
}

/// Deterministic `p_t(0, 0)` against the Monte Carlo fraction of walkers at
/// the origin, for the walk on the free box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelVsMc {
    pub kernel: f64,
    pub mc: f64,
    pub mc_std_err: f64,
}

pub fn kernel_vs_mc<C: Conductances + ?Sized>(
    env: &C,
    region: LatticeRegion,
    t: f64,
    walkers: u64,
    seed: u64,
    driver: &Driver,
) -> Result<KernelVsMc> {
    let region = region.with_boundary(Boundary::Free);
    let o = Site::origin(region.dim());
    let kernel = Uniformizer::new(env, region)?.kernel(&o, &[t], &HeatKernelOptions::default())?.value(0, &o);
    let medium = Boxed::new(env, region)?;
    let ball = [SiteBall::new(o, 0.0, None)?];
    let hits: u64 = driver
        .try_map_chunks(walkers, WALKER_CHUNK, |range| {
            Ok::<_, LabError>(mc_ball_hits(&medium, &o, t, range, seed, &ball)?[0])
        })?
        .into_iter()
        .sum();
    let est = BallEstimate::from_hits(hits, walkers, 1);
    Ok(KernelVsMc { kernel, mc: est.estimate, mc_std_err: est.std_err })
}

/// The environment the deterministic solvers run on: a homogeneous field
/// as is, a random one truncated at `a n^2` (smallest scale of the ladder)
/// so that the uniformization rate stays bounded.
fn solver_env(cfg: &RunConfig) -> Result<TruncatedView<ConductanceField>> {
    let field = cfg.law.field(cfg.env_seed())?;
    let (a, n) = if cfg.law.homogeneous.is_some() { (f64::INFINITY, 1.0) } else { (cfg.a, cfg.n[0] as f64) };
    Ok(TruncatedView::new(field, a, n)?)
}

pub fn run_heat_kernel(cfg: &RunConfig, _driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let env = solver_env(cfg)?;
    let region = LatticeRegion::cube(d, cfg.box_half.unwrap_or(10), Boundary::Free)?;
    let o = Site::origin(d);
    let mut times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    if times.is_empty() {
        return Err(LabError::config("heat-kernel needs a positive time"));
    }
    let tol = cfg.tol.min(1e-6);
    let u = Uniformizer::new(&env, region)?;
    let k = u.kernel(&o, &times, &HeatKernelOptions::with_tol(tol))?;
    let mut report = ExperimentReport::new("heat-kernel", cfg);
    let prov = Provenance::new(&report.config_hash, cfg.seed);
    let mut table = Table::new("heat-kernel", &["t", "p_t_00", "mass", "terms", "rate"]);
    let mut files = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        table.push(vec![t.into(), k.value(i, &o).into(), k.mass(i).into(), k.terms().into(), k.rate().into()]);
        report.stat(Stat::exact(format!("p_t_00_t{t}"), k.value(i, &o)));
        let grid = Grid { kind: GridKind::Kernel, region, source: o, t, tol, values: k.values(i).to_vec() };
        files.push((format!("kernel_t{t}.csv"), grid.to_csv(&prov).into_bytes()));
        files.push((format!("kernel_t{t}.bin"), grid.to_bytes(&prov)));
    }
    let probe = o.neighbor(0).neighbor(0);
    let inv = kernel_invariants(&env, region, &o, &[probe], times[0], tol)?;
    report
        .stat(Stat::exact("mass_residual", inv.mass))
        .stat(Stat::exact("symmetry_residual", inv.symmetry))
        .stat(Stat::exact("semigroup_defect", inv.semigroup))
        .check(Check::at_most("mass_residual", inv.mass, 2.0 * tol))
        .check(Check::at_most("symmetry_residual", inv.symmetry, 2.0 * tol))
        .check(Check::at_most("semigroup_defect", inv.semigroup, 4.0 * tol));
    let mut out = RunOutput::new(report, vec![table])?;
    for (name, bytes) in files {
        out = out.with_file(name, bytes);
    }
    Ok(out)
}

pub fn run_green(cfg: &RunConfig, _driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    if d < 3 {
        return Err(LabError::config("green needs d >= 3"));
    }
    let env = cfg.law.field(cfg.env_seed())?;
    let h = cfg.box_half.unwrap_or(20);
    let region = LatticeRegion::cube(d, h, Boundary::Dirichlet)?;
    let o = Site::origin(d);
    let g = green(&env, &o, region, &GreenOptions { tol: cfg.tol, ..GreenOptions::default() })?;
    let ex = green_extrapolate(&env, h, 2 * h, cfg.tol)?;
    let mut report = ExperimentReport::new("green", cfg);
    let prov = Provenance::new(&report.config_hash, cfg.seed);
    let mut table = Table::new("green_boxes", &["half_side", "g00"]);
    table.push(vec![h.into(), ex.small.into()]);
    table.push(vec![(2 * h).into(), ex.large.into()]);
    report
        .stat(Stat::exact("g00_small", ex.small))
        .stat(Stat::exact("g00_large", ex.large))
        .stat(Stat::exact("g00_extrapolated", ex.extrapolated))
        .stat(Stat::exact("residual", g.residual()))
        .check(Check::at_most("residual", g.residual(), cfg.tol));
    let grid = Grid { kind: GridKind::Green, region, source: o, t: 0.0, tol: cfg.tol, values: g.values().to_vec() };
    Ok(RunOutput::new(report, vec![table])?
        .with_file("green.csv", grid.to_csv(&prov).into_bytes())
        .with_file("green.bin", grid.to_bytes(&prov)))
}

pub fn run_ceff(cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    let d = cfg.law.d;
    let h = cfg.box_half.unwrap_or(10);
    let region = LatticeRegion::cube(d, h, Boundary::Dirichlet)?;
    let o = Site::origin(d);
    let rows = driver.try_map(cfg.environments as usize, |i| -> Result<(Duality, f64)> {
        let env = cfg.law.field(cfg.env_seed_at(i as u64))?;
        let dual = duality(&env, region, &o, cfg.tol)?;
        let gamma = gamma_n(&env, &Edge::from_dir(&o, 0), cfg.b_n as f64, None, cfg.tol)?;
        Ok((dual, gamma))
    })?;
    let mut report = ExperimentReport::new("ceff", cfg);
    let mut table = Table::new("ceff", &["env_index", "ceff", "g_xx", "duality_defect", "gamma_n_e0"]);
    let mut worst: f64 = 0.0;
    for (i, (dual, gamma)) in rows.iter().enumerate() {
        table.push(vec![i.into(), dual.ceff.into(), dual.green.into(), dual.defect().into(), (*gamma).into()]);
        worst = worst.max(dual.defect());
    }
    report
        .stat(Stat::new("max_duality_defect", worst, 0.0, rows.len() as u64))
        .check(Check::at_most("max_duality_defect", worst, cfg.threshold("duality", 1e-6)));
    RunOutput::new(report, vec![table])
}
