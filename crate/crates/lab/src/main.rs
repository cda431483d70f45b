use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use rcm_lab::config::{LawConfig, Overrides, RunConfig};
use rcm_lab::runner::{aggregate_dir, execute, exit_code, write_output, EXIT_ERROR};
use rcm_lab::{emit_report, Driver, Result};

/// Random conductance model laboratory.
#[derive(Parser, Debug)]
#[command(name = "rcmlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; overrides RCMLAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Law as `d=3,rho=0,alpha=1,a_p=10[,homogeneous=1]`.
    #[arg(long, global = true)]
    law: Option<String>,
    /// Scale ladder, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    #[arg(long, global = true)]
    env_seed: Option<u64>,
    #[arg(long, global = true)]
    walkers: Option<u64>,
    #[arg(long, global = true)]
    environments: Option<u32>,
    /// Box half-side.
    #[arg(long = "box", global = true)]
    box_half: Option<u32>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Time grid, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    times: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample conductances, test the tail law, dump a box of the field.
    EnvSample,
    /// Simulate trajectories of the variable speed walk.
    Walk,
    /// Rescaled clock process over the n-ladder.
    Clock,
    /// Heat kernel on a free box with its invariants.
    HeatKernel,
    /// Green's function on Dirichlet boxes and its extrapolation.
    Green,
    /// Effective conductance and its duality with the Green's function.
    Ceff,
    /// Ball-averaged kernel ratios against the Gaussian limit.
    Llt,
    /// The i.i.d. Pareto analogue of the clock.
    Classical,
    /// Ergodic averages of truncated conductances.
    Ergodic,
    /// Exit and big-site hitting probabilities with a (K, a) sweep.
    Truncation,
    /// Per-tile sums over big edges.
    Homogenization,
    /// Cluster sizes and exponential moments of gamma'.
    Clusters,
    /// Marginals of the rescaled constant speed walk.
    Qfclt,
    /// Diffusivity of the variable speed walk.
    Sigma,
    /// Fitted heat kernel and Green's function bound constants.
    HkBounds,
    /// Aggregate the reports of a directory.
    Report {
        /// Directory holding experiment JSON files (default: --out or `out`).
        dir: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EnvSample => "env-sample",
            Command::Walk => "walk",
            Command::Clock => "clock",
            Command::HeatKernel => "heat-kernel",
            Command::Green => "green",
            Command::Ceff => "ceff",
            Command::Llt => "llt",
            Command::Classical => "classical",
            Command::Ergodic => "ergodic",
            Command::Truncation => "truncation",
            Command::Homogenization => "homogenization",
            Command::Clusters => "clusters",
            Command::Qfclt => "qfclt",
            Command::Sigma => "sigma",
            Command::HkBounds => "hk-bounds",
            Command::Report { .. } => "report",
        }
    }
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let base = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let overrides = Overrides {
        law: cli.law.as_deref().map(LawConfig::parse).transpose()?,
        n: cli.n.clone(),
        seed: cli.seed,
        env_seed: cli.env_seed,
        walkers: cli.walkers,
        environments: cli.environments,
        box_half: cli.box_half,
        times: cli.times.clone(),
        tol: cli.tol,
        out: cli.out.clone(),
    };
    overrides.apply(base)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Command::Report { dir } = &cli.command {
        let dir = dir.clone().or_else(|| cli.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        let (agg, text) = aggregate_dir(&dir)?;
        print!("{text}");
        return Ok(agg.pass);
    }
    let cfg = config(cli)?;
    let driver = Driver::new(cli.threads)?;
    let name = cli.command.name();
    let started = Instant::now();
    let out = execute(name, &cfg, &driver)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let written = write_output(&out, &dir)?;
    let (_, text) = emit_report(std::slice::from_ref(&out.report))?;
    print!("{text}");
    // wall time stays out of the files so that reruns are byte-identical
    eprintln!("{name}: {} files in {}, {:.2} s", written.len(), dir.display(), started.elapsed().as_secs_f64());
    Ok(out.report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(pass) => ExitCode::from(exit_code(pass) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
