//! `loupe`: command-line front end for the loupe numerics.
//!
//! Exit codes: `0` on success, `2` for configuration errors, `3` when a numeric contract fails.

mod commands;
mod config;
mod report;
mod svg;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use report::{cache_dir, cache_lookup, cache_store, emit, CacheEntry, ResultRecord};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(loupe_core::Error),
    Failed(String),
}

impl From<loupe_core::Error> for CliError {
    fn from(e: loupe_core::Error) -> Self {
        if e.is_numeric_contract() {
            CliError::Numeric(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) | CliError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(e) => write!(f, "numeric error: {e}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "loupe", version, about = "Brownian loop measure and SLE numerics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Options shared by every command.
#[derive(Args, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
struct Common {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long)]
    config: Option<String>,
    /// Seed of the random streams (required by every computing command).
    #[arg(long)]
    seed: Option<String>,
    /// Write the JSON result record here.
    #[arg(long)]
    out: Option<String>,
    /// Write the result table as CSV here.
    #[arg(long)]
    csv: Option<String>,
    /// Write an SVG plot of the result table here.
    #[arg(long)]
    svg: Option<String>,
    /// Cache directory (defaults to the LOUPE_CACHE_DIR environment variable).
    #[arg(long)]
    cache_dir: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Harmonic measure h_D(z, V) by walk-on-spheres.
    Harmonic(HarmonicArgs),
    /// Excursion measure exc_D(z, V) by finite differences with Richardson extrapolation.
    Excursion(ExcursionArgs),
    /// Bubble mass ρ(R), or its split at a root w for a domain between A_R and the exterior disk.
    Bubble(BubbleArgs),
    /// Brownian loop mass of loops in a domain hitting every listed set.
    LoopMass(LoopMassArgs),
    /// Normalized loop measure Λ*(V1, V2).
    LambdaStar(LambdaStarArgs),
    /// Logarithmic capacity of a compact set.
    Capacity(CapacityArgs),
    /// ψ′(0) of the uniformizer of a domain onto the unit disk.
    ConformalRadius(ConformalArgs),
    /// Whole-plane SLE: traces, annulus moduli and the radial SLE density.
    #[command(subcommand)]
    Sle(SleCmd),
    /// Runs a suite of closed-form checks: kernels, loops or sle.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum SleCmd {
    /// Samples a trace.
    Sample(SleSampleArgs),
    /// Conformal modulus of D minus a hull.
    Modulus(SleModulusArgs),
    /// Mean density against its limit on a capacity ladder.
    Density(SleDensityArgs),
}

macro_rules! arg_struct {
    ($name:ident { $($(#[$m:meta])* $field:ident),* $(,)? }) => {
        #[derive(Args, Serialize)]
        #[serde(rename_all = "kebab-case")]
        struct $name {
            $($(#[$m])* #[arg(long)] $field: Option<String>,)*
            #[command(flatten)]
            #[serde(flatten)]
            common: Common,
        }
    };
}

arg_struct!(HarmonicArgs {
    /// Domain literal, e.g. `annulus(1,10)`.
    domain,
    /// Start point `x,y`.
    z,
    /// Target set literal, e.g. `circle(0,0,10)`.
    target,
    /// Number of walks.
    n,
});
arg_struct!(ExcursionArgs { domain, z, /// Inward normal `x,y` at z.
    normal, target, /// Offsets, comma-separated and decreasing.
    ladder, n });
arg_struct!(BubbleArgs { /// Outer radius R of A_R.
    big_r, domain, /// Root on the unit circle.
    w, n });
arg_struct!(LoopMassArgs {
    /// `|`-separated set literals.
    sets,
    domain,
    /// `det` (default) or `bubble`.
    engine,
    /// Root of the bubble engine: `closest:x,y` or `furthest:x,y`.
    root,
    radial_nodes,
    samples,
    /// With big-r: Λ(C_1, C_R; O_s) by the closed-form fast path.
    s,
    big_r,
});
arg_struct!(LambdaStarArgs {
    v1,
    v2,
    /// Center of the shrinking disks: `x,y` or `inf` (default 0).
    center,
    /// `deep` (default) or `default`.
    schedule,
    engine,
    root,
    radial_nodes,
    samples,
});
arg_struct!(CapacityArgs { set, n, /// Launch radius about the anchor of the set.
    launch });
arg_struct!(ConformalArgs { domain, n });
arg_struct!(SleSampleArgs { kappa, t, dt, t0, /// Record every stride-th tip.
    stride });
arg_struct!(SleModulusArgs { kappa, t, domain, dt, t0, stride, /// Walks for the circle-mean cross-check (0 skips it).
    n });
arg_struct!(SleDensityArgs { kappa, domain, w, t, n, dt, t0, /// Capacities to tabulate (default t/2, t).
    ladder });

#[derive(Args, Serialize)]
struct VerifyArgs {
    suite: String,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

fn flags(v: impl Serialize) -> BTreeMap<String, String> {
    match serde_json::to_value(v).expect("arguments serialize") {
        serde_json::Value::Object(m) => m.into_iter().filter_map(|(k, v)| v.as_str().map(|s| (k, s.to_string()))).collect(),
        _ => BTreeMap::new(),
    }
}

fn parse(cmd: Cmd) -> (&'static str, BTreeMap<String, String>) {
    match cmd {
        Cmd::Harmonic(a) => ("harmonic", flags(a)),
        Cmd::Excursion(a) => ("excursion", flags(a)),
        Cmd::Bubble(a) => ("bubble", flags(a)),
        Cmd::LoopMass(a) => ("loop-mass", flags(a)),
        Cmd::LambdaStar(a) => ("lambda-star", flags(a)),
        Cmd::Capacity(a) => ("capacity", flags(a)),
        Cmd::ConformalRadius(a) => ("conformal-radius", flags(a)),
        Cmd::Sle(SleCmd::Sample(a)) => ("sle-sample", flags(a)),
        Cmd::Sle(SleCmd::Modulus(a)) => ("sle-modulus", flags(a)),
        Cmd::Sle(SleCmd::Density(a)) => ("sle-density", flags(a)),
        Cmd::Verify(a) => ("verify", flags(a)),
    }
}

fn execute(cfg: &RunConfig) -> Result<(ResultRecord, bool, f64), CliError> {
    let cache = cache_dir(cfg);
    let hash = cfg.hash();
    if let Some(entry) = cache.as_deref().and_then(|d| cache_lookup(d, &hash)) {
        return Ok((entry.record, true, entry.wall_time_s));
    }
    let start = Instant::now();
    let rec = ResultRecord::new(cfg, commands::run(cfg)?);
    let wall = start.elapsed().as_secs_f64();
    if let Some(dir) = cache {
        cache_store(&dir, &CacheEntry { record: rec.clone(), wall_time_s: wall })?;
    }
    Ok((rec, false, wall))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = parse(cli.cmd);
    let result = RunConfig::build(command, flags).and_then(|cfg| {
        let (rec, hit, wall) = execute(&cfg)?;
        emit(&cfg, &rec)?;
        println!("{}: {} [{}{:.2}s, {}]", rec.command, rec.summary, if hit { "cached, " } else { "" }, wall, &rec.config_hash[..12]);
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("loupe: {e}");
            ExitCode::from(e.code())
        }
    }
}
