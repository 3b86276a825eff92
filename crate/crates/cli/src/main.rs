//! `fiber-atlas`: batch front end for fiber topology along arcs.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Eps, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "fiber-atlas", version, about = "Fiber topology of real polynomial maps along arcs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (required by every randomized command)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.json, CSVs and timing.json
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on Rips simplices before the cloud is thinned
    #[arg(long, global = true)]
    simplex_cap: Option<usize>,
    /// Also write persistence-pair CSVs
    #[arg(long, global = true)]
    emit_persistence: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check every claim on the built-in R^5 -> R^3 example
    #[command(allow_negative_numbers = true)]
    VerifyExample(VerifyArgs),
    /// Scan the fibers of a map along an arc in its target
    #[command(allow_negative_numbers = true)]
    ScanArc(ScanArgs),
    /// Critical points of a polynomial restricted to a variety
    #[command(allow_negative_numbers = true)]
    CriticalPoints(CriticalArgs),
    /// Sample one fiber and dump it as CSV
    #[command(allow_negative_numbers = true)]
    FiberSample(SampleArgs),
    /// Rips betti numbers of a CSV point cloud
    #[command(allow_negative_numbers = true)]
    Betti(BettiArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Ball radius for the fiber topology
    #[arg(long)]
    radius: Option<f64>,
    /// u-values of the topology grid
    #[arg(long, value_delimiter = ',')]
    topology_grid: Option<Vec<f64>>,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Variable names, comma separated
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
    /// One map component; repeat for each
    #[arg(long = "map")]
    map: Vec<String>,
    /// File with one map component per line
    #[arg(long)]
    map_file: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Arc start gamma(0), comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "to")]
    from: Option<Vec<f64>>,
    /// Arc end gamma(1), comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "from")]
    to: Option<Vec<f64>>,
    /// Number of equal steps from s = 1 down to s = 0
    #[arg(long)]
    steps: Option<usize>,
    /// Sampling ball radius
    #[arg(long)]
    radius: Option<f64>,
    /// Grow the radius to the Milnor estimate over these shell radii
    #[arg(long, value_delimiter = ',')]
    milnor_grid: Option<Vec<f64>>,
    /// Target number of points per fiber
    #[arg(long)]
    count: Option<usize>,
    /// Minimum distance between sampled points
    #[arg(long)]
    spacing: Option<f64>,
    /// Equation cutting each fiber to a loop; repeat for more
    #[arg(long)]
    cut: Vec<String>,
}

#[derive(Args)]
struct CriticalArgs {
    /// Variable names, comma separated
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
    #[arg(long)]
    objective: Option<String>,
    /// Constraint `c = 0`; repeat for each
    #[arg(long)]
    equality: Vec<String>,
    /// Constraint `g >= 0`; repeat for each
    #[arg(long)]
    inequality: Vec<String>,
    /// Lower corner of the search box
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lo: Option<Vec<f64>>,
    /// Upper corner of the search box
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    hi: Option<Vec<f64>>,
    #[arg(long)]
    multistart: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Point in the target whose fiber is sampled
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    target: Option<Vec<f64>>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Args)]
struct BettiArgs {
    /// CSV point cloud
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Rips scale, or `auto` for the nearest-neighbour rule
    #[arg(long)]
    eps: Option<Eps>,
    /// Multiplier for the automatic scale
    #[arg(long)]
    scale_factor: Option<f64>,
    /// Columns to use, comma separated
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn apply_map(cfg: &mut RunConfig, m: MapArgs) {
    if let Some(v) = m.vars {
        cfg.map.variables = v;
    }
    if !m.map.is_empty() {
        cfg.map.components = m.map;
        cfg.map.file = None;
    }
    if m.map_file.is_some() {
        cfg.map.file = m.map_file;
        cfg.map.components.clear();
    }
}

/// Loads the config file and writes the flags over it.
fn resolve(common: Common, command: &Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.out, common.out);
    set(&mut cfg.simplex_cap, common.simplex_cap);
    if common.emit_persistence {
        cfg.emit_persistence = Some(true);
    }
    apply_command(&mut cfg, command);
    Ok(cfg)
}

fn apply_command(cfg: &mut RunConfig, command: &Command) {
    match command {
        Command::VerifyExample(a) => {
            if a.radius.is_some() || a.topology_grid.is_some() {
                let ex = cfg.example.get_or_insert_with(Default::default);
                if let Some(r) = a.radius {
                    ex.radius = r;
                }
                if let Some(g) = &a.topology_grid {
                    ex.topology_grid = g.clone();
                }
            }
        }
        Command::ScanArc(a) => {
            apply_map(cfg, a.map.clone());
            if let (Some(from), Some(to)) = (&a.from, &a.to) {
                cfg.arc.points = Some(vec![from.clone(), to.clone()]);
                cfg.arc.components = None;
            }
            if a.steps.is_some() {
                cfg.arc.steps = a.steps;
                cfg.arc.schedule = None;
            }
            set(&mut cfg.scan.radius, a.radius);
            set(&mut cfg.scan.milnor_grid, a.milnor_grid.clone());
            set(&mut cfg.scan.count, a.count);
            set(&mut cfg.scan.spacing, a.spacing);
            if !a.cut.is_empty() {
                cfg.loop_cut.cut = a.cut.clone();
            }
        }
        Command::CriticalPoints(a) => {
            if let Some(v) = &a.vars {
                cfg.map.variables = v.clone();
            }
            let c = &mut cfg.critical;
            set(&mut c.objective, a.objective.clone());
            if !a.equality.is_empty() {
                c.equalities = a.equality.clone();
            }
            if !a.inequality.is_empty() {
                c.inequalities = a.inequality.clone();
            }
            set(&mut c.lo, a.lo.clone());
            set(&mut c.hi, a.hi.clone());
            set(&mut c.multistart, a.multistart);
            set(&mut c.tol, a.tol);
        }
        Command::FiberSample(a) => {
            apply_map(cfg, a.map.clone());
            let s = &mut cfg.sample;
            set(&mut s.target, a.target.clone());
            set(&mut s.radius, a.radius);
            set(&mut s.count, a.count);
            set(&mut s.spacing, a.spacing);
        }
        Command::Betti(a) => {
            let b = &mut cfg.betti;
            set(&mut b.input, a.input.clone());
            set(&mut b.eps, a.eps);
            set(&mut b.scale_factor, a.scale_factor);
            if let Some(c) = &a.columns {
                b.columns = c.clone();
            }
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FIBER_ATLAS_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("FIBER_ATLAS_THREADS must be a positive integer, got \"{v}\"")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn write_outputs(out: Option<&Path>, command: &str, outcome: &commands::Outcome, wall: f64) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::write(dir.join("report.json"), format!("{}\n", outcome.report))?;
            let timing = serde_json::json!({ "command": command, "wall_seconds": wall });
            std::fs::write(dir.join("timing.json"), format!("{timing}\n"))?;
            println!("{}", outcome.summary);
        }
        None => println!("{}", outcome.report),
    }
    eprintln!("wall time {wall:.3} s");
    Ok(())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let start = Instant::now();
    init_threads()?;
    let cfg = resolve(cli.common, &cli.command)?;
    cfg.validate()?;
    let out = cfg.out.clone();
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    let out = out.as_deref();
    let (name, outcome) = match &cli.command {
        Command::VerifyExample(_) => ("verify-example", commands::verify_example(&cfg, out)?),
        Command::ScanArc(_) => ("scan-arc", commands::scan(&cfg, out)?),
        Command::CriticalPoints(_) => ("critical-points", commands::critical_points(&cfg)?),
        Command::FiberSample(_) => ("fiber-sample", commands::fiber_sample(&cfg, out)?),
        Command::Betti(_) => ("betti", commands::betti(&cfg, out)?),
    };
    write_outputs(out, name, &outcome, start.elapsed().as_secs_f64())?;
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.kind.code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
