//! `knotdyn`: tangle arithmetic, curve building, relaxation runs, named
//! experiments and the live simulation service.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use knotdyn_core::dynamics::{evolve_with, perturb, project_to_rest, ScheduleEntry, SimParams, SimState};
use knotdyn_core::embedding::{curve_from_spec, EmbedParams};
use knotdyn_core::experiments::{
    load_curve, report_table, run_scenario, save_curve, write_report_json, Overrides, TrajectoryHeader,
    TrajectoryWriter, SCENARIOS,
};
use knotdyn_core::tangle::{canonical_cf, classify_two_bridge, closure_fraction, eval_fraction, parse_tangle, reduce_closure, Parsed};
use knotdyn_service::{serve, ServiceConfig};

#[derive(Parser)]
#[command(name = "knotdyn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the fraction p/q of a tangle or closure.
    Fraction { expr: String },
    /// Print the canonical terms and class of a tangle or closure.
    Reduce { expr: String },
    /// Build an embedded curve from a closure or `T(a,b)`.
    Make {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        beads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a schedule file on a curve and write the trajectory.
    Evolve(EvolveArgs),
    /// Run a named scenario, or all of them.
    Experiment(ExperimentArgs),
    /// Serve interactive sessions over TCP, one JSON message per line.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Write each session's frames under this directory.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeded start perturbation as a fraction of the mean edge; 0 disables it.
    #[arg(long, default_value_t = 0.1)]
    perturbation: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Scenario name.
    #[arg(required_unless_present = "all", conflicts_with = "all")]
    name: Option<String>,
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    beads: Option<usize>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Step budget per descent phase.
    #[arg(long)]
    max_steps: Option<u64>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Fraction { expr } => println!("{}", fraction(&expr)?),
        Cmd::Reduce { expr } => println!("{}", reduce(&expr)?),
        Cmd::Make { spec, beads, out } => {
            let c = curve_from_spec(&spec, &EmbedParams { beads, ..EmbedParams::default() })?;
            save_curve(&c, &out)?;
            println!("{} beads -> {}", c.len(), out.display());
        }
        Cmd::Evolve(a) => evolve(&a)?,
        Cmd::Experiment(a) => experiment(&a)?,
        Cmd::Serve { port, record } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(port, ServiceConfig { record_dir: record }))?;
        }
    }
    Ok(())
}

fn fraction(expr: &str) -> Result<String> {
    let f = match parse_tangle(expr)? {
        Parsed::Tangle(t) => eval_fraction(&t)?,
        Parsed::Closure(k) => closure_fraction(&k)?,
    };
    Ok(f.to_string())
}

fn reduce(expr: &str) -> Result<String> {
    match parse_tangle(expr)? {
        Parsed::Closure(k) => {
            let r = reduce_closure(&k)?;
            Ok(format!("{} {}", r.terms, r.class))
        }
        Parsed::Tangle(t) => {
            let f = eval_fraction(&t)?;
            Ok(format!("{} {}", canonical_cf(&f)?, classify_two_bridge(&f)))
        }
    }
}

fn read_schedule(path: &Path) -> Result<Vec<ScheduleEntry>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let entries: Vec<ScheduleEntry> =
        serde_json::from_str(&text).with_context(|| format!("{}: malformed schedule", path.display()))?;
    if entries.is_empty() {
        bail!("{}: empty schedule", path.display());
    }
    Ok(entries)
}

fn evolve(a: &EvolveArgs) -> Result<()> {
    let curve = load_curve(&a.input)?;
    let entries = read_schedule(&a.schedule)?;
    let h = curve.total_length() / curve.len() as f64;
    let base = SimParams { rest_edge_length: Some(h), ..SimParams::default() };
    let schedule: Vec<_> = entries.iter().map(|e| e.to_phase(&base)).collect();
    for p in &schedule {
        p.params.validate()?;
    }
    let start = if a.perturbation > 0.0 { project_to_rest(&perturb(&curve, a.perturbation * h, a.seed)?, h)? } else { curve };
    let mut state = SimState::new(start)?;
    let mut w = TrajectoryWriter::create(&a.out, &TrajectoryHeader::new(base, schedule.clone()))?;
    let mut write_err = None;
    let outcomes = evolve_with(&mut state, &schedule, |f| {
        if write_err.is_none() {
            write_err = w.frame(f).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    w.finish()?;
    for (i, o) in outcomes.iter().enumerate() {
        println!("phase {i}: {} steps, converged {}", o.steps, o.converged);
    }
    println!("final energy {:.10} -> {}", state.last_energy, a.out.display());
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let o = Overrides { beads: a.beads, max_steps: a.max_steps, out_dir: Some(a.out.clone()), ..Overrides::default() };
    let names: Vec<&str> = match &a.name {
        Some(n) => vec![n.as_str()],
        None => SCENARIOS.to_vec(),
    };
    let mut reports = Vec::new();
    for name in names {
        log::info!("running {name} (seed {})", a.seed);
        let r = run_scenario(name, &o, a.seed)?;
        log::info!("{name}: {:.6} -> {:.6} in {:.1}s", r.initial_energy, r.final_energy, r.wall_time_s);
        reports.push(r);
    }
    print!("{}", report_table(&reports)?);
    if a.all {
        write_report_json(&reports, &a.out.join("report.json"))?;
    }
    Ok(())
}
