//! `netshield`: solve, simulate and compare protection allocations from
//! JSON configs and edge-list files.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use netshield_core::{AllocError, Centrality, HeuristicsError};

use crate::commands::CertificationFailed;
use crate::config::{RunConfig, Sweep};
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "netshield", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

/// Flags take precedence over the config file, which takes precedence
/// over built-in defaults.
#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Edge-list CSV (`src,dst,weight` per line).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Budget sweep `lo:hi:steps` (solve and compare).
    #[arg(long, global = true)]
    sweep: Option<Sweep>,
    /// Greedy strategy; repeat to select several.
    #[arg(long = "strategy", global = true, value_parser = parse_centrality)]
    strategies: Vec<Centrality>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal allocation with its spectral certificate.
    Solve,
    /// Mean-field trajectory under the optimal (or stored) rates.
    Simulate,
    /// Stochastic extinction times under the optimal (or stored) rates.
    Gillespie,
    /// Centrality tables and greedy allocations.
    Heuristics,
    /// Greedy strategies against the optimum, scored by efficiency.
    Compare,
    /// Write the worst-case graph as an edge list.
    GenWorstcase {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Reverse every edge.
        #[arg(long)]
        reversed: bool,
        /// Randomized variant with this edge probability.
        #[arg(long)]
        randomized: Option<f64>,
    },
    /// Hurwitz check and trajectory of the SEIV extension.
    GseivCheck,
}

fn parse_centrality(s: &str) -> Result<Centrality, String> {
    Centrality::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Centrality::ALL.iter().map(|c| c.name()).collect();
        format!(
            "unknown strategy `{s}` (expected one of {})",
            names.join(", ")
        )
    })
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(g) = &c.graph {
        cfg.graph = Some(g.clone());
    }
    if let Some(b) = c.budget {
        cfg.budget = b;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    if !c.strategies.is_empty() {
        cfg.heuristics.strategies = c.strategies.clone();
    }
    if let Command::GenWorstcase {
        n,
        m,
        reversed,
        randomized,
    } = &cli.command
    {
        let w = &mut cfg.worstcase;
        w.n = n.unwrap_or(w.n);
        w.m = m.unwrap_or(w.m);
        w.reversed |= reversed;
        if randomized.is_some() {
            w.randomized = *randomized;
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = effective_config(cli)?;
    let name = match cli.command {
        Command::Solve => "solve",
        Command::Simulate => "simulate",
        Command::Gillespie => "gillespie",
        Command::Heuristics => "heuristics",
        Command::Compare => "compare",
        Command::GenWorstcase { .. } => "gen-worstcase",
        Command::GseivCheck => "gseiv-check",
    };
    let mut out = OutputDir::create(&cli.common.out, name, cfg.hash(), cfg.seed)?;
    out.write("config.json", &(cfg.to_json() + "\n"))?;
    let sweep = cli.common.sweep;
    let result = match cli.command {
        Command::Solve => commands::solve(&cfg, &mut out, sweep),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Gillespie => commands::gillespie(&cfg, &mut out),
        Command::Heuristics => commands::heuristics(&cfg, &mut out),
        Command::Compare => commands::compare(&cfg, &mut out, sweep),
        Command::GenWorstcase { .. } => commands::gen_worstcase(&cfg, &mut out),
        Command::GseivCheck => commands::gseiv_check(&cfg, &mut out),
    };
    for p in out.written() {
        eprintln!("wrote {}", p.display());
    }
    result.map_err(|e| e.context(name))
}

fn alloc_exit_code(e: &AllocError) -> Option<u8> {
    match e {
        AllocError::Infeasible { .. } => Some(2),
        AllocError::NoStrictlyFeasibleStart
        | AllocError::NoConvergence { .. }
        | AllocError::Spectral(_) => Some(3),
        _ => None,
    }
}

/// 1 usage or input, 2 infeasible, 3 solver failure, 4 certification.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<CertificationFailed>() {
            return 4;
        }
        if let Some(code) = cause.downcast_ref::<AllocError>().and_then(alloc_exit_code) {
            return code;
        }
        match cause.downcast_ref::<HeuristicsError>() {
            Some(HeuristicsError::Alloc(e)) => {
                if let Some(code) = alloc_exit_code(e) {
                    return code;
                }
            }
            Some(HeuristicsError::UndefinedEfficiency { .. }) => return 3,
            _ => {}
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
