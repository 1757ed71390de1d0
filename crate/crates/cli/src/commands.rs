use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use netshield_core::allocate::{self, AllocationResult};
use netshield_core::dynamics::{
    default_step, event_log_csv, extinction_times, fit_decay_rate, gseiv_is_stable,
    gseiv_meanfield, meanfield_simulate, stability_margin, stochastic_simulate, trajectory_csv,
};
use netshield_core::graph::{pagerank, write_edge_list};
use netshield_core::heuristics::{
    centrality_csv, compare_strategies, effective_objective, greedy_allocate, greedy_outcomes,
    report_csv, Protection,
};
use netshield_core::{
    Centrality, Digraph, GreedyStrategy, GseivParams, PageRankMode, Parameterization,
    SpreadingParams,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Sweep};
use crate::output::OutputDir;

/// Solver finished but the spectral certificate did not hold.
#[derive(Debug)]
pub struct CertificationFailed(pub String);

impl std::fmt::Display for CertificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "certification failed: {}", self.0)
    }
}

impl std::error::Error for CertificationFailed {}

pub fn solve(cfg: &RunConfig, out: &mut OutputDir, sweep: Option<Sweep>) -> Result<()> {
    let g = cfg.load_graph()?;
    let problem = cfg.problem(&g)?;
    if let Some(sweep) = sweep {
        let rows = sweep
            .values()
            .par_iter()
            .map(|&b| {
                let r = allocate::solve(&problem.with_budget(b)?, cfg.tol)
                    .with_context(|| format!("budget {b}"))?;
                Ok((b, r))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut csv = String::from("budget,epsilon,spend,certified\n");
        for (b, r) in &rows {
            let _ = writeln!(
                csv,
                "{b:?},{:?},{:?},{}",
                r.certification.spectral_epsilon, r.spend.total, r.certification.passed
            );
        }
        out.write("sweep.csv", &csv)?;
        return Ok(());
    }

    let result = allocate::solve(&problem, cfg.tol)?;
    out.write_json("result.json", &result)?;
    out.write_json("certification.json", &result.certification)?;
    out.write(
        "scatter.csv",
        &scatter_csv(&g, &result, cfg.heuristics.alpha),
    )?;
    println!(
        "epsilon = {:?}  spend = {:?} / {:?}",
        result.epsilon, result.spend.total, cfg.budget
    );
    if !result.certification.passed {
        let c = &result.certification;
        return Err(CertificationFailed(format!(
            "epsilon gap {:e}, min Perron slack {:e}, budget residual {:e}",
            c.epsilon_gap, c.min_perron_slack, c.budget_residual
        ))
        .into());
    }
    Ok(())
}

/// Per node: correction spend, prevention spend on incoming edges (or the
/// node itself), weighted in-degree, and PageRank.
fn scatter_csv(g: &Digraph, r: &AllocationResult, alpha: f64) -> String {
    let n = g.node_count();
    let mut prevention = vec![0.0; n];
    match r.parameterization {
        Parameterization::NodeLevel => prevention.copy_from_slice(&r.spend.prevention),
        Parameterization::EdgeLevel => {
            for (e, edge) in g.edges().iter().enumerate() {
                prevention[edge.dst] += r.spend.prevention[e];
            }
        }
    }
    let (din, _) = g.weighted_degrees();
    let pr = pagerank(g, alpha, PageRankMode::Forward);
    let mut csv = String::from("node,correction_spend,prevention_spend,in_degree,pagerank\n");
    for i in 0..n {
        let _ = writeln!(
            csv,
            "{i},{:?},{:?},{:?},{:?}",
            r.spend.correction.get(i).copied().unwrap_or(0.0),
            prevention[i],
            din[i],
            pr[i]
        );
    }
    csv
}

/// Rates to simulate: a stored result if configured, else a fresh solve.
fn solved_params(cfg: &RunConfig, g: &Digraph) -> Result<(SpreadingParams, f64)> {
    if let Some(path) = &cfg.simulate.rates {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading rates {}", path.display()))?;
        let r: AllocationResult = serde_json::from_str(&text)
            .with_context(|| format!("parsing rates {}", path.display()))?;
        let params = SpreadingParams::from_edge_rates(g, &r.edge_beta, r.delta.clone())?;
        let eps = stability_margin(&params)?;
        return Ok((params, eps));
    }
    let problem = cfg.problem(g)?;
    let r = allocate::solve(&problem, cfg.tol)?;
    Ok((
        problem.spreading_params(&r.beta, &r.delta),
        r.certification.spectral_epsilon,
    ))
}

#[derive(Serialize)]
struct DecaySummary {
    epsilon: f64,
    fitted_rate: Option<f64>,
    t_end: f64,
    step: f64,
}

pub fn simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let g = cfg.load_graph()?;
    let (params, eps) = solved_params(cfg, &g)?;
    let t_end = cfg
        .simulate
        .t_end
        .unwrap_or(if eps > 0.0 { 20.0 / eps } else { 100.0 });
    let step = cfg.simulate.step.unwrap_or_else(|| default_step(&params));
    let p0 = vec![cfg.simulate.p0; g.node_count()];
    let traj = meanfield_simulate(&params, &p0, t_end, step)?;
    let fitted_rate = fit_decay_rate(&traj).ok().map(|f| f.rate);
    out.write("trajectory.csv", &trajectory_csv(&traj))?;
    out.write_json(
        "decay.json",
        &DecaySummary {
            epsilon: eps,
            fitted_rate,
            t_end,
            step,
        },
    )?;
    match fitted_rate {
        Some(rate) => println!("epsilon = {eps:?}  fitted decay rate = {rate:?}"),
        None => println!("epsilon = {eps:?}  no decay fit"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ExtinctionSummary {
    epsilon: f64,
    trials: usize,
    extinct: usize,
    fraction: f64,
    mean_time: Option<f64>,
    t_max: f64,
}

pub fn gillespie(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let g = cfg.load_graph()?;
    let (params, eps) = solved_params(cfg, &g)?;
    let t_max = cfg
        .simulate
        .t_end
        .unwrap_or(if eps > 0.0 { 200.0 / eps } else { 100.0 });
    let x0 = vec![1u8; g.node_count()];
    let trials = cfg.simulate.trials;
    if trials == 0 {
        bail!("simulate.trials must be positive");
    }
    let times = extinction_times(&params, &x0, t_max, cfg.seed, trials)?;
    let mut csv = String::from("trial,extinction_time\n");
    for (k, t) in times.iter().enumerate() {
        match t {
            Some(t) => writeln!(csv, "{k},{t:?}"),
            None => writeln!(csv, "{k},"),
        }
        .expect("writing to a string");
    }
    out.write("extinction.csv", &csv)?;
    let finished: Vec<f64> = times.iter().flatten().copied().collect();
    let summary = ExtinctionSummary {
        epsilon: eps,
        trials,
        extinct: finished.len(),
        fraction: finished.len() as f64 / trials as f64,
        mean_time: (!finished.is_empty())
            .then(|| finished.iter().sum::<f64>() / finished.len() as f64),
        t_max,
    };
    out.write_json("extinction.json", &summary)?;
    let first = stochastic_simulate(&params, &x0, t_max, cfg.seed)?;
    out.write("events.csv", &event_log_csv(&first))?;
    println!(
        "{} of {} runs extinct by t = {:?}",
        summary.extinct, summary.trials, t_max
    );
    Ok(())
}

pub fn heuristics(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let g = cfg.load_graph()?;
    let cost = cfg.prevention_cost()?;
    out.write(
        "centralities.csv",
        &centrality_csv(&g, cfg.heuristics.alpha)?,
    )?;
    let n = g.node_count();
    let mut csv = String::from("strategy,protected,fraction");
    for i in 0..n {
        let _ = write!(csv, ",rate_node_{i}");
    }
    csv.push_str(",epsilon\n");
    for &c in &cfg.heuristics.strategies {
        let strategy = GreedyStrategy {
            centrality: c,
            alpha: cfg.heuristics.alpha,
            protection: Protection::Budget(cfg.budget),
            fractional_remainder: cfg.heuristics.fractional_remainder,
        };
        let a = greedy_allocate(&g, &strategy, &cost)?;
        let eps = effective_objective(&g, &a.rates, cfg.delta)?;
        let _ = write!(csv, "{},{},{:?}", c.name(), a.protected.len(), a.fraction);
        for r in &a.rates {
            let _ = write!(csv, ",{r:?}");
        }
        let _ = writeln!(csv, ",{eps:?}");
    }
    out.write("greedy.csv", &csv)?;
    Ok(())
}

pub fn compare(cfg: &RunConfig, out: &mut OutputDir, sweep: Option<Sweep>) -> Result<()> {
    let g = cfg.load_graph()?;
    let setup = cfg.protection_setup(&g)?;
    let strategies: &[Centrality] = &cfg.heuristics.strategies;
    if let Some(sweep) = sweep {
        let rows = sweep
            .values()
            .par_iter()
            .map(|&b| {
                let mut s = setup.clone();
                s.budget = b;
                let optimum = allocate::solve(&s.allocation_problem()?, cfg.tol)
                    .with_context(|| format!("budget {b}"))?;
                let greedy = greedy_outcomes(&s, strategies)?;
                Ok((b, optimum.certification.spectral_epsilon, greedy))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut csv = String::from("budget,optimal");
        for c in strategies {
            let _ = write!(csv, ",{}", c.name());
        }
        csv.push('\n');
        for (b, optimum, greedy) in &rows {
            let _ = write!(csv, "{b:?},{optimum:?}");
            for (_, _, eps) in greedy {
                let _ = write!(csv, ",{eps:?}");
            }
            csv.push('\n');
        }
        out.write("sweep.csv", &csv)?;
        return Ok(());
    }
    let report = compare_strategies(&setup, strategies, cfg.tol)?;
    out.write("report.csv", &report_csv(&report))?;
    out.write_json("report.json", &report)?;
    for row in report
        .strategies
        .iter()
        .chain(std::iter::once(&report.optimum))
    {
        println!(
            "{:<22} epsilon = {:<24?} Q = {:?}",
            row.name, row.epsilon, row.q
        );
    }
    Ok(())
}

pub fn gen_worstcase(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.graph = None;
    let g = cfg.load_graph()?;
    out.write("graph.csv", &write_edge_list(&g))?;
    println!("{} nodes, {} edges", g.node_count(), g.edge_count());
    Ok(())
}

#[derive(Serialize)]
struct GseivVerdict {
    verdict: &'static str,
    stable: bool,
    abscissa: f64,
}

pub fn gseiv_check(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let g = cfg.load_graph()?;
    let s = &cfg.gseiv;
    let params =
        GseivParams::uniform(&g, s.beta_e, s.beta_i, s.delta, s.epsilon, s.theta, s.gamma)?;
    let stability = gseiv_is_stable(&params, 0.0)?;
    let verdict = if stability.stable {
        "stable"
    } else {
        "unstable"
    };
    out.write_json(
        "gseiv.json",
        &GseivVerdict {
            verdict,
            stable: stability.stable,
            abscissa: stability.abscissa,
        },
    )?;
    let state0: Vec<f64> = (0..g.node_count())
        .flat_map(|_| [1.0 - s.e0 - s.i0, s.e0, s.i0, 0.0])
        .collect();
    let traj = gseiv_meanfield(&params, &state0, s.t_end, s.step)?;
    out.write("gseiv_trajectory.csv", &trajectory_csv(&traj))?;
    println!("{verdict} (spectral abscissa {:?})", stability.abscissa);
    Ok(())
}
