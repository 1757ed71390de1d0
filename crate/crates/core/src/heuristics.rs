//! Centrality-greedy protection, the efficiency score against the GP
//! optimum, and the worst-case graph on which every such heuristic fails.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocate::{self, AllocError, AllocationProblem, Correction, Parameterization};
use crate::costs::{CostError, PreventionCost, PreventionFamily, RateBounds};
use crate::dynamics::{stability_margin, DynamicsError, SpreadingParams};
use crate::graph::{pagerank, Digraph, Edge, PageRankMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeuristicsError {
    #[error("worst-case construction needs m > n + 2 (got n = {n}, m = {m})")]
    WorstCasePrecondition { n: usize, m: usize },
    #[error("cannot protect {k} of {n} nodes")]
    TooManyProtected { k: usize, n: usize },
    #[error("PageRank damping must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("efficiency undefined: optimum ε {optimum} does not improve on baseline ε {baseline}")]
    UndefinedEfficiency { baseline: f64, optimum: f64 },
    #[error("expected {expected} node rates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centrality {
    OutDegree,
    InDegree,
    TotalDegree,
    PagerankForward,
    PagerankReverse,
    PagerankSymmetrized,
}

impl Centrality {
    pub const ALL: [Centrality; 6] = [
        Centrality::OutDegree,
        Centrality::InDegree,
        Centrality::TotalDegree,
        Centrality::PagerankForward,
        Centrality::PagerankReverse,
        Centrality::PagerankSymmetrized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Centrality::OutDegree => "out-degree",
            Centrality::InDegree => "in-degree",
            Centrality::TotalDegree => "total-degree",
            Centrality::PagerankForward => "pagerank-forward",
            Centrality::PagerankReverse => "pagerank-reverse",
            Centrality::PagerankSymmetrized => "pagerank-symmetrized",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Weighted degree or PageRank score of every node.
pub fn centrality(
    g: &Digraph,
    measure: Centrality,
    alpha: f64,
) -> Result<Vec<f64>, HeuristicsError> {
    let pr = |mode| {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(HeuristicsError::InvalidAlpha(alpha));
        }
        Ok(pagerank(g, alpha, mode))
    };
    let (din, dout) = g.weighted_degrees();
    match measure {
        Centrality::OutDegree => Ok(dout),
        Centrality::InDegree => Ok(din),
        Centrality::TotalDegree => Ok(din.iter().zip(&dout).map(|(a, b)| a + b).collect()),
        Centrality::PagerankForward => pr(PageRankMode::Forward),
        Centrality::PagerankReverse => pr(PageRankMode::Reverse),
        Centrality::PagerankSymmetrized => pr(PageRankMode::Symmetrized),
    }
}

/// How many nodes a greedy strategy protects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protection {
    /// Exactly `k` nodes.
    Count(usize),
    /// `k = ⌊C / f(β̲)⌋` nodes.
    Budget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyStrategy {
    pub centrality: Centrality,
    pub alpha: f64,
    pub protection: Protection,
    /// Spend any budget left after `k` full protections on the next node.
    pub fractional_remainder: bool,
}

impl GreedyStrategy {
    pub fn new(centrality: Centrality, alpha: f64, protection: Protection) -> Self {
        Self {
            centrality,
            alpha,
            protection,
            fractional_remainder: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyAllocation {
    /// Node rates `β_i`.
    pub rates: Vec<f64>,
    /// Fully protected nodes, highest ranked first.
    pub protected: Vec<usize>,
    /// Node that received the fractional remainder, if any.
    pub partial: Option<usize>,
    /// `r = k / N`.
    pub fraction: f64,
    pub spend: Vec<f64>,
}

/// Nodes by decreasing score; scores equal to 12 significant digits rank
/// by ascending index.
pub fn rank_nodes(scores: &[f64]) -> Vec<usize> {
    let max = scores.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let key = |v: f64| {
        if max > 0.0 {
            (v / max * 1e12).round()
        } else {
            0.0
        }
    };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])));
    order
}

/// Protects the top-ranked nodes at `β̲`, leaving the rest at `β̄`.
pub fn greedy_allocate(
    g: &Digraph,
    strategy: &GreedyStrategy,
    cost: &PreventionCost,
) -> Result<GreedyAllocation, HeuristicsError> {
    let n = g.node_count();
    let RateBounds { lo, hi } = cost.bounds();
    let unit = cost.max_spend();
    let (k, remainder) = match strategy.protection {
        Protection::Count(k) => (k, 0.0),
        Protection::Budget(c) => {
            if unit <= 0.0 {
                (n, 0.0)
            } else {
                let k = ((c / unit) * (1.0 + 1e-12)).floor() as usize;
                let k = k.min(n);
                (k, (c - k as f64 * unit).max(0.0))
            }
        }
    };
    if k > n {
        return Err(HeuristicsError::TooManyProtected { k, n });
    }
    let scores = centrality(g, strategy.centrality, strategy.alpha)?;
    let order = rank_nodes(&scores);
    let mut rates = vec![hi; n];
    let mut spend = vec![0.0; n];
    for &v in &order[..k] {
        rates[v] = lo;
        spend[v] = unit;
    }
    let mut partial = None;
    if strategy.fractional_remainder && k < n && remainder > 0.0 {
        let v = order[k];
        let share = remainder.min(unit);
        rates[v] = cost.inverse(share)?;
        spend[v] = share;
        partial = Some(v);
    }
    Ok(GreedyAllocation {
        rates,
        protected: order[..k].to_vec(),
        partial,
        fraction: k as f64 / n as f64,
        spend,
    })
}

/// `ε(β) = −λ₁(diag(β) A − δ I)`.
pub fn effective_objective(
    g: &Digraph,
    node_rates: &[f64],
    delta: f64,
) -> Result<f64, HeuristicsError> {
    if node_rates.len() != g.node_count() {
        return Err(HeuristicsError::DimensionMismatch {
            expected: g.node_count(),
            got: node_rates.len(),
        });
    }
    let params = SpreadingParams::node_scaled(g, node_rates, vec![delta; g.node_count()])?;
    Ok(stability_margin(&params)?)
}

/// `Q = (ε − ε_baseline) / (ε_optimum − ε_baseline)`.
pub fn efficiency_from(epsilon: f64, baseline: f64, optimum: f64) -> Result<f64, HeuristicsError> {
    let denom = optimum - baseline;
    if !(denom.abs() > 1e-12 * (1.0 + baseline.abs())) {
        return Err(HeuristicsError::UndefinedEfficiency { baseline, optimum });
    }
    Ok((epsilon - baseline) / denom)
}

/// Efficiency of node rates relative to no protection (`β̄` everywhere)
/// and the optimum decay rate.
pub fn efficiency(
    g: &Digraph,
    node_rates: &[f64],
    beta_hi: f64,
    delta: f64,
    optimum_eps: f64,
) -> Result<f64, HeuristicsError> {
    let eps = effective_objective(g, node_rates, delta)?;
    let baseline = effective_objective(g, &vec![beta_hi; g.node_count()], delta)?;
    efficiency_from(eps, baseline, optimum_eps)
}

/// `n` source nodes `0..n` feeding a directed cycle on `n..n+m`, with every
/// source linked to every cycle node. Unit weights.
pub fn worst_case_graph(n: usize, m: usize) -> Result<Digraph, HeuristicsError> {
    if m <= n + 2 {
        return Err(HeuristicsError::WorstCasePrecondition { n, m });
    }
    let mut edges = Vec::with_capacity(n * m + m);
    for s in 0..n {
        for c in 0..m {
            edges.push(Edge::new(s, n + c, 1.0));
        }
    }
    for c in 0..m {
        edges.push(Edge::new(n + c, n + (c + 1) % m, 1.0));
    }
    Ok(Digraph::from_edges(n + m, edges).expect("construction is valid"))
}

/// Less regular variant: each source links to a random nonempty subset of
/// the cycle (each edge kept with probability `p`), and every cycle node
/// gets an extra chord with probability `p`. Sources keep zero in-degree,
/// so greedy out-degree selection still avoids the cycle.
pub fn randomized_worst_case_graph(
    n: usize,
    m: usize,
    p: f64,
    seed: u64,
) -> Result<Digraph, HeuristicsError> {
    if m <= n + 2 {
        return Err(HeuristicsError::WorstCasePrecondition { n, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for s in 0..n {
        let before = edges.len();
        for c in 0..m {
            if rng.random::<f64>() < p {
                edges.push(Edge::new(s, n + c, 1.0));
            }
        }
        if edges.len() == before {
            edges.push(Edge::new(s, n + rng.random_range(0..m), 1.0));
        }
    }
    for c in 0..m {
        edges.push(Edge::new(n + c, n + (c + 1) % m, 1.0));
    }
    for c in 0..m {
        if rng.random::<f64>() < p {
            let offset = rng.random_range(2..m);
            edges.push(Edge::new(n + c, n + (c + offset) % m, 1.0));
        }
    }
    Ok(Digraph::from_edges(n + m, edges).expect("construction is valid"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub name: String,
    pub rates: Vec<f64>,
    pub spend: Vec<f64>,
    pub epsilon: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub strategies: Vec<StrategyOutcome>,
    pub optimum: StrategyOutcome,
    pub baseline_epsilon: f64,
    pub optimum_epsilon: f64,
}

/// Node-level, fixed-recovery protection problem shared by the greedy
/// strategies and the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionSetup {
    pub graph: Digraph,
    pub cost: PreventionCost,
    pub delta: f64,
    pub budget: f64,
    pub alpha: f64,
    pub cap: f64,
}

impl ProtectionSetup {
    pub fn allocation_problem(&self) -> Result<AllocationProblem, HeuristicsError> {
        let n = self.graph.node_count();
        Ok(AllocationProblem::new(
            self.graph.clone(),
            Parameterization::NodeLevel,
            vec![self.cost.clone(); n],
            Correction::Fixed(vec![self.delta; n]),
            self.cap,
            self.budget,
        )?)
    }
}

/// Greedy allocation and its `ε` for each strategy at the setup's budget.
pub fn greedy_outcomes(
    setup: &ProtectionSetup,
    strategies: &[Centrality],
) -> Result<Vec<(Centrality, GreedyAllocation, f64)>, HeuristicsError> {
    strategies
        .par_iter()
        .map(|&c| {
            let strategy = GreedyStrategy::new(c, setup.alpha, Protection::Budget(setup.budget));
            let alloc = greedy_allocate(&setup.graph, &strategy, &setup.cost)?;
            let eps = effective_objective(&setup.graph, &alloc.rates, setup.delta)?;
            Ok((c, alloc, eps))
        })
        .collect()
}

/// Runs each greedy strategy with the setup's budget, solves for the
/// optimum, and scores everything by efficiency.
pub fn compare_strategies(
    setup: &ProtectionSetup,
    strategies: &[Centrality],
    tol: f64,
) -> Result<EfficiencyReport, HeuristicsError> {
    let g = &setup.graph;
    let n = g.node_count();
    let hi = setup.cost.bounds().hi;
    let baseline_epsilon = effective_objective(g, &vec![hi; n], setup.delta)?;
    let solved = allocate::solve(&setup.allocation_problem()?, tol)?;
    let optimum_epsilon = solved.certification.spectral_epsilon;
    let greedy = greedy_outcomes(setup, strategies)?;

    let strategies = greedy
        .into_iter()
        .map(|(c, alloc, epsilon)| {
            Ok(StrategyOutcome {
                name: c.name().to_string(),
                q: efficiency_from(epsilon, baseline_epsilon, optimum_epsilon)?,
                rates: alloc.rates,
                spend: alloc.spend,
                epsilon,
            })
        })
        .collect::<Result<Vec<_>, HeuristicsError>>()?;
    let optimum = StrategyOutcome {
        name: "optimal".to_string(),
        q: efficiency_from(optimum_epsilon, baseline_epsilon, optimum_epsilon)?,
        rates: solved.beta,
        spend: solved.spend.prevention,
        epsilon: optimum_epsilon,
    };
    Ok(EfficiencyReport {
        strategies,
        optimum,
        baseline_epsilon,
        optimum_epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkstationConfig {
    pub n: usize,
    pub m: usize,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub delta: f64,
    pub budget: f64,
    pub alpha: f64,
    /// Run on the graph with every edge reversed.
    pub reversed: bool,
}

impl Default for WorkstationConfig {
    fn default() -> Self {
        Self {
            n: 3,
            m: 6,
            beta_lo: 0.01,
            beta_hi: 0.5,
            delta: 0.3,
            budget: 3.0,
            alpha: 0.1,
            reversed: false,
        }
    }
}

impl WorkstationConfig {
    pub fn setup(&self) -> Result<ProtectionSetup, HeuristicsError> {
        let g = worst_case_graph(self.n, self.m)?;
        let graph = if self.reversed { g.reversed() } else { g };
        Ok(ProtectionSetup {
            graph,
            cost: PreventionCost::new(
                PreventionFamily::Workstation,
                RateBounds::new(self.beta_lo, self.beta_hi)?,
            )?,
            delta: self.delta,
            budget: self.budget,
            alpha: self.alpha,
            cap: 1.0_f64.max(2.0 * self.delta),
        })
    }

    /// Strategies the experiment reports: the forward measures on the
    /// original graph, their mirror images on the reversed one.
    pub fn strategies(&self) -> Vec<Centrality> {
        if self.reversed {
            vec![
                Centrality::InDegree,
                Centrality::TotalDegree,
                Centrality::PagerankReverse,
                Centrality::PagerankSymmetrized,
            ]
        } else {
            vec![
                Centrality::OutDegree,
                Centrality::TotalDegree,
                Centrality::PagerankForward,
                Centrality::PagerankSymmetrized,
            ]
        }
    }
}

pub fn workstation_experiment(
    config: &WorkstationConfig,
) -> Result<EfficiencyReport, HeuristicsError> {
    compare_strategies(
        &config.setup()?,
        &config.strategies(),
        allocate::DEFAULT_TOL,
    )
}

/// One row per strategy: name, spend per node, ε, Q.
pub fn report_csv(report: &EfficiencyReport) -> String {
    let n = report.optimum.spend.len();
    let mut out = String::from("strategy");
    for i in 0..n {
        let _ = write!(out, ",spend_node_{i}");
    }
    out.push_str(",epsilon,q\n");
    for row in report
        .strategies
        .iter()
        .chain(std::iter::once(&report.optimum))
    {
        out.push_str(&row.name);
        for s in &row.spend {
            let _ = write!(out, ",{s:?}");
        }
        let _ = writeln!(out, ",{:?},{:?}", row.epsilon, row.q);
    }
    out
}

/// Node × measure table of every centrality.
pub fn centrality_csv(g: &Digraph, alpha: f64) -> Result<String, HeuristicsError> {
    let columns = Centrality::ALL
        .iter()
        .map(|&c| centrality(g, c, alpha))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("node");
    for c in Centrality::ALL {
        let _ = write!(out, ",{}", c.name().replace('-', "_"));
    }
    out.push('\n');
    for i in 0..g.node_count() {
        let _ = write!(out, "{i}");
        for col in &columns {
            let _ = write!(out, ",{:?}", col[i]);
        }
        out.push('\n');
    }
    Ok(out)
}
