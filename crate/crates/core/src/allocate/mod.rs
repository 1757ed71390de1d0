//! Budget-constrained protection allocation.
//!
//! The problem "maximize the decay rate `ε = −λ₁(B − D)` subject to a
//! spending budget" is posed as a geometric program in the rates `β`, the
//! complementary recovery rates `δ̂ = Δ − δ`, a positive vector `u`, and a
//! bound `λ̂` with `(B + D̂)u ≤ λ̂u`. By the subinvariance form of
//! Perron–Frobenius any feasible `(u, λ̂)` certifies `ρ(B + D̂) ≤ λ̂`, and
//! `ε = Δ − λ̂` at the optimum.

mod barrier;
mod gp;
mod transform;

pub use barrier::{barrier_solve, BarrierError, BarrierOptions, BarrierOutcome};
pub use gp::{build_gp, ConstraintKind, GpConstraint, GpForm, Monomial, Posynomial, Variable};
pub use transform::{log_transform, Affine, ConvexForm, LogSumExp};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costs::{CorrectionCost, CostError, PreventionCost};
use crate::dynamics::SpreadingParams;
use crate::graph::{
    dominant_metzler_eigenvalue, spectral_radius, Digraph, SparseMatrix, SpectralError,
    SpectralOptions,
};
use gp::{build_gp_anchored, Slot};

/// Default interior-point tolerance.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Default tolerance for the spectral certificate.
pub const CERTIFICATION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("{what}: expected {expected} entries, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("recovery rate {delta} at node {node} must stay below the cap {cap}")]
    CapTooSmall { node: usize, delta: f64, cap: f64 },
    #[error("correction cost at node {node} uses cap {found}, problem cap is {cap}")]
    CapMismatch { node: usize, found: f64, cap: f64 },
    #[error("budget must be finite and nonnegative, got {0}")]
    InvalidBudget(f64),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("cost is not a posynomial: {term}")]
    NotPosynomial { term: String },
    #[error(
        "infeasible: the unprotected allocation already costs {baseline_cost}, budget is {budget}"
    )]
    Infeasible { baseline_cost: f64, budget: f64 },
    #[error("could not construct a strictly feasible starting point")]
    NoStrictlyFeasibleStart,
    #[error(
        "solver did not converge after {newton_iterations} Newton steps \
         (gap {gap}, λ̂ {lambda_hat}, max constraint {max_inequality})"
    )]
    NoConvergence {
        newton_iterations: usize,
        gap: f64,
        lambda_hat: f64,
        max_inequality: f64,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// How propagation rates are attached to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    /// One rate `β_ij` per edge.
    EdgeLevel,
    /// One rate `β_i` per node, `β_ij = β_i · a_ij`.
    NodeLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Correction {
    /// Recovery rates are given; only prevention is bought.
    Fixed(Vec<f64>),
    /// One cost family per node.
    Resources(Vec<CorrectionCost>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub graph: Digraph,
    pub parameterization: Parameterization,
    /// One per edge (edge-level) or per node (node-level).
    pub prevention: Vec<PreventionCost>,
    pub correction: Correction,
    /// `Δ`, strictly above every admissible recovery rate.
    pub cap: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spend {
    pub prevention: Vec<f64>,
    pub correction: Vec<f64>,
    pub prevention_total: f64,
    pub correction_total: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    /// Bound on the suboptimality of `log λ̂`.
    pub duality_gap: f64,
    /// Largest log-space inequality value (negative: strictly feasible).
    pub max_inequality: f64,
    pub max_equality_residual: f64,
    /// Node whose `u` entry was pinned to 1.
    pub anchor: usize,
    /// True when the budget left nothing to optimize and the unprotected
    /// allocation was returned directly.
    pub trivial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub tol: f64,
    /// `−λ₁(B* − D*)`, recomputed from the rates alone.
    pub spectral_epsilon: f64,
    /// `|λ₁(B* − D*) + ε*|`.
    pub epsilon_gap: f64,
    /// `λ̂ − ((B + D̂)u)_i / u_i` per node; nonnegative when the Perron
    /// certificate holds.
    pub perron_slack: Vec<f64>,
    pub min_perron_slack: f64,
    /// Spend minus budget (nonpositive when within budget).
    pub budget_residual: f64,
    pub max_bound_violation: f64,
    /// The graph is not strongly connected, so `λ̂` is only an upper bound
    /// approached in the limit and `epsilon_gap` measures that gap.
    pub reducible: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub parameterization: Parameterization,
    /// Per edge or per node, following the parameterization.
    pub beta: Vec<f64>,
    /// `β_ij` in graph edge order.
    pub edge_beta: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_hat: Vec<f64>,
    pub cap: f64,
    pub epsilon: f64,
    pub lambda_hat: f64,
    pub perron_u: Vec<f64>,
    pub spend: Spend,
    pub stats: SolverStats,
    pub certification: CertificationReport,
}

impl AllocationProblem {
    pub fn new(
        graph: Digraph,
        parameterization: Parameterization,
        prevention: Vec<PreventionCost>,
        correction: Correction,
        cap: f64,
        budget: f64,
    ) -> Result<Self, AllocError> {
        let n = graph.node_count();
        let expected = match parameterization {
            Parameterization::EdgeLevel => graph.edge_count(),
            Parameterization::NodeLevel => n,
        };
        if prevention.len() != expected {
            return Err(AllocError::DimensionMismatch {
                what: "prevention costs",
                expected,
                got: prevention.len(),
            });
        }
        match &correction {
            Correction::Fixed(delta) => {
                if delta.len() != n {
                    return Err(AllocError::DimensionMismatch {
                        what: "recovery rates",
                        expected: n,
                        got: delta.len(),
                    });
                }
                for (node, &d) in delta.iter().enumerate() {
                    if !(d >= 0.0 && d < cap) || !cap.is_finite() {
                        return Err(AllocError::CapTooSmall {
                            node,
                            delta: d,
                            cap,
                        });
                    }
                }
            }
            Correction::Resources(costs) => {
                if costs.len() != n {
                    return Err(AllocError::DimensionMismatch {
                        what: "correction costs",
                        expected: n,
                        got: costs.len(),
                    });
                }
                for (node, c) in costs.iter().enumerate() {
                    if c.cap() != cap {
                        return Err(AllocError::CapMismatch {
                            node,
                            found: c.cap(),
                            cap,
                        });
                    }
                }
            }
        }
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(AllocError::InvalidBudget(budget));
        }
        Ok(Self {
            graph,
            parameterization,
            prevention,
            correction,
            cap,
            budget,
        })
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self, AllocError> {
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(AllocError::InvalidBudget(budget));
        }
        Ok(Self {
            budget,
            ..self.clone()
        })
    }

    /// `(β̄, δ̲)`: no protection bought.
    pub fn baseline_rates(&self) -> (Vec<f64>, Vec<f64>) {
        let beta = self.prevention.iter().map(|c| c.bounds().hi).collect();
        let delta = match &self.correction {
            Correction::Fixed(d) => d.clone(),
            Correction::Resources(c) => c.iter().map(|c| c.bounds().lo).collect(),
        };
        (beta, delta)
    }

    /// `(β̲, δ̄)`: everything fully protected.
    pub fn full_protection_rates(&self) -> (Vec<f64>, Vec<f64>) {
        let beta = self.prevention.iter().map(|c| c.bounds().lo).collect();
        let delta = match &self.correction {
            Correction::Fixed(d) => d.clone(),
            Correction::Resources(c) => c.iter().map(|c| c.bounds().hi).collect(),
        };
        (beta, delta)
    }

    /// Expands per-parameterization rates to `β_ij` in edge order.
    pub fn edge_rates(&self, beta: &[f64]) -> Vec<f64> {
        match self.parameterization {
            Parameterization::EdgeLevel => beta.to_vec(),
            Parameterization::NodeLevel => self
                .graph
                .edges()
                .iter()
                .map(|e| beta[e.dst] * e.weight)
                .collect(),
        }
    }

    pub fn propagation_matrix(&self, beta: &[f64]) -> SparseMatrix {
        let rates = self.edge_rates(beta);
        self.graph.weighted_matrix(|e| rates[e])
    }

    pub fn spreading_params(&self, beta: &[f64], delta: &[f64]) -> SpreadingParams {
        SpreadingParams::new(self.propagation_matrix(beta), delta.to_vec())
            .expect("problem rates are valid")
    }

    /// Cost of the rates, checked against their bounds.
    pub fn spend(&self, beta: &[f64], delta: &[f64]) -> Result<Spend, AllocError> {
        let prevention = self
            .prevention
            .iter()
            .zip(beta)
            .map(|(c, &b)| c.cost(b))
            .collect::<Result<Vec<_>, _>>()?;
        let correction = match &self.correction {
            Correction::Fixed(d) => vec![0.0; d.len()],
            Correction::Resources(costs) => costs
                .iter()
                .zip(delta)
                .map(|(c, &d)| c.cost(d))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(Spend::new(prevention, correction))
    }

    /// Cost of the rates, clamping them into their bounds first.
    fn spend_clamped(&self, beta: &[f64], delta: &[f64]) -> Spend {
        let prevention = self
            .prevention
            .iter()
            .zip(beta)
            .map(|(c, &b)| {
                let r = c.bounds();
                c.cost_unchecked(b.clamp(r.lo, r.hi))
            })
            .collect();
        let correction = match &self.correction {
            Correction::Fixed(d) => vec![0.0; d.len()],
            Correction::Resources(costs) => costs
                .iter()
                .zip(delta)
                .map(|(c, &d)| {
                    let r = c.bounds();
                    c.cost_complementary_unchecked(self.cap - d.clamp(r.lo, r.hi))
                })
                .collect(),
        };
        Spend::new(prevention, correction)
    }

    pub fn baseline_cost(&self) -> f64 {
        let (b, d) = self.baseline_rates();
        self.spend_clamped(&b, &d).total
    }

    /// Spend at full protection.
    pub fn max_cost(&self) -> f64 {
        let (b, d) = self.full_protection_rates();
        self.spend_clamped(&b, &d).total
    }

    fn bound_violation(&self, beta: &[f64], delta: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, &b) in self.prevention.iter().zip(beta) {
            let r = c.bounds();
            worst = worst.max(r.lo - b).max(b - r.hi);
        }
        if let Correction::Resources(costs) = &self.correction {
            for (c, &d) in costs.iter().zip(delta) {
                let r = c.bounds();
                worst = worst.max(r.lo - d).max(d - r.hi);
            }
        }
        worst
    }
}

impl Spend {
    fn new(prevention: Vec<f64>, correction: Vec<f64>) -> Self {
        let prevention_total: f64 = prevention.iter().sum();
        let correction_total: f64 = correction.iter().sum();
        Self {
            prevention,
            correction,
            prevention_total,
            correction_total,
            total: prevention_total + correction_total,
        }
    }
}

/// `−λ₁(B − D)` for the given rates.
pub fn decay_rate(
    problem: &AllocationProblem,
    beta: &[f64],
    delta: &[f64],
) -> Result<f64, AllocError> {
    let b = problem.propagation_matrix(beta);
    let shift = delta.iter().fold(0.0_f64, |a, &d| a.max(d));
    Ok(-dominant_metzler_eigenvalue(&b, delta, shift, &SpectralOptions::default())?.value)
}

/// Checks a candidate allocation with the Perron certificate `u`, `λ̂`
/// against the problem, independently of how it was produced.
pub fn certify_rates(
    problem: &AllocationProblem,
    beta: &[f64],
    delta: &[f64],
    u: &[f64],
    lambda_hat: f64,
    tol: f64,
) -> Result<CertificationReport, AllocError> {
    let n = problem.graph.node_count();
    let b = problem.propagation_matrix(beta);
    let delta_hat: Vec<f64> = delta.iter().map(|d| problem.cap - d).collect();
    let bu = b.mul_vec(u);
    let perron_slack: Vec<f64> = (0..n)
        .map(|i| lambda_hat - (bu[i] + delta_hat[i] * u[i]) / u[i])
        .collect();
    let min_perron_slack = perron_slack.iter().copied().fold(f64::INFINITY, f64::min);
    let spectral_epsilon = decay_rate(problem, beta, delta)?;
    let epsilon = problem.cap - lambda_hat;
    let epsilon_gap = (spectral_epsilon - epsilon).abs();
    let budget_residual = problem.spend_clamped(beta, delta).total - problem.budget;
    let max_bound_violation = problem.bound_violation(beta, delta);
    let reducible = !problem.graph.is_strongly_connected();
    let passed = min_perron_slack >= -tol
        && budget_residual <= tol
        && max_bound_violation <= tol
        && (epsilon_gap <= tol || reducible);
    Ok(CertificationReport {
        tol,
        spectral_epsilon,
        epsilon_gap,
        perron_slack,
        min_perron_slack,
        budget_residual,
        max_bound_violation,
        reducible,
        passed,
    })
}

pub fn certify(
    result: &AllocationResult,
    problem: &AllocationProblem,
    tol: f64,
) -> Result<CertificationReport, AllocError> {
    certify_rates(
        problem,
        &result.beta,
        &result.delta,
        &result.perron_u,
        result.lambda_hat,
        tol,
    )
}

/// Interpolates every free rate from its unprotected end towards full
/// protection by the log-space fraction `s`.
fn interpolated_point(problem: &AllocationProblem, s: f64) -> (Vec<f64>, Vec<f64>) {
    let lerp = |hi: f64, lo: f64| (hi.ln() * (1.0 - s) + lo.ln() * s).exp();
    let beta = problem
        .prevention
        .iter()
        .map(|c| {
            let r = c.bounds();
            if r.is_fixed() {
                r.lo
            } else {
                lerp(r.hi, r.lo).clamp(r.lo, r.hi)
            }
        })
        .collect();
    let delta = match &problem.correction {
        Correction::Fixed(d) => d.clone(),
        Correction::Resources(costs) => costs
            .iter()
            .map(|c| {
                let r = c.bounds();
                if r.is_fixed() {
                    r.lo
                } else {
                    let dh = lerp(problem.cap - r.lo, problem.cap - r.hi);
                    (problem.cap - dh).clamp(r.lo, r.hi)
                }
            })
            .collect(),
    };
    (beta, delta)
}

fn has_free_rates(problem: &AllocationProblem) -> bool {
    problem.prevention.iter().any(|c| !c.bounds().is_fixed())
        || matches!(&problem.correction, Correction::Resources(c) if c.iter().any(|c| !c.bounds().is_fixed()))
}

/// Perron certificate for fixed rates: `u` from power iteration (floored
/// so it stays positive on reducible graphs) and the smallest valid `λ̂`.
/// Perron vector of `B + D̂` with entries floored at `floor · max`, and the
/// Collatz–Wielandt bound it certifies. On reducible graphs the floor
/// perturbs the componentwise inequality by at most `floor` relative.
fn rate_certificate(
    problem: &AllocationProblem,
    beta: &[f64],
    delta: &[f64],
    floor: f64,
) -> (Vec<f64>, f64) {
    let n = problem.graph.node_count();
    let delta_hat: Vec<f64> = delta.iter().map(|d| problem.cap - d).collect();
    let m = problem.propagation_matrix(beta).add_diagonal(&delta_hat);
    let mut u = spectral_radius(&m, &SpectralOptions::default())
        .map(|r| r.vector)
        .unwrap_or_else(|_| vec![1.0; n]);
    let umax = u.iter().copied().fold(0.0, f64::max);
    for v in &mut u {
        *v = v.max(floor * umax).max(f64::MIN_POSITIVE);
    }
    let mu = m.mul_vec(&u);
    let lambda = (0..n).map(|i| mu[i] / u[i]).fold(0.0, f64::max);
    (u, lambda)
}

fn trivial_result(problem: &AllocationProblem, tol: f64) -> Result<AllocationResult, AllocError> {
    let (beta, delta) = problem.baseline_rates();
    let (mut u, _) = rate_certificate(problem, &beta, &delta, 1e-12);
    let epsilon = decay_rate(problem, &beta, &delta)?;
    let lambda_hat = problem.cap - epsilon;
    let anchor = argmax(&u);
    let scale = u[anchor];
    for v in &mut u {
        *v /= scale;
    }
    let certification = certify_rates(problem, &beta, &delta, &u, lambda_hat, tol)?;
    Ok(AllocationResult {
        parameterization: problem.parameterization,
        edge_beta: problem.edge_rates(&beta),
        delta_hat: delta.iter().map(|d| problem.cap - d).collect(),
        spend: problem.spend_clamped(&beta, &delta),
        beta,
        delta,
        cap: problem.cap,
        epsilon,
        lambda_hat,
        perron_u: u,
        stats: SolverStats {
            outer_iterations: 0,
            newton_iterations: 0,
            duality_gap: 0.0,
            max_inequality: 0.0,
            max_equality_residual: 0.0,
            anchor,
            trivial: true,
        },
        certification,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Solves the allocation GP to duality gap `tol` and certifies the result
/// at [`CERTIFICATION_TOL`] (or `10·tol` if larger).
pub fn solve(problem: &AllocationProblem, tol: f64) -> Result<AllocationResult, AllocError> {
    let cert_tol = CERTIFICATION_TOL.max(10.0 * tol);
    let baseline_cost = problem.baseline_cost();
    let slack = problem.budget - baseline_cost;
    if slack < -1e-12 * problem.budget.max(1.0) {
        return Err(AllocError::Infeasible {
            baseline_cost,
            budget: problem.budget,
        });
    }
    if slack <= 1e-12 * problem.budget.max(1.0) || !has_free_rates(problem) {
        return trivial_result(problem, cert_tol);
    }

    let mut s = 1e-3;
    let (beta0, delta0) = loop {
        let (b, d) = interpolated_point(problem, s);
        if problem.spend_clamped(&b, &d).total - baseline_cost < 0.5 * slack {
            break (b, d);
        }
        s *= 0.5;
        if s < 1e-30 {
            return Err(AllocError::NoStrictlyFeasibleStart);
        }
    };
    let (mut u0, lambda0) = rate_certificate(problem, &beta0, &delta0, 1e-3);
    let anchor = argmax(&u0);
    let scale = u0[anchor];
    for v in &mut u0 {
        *v /= scale;
    }
    u0[anchor] = 1.0;

    let alloc = build_gp_anchored(problem, anchor)?;
    let mut x0 = vec![0.0; alloc.gp.var_count()];
    x0[0] = 1.01 * lambda0;
    for (k, slot) in alloc.beta.iter().enumerate() {
        if let Slot::Var(v) = *slot {
            x0[v] = beta0[k];
        }
    }
    for (i, slot) in alloc.delta_hat.iter().enumerate() {
        if let Slot::Var(v) = *slot {
            x0[v] = problem.cap - delta0[i];
        }
    }
    for (i, &v) in alloc.u.iter().enumerate() {
        x0[v] = u0[i];
    }
    let y0: Vec<f64> = x0.iter().map(|x| x.ln()).collect();
    let form = log_transform(&alloc.gp);
    let opts = BarrierOptions {
        tol,
        ..BarrierOptions::default()
    };
    let out = barrier_solve(&form, &y0, &opts).map_err(|e| match e {
        BarrierError::InfeasibleStart { .. } => AllocError::NoStrictlyFeasibleStart,
        BarrierError::Singular => AllocError::NoConvergence {
            newton_iterations: 0,
            gap: f64::INFINITY,
            lambda_hat: x0[0],
            max_inequality: f64::NAN,
        },
    })?;
    let x: Vec<f64> = out.y.iter().map(|y| y.exp()).collect();
    if !out.converged {
        return Err(AllocError::NoConvergence {
            newton_iterations: out.newton_iterations,
            gap: out.gap,
            lambda_hat: x[0],
            max_inequality: out.max_inequality,
        });
    }

    let beta: Vec<f64> = alloc.beta.iter().map(|s| s.value(&x)).collect();
    let delta_hat: Vec<f64> = alloc.delta_hat.iter().map(|s| s.value(&x)).collect();
    let delta: Vec<f64> = delta_hat.iter().map(|dh| problem.cap - dh).collect();
    let perron_u: Vec<f64> = alloc.u.iter().map(|&v| x[v]).collect();
    let lambda_hat = x[0];
    let certification = certify_rates(problem, &beta, &delta, &perron_u, lambda_hat, cert_tol)?;
    Ok(AllocationResult {
        parameterization: problem.parameterization,
        edge_beta: problem.edge_rates(&beta),
        spend: problem.spend_clamped(&beta, &delta),
        beta,
        delta,
        delta_hat,
        cap: problem.cap,
        epsilon: problem.cap - lambda_hat,
        lambda_hat,
        perron_u,
        stats: SolverStats {
            outer_iterations: out.outer_iterations,
            newton_iterations: out.newton_iterations,
            duality_gap: out.gap,
            max_inequality: out.max_inequality,
            max_equality_residual: out.max_equality_residual,
            anchor: alloc.anchor,
            trivial: false,
        },
        certification,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::costs::{CorrectionFamily, PreventionFamily, RateBounds};
    use crate::heuristics::worst_case_graph;

    pub(crate) fn single_node_problem(budget: f64, with_correction: bool) -> AllocationProblem {
        let g = Digraph::from_edges(1, [(0, 0, 1.0)]).unwrap();
        let prevention = vec![PreventionCost::new(
            PreventionFamily::Workstation,
            RateBounds::new(0.01, 0.5).unwrap(),
        )
        .unwrap()];
        let correction = if with_correction {
            Correction::Resources(vec![CorrectionCost::new(
                CorrectionFamily::Antidote,
                RateBounds::new(0.3, 0.6).unwrap(),
                1.0,
            )
            .unwrap()])
        } else {
            Correction::Fixed(vec![0.3])
        };
        AllocationProblem::new(
            g,
            Parameterization::NodeLevel,
            prevention,
            correction,
            1.0,
            budget,
        )
        .unwrap()
    }

    pub(crate) fn workstation_problem(
        g: Digraph,
        parameterization: Parameterization,
        delta: f64,
        budget: f64,
    ) -> AllocationProblem {
        let count = match parameterization {
            Parameterization::EdgeLevel => g.edge_count(),
            Parameterization::NodeLevel => g.node_count(),
        };
        let cost = PreventionCost::new(
            PreventionFamily::Workstation,
            RateBounds::new(0.01, 0.5).unwrap(),
        )
        .unwrap();
        let n = g.node_count();
        AllocationProblem::new(
            g,
            parameterization,
            vec![cost; count],
            Correction::Fixed(vec![delta; n]),
            1.0,
            budget,
        )
        .unwrap()
    }

    /// Edge-level vaccine and antidote costs; budget as a fraction of the
    /// full-protection spend.
    pub(crate) fn reciprocal_problem(g: Digraph, fraction: f64) -> AllocationProblem {
        let m = g.edge_count();
        let n = g.node_count();
        let prevention = PreventionCost::new(
            PreventionFamily::Vaccine,
            RateBounds::new(0.01, 0.5).unwrap(),
        )
        .unwrap();
        let correction = CorrectionCost::new(
            CorrectionFamily::Antidote,
            RateBounds::new(0.1, 0.4).unwrap(),
            1.0,
        )
        .unwrap();
        let mut p = AllocationProblem::new(
            g,
            Parameterization::EdgeLevel,
            vec![prevention; m],
            Correction::Resources(vec![correction; n]),
            1.0,
            0.0,
        )
        .unwrap();
        p.budget = fraction * p.max_cost();
        p
    }

    fn ring(n: usize) -> Digraph {
        Digraph::from_edges(
            n,
            (0..n).flat_map(|i| [(i, (i + 1) % n, 1.0), ((i + 1) % n, i, 1.0)]),
        )
        .unwrap()
    }

    #[test]
    fn single_node_full_protection() {
        let r = solve(&single_node_problem(1.0, false), DEFAULT_TOL).unwrap();
        assert!((r.beta[0] - 0.01).abs() < 1e-6, "β* = {}", r.beta[0]);
        assert!((r.epsilon - 0.29).abs() < 1e-6, "ε* = {}", r.epsilon);
        assert!(r.certification.passed, "{:?}", r.certification);
    }

    #[test]
    fn single_node_partial_budget_matches_closed_form() {
        // f(β) = C  ⇒  β = β̄ / (1 + C (β̄ − β̲)/β̲)
        let c = 0.4;
        let r = solve(&single_node_problem(c, false), DEFAULT_TOL).unwrap();
        let beta = 0.5 / (1.0 + c * 0.49 / 0.01);
        assert!((r.beta[0] - beta).abs() < 1e-7);
        assert!((r.epsilon - (0.3 - beta)).abs() < 1e-7);
        assert!(r.spend.total <= c + 1e-9 && r.spend.total > c - 1e-6);
    }

    #[test]
    fn zero_budget_returns_baseline() {
        let p = reciprocal_problem(ring(4), 0.0);
        let r = solve(&p, DEFAULT_TOL).unwrap();
        assert!(r.stats.trivial);
        assert!(r.beta.iter().all(|&b| b == 0.5));
        assert!(r.delta.iter().all(|&d| d == 0.1));
        // ring with unit weights: ρ = 2, so ε = 0.1 − 0.5·2
        assert!((r.epsilon - (0.1 - 1.0)).abs() < 1e-10);
        assert!(r.certification.passed);
    }

    #[test]
    fn zero_budget_certifies_on_reducible_graph() {
        // the worst-case graph is not strongly connected, so the Perron
        // vector has zero entries on the source nodes
        let g = crate::heuristics::worst_case_graph(3, 6).unwrap();
        let cost = PreventionCost::new(
            PreventionFamily::Workstation,
            RateBounds::new(0.01, 0.5).unwrap(),
        )
        .unwrap();
        let p = AllocationProblem::new(
            g,
            Parameterization::NodeLevel,
            vec![cost; 9],
            Correction::Fixed(vec![0.3; 9]),
            1.0,
            0.0,
        )
        .unwrap();
        let r = solve(&p, DEFAULT_TOL).unwrap();
        assert!(r.stats.trivial);
        assert!((r.epsilon - (0.3 - 0.5)).abs() < 1e-9);
        assert!(r.certification.passed, "{:?}", r.certification);
    }

    #[test]
    fn correction_on_worst_case_graph_certifies() {
        // the optimum balances source recovery against the cycle, leaving
        // a defective dominant eigenvalue
        let g = worst_case_graph(3, 6).unwrap();
        let prevention = PreventionCost::new(
            PreventionFamily::Workstation,
            RateBounds::new(0.01, 0.5).unwrap(),
        )
        .unwrap();
        let correction = CorrectionCost::new(
            CorrectionFamily::Antidote,
            RateBounds::new(0.1, 0.4).unwrap(),
            0.8,
        )
        .unwrap();
        let p = AllocationProblem::new(
            g,
            Parameterization::NodeLevel,
            vec![prevention; 9],
            Correction::Resources(vec![correction; 9]),
            0.8,
            3.0,
        )
        .unwrap();
        let r = solve(&p, DEFAULT_TOL).unwrap();
        assert!(r.certification.passed, "{:?}", r.certification);
        assert!((r.certification.spectral_epsilon - r.epsilon).abs() < 1e-6);
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let g = Digraph::from_edges(1, [(0, 0, 1.0)]).unwrap();
        let custom = PreventionFamily::CustomPosynomial(crate::costs::UnivariatePosynomial {
            terms: vec![(1.0, -1.0)],
            offset: 0.0,
        });
        let p = AllocationProblem::new(
            g,
            Parameterization::NodeLevel,
            vec![PreventionCost::new(custom, RateBounds::new(0.1, 0.5).unwrap()).unwrap()],
            Correction::Fixed(vec![0.3]),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            solve(&p, DEFAULT_TOL),
            Err(AllocError::Infeasible { .. })
        ));
    }

    #[test]
    fn saturated_budget_reaches_full_protection() {
        let p = reciprocal_problem(ring(5), 1.5);
        let r = solve(&p, DEFAULT_TOL).unwrap();
        let (b, d) = p.full_protection_rates();
        let best = decay_rate(&p, &b, &d).unwrap();
        assert!((r.epsilon - best).abs() < 1e-6, "{} vs {}", r.epsilon, best);
        assert!(r.certification.passed);
    }

    #[test]
    fn certificate_and_budget_bind() {
        let p = reciprocal_problem(ring(5), 0.3);
        let r = solve(&p, DEFAULT_TOL).unwrap();
        let c = &r.certification;
        assert!(c.passed, "{c:?}");
        assert!(c.epsilon_gap < 1e-6);
        assert!(c.budget_residual.abs() < 1e-6);
        assert!(c.min_perron_slack > -1e-6);
        assert_eq!(c, &certify(&r, &p, c.tol).unwrap());
    }

    #[test]
    fn perturbation_breaks_certificate() {
        let p = reciprocal_problem(ring(4), 0.3);
        let r = solve(&p, DEFAULT_TOL).unwrap();
        for e in 0..p.graph.edge_count() {
            for factor in [1.01, 0.99] {
                let mut beta = r.beta.clone();
                beta[e] *= factor;
                let c =
                    certify_rates(&p, &beta, &r.delta, &r.perron_u, r.lambda_hat, 1e-6).unwrap();
                assert!(!c.passed, "edge {e} factor {factor}");
            }
        }
    }

    #[test]
    fn certificate_is_scale_invariant() {
        let p = reciprocal_problem(ring(4), 0.3);
        let r = solve(&p, DEFAULT_TOL).unwrap();
        let scaled: Vec<f64> = r.perron_u.iter().map(|u| 7.5 * u).collect();
        let a = certify_rates(&p, &r.beta, &r.delta, &r.perron_u, r.lambda_hat, 1e-6).unwrap();
        let b = certify_rates(&p, &r.beta, &r.delta, &scaled, r.lambda_hat, 1e-6).unwrap();
        for (x, y) in a.perron_slack.iter().zip(&b.perron_slack) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn worst_case_optimum_spends_on_the_cycle() {
        let g = worst_case_graph(3, 6).unwrap();
        let p = workstation_problem(g, Parameterization::NodeLevel, 0.3, 3.0);
        let r = solve(&p, DEFAULT_TOL).unwrap();
        // uniform cycle rate with f(β) = 1/2
        let beta_c = 0.5 / 25.5;
        assert!(
            (r.epsilon - (0.3 - beta_c)).abs() < 1e-5,
            "ε* = {}",
            r.epsilon
        );
        let s_spend: f64 = r.spend.prevention[..3].iter().sum();
        assert!(s_spend < 1e-4, "S spend {s_spend}");
        assert!(r.certification.reducible);
        assert!(r.certification.passed, "{:?}", r.certification);
        assert!(r.certification.epsilon_gap < 1e-5);
    }

    #[test]
    fn budget_monotone_on_ring() {
        let base = reciprocal_problem(ring(6), 0.0);
        let max = base.max_cost();
        let mut last = f64::NEG_INFINITY;
        for k in 0..5 {
            let p = base.with_budget(max * k as f64 / 5.0).unwrap();
            let eps = solve(&p, DEFAULT_TOL).unwrap().epsilon;
            assert!(eps >= last - 1e-7);
            last = eps;
        }
    }

    #[test]
    fn problem_validation() {
        let g = ring(3);
        let cost = PreventionCost::new(
            PreventionFamily::Vaccine,
            RateBounds::new(0.1, 0.5).unwrap(),
        )
        .unwrap();
        let err = AllocationProblem::new(
            g.clone(),
            Parameterization::EdgeLevel,
            vec![cost.clone(); 3],
            Correction::Fixed(vec![0.3; 3]),
            1.0,
            1.0,
        );
        assert!(matches!(err, Err(AllocError::DimensionMismatch { .. })));
        let err = AllocationProblem::new(
            g,
            Parameterization::NodeLevel,
            vec![cost; 3],
            Correction::Fixed(vec![0.3, 1.2, 0.3]),
            1.0,
            1.0,
        );
        assert!(matches!(err, Err(AllocError::CapTooSmall { node: 1, .. })));
    }
}
