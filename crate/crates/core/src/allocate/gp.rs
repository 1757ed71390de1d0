//! Geometric programs in standard form and the budget-constrained
//! allocation GP.

use serde::Serialize;

use super::{AllocError, AllocationProblem, Correction, Parameterization};

/// `coeff · Π_k x_k^{a_k}` with `coeff > 0`. Exponents are kept sorted by
/// variable index with zeros removed, so equal monomials compare equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: f64,
    pub exps: Vec<(usize, f64)>,
}

impl Monomial {
    pub fn constant(coeff: f64) -> Self {
        Self {
            coeff,
            exps: Vec::new(),
        }
    }

    pub fn var(index: usize) -> Self {
        Self::new(1.0, [(index, 1.0)])
    }

    pub fn new(coeff: f64, exps: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut exps: Vec<(usize, f64)> = exps.into_iter().collect();
        exps.sort_by_key(|&(k, _)| k);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(exps.len());
        for (k, a) in exps {
            match merged.last_mut() {
                Some((last, acc)) if *last == k => *acc += a,
                _ => merged.push((k, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        Self {
            coeff,
            exps: merged,
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::new(
            self.coeff * other.coeff,
            self.exps.iter().chain(&other.exps).copied(),
        )
    }

    pub fn inv(&self) -> Monomial {
        Monomial {
            coeff: 1.0 / self.coeff,
            exps: self.exps.iter().map(|&(k, a)| (k, -a)).collect(),
        }
    }

    pub fn pow(&self, p: f64) -> Monomial {
        Monomial::new(
            self.coeff.powf(p),
            self.exps.iter().map(|&(k, a)| (k, a * p)),
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .fold(self.coeff, |acc, &(k, a)| acc * x[k].powf(a))
    }
}

/// Sum of monomials.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Posynomial {
    pub terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn push(&mut self, m: Monomial) {
        self.terms.push(m);
    }

    /// Merges terms with identical exponents, summing their coefficients.
    pub fn collapse(&self) -> Posynomial {
        let mut out: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match out.iter_mut().find(|m| m.exps == t.exps) {
                Some(m) => m.coeff += t.coeff,
                None => out.push(t.clone()),
            }
        }
        Posynomial { terms: out }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Posynomial {
        Posynomial {
            terms: self.terms.iter().map(|t| t.mul(m)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }
}

/// What a GP variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum Variable {
    LambdaHat,
    /// Edge or node propagation rate, depending on the parameterization.
    Beta(usize),
    DeltaHat(usize),
    U(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum ConstraintKind {
    Eigen(usize),
    Budget,
    BetaUpper(usize),
    BetaLower(usize),
    DeltaHatUpper(usize),
    DeltaHatLower(usize),
    Other,
}

/// `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpConstraint {
    pub kind: ConstraintKind,
    pub lhs: Posynomial,
    pub rhs: Monomial,
}

impl GpConstraint {
    /// `lhs / rhs ≤ 1`, with equal-exponent terms merged.
    pub fn standard(&self) -> Posynomial {
        self.lhs.mul_monomial(&self.rhs.inv()).collapse()
    }
}

/// Minimize a monomial subject to posynomial inequalities and monomial
/// equalities `m(x) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpForm {
    pub vars: Vec<Variable>,
    pub objective: Monomial,
    pub inequalities: Vec<GpConstraint>,
    pub equalities: Vec<Monomial>,
}

impl GpForm {
    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, v: Variable) -> Option<usize> {
        self.vars.iter().position(|&w| w == v)
    }

    /// Largest standard-form constraint value minus one, and largest
    /// equality deviation, at `x`.
    pub fn residuals(&self, x: &[f64]) -> (f64, f64) {
        let ineq = self
            .inequalities
            .iter()
            .map(|c| c.standard().eval(x) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let eq = self
            .equalities
            .iter()
            .map(|m| (m.eval(x) - 1.0).abs())
            .fold(0.0, f64::max);
        (ineq, eq)
    }
}

/// Where each rate of the allocation problem lives in the GP: a variable
/// index, or a frozen value when its bounds coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Slot {
    Var(usize),
    Fixed(f64),
}

impl Slot {
    pub(crate) fn monomial(self) -> Monomial {
        match self {
            Slot::Var(k) => Monomial::var(k),
            Slot::Fixed(v) => Monomial::constant(v),
        }
    }

    pub(crate) fn value(self, x: &[f64]) -> f64 {
        match self {
            Slot::Var(k) => x[k],
            Slot::Fixed(v) => v,
        }
    }
}

/// The allocation GP plus the bookkeeping to map solutions back.
#[derive(Debug, Clone)]
pub(crate) struct AllocationGp {
    pub gp: GpForm,
    pub beta: Vec<Slot>,
    pub delta_hat: Vec<Slot>,
    pub u: Vec<usize>,
    /// Node whose `u` is pinned to 1.
    pub anchor: usize,
}

/// Builds the GP with `u` anchored at node 0. See [`build_gp_anchored`].
pub fn build_gp(problem: &AllocationProblem) -> Result<GpForm, AllocError> {
    Ok(build_gp_anchored(problem, 0)?.gp)
}

/// Variables `λ̂`, free `β`, free `δ̂`, then `u_0..u_{n-1}`. Constraints:
/// one eigen-constraint `Σ_j β_ij u_j + δ̂_i u_i ≤ λ̂ u_i` per node, the
/// budget posynomial, and two box monomials per free rate. `u_anchor = 1`
/// is the only equality.
pub(crate) fn build_gp_anchored(
    problem: &AllocationProblem,
    anchor: usize,
) -> Result<AllocationGp, AllocError> {
    let g = &problem.graph;
    let n = g.node_count();
    let mut vars = vec![Variable::LambdaHat];

    let beta: Vec<Slot> = problem
        .prevention
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let b = c.bounds();
            if b.is_fixed() {
                Slot::Fixed(b.lo)
            } else {
                vars.push(Variable::Beta(k));
                Slot::Var(vars.len() - 1)
            }
        })
        .collect();

    let delta_hat: Vec<Slot> = match &problem.correction {
        Correction::Fixed(delta) => delta.iter().map(|d| Slot::Fixed(problem.cap - d)).collect(),
        Correction::Resources(costs) => costs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let b = c.bounds();
                if b.is_fixed() {
                    Slot::Fixed(problem.cap - b.lo)
                } else {
                    vars.push(Variable::DeltaHat(i));
                    Slot::Var(vars.len() - 1)
                }
            })
            .collect(),
    };

    let u: Vec<usize> = (0..n)
        .map(|i| {
            vars.push(Variable::U(i));
            vars.len() - 1
        })
        .collect();

    let lambda = Monomial::var(0);
    let mut inequalities = Vec::new();

    for i in 0..n {
        let ui = Monomial::var(u[i]);
        let mut lhs = Posynomial::default();
        for &(j, e) in g.in_edges(i) {
            let rate = match problem.parameterization {
                Parameterization::EdgeLevel => beta[e].monomial(),
                Parameterization::NodeLevel => {
                    let w = g.edges()[e].weight;
                    let mut m = beta[i].monomial();
                    m.coeff *= w;
                    m
                }
            };
            lhs.push(rate.mul(&Monomial::var(u[j])));
        }
        lhs.push(delta_hat[i].monomial().mul(&ui));
        inequalities.push(GpConstraint {
            kind: ConstraintKind::Eigen(i),
            lhs,
            rhs: lambda.mul(&ui),
        });
    }

    let mut budget = Posynomial::default();
    let mut rhs = problem.budget;
    for (k, c) in problem.prevention.iter().enumerate() {
        let posy = c.posynomial();
        match beta[k] {
            Slot::Var(v) => {
                rhs += posy.offset;
                for (t, &(coeff, a)) in posy.terms.iter().enumerate() {
                    if !(coeff > 0.0) || !coeff.is_finite() || !a.is_finite() {
                        return Err(AllocError::NotPosynomial {
                            term: format!("prevention cost {k}, term {t}: {coeff}·β^{a}"),
                        });
                    }
                    budget.push(Monomial::new(coeff, [(v, a)]));
                }
            }
            Slot::Fixed(value) => rhs -= c.cost_unchecked(value),
        }
    }
    if let Correction::Resources(costs) = &problem.correction {
        for (i, c) in costs.iter().enumerate() {
            let posy = c.posynomial();
            match delta_hat[i] {
                Slot::Var(v) => {
                    rhs += posy.offset;
                    for (t, &(coeff, a)) in posy.terms.iter().enumerate() {
                        if !(coeff > 0.0) || !coeff.is_finite() || !a.is_finite() {
                            return Err(AllocError::NotPosynomial {
                                term: format!("correction cost {i}, term {t}: {coeff}·δ̂^{a}"),
                            });
                        }
                        budget.push(Monomial::new(coeff, [(v, a)]));
                    }
                }
                Slot::Fixed(value) => rhs -= c.cost_complementary_unchecked(value),
            }
        }
    }
    if !budget.terms.is_empty() {
        inequalities.push(GpConstraint {
            kind: ConstraintKind::Budget,
            lhs: budget,
            rhs: Monomial::constant(rhs),
        });
    }

    for (k, c) in problem.prevention.iter().enumerate() {
        if let Slot::Var(v) = beta[k] {
            let b = c.bounds();
            inequalities.push(GpConstraint {
                kind: ConstraintKind::BetaUpper(k),
                lhs: Posynomial::new(vec![Monomial::var(v)]),
                rhs: Monomial::constant(b.hi),
            });
            inequalities.push(GpConstraint {
                kind: ConstraintKind::BetaLower(k),
                lhs: Posynomial::new(vec![Monomial::constant(b.lo)]),
                rhs: Monomial::var(v),
            });
        }
    }
    if let Correction::Resources(costs) = &problem.correction {
        for (i, c) in costs.iter().enumerate() {
            if let Slot::Var(v) = delta_hat[i] {
                let b = c.bounds();
                inequalities.push(GpConstraint {
                    kind: ConstraintKind::DeltaHatUpper(i),
                    lhs: Posynomial::new(vec![Monomial::var(v)]),
                    rhs: Monomial::constant(problem.cap - b.lo),
                });
                inequalities.push(GpConstraint {
                    kind: ConstraintKind::DeltaHatLower(i),
                    lhs: Posynomial::new(vec![Monomial::constant(problem.cap - b.hi)]),
                    rhs: Monomial::var(v),
                });
            }
        }
    }

    Ok(AllocationGp {
        gp: GpForm {
            vars,
            objective: lambda,
            inequalities,
            equalities: vec![Monomial::var(u[anchor])],
        },
        beta,
        delta_hat,
        u,
        anchor,
    })
}
