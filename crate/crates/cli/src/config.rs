use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netshield_core::costs::CostError;
use netshield_core::graph::read_edge_list;
use netshield_core::heuristics::{randomized_worst_case_graph, worst_case_graph, ProtectionSetup};
use netshield_core::{
    AllocationProblem, Centrality, Correction, CorrectionCost, CorrectionFamily, Digraph,
    Parameterization, PreventionCost, PreventionFamily, RateBounds,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec<F> {
    #[serde(flatten)]
    pub family: F,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorstCaseSpec {
    pub n: usize,
    pub m: usize,
    pub reversed: bool,
    /// Edge probability of the randomized variant; absent means the regular
    /// construction.
    pub randomized: Option<f64>,
}

impl Default for WorstCaseSpec {
    fn default() -> Self {
        Self {
            n: 3,
            m: 6,
            reversed: false,
            randomized: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    /// Horizon; defaults to `20 / ε` for `simulate` and `200 / ε` for
    /// `gillespie` when the rates are stable, 100 otherwise.
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    /// Uniform initial infection probability (mean-field) or, if 1, the
    /// all-infected state (stochastic).
    pub p0: f64,
    pub trials: usize,
    /// Result JSON whose rates are simulated instead of solving first.
    pub rates: Option<PathBuf>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            t_end: None,
            step: None,
            p0: 1.0,
            trials: 1000,
            rates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicsSpec {
    pub alpha: f64,
    pub strategies: Vec<Centrality>,
    pub fractional_remainder: bool,
}

impl Default for HeuristicsSpec {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            strategies: vec![
                Centrality::OutDegree,
                Centrality::TotalDegree,
                Centrality::PagerankForward,
                Centrality::PagerankSymmetrized,
            ],
            fractional_remainder: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GseivSpec {
    pub beta_e: f64,
    pub beta_i: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub step: f64,
    /// Initial exposed and infected fractions at every node.
    pub e0: f64,
    pub i0: f64,
}

impl Default for GseivSpec {
    fn default() -> Self {
        Self {
            beta_e: 0.05,
            beta_i: 0.1,
            delta: 0.3,
            epsilon: 0.2,
            theta: 0.1,
            gamma: 0.1,
            t_end: 50.0,
            step: 0.01,
            e0: 0.0,
            i0: 0.1,
        }
    }
}

/// One run's full configuration. Read from JSON; flags override fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Edge-list CSV. Without it the worst-case graph is generated.
    pub graph: Option<PathBuf>,
    pub worstcase: WorstCaseSpec,
    pub parameterization: Parameterization,
    pub prevention: RateSpec<PreventionFamily>,
    /// Recovery resources. Absent means recovery fixed at `delta`.
    pub correction: Option<RateSpec<CorrectionFamily>>,
    pub delta: f64,
    /// `Δ`; defaults to `max(1, 2δ)` with fixed recovery, else to twice
    /// the upper recovery bound.
    pub cap: Option<f64>,
    pub budget: f64,
    pub tol: f64,
    pub seed: u64,
    pub simulate: SimulateSpec,
    pub heuristics: HeuristicsSpec,
    pub gseiv: GseivSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            graph: None,
            worstcase: WorstCaseSpec::default(),
            parameterization: Parameterization::NodeLevel,
            prevention: RateSpec {
                family: PreventionFamily::Workstation,
                lo: 0.01,
                hi: 0.5,
            },
            correction: None,
            delta: 0.3,
            cap: None,
            budget: 3.0,
            tol: 1e-7,
            seed: 0,
            simulate: SimulateSpec::default(),
            heuristics: HeuristicsSpec::default(),
            gseiv: GseivSpec::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config file; a relative `graph` path resolves against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.graph, &mut config.simulate.rates]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the effective configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn load_graph(&self) -> Result<Digraph> {
        if let Some(path) = &self.graph {
            return Ok(read_edge_list(path)?);
        }
        let w = &self.worstcase;
        let g = match w.randomized {
            Some(p) => randomized_worst_case_graph(w.n, w.m, p, self.seed)?,
            None => worst_case_graph(w.n, w.m)?,
        };
        Ok(if w.reversed { g.reversed() } else { g })
    }

    fn cap_value(&self) -> f64 {
        match (&self.cap, &self.correction) {
            (Some(c), _) => *c,
            (None, Some(spec)) => 2.0 * spec.hi,
            (None, None) => 1.0_f64.max(2.0 * self.delta),
        }
    }

    pub fn prevention_cost(&self) -> Result<PreventionCost, CostError> {
        PreventionCost::new(
            self.prevention.family.clone(),
            RateBounds::new(self.prevention.lo, self.prevention.hi)?,
        )
    }

    pub fn problem(&self, g: &Digraph) -> Result<AllocationProblem> {
        let cost = self.prevention_cost()?;
        let count = match self.parameterization {
            Parameterization::EdgeLevel => g.edge_count(),
            Parameterization::NodeLevel => g.node_count(),
        };
        let cap = self.cap_value();
        let correction = match &self.correction {
            None => Correction::Fixed(vec![self.delta; g.node_count()]),
            Some(spec) => {
                let c = CorrectionCost::new(
                    spec.family.clone(),
                    RateBounds::new(spec.lo, spec.hi)?,
                    cap,
                )?;
                Correction::Resources(vec![c; g.node_count()])
            }
        };
        Ok(AllocationProblem::new(
            g.clone(),
            self.parameterization,
            vec![cost; count],
            correction,
            cap,
            self.budget,
        )?)
    }

    /// Greedy comparisons need node-level rates and fixed recovery.
    pub fn protection_setup(&self, g: &Digraph) -> Result<ProtectionSetup> {
        if self.correction.is_some() {
            bail!("strategy comparison needs fixed recovery rates; remove `correction` from the config");
        }
        Ok(ProtectionSetup {
            graph: g.clone(),
            cost: self.prevention_cost()?,
            delta: self.delta,
            budget: self.budget,
            alpha: self.heuristics.alpha,
            cap: self.cap_value(),
        })
    }
}

/// `lo:hi:steps`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + h * k as f64
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(format!("expected lo:hi:steps, got `{s}`"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("sweep lower end: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("sweep upper end: {e}"))?;
        let steps: usize = steps.parse().map_err(|e| format!("sweep steps: {e}"))?;
        if steps == 0 || !(lo <= hi) || lo < 0.0 {
            return Err(format!("invalid sweep `{s}`"));
        }
        Ok(Sweep { lo, hi, steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let mut c = RunConfig::default();
        c.correction = Some(RateSpec {
            family: CorrectionFamily::Antidote,
            lo: 0.1,
            hi: 0.4,
        });
        c.prevention.family = PreventionFamily::Vaccine;
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"budget": 1.5, "seed": 9}"#).unwrap();
        assert_eq!(c.budget, 1.5);
        assert_eq!(c.delta, 0.3);
        assert!(serde_json::from_str::<RunConfig>(r#"{"budgt": 1}"#).is_err());
    }

    #[test]
    fn custom_family_parses() {
        let c: RunConfig = serde_json::from_str(
            r#"{"prevention": {"family": "custom-posynomial", "terms": [[1.0, -1.0]], "offset": 0.0, "lo": 0.1, "hi": 1.0}}"#,
        )
        .unwrap();
        assert!(matches!(
            c.prevention.family,
            PreventionFamily::CustomPosynomial(_)
        ));
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "0:3:4".parse().unwrap();
        assert_eq!(s.values(), vec![0.0, 1.0, 2.0, 3.0]);
        assert!("1:0:3".parse::<Sweep>().is_err());
        assert!("1:2".parse::<Sweep>().is_err());
    }
}
