//! Spreading dynamics on a weighted digraph.
//!
//! [`SpreadingParams`] holds the edge propagation matrix `B = [β_ij]` (row
//! `i` lists the rates at which infected in-neighbours `j` infect `i`) and
//! the recovery rates `δ_i`.

mod export;
mod gseiv;
mod meanfield;
mod stochastic;

pub use export::{event_log_csv, params_hash, trajectory_csv, RunMetadata};
pub use gseiv::{gseiv_is_stable, gseiv_meanfield, GseivParams, GseivStability, DENSE_LIMIT};
pub use meanfield::{default_step, fit_decay_rate, meanfield_simulate, DecayFit};
pub use stochastic::{
    extinction_times, stochastic_simulate, stochastic_simulate_stream, StateChange, StochasticRun,
};

use thiserror::Error;

use crate::graph::{
    dominant_metzler_eigenvalue, Digraph, SparseMatrix, SpectralError, SpectralOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid rate {value} for {what}")]
    InvalidRate { what: &'static str, value: f64 },
    #[error("initial probability {value} at index {index} outside [0, 1]")]
    InvalidInitialState { index: usize, value: f64 },
    #[error("initial state of node {node} sums to {sum}, expected 1")]
    NotNormalized { node: usize, sum: f64 },
    #[error("step {step} too large: value {value} left [0, 1] at t = {t}")]
    StepTooLarge { step: f64, t: f64, value: f64 },
    #[error("step and horizon must be positive (step {step}, t_end {t_end})")]
    InvalidHorizon { step: f64, t_end: f64 },
    #[error("trajectory too short to fit a decay rate")]
    TooFewSamples,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingParams {
    beta: SparseMatrix,
    delta: Vec<f64>,
}

impl SpreadingParams {
    pub fn new(beta: SparseMatrix, delta: Vec<f64>) -> Result<Self, DynamicsError> {
        if delta.len() != beta.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: beta.dim(),
                got: delta.len(),
            });
        }
        for i in 0..beta.dim() {
            for &(_, v) in beta.row(i) {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(DynamicsError::InvalidRate {
                        what: "propagation rate",
                        value: v,
                    });
                }
            }
        }
        for &d in &delta {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(DynamicsError::InvalidRate {
                    what: "recovery rate",
                    value: d,
                });
            }
        }
        Ok(Self { beta, delta })
    }

    /// One rate per edge, in the graph's edge order.
    pub fn from_edge_rates(
        g: &Digraph,
        edge_rates: &[f64],
        delta: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        if edge_rates.len() != g.edge_count() {
            return Err(DynamicsError::DimensionMismatch {
                expected: g.edge_count(),
                got: edge_rates.len(),
            });
        }
        Self::new(g.weighted_matrix(|e| edge_rates[e]), delta)
    }

    /// `β_ij = β_i · a_ij`: each node scales all of its incoming edges.
    pub fn node_scaled(
        g: &Digraph,
        node_rates: &[f64],
        delta: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        if node_rates.len() != g.node_count() {
            return Err(DynamicsError::DimensionMismatch {
                expected: g.node_count(),
                got: node_rates.len(),
            });
        }
        Self::new(g.adjacency_matrix().scale_rows(node_rates), delta)
    }

    pub fn uniform(g: &Digraph, beta: f64, delta: f64) -> Result<Self, DynamicsError> {
        Self::new(
            g.adjacency_matrix().scaled(beta),
            vec![delta; g.node_count()],
        )
    }

    pub fn node_count(&self) -> usize {
        self.delta.len()
    }

    pub fn beta(&self) -> &SparseMatrix {
        &self.beta
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }
}

/// `ε(β, δ) = −λ₁(B − D)`; positive means the disease-free state is
/// exponentially stable.
pub fn stability_margin(params: &SpreadingParams) -> Result<f64, DynamicsError> {
    stability_margin_with(params, &SpectralOptions::default())
}

pub fn stability_margin_with(
    params: &SpreadingParams,
    opts: &SpectralOptions,
) -> Result<f64, DynamicsError> {
    let shift = params.delta.iter().fold(0.0_f64, |a, &d| a.max(d));
    let r = dominant_metzler_eigenvalue(&params.beta, &params.delta, shift, opts)?;
    Ok(-r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    MeanField,
    Stochastic,
}

/// Sampled time series, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.times.last()?, self.values.last()?.as_slice()))
    }

    /// Linear interpolation for mean-field runs, last value for stochastic
    /// (piecewise-constant) runs.
    pub fn at(&self, t: f64) -> Option<Vec<f64>> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return None;
        }
        let (t0, v0) = (self.times[k - 1], &self.values[k - 1]);
        if k == self.times.len() || self.kind == TrajectoryKind::Stochastic || t0 == t {
            return Some(v0.clone());
        }
        let (t1, v1) = (self.times[k], &self.values[k]);
        let w = (t - t0) / (t1 - t0);
        Some(v0.iter().zip(v1).map(|(a, b)| a + w * (b - a)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::dense_spectral_abscissa;

    fn cycle(m: usize) -> Digraph {
        Digraph::from_edges(m, (0..m).map(|i| (i, (i + 1) % m, 1.0))).unwrap()
    }

    #[test]
    fn margin_without_edges_is_min_recovery() {
        let g = Digraph::from_edges::<crate::graph::Edge, _>(3, []).unwrap();
        let p = SpreadingParams::uniform(&g, 0.4, 0.3).unwrap();
        assert!((stability_margin(&p).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn mixed_cycle_margin_is_geometric_mean() {
        let g = cycle(6);
        let rates = [0.01, 0.5, 0.01, 0.5, 0.01, 0.5];
        let p = SpreadingParams::node_scaled(&g, &rates, vec![0.3; 6]).unwrap();
        let expected = 0.3 - (0.01f64.powi(3) * 0.5f64.powi(3)).powf(1.0 / 6.0);
        let eps = stability_margin(&p).unwrap();
        assert!((eps - expected).abs() < 1e-10);
        assert!((eps - 0.2293).abs() < 1e-4);
        let mut dense = p.beta().to_dense();
        for i in 0..6 {
            dense[(i, i)] -= 0.3;
        }
        assert!((-dense_spectral_abscissa(&dense).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_params() {
        let g = cycle(3);
        assert!(SpreadingParams::uniform(&g, -0.1, 0.3).is_err());
        assert!(SpreadingParams::node_scaled(&g, &[0.1, 0.1], vec![0.3; 3]).is_err());
        assert!(SpreadingParams::from_edge_rates(&g, &[0.1; 3], vec![0.3; 2]).is_err());
    }

    #[test]
    fn interpolation() {
        let t = Trajectory {
            times: vec![0.0, 1.0],
            values: vec![vec![0.0], vec![1.0]],
            kind: TrajectoryKind::MeanField,
        };
        assert_eq!(t.at(0.25).unwrap(), vec![0.25]);
        assert_eq!(t.at(2.0).unwrap(), vec![1.0]);
        assert!(t.at(-1.0).is_none());
    }

    proptest::proptest! {
        #[test]
        fn margin_is_monotone_in_rates(
            rates in proptest::collection::vec(0.01f64..2.0, 5),
            delta in proptest::collection::vec(0.05f64..1.0, 5),
            k in 0usize..5,
            bump in 0.01f64..1.0,
        ) {
            let g = Digraph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (2, 3, 0.5), (3, 4, 1.0), (4, 2, 2.0)]).unwrap();
            let base = stability_margin(&SpreadingParams::node_scaled(&g, &rates, delta.clone()).unwrap()).unwrap();
            let mut more_beta = rates.clone();
            more_beta[k] += bump;
            let worse = stability_margin(&SpreadingParams::node_scaled(&g, &more_beta, delta.clone()).unwrap()).unwrap();
            proptest::prop_assert!(worse <= base + 1e-9);
            let mut more_delta = delta.clone();
            more_delta[k] += bump;
            let better = stability_margin(&SpreadingParams::node_scaled(&g, &rates, more_delta).unwrap()).unwrap();
            proptest::prop_assert!(better >= base - 1e-9);
        }
    }
}
