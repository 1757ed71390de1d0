//! Mean-field SEIV model with a vigilant compartment.
//!
//! State is node-major: entry `4i + k` holds compartment `k ∈ [S, E, I, V]`
//! of node `i`. Node `i` is exposed at rate
//! `S_i Σ_j a_ij (β^E_i E_j + β^I_i I_j)`.

use super::meanfield::rk4_integrate;
use super::{DynamicsError, Trajectory};
use crate::graph::{
    dense_spectral_abscissa, metzler_abscissa, Digraph, SparseMatrix, SpectralOptions,
};

/// Largest node count for which stability uses a dense eigensolver.
pub const DENSE_LIMIT: usize = 200;

const RANGE_SLACK: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GseivParams {
    adjacency: SparseMatrix,
    pub beta_e: Vec<f64>,
    pub beta_i: Vec<f64>,
    pub delta: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl GseivParams {
    /// `β^E, β^I, θ ≥ 0`; `δ, ε, γ > 0`. With `θ = 0` the vigilance factor
    /// `γ / (θ + γ)` is 1.
    pub fn new(
        g: &Digraph,
        beta_e: Vec<f64>,
        beta_i: Vec<f64>,
        delta: Vec<f64>,
        epsilon: Vec<f64>,
        theta: Vec<f64>,
        gamma: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        let n = g.node_count();
        let arrays: [(&'static str, &Vec<f64>, bool); 6] = [
            ("beta_e", &beta_e, false),
            ("beta_i", &beta_i, false),
            ("delta", &delta, true),
            ("epsilon", &epsilon, true),
            ("theta", &theta, false),
            ("gamma", &gamma, true),
        ];
        for (what, values, strict) in arrays {
            if values.len() != n {
                return Err(DynamicsError::DimensionMismatch {
                    expected: n,
                    got: values.len(),
                });
            }
            for &v in values {
                let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
                if !ok {
                    return Err(DynamicsError::InvalidRate { what, value: v });
                }
            }
        }
        Ok(Self {
            adjacency: g.adjacency_matrix(),
            beta_e,
            beta_i,
            delta,
            epsilon,
            theta,
            gamma,
        })
    }

    /// Same rates at every node.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        g: &Digraph,
        beta_e: f64,
        beta_i: f64,
        delta: f64,
        epsilon: f64,
        theta: f64,
        gamma: f64,
    ) -> Result<Self, DynamicsError> {
        let n = g.node_count();
        Self::new(
            g,
            vec![beta_e; n],
            vec![beta_i; n],
            vec![delta; n],
            vec![epsilon; n],
            vec![theta; n],
            vec![gamma; n],
        )
    }

    pub fn node_count(&self) -> usize {
        self.delta.len()
    }

    /// `T_i = γ_i / (θ_i + γ_i)`.
    pub fn vigilance_factor(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .zip(&self.theta)
            .map(|(g, t)| g / (t + g))
            .collect()
    }

    /// Linearization at the disease-free state, ordered `[E; I]`:
    /// `Q = [[T B^E A − E, T B^I A], [E, −D]]`.
    pub fn q_matrix(&self) -> SparseMatrix {
        let n = self.node_count();
        let t = self.vigilance_factor();
        let mut rows = vec![Vec::new(); 2 * n];
        for i in 0..n {
            let row = &mut rows[i];
            let mut diag = -self.epsilon[i];
            for &(j, a) in self.adjacency.row(i) {
                let ve = t[i] * self.beta_e[i] * a;
                let vi = t[i] * self.beta_i[i] * a;
                if j == i {
                    diag += ve;
                } else if ve != 0.0 {
                    row.push((j, ve));
                }
                if vi != 0.0 {
                    row.push((n + j, vi));
                }
            }
            row.push((i, diag));
            rows[n + i] = vec![(i, self.epsilon[i]), (n + i, -self.delta[i])];
        }
        SparseMatrix::from_rows(2 * n, rows)
    }
}

/// RK4 solution of the G-SEIV mean-field equations. Compartments are not
/// clamped, so per-node sums are preserved exactly up to rounding.
pub fn gseiv_meanfield(
    params: &GseivParams,
    state0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<Trajectory, DynamicsError> {
    let n = params.node_count();
    if state0.len() != 4 * n {
        return Err(DynamicsError::DimensionMismatch {
            expected: 4 * n,
            got: state0.len(),
        });
    }
    if let Some((index, &value)) = state0
        .iter()
        .enumerate()
        .find(|(_, &v)| !(0.0..=1.0).contains(&v))
    {
        return Err(DynamicsError::InvalidInitialState { index, value });
    }
    for node in 0..n {
        let sum: f64 = state0[4 * node..4 * node + 4].iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(DynamicsError::NotNormalized { node, sum });
        }
    }
    let p = params;
    let rhs = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let (s, e, inf, v) = (x[4 * i], x[4 * i + 1], x[4 * i + 2], x[4 * i + 3]);
            let mut pressure = 0.0;
            for &(j, a) in p.adjacency.row(i) {
                pressure += a * (p.beta_e[i] * x[4 * j + 1] + p.beta_i[i] * x[4 * j + 2]);
            }
            let exposure = s * pressure;
            out[4 * i] = p.gamma[i] * v - p.theta[i] * s - exposure;
            out[4 * i + 1] = exposure - p.epsilon[i] * e;
            out[4 * i + 2] = p.epsilon[i] * e - p.delta[i] * inf;
            out[4 * i + 3] = p.delta[i] * inf + p.theta[i] * s - p.gamma[i] * v;
        }
    };
    let check = |t: f64, x: &mut [f64]| match x
        .iter()
        .find(|&&v| !(v >= -RANGE_SLACK && v <= 1.0 + RANGE_SLACK))
    {
        Some(&value) => Err(DynamicsError::StepTooLarge { step, t, value }),
        None => Ok(()),
    };
    rk4_integrate(state0.to_vec(), t_end, step, rhs, check)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GseivStability {
    pub stable: bool,
    pub abscissa: f64,
}

/// Stable iff the spectral abscissa of [`GseivParams::q_matrix`] is below
/// `-tol`.
pub fn gseiv_is_stable(params: &GseivParams, tol: f64) -> Result<GseivStability, DynamicsError> {
    let q = params.q_matrix();
    let abscissa = if params.node_count() <= DENSE_LIMIT {
        dense_spectral_abscissa(&q.to_dense())?
    } else {
        metzler_abscissa(&q, &SpectralOptions::default())?.value
    };
    Ok(GseivStability {
        stable: abscissa < -tol,
        abscissa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{stability_margin, SpreadingParams};
    use crate::graph::Edge;
    use nalgebra::DMatrix;

    fn dense_q(params: &GseivParams) -> DMatrix<f64> {
        params.q_matrix().to_dense()
    }

    fn ring(n: usize) -> Digraph {
        Digraph::from_edges(
            n,
            (0..n).flat_map(|i| [(i, (i + 1) % n, 1.0), ((i + 1) % n, i, 0.5)]),
        )
        .unwrap()
    }

    #[test]
    fn compartments_sum_to_one() {
        let g = ring(5);
        let p = GseivParams::new(
            &g,
            vec![0.3, 0.2, 0.5, 0.1, 0.4],
            vec![0.6, 0.9, 0.2, 0.7, 0.3],
            vec![0.2, 0.3, 0.25, 0.4, 0.1],
            vec![0.5, 1.0, 0.7, 0.3, 0.9],
            vec![0.05, 0.1, 0.0, 0.2, 0.15],
            vec![0.1, 0.2, 0.3, 0.05, 0.1],
        )
        .unwrap();
        let mut x0 = Vec::new();
        for i in 0..5 {
            let e = 0.1 * i as f64;
            x0.extend([0.9 - e, e, 0.1, 0.0]);
        }
        let traj = gseiv_meanfield(&p, &x0, 50.0, 0.01).unwrap();
        for row in &traj.values {
            for i in 0..5 {
                let s: f64 = row[4 * i..4 * i + 4].iter().sum();
                assert!((s - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn two_compartment_closed_form() {
        let g = Digraph::from_edges::<Edge, _>(2, []).unwrap();
        let (eps, delta) = ([0.7, 0.4], [0.2, 1.3]);
        let p = GseivParams::new(
            &g,
            vec![0.0; 2],
            vec![0.0; 2],
            delta.to_vec(),
            eps.to_vec(),
            vec![0.1; 2],
            vec![0.1; 2],
        )
        .unwrap();
        let x0 = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let traj = gseiv_meanfield(&p, &x0, 5.0, 1e-3).unwrap();
        let (t, last) = traj.last().unwrap();
        for i in 0..2 {
            let e = (-eps[i] * t).exp();
            let inf = eps[i] / (delta[i] - eps[i]) * (e - (-delta[i] * t).exp());
            assert!((last[4 * i + 1] - e).abs() < 1e-6);
            assert!((last[4 * i + 2] - inf).abs() < 1e-6);
        }
    }

    #[test]
    fn vigilance_balance() {
        let g = Digraph::from_edges::<Edge, _>(1, []).unwrap();
        let p = GseivParams::uniform(&g, 0.5, 0.5, 0.3, 0.4, 0.8, 0.8).unwrap();
        let traj = gseiv_meanfield(&p, &[0.0, 0.0, 0.0, 1.0], 30.0, 0.01).unwrap();
        let (_, x) = traj.last().unwrap();
        assert!((x[0] - 0.5).abs() < 1e-8 && (x[3] - 0.5).abs() < 1e-8);
        assert_eq!((x[1], x[2]), (0.0, 0.0));
    }

    #[test]
    fn zero_transmission_abscissa() {
        let g = ring(4);
        let p = GseivParams::new(
            &g,
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.3, 0.5, 0.2, 0.9],
            vec![0.6, 0.25, 0.7, 0.4],
            vec![0.1; 4],
            vec![0.1; 4],
        )
        .unwrap();
        let s = gseiv_is_stable(&p, 1e-9).unwrap();
        assert!(s.stable);
        assert!((s.abscissa + 0.2).abs() < 1e-10);
    }

    #[test]
    fn strong_vigilance_stabilizes_self_loop() {
        let g = Digraph::from_edges(1, [(0, 0, 1.0)]).unwrap();
        let weak = GseivParams::uniform(&g, 2.0, 2.0, 0.3, 0.5, 0.0, 1.0).unwrap();
        assert!(!gseiv_is_stable(&weak, 1e-9).unwrap().stable);
        let strong = GseivParams::uniform(&g, 2.0, 2.0, 0.3, 0.5, 1e6, 1.0).unwrap();
        let s = gseiv_is_stable(&strong, 1e-9).unwrap();
        assert!(s.stable);
        assert!((s.abscissa + 0.3).abs() < 1e-4);
    }

    #[test]
    fn sparse_path_matches_dense() {
        let g = ring(6);
        let p = GseivParams::uniform(&g, 0.2, 0.4, 0.5, 0.8, 0.3, 0.6).unwrap();
        let dense = dense_spectral_abscissa(&dense_q(&p)).unwrap();
        let sparse = metzler_abscissa(&p.q_matrix(), &SpectralOptions::default())
            .unwrap()
            .value;
        assert!((dense - sparse).abs() < 1e-9);
    }

    #[test]
    fn sis_limit_boundary() {
        // Fast latency, no vigilance: the boundary in β matches the SIS one.
        let g = ring(5);
        let delta = 0.3;
        let boundary = |stable: &dyn Fn(f64) -> bool| {
            let (mut lo, mut hi) = (0.0, 10.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if stable(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let sis = boundary(&|b| {
            stability_margin(&SpreadingParams::uniform(&g, b, delta).unwrap()).unwrap() > 0.0
        });
        let seiv = boundary(&|b| {
            let p = GseivParams::uniform(&g, 0.0, b, delta, 1e3, 0.0, 1e3).unwrap();
            gseiv_is_stable(&p, 0.0).unwrap().stable
        });
        assert!((seiv - sis).abs() / sis < 0.02, "sis {sis} seiv {seiv}");
    }

    #[test]
    fn rejects_unnormalized_state() {
        let g = Digraph::from_edges::<Edge, _>(1, []).unwrap();
        let p = GseivParams::uniform(&g, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1).unwrap();
        assert!(matches!(
            gseiv_meanfield(&p, &[0.5, 0.0, 0.0, 0.0], 1.0, 0.1),
            Err(DynamicsError::NotNormalized { .. })
        ));
        assert!(GseivParams::uniform(&g, 0.1, 0.1, 0.0, 0.1, 0.1, 0.1).is_err());
    }
}
