//! Cost-optimal allocation of preventive and corrective protection
//! resources against spreading processes on weighted directed networks.
//!
//! * [`graph`]: digraphs, Perron roots, PageRank.
//! * [`dynamics`]: networked SIS mean-field and stochastic simulation, G-SEIV.
//! * [`costs`]: posynomial cost families.
//! * [`allocate`]: the geometric program and its interior-point solver.
//! * [`heuristics`]: centrality-greedy strategies and the worst-case graph.

pub mod allocate;
pub mod costs;
pub mod dynamics;
pub mod graph;
pub mod heuristics;

pub use allocate::{
    certify, solve, AllocError, AllocationProblem, AllocationResult, CertificationReport,
    Correction, Parameterization,
};
pub use costs::{CorrectionCost, CorrectionFamily, PreventionCost, PreventionFamily, RateBounds};
pub use dynamics::{DynamicsError, GseivParams, SpreadingParams, Trajectory};
pub use graph::{Digraph, Edge, GraphError, PageRankMode, SparseMatrix, SpectralResult};
pub use heuristics::{Centrality, EfficiencyReport, GreedyStrategy, HeuristicsError};
