//! Weighted directed graphs and the spectral primitives built on them.
//!
//! Adjacency follows the in-edge convention used throughout the crate:
//! `a_ij` is the weight of the edge `j -> i`, so row `i` collects the
//! in-edges of node `i`.

mod io;
mod pagerank;
mod sparse;
mod spectral;

pub use io::{parse_edge_list, read_edge_list, write_edge_list, EdgeListError};
pub use pagerank::{pagerank, PageRankMode};
pub use sparse::SparseMatrix;
pub use spectral::{
    dense_eigenvalues, dense_spectral_abscissa, dominant_metzler_eigenvalue, metzler_abscissa,
    spectral_radius, SpectralError, SpectralOptions, SpectralResult,
};

use std::collections::HashMap;
use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge #{index} ({src} -> {dst}) references a node outside 0..{node_count}")]
    NodeOutOfRange {
        index: usize,
        src: usize,
        dst: usize,
        node_count: usize,
    },
    #[error("edge #{index} ({src} -> {dst}) has nonpositive weight {weight}")]
    NonPositiveWeight {
        index: usize,
        src: usize,
        dst: usize,
        weight: f64,
    },
    #[error("duplicate edge {src} -> {dst} at positions #{first} and #{second}")]
    DuplicateEdge {
        src: usize,
        dst: usize,
        first: usize,
        second: usize,
    },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        Self { src, dst, weight }
    }
}

impl From<(usize, usize, f64)> for Edge {
    fn from((src, dst, weight): (usize, usize, f64)) -> Self {
        Self { src, dst, weight }
    }
}

/// Immutable weighted digraph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    node_count: usize,
    edges: Vec<Edge>,
    /// `in_edges[i]` holds `(j, edge index)` for every edge `j -> i`.
    in_edges: Vec<Vec<(usize, usize)>>,
    out_edges: Vec<Vec<(usize, usize)>>,
    labels: Option<Vec<String>>,
}

impl Digraph {
    /// Builds a digraph, rejecting duplicate edges, bad indices and
    /// nonpositive (or non-finite) weights.
    pub fn from_edges<E, I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        E: Into<Edge>,
        I: IntoIterator<Item = E>,
    {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let edges: Vec<Edge> = edges.into_iter().map(Into::into).collect();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
        let mut in_edges = vec![Vec::new(); node_count];
        let mut out_edges = vec![Vec::new(); node_count];
        for (index, e) in edges.iter().enumerate() {
            if e.src >= node_count || e.dst >= node_count {
                return Err(GraphError::NodeOutOfRange {
                    index,
                    src: e.src,
                    dst: e.dst,
                    node_count,
                });
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(GraphError::NonPositiveWeight {
                    index,
                    src: e.src,
                    dst: e.dst,
                    weight: e.weight,
                });
            }
            if let Some(&first) = seen.get(&(e.src, e.dst)) {
                return Err(GraphError::DuplicateEdge {
                    src: e.src,
                    dst: e.dst,
                    first,
                    second: index,
                });
            }
            seen.insert((e.src, e.dst), index);
            in_edges[e.dst].push((e.src, index));
            out_edges[e.src].push((e.dst, index));
        }
        Ok(Self {
            node_count,
            edges,
            in_edges,
            out_edges,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, GraphError> {
        if labels.len() != self.node_count {
            return Err(GraphError::LabelCount {
                expected: self.node_count,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// In-neighbours of `i` as `(j, edge index)` pairs.
    pub fn in_edges(&self, i: usize) -> &[(usize, usize)] {
        &self.in_edges[i]
    }

    /// Out-neighbours of `j` as `(i, edge index)` pairs.
    pub fn out_edges(&self, j: usize) -> &[(usize, usize)] {
        &self.out_edges[j]
    }

    /// `a_ij`, the weight of the edge `j -> i` (zero if absent).
    pub fn adjacency(&self, i: usize, j: usize) -> f64 {
        self.in_edges[i]
            .iter()
            .find(|&&(src, _)| src == j)
            .map_or(0.0, |&(_, e)| self.edges[e].weight)
    }

    /// The adjacency matrix as a sparse row-per-destination matrix.
    pub fn adjacency_matrix(&self) -> SparseMatrix {
        self.weighted_matrix(|e| self.edges[e].weight)
    }

    /// A matrix with the sparsity pattern of the adjacency, with the entry
    /// for edge index `e` given by `value(e)`.
    pub fn weighted_matrix(&self, value: impl Fn(usize) -> f64) -> SparseMatrix {
        let rows = self
            .in_edges
            .iter()
            .map(|row| row.iter().map(|&(j, e)| (j, value(e))).collect())
            .collect();
        SparseMatrix::from_rows(self.node_count, rows)
    }

    /// Weighted `(in_degree, out_degree)` per node.
    pub fn weighted_degrees(&self) -> (Vec<f64>, Vec<f64>) {
        let mut deg_in = vec![0.0; self.node_count];
        let mut deg_out = vec![0.0; self.node_count];
        for e in &self.edges {
            deg_in[e.dst] += e.weight;
            deg_out[e.src] += e.weight;
        }
        (deg_in, deg_out)
    }

    /// True iff every node reaches every other node. A single node is
    /// strongly connected (vacuously).
    pub fn is_strongly_connected(&self) -> bool {
        let reach = |adj: &Vec<Vec<(usize, usize)>>| {
            let mut seen = vec![false; self.node_count];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
            count == self.node_count
        };
        reach(&self.out_edges) && reach(&self.in_edges)
    }

    /// Same nodes, every edge reversed.
    pub fn reversed(&self) -> Digraph {
        let edges = self.edges.iter().map(|e| Edge::new(e.dst, e.src, e.weight));
        let mut g =
            Digraph::from_edges(self.node_count, edges).expect("reversal preserves validity");
        g.labels = self.labels.clone();
        g
    }
}
