use serde::{Deserialize, Serialize};

use super::Digraph;

/// Direction of the PageRank random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PageRankMode {
    /// The walker steps from a node to its in-neighbours (up the edges),
    /// so mass accumulates at nodes with large out-reach.
    Forward,
    /// The walker follows edges from source to destination; this is
    /// `r = (I − α A diag(1/deg_out))⁻¹ 1`.
    Reverse,
    /// The walker may traverse an edge in either direction.
    Symmetrized,
}

/// Normalised PageRank vector (entries ≥ 0, summing to one).
///
/// Nodes with no outgoing walk step (dangling in the chosen mode) jump
/// uniformly to all nodes.
///
/// # Panics
///
/// Panics if `alpha` is not in `(0, 1)`.
pub fn pagerank(g: &Digraph, alpha: f64, mode: PageRankMode) -> Vec<f64> {
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "alpha must lie in (0, 1), got {alpha}"
    );
    let n = g.node_count();

    // (from, to, weight) steps of the walk before normalisation.
    let steps: Vec<(usize, usize, f64)> = match mode {
        PageRankMode::Reverse => g.edges().iter().map(|e| (e.src, e.dst, e.weight)).collect(),
        PageRankMode::Forward => g.edges().iter().map(|e| (e.dst, e.src, e.weight)).collect(),
        PageRankMode::Symmetrized => g
            .edges()
            .iter()
            .flat_map(|e| [(e.src, e.dst, e.weight), (e.dst, e.src, e.weight)])
            .collect(),
    };
    let mut out_weight = vec![0.0; n];
    for &(from, _, w) in &steps {
        out_weight[from] += w;
    }
    let transitions: Vec<(usize, usize, f64)> = steps
        .into_iter()
        .map(|(from, to, w)| (from, to, w / out_weight[from]))
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&i| out_weight[i] == 0.0).collect();

    // r = 1 + α P r is a contraction with modulus α in the 1-norm.
    let mut r = vec![1.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..10_000 {
        let dangling_mass: f64 = dangling.iter().map(|&i| r[i]).sum::<f64>() / n as f64;
        next.iter_mut()
            .for_each(|x| *x = 1.0 + alpha * dangling_mass);
        for &(from, to, p) in &transitions {
            next[to] += alpha * p * r[from];
        }
        let change = r
            .iter()
            .zip(&next)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        std::mem::swap(&mut r, &mut next);
        let scale = r.iter().fold(0.0_f64, |a, &x| a.max(x));
        if change <= 1e-15 * scale {
            break;
        }
    }
    let total: f64 = r.iter().sum();
    r.iter().map(|x| x / total).collect()
}
