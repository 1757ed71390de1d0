use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SpreadingParams, StochasticRun, Trajectory};

/// `t,node_0,...,node_{n-1}`, one row per sample. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.values.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",node_{i}");
    }
    out.push('\n');
    for (t, row) in traj.times.iter().zip(&traj.values) {
        let _ = write!(out, "{t:?}");
        for v in row {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

/// `t,node,new_state`, one row per transition.
pub fn event_log_csv(run: &StochasticRun) -> String {
    let mut out = String::from("t,node,new_state\n");
    for e in &run.events {
        let _ = writeln!(out, "{:?},{},{}", e.t, e.node, e.new_state);
    }
    out
}

/// SHA-256 over the exact bit patterns of `B` (row by row) and `δ`.
pub fn params_hash(params: &SpreadingParams) -> String {
    let mut h = Sha256::new();
    h.update((params.node_count() as u64).to_le_bytes());
    for i in 0..params.node_count() {
        for &(j, v) in params.beta().row(i) {
            h.update((i as u64).to_le_bytes());
            h.update((j as u64).to_le_bytes());
            h.update(v.to_bits().to_le_bytes());
        }
    }
    for d in params.delta() {
        h.update(d.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// JSON sidecar written next to every exported run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub kind: String,
    pub params_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

impl RunMetadata {
    pub fn new(kind: &str, params_hash: String) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.to_string(),
            params_hash,
            seed: None,
            step: None,
            t_end: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }
}
