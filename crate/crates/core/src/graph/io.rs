//! Edge-list text format: one `src,dst,weight` triple per line, 0-based
//! node indices, `#` starts a comment. A `# nodes=N` comment fixes the node
//! count (otherwise it is one past the largest index seen), so graphs with
//! trailing isolated nodes survive a write/read round trip.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Digraph, Edge, GraphError};

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("reading {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("edge list contains no nodes")]
    Empty,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn parse_edge_list(text: &str) -> Result<Digraph, EdgeListError> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (content, comment) = match raw.find('#') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(v) = c.trim().strip_prefix("nodes=") {
                let n = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| EdgeListError::Syntax {
                        line,
                        message: format!("bad node count '{}': {e}", v.trim()),
                    })?;
                declared = Some(n);
            }
        }
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(EdgeListError::Syntax {
                line,
                message: format!("expected 'src,dst,weight', found {} fields", fields.len()),
            });
        }
        let index = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|e| EdgeListError::Syntax {
                line,
                message: format!("bad {what} index '{s}': {e}"),
            })
        };
        let src = index(fields[0], "source")?;
        let dst = index(fields[1], "destination")?;
        let weight = fields[2]
            .parse::<f64>()
            .map_err(|e| EdgeListError::Syntax {
                line,
                message: format!("bad weight '{}': {e}", fields[2]),
            })?;
        edges.push(Edge::new(src, dst, weight));
    }
    let inferred = edges
        .iter()
        .map(|e| e.src.max(e.dst) + 1)
        .max()
        .unwrap_or(0);
    let n = declared.unwrap_or(inferred);
    if n == 0 {
        return Err(EdgeListError::Empty);
    }
    Ok(Digraph::from_edges(n, edges)?)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Digraph, EdgeListError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EdgeListError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_edge_list(&text)
}

/// Serialises with shortest round-trip float formatting.
pub fn write_edge_list(g: &Digraph) -> String {
    let mut out = String::new();
    writeln!(out, "# nodes={}", g.node_count()).unwrap();
    writeln!(out, "# src,dst,weight").unwrap();
    for e in g.edges() {
        writeln!(out, "{},{},{:?}", e.src, e.dst, e.weight).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let g = parse_edge_list("# a graph\n0, 1, 2.5  # trailing\n\n1,2,1e-3\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.adjacency(1, 0), 2.5);
        assert_eq!(g.adjacency(2, 1), 1e-3);
    }

    #[test]
    fn declared_node_count_keeps_isolated_nodes() {
        let g = parse_edge_list("# nodes=5\n0,1,1\n").unwrap();
        assert_eq!(g.node_count(), 5);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        match parse_edge_list("0,1,1\n0,2\n") {
            Err(EdgeListError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_edge_list("0,1,abc"),
            Err(EdgeListError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_list("# nothing"),
            Err(EdgeListError::Empty)
        ));
        assert!(matches!(
            parse_edge_list("0,1,1\n0,1,2"),
            Err(EdgeListError::Graph(GraphError::DuplicateEdge { .. }))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            read_edge_list("/nonexistent/graph.csv"),
            Err(EdgeListError::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            n in 1usize..12,
            raw in prop::collection::vec((0usize..12, 0usize..12, 1e-6f64..1e3), 0..40),
        ) {
            let mut seen = std::collections::HashSet::new();
            let edges: Vec<_> = raw
                .into_iter()
                .filter(|&(s, d, _)| s < n && d < n && seen.insert((s, d)))
                .collect();
            let g = Digraph::from_edges(n, edges).unwrap();
            prop_assert_eq!(parse_edge_list(&write_edge_list(&g)).unwrap(), g);
        }
    }
}
