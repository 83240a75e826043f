//! Edge-list and node-list text formats, plus the graph JSON export.
//!
//! Edge lists hold one `src dst [weight]` record per line, separated by tabs
//! or spaces. Lines starting with `#` and blank lines are skipped. Node
//! identifiers are arbitrary tokens; a node's index is its order of first
//! appearance.

use serde::{Deserialize, Serialize};

use super::{EdgeKind, Graph, GraphBuilder};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseOptions {
    pub kind: EdgeKind,
    pub directed: bool,
    pub self_loops: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { kind: EdgeKind::Binary, directed: false, self_loops: false }
    }
}

impl ParseOptions {
    pub fn count() -> Self {
        ParseOptions { kind: EdgeKind::Count, ..Default::default() }
    }

    pub fn kind(mut self, kind: EdgeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn directed(mut self, directed: bool) -> Self {
        self.directed = directed;
        self
    }

    pub fn self_loops(mut self, allow: bool) -> Self {
        self.self_loops = allow;
        self
    }
}

/// `{n, directed, kind, names, edges: [[i, j, v], ...]}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub directed: bool,
    pub kind: EdgeKind,
    pub names: Vec<String>,
    pub edges: Vec<[usize; 3]>,
}

pub fn parse_edge_list(text: &str, opts: &ParseOptions) -> Result<Graph> {
    parse_edge_list_with_nodes(text, &[], opts)
}

/// Parses an edge list after registering `nodes` (e.g. from a node-list
/// sidecar) in the given order. Nodes listed there but absent from the edge
/// list become isolated nodes.
pub fn parse_edge_list_with_nodes(text: &str, nodes: &[String], opts: &ParseOptions) -> Result<Graph> {
    let mut b = GraphBuilder::new(opts.kind, opts.directed).self_loops(opts.self_loops);
    for name in nodes {
        b.add_node(name.clone());
    }
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let weight = match fields.len() {
            2 => 1,
            3 => parse_weight(fields[2], line)?,
            k => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 2 or 3 fields, found {k}"),
                })
            }
        };
        let i = b.add_node(fields[0].to_string());
        let j = b.add_node(fields[1].to_string());
        b.add_edge(i, j, weight)?;
    }
    Ok(b.build())
}

fn parse_weight(token: &str, line: usize) -> Result<u32> {
    let w: u32 = token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("weight {token:?} is not a non-negative integer"),
    })?;
    if w < 1 {
        return Err(Error::Parse { line, msg: "weight must be at least 1".into() });
    }
    Ok(w)
}

/// One node name per line; blank lines and `#` comments skipped.
pub fn parse_node_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_chain() {
        let g = parse_edge_list("a b\nb c", &ParseOptions::default()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.names(), &["a", "b", "c"]);
    }

    #[test]
    fn binary_duplicates_collapse() {
        let g = parse_edge_list("a b\na b", &ParseOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.value(0, 1), 1);
        // reversed duplicate in an undirected graph is the same pair
        let g = parse_edge_list("a b\nb a", &ParseOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn count_duplicates_sum() {
        let g = parse_edge_list("a b 3\na b 2", &ParseOptions::count()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.value(0, 1), 5);
        assert_eq!(g.value(1, 0), 5);
    }

    #[test]
    fn comments_tabs_and_blank_lines() {
        let g = parse_edge_list("# header\n\nx\ty\n  y   z  \n", &ParseOptions::default()).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn self_loops_dropped_unless_enabled() {
        let text = "a a\na b";
        let g = parse_edge_list(text, &ParseOptions::default()).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.value(0, 0), 0);
        let g = parse_edge_list(text, &ParseOptions::default().self_loops(true)).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.value(0, 0), 1);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let opts = ParseOptions::count();
        let err = parse_edge_list("a b\na b c d", &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_edge_list("a b 1.5", &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_edge_list("# c\na b 0", &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_edge_list("lonely", &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn sidecar_declares_isolated_nodes() {
        let nodes = parse_node_list("z\na\nb\n");
        let g = parse_edge_list_with_nodes("a b", &nodes, &ParseOptions::default()).unwrap();
        assert_eq!(g.names(), &["z", "a", "b"]);
        assert_eq!(g.degree(0), 0);
        assert_eq!(g.value(1, 2), 1);
    }

    #[test]
    fn directed_pairs_are_ordered() {
        let g = parse_edge_list("a b\nb a\na b", &ParseOptions::default().directed(true)).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.value(0, 1), 1);
        assert_eq!(g.value(1, 0), 1);
    }
}
