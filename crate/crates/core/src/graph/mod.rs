//! Sparse graphs with integer edge values.
//!
//! Node indices follow arrival order, which is also the order in which the
//! online fitters stream the nodes. Undirected graphs hold one logical edge
//! per unordered pair; the adjacency rows are mirrored so that `value(i, j)`
//! and `value(j, i)` agree. Directed graphs keep separate out- and in-rows.
//! Rows are sorted by neighbor index, which lets the fitters take the
//! "earlier neighbors" of a node as a row prefix.

mod generate;
mod io;

pub use generate::{grow_mixnet, sample_affiliation, sample_mixnet, PlantedPartition};
pub use io::{parse_edge_list, parse_edge_list_with_nodes, parse_node_list, GraphJson, ParseOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use rand::seq::SliceRandom;

/// Edge value domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Presence/absence; stored values are always 1.
    Binary,
    /// Non-negative counts; stored values are at least 1.
    Count,
}

/// One adjacency entry: `(neighbor, value)`.
pub type Link = (u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    kind: EdgeKind,
    self_loops: bool,
    names: Vec<String>,
    out: Vec<Vec<Link>>,
    // In-rows, only populated for directed graphs.
    inc: Vec<Vec<Link>>,
    loops: Vec<u32>,
    edges: usize,
}

impl Graph {
    /// Graph with `n` isolated nodes named `0..n`.
    pub fn empty(n: usize, kind: EdgeKind, directed: bool) -> Self {
        GraphBuilder::new(kind, directed).with_nodes(n).build()
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn kind(&self) -> EdgeKind {
        self.kind
    }

    pub fn allows_self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of logical edges (unordered pairs when undirected), self-loops included.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Sum of all logical edge values.
    pub fn total_mass(&self) -> u64 {
        let mut sum: u64 = self.loops.iter().map(|&v| v as u64).sum();
        for (i, row) in self.out.iter().enumerate() {
            for &(j, v) in row {
                if self.directed || (j as usize) > i {
                    sum += v as u64;
                }
            }
        }
        sum
    }

    /// `X_ij`, zero when absent.
    pub fn value(&self, i: usize, j: usize) -> u32 {
        if i == j {
            return self.loops.get(i).copied().unwrap_or(0);
        }
        let row = &self.out[i];
        match row.binary_search_by_key(&(j as u32), |&(k, _)| k) {
            Ok(pos) => row[pos].1,
            Err(_) => 0,
        }
    }

    pub fn self_loop(&self, i: usize) -> u32 {
        self.loops[i]
    }

    /// Out-row of `i` (all neighbors when undirected).
    pub fn out_links(&self, i: usize) -> &[Link] {
        &self.out[i]
    }

    /// In-row of `i`; equals [`Graph::out_links`] for undirected graphs.
    pub fn in_links(&self, i: usize) -> &[Link] {
        if self.directed {
            &self.inc[i]
        } else {
            &self.out[i]
        }
    }

    /// Out-links of `i` restricted to neighbors `< limit`.
    pub fn out_before(&self, i: usize, limit: usize) -> &[Link] {
        prefix_below(&self.out[i], limit)
    }

    /// In-links of `i` restricted to neighbors `< limit`.
    pub fn in_before(&self, i: usize, limit: usize) -> &[Link] {
        prefix_below(self.in_links(i), limit)
    }

    /// Degree counting each incident logical edge once (loops count once).
    pub fn degree(&self, i: usize) -> usize {
        let base = if self.directed {
            self.out[i].len() + self.inc[i].len()
        } else {
            self.out[i].len()
        };
        base + usize::from(self.loops[i] > 0)
    }

    /// Every logical edge as `(i, j, value)`; `i <= j` when undirected.
    pub fn edge_triples(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::with_capacity(self.edges);
        for i in 0..self.n() {
            if self.loops[i] > 0 {
                out.push((i, i, self.loops[i]));
            }
            for &(j, v) in &self.out[i] {
                let j = j as usize;
                if self.directed || j > i {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Induced subgraph on the first `m` nodes.
    pub fn prefix(&self, m: usize) -> Graph {
        let m = m.min(self.n());
        let cut = |rows: &[Vec<Link>]| -> Vec<Vec<Link>> {
            rows[..m].iter().map(|r| prefix_below(r, m).to_vec()).collect()
        };
        let out = cut(&self.out);
        let inc = if self.directed { cut(&self.inc) } else { Vec::new() };
        let loops = self.loops[..m].to_vec();
        let edges = count_edges(&out, &loops, self.directed);
        Graph {
            directed: self.directed,
            kind: self.kind,
            self_loops: self.self_loops,
            names: self.names[..m].to_vec(),
            out,
            inc,
            loops,
            edges,
        }
    }

    /// Relabels nodes so that new index `k` is old node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Graph> {
        let n = self.n();
        if order.len() != n {
            return Err(Error::dim(format!("order has {} entries, graph has {n} nodes", order.len())));
        }
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::param("order is not a permutation"));
            }
            inverse[old] = new;
        }
        let mut b = GraphBuilder::new(self.kind, self.directed).self_loops(self.self_loops);
        for &old in order {
            b.add_node(self.names[old].clone());
        }
        for (i, j, v) in self.edge_triples() {
            b.add_edge(inverse[i], inverse[j], v)?;
        }
        Ok(b.build())
    }

    /// Seeded random arrival order.
    pub fn shuffled(&self, seed: u64) -> Graph {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.shuffle(&mut rng::seeded(seed));
        self.permuted(&order).expect("shuffle yields a permutation")
    }

    /// Copy of the graph with one more node attached to existing nodes.
    ///
    /// `out` lists `(existing node, value)` links from the new node; `inc`
    /// lists links into it and must be empty for undirected graphs.
    pub fn extended(&self, out: &[(usize, u32)], inc: &[(usize, u32)]) -> Result<Graph> {
        let mut g = self.clone();
        g.push_node(None, out, inc)?;
        Ok(g)
    }

    /// Appends a node in place. Existing indices are unchanged.
    pub fn push_node(
        &mut self,
        name: Option<String>,
        out: &[(usize, u32)],
        inc: &[(usize, u32)],
    ) -> Result<usize> {
        let n = self.n();
        if !self.directed && !inc.is_empty() {
            return Err(Error::param("in-links given for an undirected graph"));
        }
        for &(j, v) in out.iter().chain(inc) {
            if j >= n {
                return Err(Error::NodeOutOfRange { node: j, n });
            }
            if v == 0 {
                return Err(Error::param("edge values must be at least 1"));
            }
        }
        let new = n as u32;
        let mut out_row = Vec::with_capacity(out.len());
        let mut in_row = Vec::with_capacity(inc.len());
        for (links, row) in [(out, &mut out_row), (inc, &mut in_row)] {
            for &(j, v) in links {
                row.push((j as u32, self.normalize(v)));
            }
            merge_row(row, self.kind);
        }
        for &(j, v) in &out_row {
            if self.directed {
                self.inc[j as usize].push((new, v));
            } else {
                self.out[j as usize].push((new, v));
            }
        }
        for &(j, v) in &in_row {
            self.out[j as usize].push((new, v));
        }
        self.edges += out_row.len() + in_row.len();
        self.out.push(out_row);
        if self.directed {
            self.inc.push(in_row);
        }
        self.loops.push(0);
        self.names.push(name.unwrap_or_else(|| n.to_string()));
        Ok(n)
    }

    fn normalize(&self, v: u32) -> u32 {
        match self.kind {
            EdgeKind::Binary => 1,
            EdgeKind::Count => v,
        }
    }

    /// Edge list text (`src<TAB>dst[<TAB>weight]`). Lines are grouped by the
    /// later endpoint so that first appearance reproduces node order for
    /// every node with an earlier neighbor; pair with [`Graph::to_node_list`]
    /// for a lossless round trip.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n() {
            let mut push = |a: usize, b: usize, v: u32| {
                s.push_str(&self.names[a]);
                s.push('\t');
                s.push_str(&self.names[b]);
                if self.kind == EdgeKind::Count {
                    s.push('\t');
                    s.push_str(&v.to_string());
                }
                s.push('\n');
            };
            if self.directed {
                let mut merged: Vec<(u32, bool, u32)> = Vec::new();
                merged.extend(self.out_before(i, i).iter().map(|&(j, v)| (j, true, v)));
                merged.extend(self.in_before(i, i).iter().map(|&(j, v)| (j, false, v)));
                merged.sort_unstable();
                for (j, outward, v) in merged {
                    if outward {
                        push(i, j as usize, v);
                    } else {
                        push(j as usize, i, v);
                    }
                }
            } else {
                for &(j, v) in self.out_before(i, i) {
                    push(j as usize, i, v);
                }
            }
            if self.loops[i] > 0 {
                push(i, i, self.loops[i]);
            }
        }
        s
    }

    /// Node names, one per line, in index order.
    pub fn to_node_list(&self) -> String {
        let mut s = String::new();
        for name in &self.names {
            s.push_str(name);
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n(),
            directed: self.directed,
            kind: self.kind,
            names: self.names.clone(),
            edges: self
                .edge_triples()
                .into_iter()
                .map(|(i, j, v)| [i, j, v as usize])
                .collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Graph> {
        if json.names.len() != json.n {
            return Err(Error::dim("names length differs from n"));
        }
        let has_loops = json.edges.iter().any(|e| e[0] == e[1]);
        let mut b = GraphBuilder::new(json.kind, json.directed).self_loops(has_loops);
        for name in &json.names {
            b.add_node(name.clone());
        }
        for e in &json.edges {
            let v = u32::try_from(e[2]).map_err(|_| Error::param("edge value overflows u32"))?;
            b.add_edge(e[0], e[1], v)?;
        }
        Ok(b.build())
    }
}

fn prefix_below(row: &[Link], limit: usize) -> &[Link] {
    let cut = row.partition_point(|&(j, _)| (j as usize) < limit);
    &row[..cut]
}

fn merge_row(row: &mut Vec<Link>, kind: EdgeKind) {
    row.sort_unstable_by_key(|&(j, _)| j);
    row.dedup_by(|later, kept| {
        if later.0 == kept.0 {
            if kind == EdgeKind::Count {
                kept.1 += later.1;
            }
            true
        } else {
            false
        }
    });
}

fn count_edges(out: &[Vec<Link>], loops: &[u32], directed: bool) -> usize {
    let adj: usize = out.iter().map(Vec::len).sum();
    let pairs = if directed { adj } else { adj / 2 };
    pairs + loops.iter().filter(|&&v| v > 0).count()
}

/// Incremental construction with duplicate merging: binary duplicates
/// collapse to one edge, count duplicates add up.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    kind: EdgeKind,
    directed: bool,
    self_loops: bool,
    names: Vec<String>,
    index: std::collections::HashMap<String, usize>,
    out: Vec<Vec<Link>>,
    inc: Vec<Vec<Link>>,
    loops: Vec<u32>,
}

impl GraphBuilder {
    pub fn new(kind: EdgeKind, directed: bool) -> Self {
        GraphBuilder {
            kind,
            directed,
            self_loops: false,
            names: Vec::new(),
            index: Default::default(),
            out: Vec::new(),
            inc: Vec::new(),
            loops: Vec::new(),
        }
    }

    /// Keep self-loop edges instead of dropping them.
    pub fn self_loops(mut self, allow: bool) -> Self {
        self.self_loops = allow;
        self
    }

    /// Adds `n` nodes named by their index.
    pub fn with_nodes(mut self, n: usize) -> Self {
        for _ in 0..n {
            let name = self.names.len().to_string();
            self.add_node(name);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Index of `name`, registering it on first sight.
    pub fn add_node(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        self.out.push(Vec::new());
        if self.directed {
            self.inc.push(Vec::new());
        }
        self.loops.push(0);
        i
    }

    pub fn add_edge(&mut self, i: usize, j: usize, value: u32) -> Result<()> {
        let n = self.names.len();
        for node in [i, j] {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
        }
        if value == 0 {
            return Err(Error::param("edge values must be at least 1"));
        }
        let v = match self.kind {
            EdgeKind::Binary => 1,
            EdgeKind::Count => value,
        };
        if i == j {
            if self.self_loops {
                self.loops[i] = match self.kind {
                    EdgeKind::Binary => 1,
                    EdgeKind::Count => self.loops[i] + v,
                };
            }
            return Ok(());
        }
        if self.directed {
            self.out[i].push((j as u32, v));
            self.inc[j].push((i as u32, v));
        } else {
            self.out[i].push((j as u32, v));
            self.out[j].push((i as u32, v));
        }
        Ok(())
    }

    pub fn build(self) -> Graph {
        let GraphBuilder { kind, directed, self_loops, names, mut out, mut inc, loops, .. } = self;
        for row in out.iter_mut().chain(inc.iter_mut()) {
            merge_row(row, kind);
        }
        let edges = count_edges(&out, &loops, directed);
        Graph { directed, kind, self_loops, names, out, inc, loops, edges }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Graph {
        parse_edge_list("a b\nb c", &ParseOptions::default()).unwrap()
    }

    #[test]
    fn undirected_queries_are_symmetric() {
        let g = chain();
        assert_eq!(g.value(0, 1), 1);
        assert_eq!(g.value(1, 0), 1);
        assert_eq!(g.value(0, 2), 0);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn extend_two_node_graph() {
        let g = Graph::empty(2, EdgeKind::Binary, false);
        let g = g.extended(&[(0, 1)], &[]).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.value(2, 0), 1);
        assert_eq!(g.value(0, 2), 1);
    }

    #[test]
    fn extend_rejects_unknown_node() {
        let g = Graph::empty(2, EdgeKind::Binary, false);
        assert!(matches!(
            g.extended(&[(2, 1)], &[]),
            Err(Error::NodeOutOfRange { node: 2, n: 2 })
        ));
    }

    #[test]
    fn directed_extend_keeps_direction() {
        let g = Graph::empty(2, EdgeKind::Count, true);
        let g = g.extended(&[(0, 3)], &[(1, 2)]).unwrap();
        assert_eq!(g.value(2, 0), 3);
        assert_eq!(g.value(0, 2), 0);
        assert_eq!(g.value(1, 2), 2);
        assert_eq!(g.in_links(0), &[(2, 3)]);
    }

    #[test]
    fn prefix_drops_later_edges() {
        let g = chain();
        let p = g.prefix(2);
        assert_eq!(p.n(), 2);
        assert_eq!(p.edge_count(), 1);
        assert_eq!(p.out_links(1), &[(0, 1)]);
    }

    #[test]
    fn permutation_moves_edges() {
        let g = chain();
        let p = g.permuted(&[2, 1, 0]).unwrap();
        assert_eq!(p.names(), &["c", "b", "a"]);
        assert_eq!(p.value(0, 1), 1);
        assert_eq!(p.value(0, 2), 0);
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = parse_edge_list("a b 2\nb c 1\nc a 4", &ParseOptions::count().directed(true)).unwrap();
        let back = Graph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn total_mass_counts_each_edge_once() {
        let g = parse_edge_list("a b 3\nb c 1", &ParseOptions::count()).unwrap();
        assert_eq!(g.total_mass(), 4);
    }
}
