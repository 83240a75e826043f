//! Sufficient statistics `(N, H, G)` and their one-node recursion.
//!
//! For an assignment (hard labels or a row-stochastic `τ`):
//!
//! * `N_q = Σ_i τ_iq`
//! * `H_ql = Σ_{(i,j) ∈ P} τ_iq τ_jl h(x_ij)`
//! * `G_ql = Σ_{(i,j) ∈ P} τ_iq τ_jl`
//!
//! where `P` is the pair set. Directed graphs use ordered pairs `i ≠ j`.
//! Undirected graphs use unordered pairs `i < j`; the matrices are kept
//! symmetric and an off-diagonal cell `(q, l)` holds the whole mass between
//! the two classes, so `H_ql = Σ_{i<j} (τ_iq τ_jl + τ_il τ_jq) h(x_ij)`.
//! With [`PairConvention::WithDiagonal`] the pairs `(i, i)` are included
//! too, which turns `G` into `N_q N_l` (directed) and carries self-loop
//! values into `H`.
//!
//! Adding node `n+1` with row `r` and neighbor masses
//! `m_l = Σ_{j≤n} τ_jl h(x_{n+1,j})` (out) and `m'_q = Σ_{i≤n} τ_iq h(x_{i,n+1})` (in):
//!
//! * directed: `ξ_ql = r_q m_l + r_l m'_q`, `ζ_ql = r_q N_l + r_l N_q`
//! * undirected: `ξ_ql = r_q m_l + r_l m_q` and `ζ_ql = r_q N_l + r_l N_q`
//!   for `q ≠ l`; `ξ_qq = r_q m_q`, `ζ_qq = r_q N_q`
//!
//! plus `r_q·[q = l]` in `ζ` and `r_q·[q = l]·h(x_{n+1,n+1})` in `ξ` when the
//! diagonal is included. Each step costs `O(deg·Q + Q²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Link};

/// Which pairs enter the sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairConvention {
    /// Includes the `(i, i)` pair, giving `G_ql = N_q N_l` for directed graphs.
    #[serde(rename = "with-diagonal")]
    WithDiagonal,
    /// Only distinct pairs: `G_ql = N_q N_l − δ_ql N_q` in exact mode.
    #[default]
    #[serde(rename = "exact-pairs")]
    Distinct,
}

impl PairConvention {
    pub fn includes_diagonal(self) -> bool {
        matches!(self, PairConvention::WithDiagonal)
    }

    /// Convention actually used on `g`: graphs carrying self-loops always
    /// include the diagonal.
    pub fn effective(self, g: &Graph) -> Self {
        if g.allows_self_loops() {
            PairConvention::WithDiagonal
        } else {
            self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsMode {
    Exact,
    Expected,
}

/// Anything that yields one class-membership row per node.
pub trait Assignment {
    fn len(&self) -> usize;
    fn q(&self) -> usize;
    /// `acc += w · row_i`
    fn add_weighted(&self, i: usize, w: f64, acc: &mut [f64]);
    fn write_row(&self, i: usize, out: &mut [f64]);
    fn mode(&self) -> StatsMode;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hard labels in `0..q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    z: Vec<usize>,
    q: usize,
}

impl Labels {
    pub fn new(z: Vec<usize>, q: usize) -> Result<Self> {
        if let Some(&bad) = z.iter().find(|&&c| c >= q) {
            return Err(Error::param(format!("label {bad} >= q = {q}")));
        }
        Ok(Labels { z, q })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.z
    }

    pub fn get(&self, i: usize) -> usize {
        self.z[i]
    }

    pub(crate) fn set(&mut self, i: usize, c: usize) {
        self.z[i] = c;
    }

    pub fn push(&mut self, c: usize) {
        assert!(c < self.q, "label out of range");
        self.z.push(c);
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.z
    }
}

impl Assignment for Labels {
    fn len(&self) -> usize {
        self.z.len()
    }
    fn q(&self) -> usize {
        self.q
    }
    #[inline]
    fn add_weighted(&self, i: usize, w: f64, acc: &mut [f64]) {
        acc[self.z[i]] += w;
    }
    fn write_row(&self, i: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.z[i]] = 1.0;
    }
    fn mode(&self) -> StatsMode {
        StatsMode::Exact
    }
}

/// Row-stochastic soft assignment, `n × q`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tau {
    q: usize,
    data: Vec<f64>,
}

impl Tau {
    pub fn with_capacity(q: usize, n: usize) -> Self {
        Tau { q, data: Vec::with_capacity(n * q) }
    }

    pub fn uniform(n: usize, q: usize) -> Self {
        Tau { q, data: vec![1.0 / q as f64; n * q] }
    }

    pub fn one_hot(labels: &[usize], q: usize) -> Self {
        let mut t = Tau { q, data: vec![0.0; labels.len() * q] };
        for (i, &z) in labels.iter().enumerate() {
            t.data[i * q + z] = 1.0;
        }
        t
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        let mut t = Tau::with_capacity(q, rows.len());
        for r in rows {
            if r.len() != q {
                return Err(Error::dim("ragged tau rows"));
            }
            t.data.extend_from_slice(r);
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        if self.q == 0 {
            0
        } else {
            self.data.len() / self.q
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.q);
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.q)
    }

    /// Hard labels by row argmax; ties go to the lowest class.
    pub fn argmax(&self) -> Vec<usize> {
        self.rows().map(argmax).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

impl Assignment for Tau {
    fn len(&self) -> usize {
        self.n()
    }
    fn q(&self) -> usize {
        self.q
    }
    #[inline]
    fn add_weighted(&self, i: usize, w: f64, acc: &mut [f64]) {
        for (a, &t) in acc.iter_mut().zip(self.row(i)) {
            *a += w * t;
        }
    }
    fn write_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
    fn mode(&self) -> StatsMode {
        StatsMode::Expected
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// `acc_l += Σ_{(j, x) ∈ links} τ_jl h(x)`.
#[inline]
pub(crate) fn accumulate_mass<A: Assignment + ?Sized>(links: &[Link], assign: &A, acc: &mut [f64]) {
    for &(j, x) in links {
        assign.add_weighted(j as usize, x as f64, acc);
    }
}

/// Out- and (directed only) in-masses of node `i` over neighbors `< limit`.
pub(crate) fn neighbor_masses<A: Assignment + ?Sized>(
    g: &Graph,
    i: usize,
    limit: usize,
    assign: &A,
    out_mass: &mut [f64],
    in_mass: &mut [f64],
) {
    out_mass.fill(0.0);
    in_mass.fill(0.0);
    accumulate_mass(g.out_before(i, limit), assign, out_mass);
    if g.is_directed() {
        accumulate_mass(g.in_before(i, limit), assign, in_mass);
    }
}

/// The contribution `(r, ξ, ζ)` of one arriving node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeIncrement {
    pub row: Vec<f64>,
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuffStats {
    q: usize,
    directed: bool,
    convention: PairConvention,
    mode: StatsMode,
    n: usize,
    counts: Vec<f64>,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl SuffStats {
    pub fn empty(q: usize, directed: bool, convention: PairConvention, mode: StatsMode) -> Self {
        SuffStats {
            q,
            directed,
            convention,
            mode,
            n: 0,
            counts: vec![0.0; q],
            h: vec![0.0; q * q],
            g: vec![0.0; q * q],
        }
    }

    /// Full summation over all nodes of `g`; the assignment must cover them exactly.
    pub fn from_assignment<A: Assignment + ?Sized>(g: &Graph, assign: &A, convention: PairConvention) -> Result<Self> {
        if assign.len() != g.n() {
            return Err(Error::dim(format!("assignment covers {} nodes, graph has {}", assign.len(), g.n())));
        }
        Ok(Self::over_prefix(g, assign, assign.len(), convention))
    }

    /// Full summation restricted to the first `m` nodes.
    pub(crate) fn over_prefix<A: Assignment + ?Sized>(g: &Graph, assign: &A, m: usize, convention: PairConvention) -> Self {
        let q = assign.q();
        let directed = g.is_directed();
        let diag = convention.includes_diagonal();
        let mut s = SuffStats::empty(q, directed, convention, assign.mode());
        s.n = m;
        let mut row = vec![0.0; q];
        let mut mass = vec![0.0; q];
        let mut cross = vec![0.0; q * q];
        let mut t = vec![0.0; q * q];
        for i in 0..m {
            assign.write_row(i, &mut row);
            mass.fill(0.0);
            accumulate_mass(g.out_before(i, m), assign, &mut mass);
            for a in 0..q {
                s.counts[a] += row[a];
                if row[a] == 0.0 {
                    continue;
                }
                for b in 0..q {
                    t[a * q + b] += row[a] * mass[b];
                    cross[a * q + b] += row[a] * row[b];
                }
            }
            if diag {
                let x = g.self_loop(i) as f64;
                for a in 0..q {
                    s.h[a * q + a] += row[a] * x;
                }
            }
        }
        for a in 0..q {
            for b in 0..q {
                let c = a * q + b;
                let pairs = s.counts[a] * s.counts[b] - cross[c];
                if directed {
                    s.h[c] += t[c];
                    s.g[c] = pairs;
                } else if a == b {
                    s.h[c] += t[c] / 2.0;
                    s.g[c] = pairs / 2.0;
                } else {
                    s.h[c] += t[c];
                    s.g[c] = pairs;
                }
                if diag && a == b {
                    s.g[c] += s.counts[a];
                }
            }
        }
        s
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> StatsMode {
        self.mode
    }

    pub fn convention(&self) -> PairConvention {
        self.convention
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// `(ξ, ζ)` for a node with row `row` and the given neighbor masses.
    pub fn node_increment(&self, row: &[f64], out_mass: &[f64], in_mass: &[f64], loop_value: f64) -> NodeIncrement {
        let q = self.q;
        let diag = self.convention.includes_diagonal();
        let mut xi = vec![0.0; q * q];
        let mut zeta = vec![0.0; q * q];
        let n = &self.counts;
        for a in 0..q {
            for b in 0..q {
                let c = a * q + b;
                if self.directed {
                    xi[c] = row[a] * out_mass[b] + row[b] * in_mass[a];
                    zeta[c] = row[a] * n[b] + row[b] * n[a];
                } else if a == b {
                    xi[c] = row[a] * out_mass[a];
                    zeta[c] = row[a] * n[a];
                } else {
                    xi[c] = row[a] * out_mass[b] + row[b] * out_mass[a];
                    zeta[c] = row[a] * n[b] + row[b] * n[a];
                }
                if diag && a == b {
                    xi[c] += row[a] * loop_value;
                    zeta[c] += row[a];
                }
            }
        }
        NodeIncrement { row: row.to_vec(), xi, zeta }
    }

    /// Adds a node increment: `T ← T + (r, ξ, ζ)`.
    pub fn apply(&mut self, inc: &NodeIncrement) {
        for (c, r) in self.counts.iter_mut().zip(&inc.row) {
            *c += r;
        }
        for (h, x) in self.h.iter_mut().zip(&inc.xi) {
            *h += x;
        }
        for (g, z) in self.g.iter_mut().zip(&inc.zeta) {
            *g += z;
        }
        self.n += 1;
    }

    fn increment_from<A: Assignment + ?Sized>(&mut self, g: &Graph, history: &A, row: &[f64]) -> Result<NodeIncrement> {
        let node = self.n;
        if node >= g.n() {
            return Err(Error::NodeOutOfRange { node, n: g.n() });
        }
        if history.len() < node {
            return Err(Error::dim(format!("history holds {} rows, need {node}", history.len())));
        }
        if row.len() != self.q {
            return Err(Error::dim("row length differs from q"));
        }
        let q = self.q;
        let mut out_mass = vec![0.0; q];
        let mut in_mass = vec![0.0; q];
        neighbor_masses(g, node, node, history, &mut out_mass, &mut in_mass);
        let inc = self.node_increment(row, &out_mass, &in_mass, g.self_loop(node) as f64);
        self.apply(&inc);
        Ok(inc)
    }

    /// Exact-mode step: node `self.n()` of `g` joins class `label`.
    pub fn increment(&mut self, g: &Graph, history: &Labels, label: usize) -> Result<NodeIncrement> {
        if label >= self.q {
            return Err(Error::param(format!("label {label} >= q = {}", self.q)));
        }
        let mut row = vec![0.0; self.q];
        row[label] = 1.0;
        self.increment_from(g, history, &row)
    }

    /// Expected-mode step with soft row `tau_row`.
    pub fn expected_increment<A: Assignment + ?Sized>(&mut self, g: &Graph, history: &A, tau_row: &[f64]) -> Result<NodeIncrement> {
        let sum: f64 = tau_row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || tau_row.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::param(format!("tau row is not a distribution (sum {sum})")));
        }
        self.increment_from(g, history, tau_row)
    }

    /// Largest absolute cellwise difference, for tests and diagnostics.
    pub fn max_abs_diff(&self, other: &SuffStats) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        d(&self.counts, &other.counts).max(d(&self.h, &other.h)).max(d(&self.g, &other.g))
    }

    /// Same statistics, compared ignoring the mode tag.
    pub fn same_values(&self, other: &SuffStats) -> bool {
        self.n == other.n && self.counts == other.counts && self.h == other.h && self.g == other.g
    }
}

/// Convenience wrapper matching the batch definition.
pub fn stats_from_scratch<A: Assignment + ?Sized>(g: &Graph, assign: &A, convention: PairConvention) -> Result<SuffStats> {
    SuffStats::from_assignment(g, assign, convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{parse_edge_list, EdgeKind, ParseOptions};

    fn directed_pair() -> Graph {
        // node 0 -> node 1
        parse_edge_list("a b", &ParseOptions::default().directed(true)).unwrap()
    }

    #[test]
    fn two_node_hand_enumeration() {
        let g = directed_pair();
        let labels = Labels::new(vec![0, 1], 2).unwrap();
        let s = stats_from_scratch(&g, &labels, PairConvention::WithDiagonal).unwrap();
        assert_eq!(s.counts(), &[1.0, 1.0]);
        assert_eq!(s.h()[1] + s.h()[2], 1.0);
        assert_eq!(s.g(), &[1.0, 1.0, 1.0, 1.0]);
        let s = stats_from_scratch(&g, &labels, PairConvention::Distinct).unwrap();
        assert_eq!(s.g(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn uniform_tau_spreads_counts() {
        let g = parse_edge_list("a b\nb c\nc d", &ParseOptions::default()).unwrap();
        let s = stats_from_scratch(&g, &Tau::uniform(4, 2), PairConvention::Distinct).unwrap();
        assert_eq!(s.counts(), &[2.0, 2.0]);
    }

    #[test]
    fn one_class_collapse() {
        let g = parse_edge_list("a b 2\nb c 1\nc a 4", &ParseOptions::count().directed(true)).unwrap();
        let labels = Labels::new(vec![0; 3], 1).unwrap();
        let s = stats_from_scratch(&g, &labels, PairConvention::WithDiagonal).unwrap();
        assert_eq!(s.h(), &[7.0]);
        assert_eq!(s.g(), &[9.0]);
    }

    #[test]
    fn three_node_directed_increment() {
        // nodes 1, 2 with labels (0, 1); node 3 in class 0 links to node 1 only
        let mut b = crate::graph::GraphBuilder::new(EdgeKind::Binary, true);
        for name in ["a", "b", "c"] {
            b.add_node(name.into());
        }
        b.add_edge(2, 0, 1).unwrap();
        let g = b.build();
        let history = Labels::new(vec![0, 1], 2).unwrap();
        let mut s = SuffStats::over_prefix(&g, &history, 2, PairConvention::WithDiagonal);
        assert_eq!(s.g()[0], 1.0);
        let inc = s.increment(&g, &history, 0).unwrap();
        assert_eq!(inc.zeta[0], 3.0);
        assert_eq!(inc.xi[0], 1.0);
        assert_eq!(s.g()[0], 4.0);
        let full = Labels::new(vec![0, 1, 0], 2).unwrap();
        let scratch = stats_from_scratch(&g, &full, PairConvention::WithDiagonal).unwrap();
        assert!(s.same_values(&scratch));
    }

    #[test]
    fn isolated_node_changes_only_pair_counts() {
        let g = Graph::empty(3, EdgeKind::Binary, false);
        let history = Labels::new(vec![0, 1], 2).unwrap();
        let mut s = SuffStats::over_prefix(&g, &history, 2, PairConvention::Distinct);
        let inc = s.increment(&g, &history, 1).unwrap();
        assert!(inc.xi.iter().all(|&x| x == 0.0));
        assert_eq!(inc.zeta, vec![0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn degenerate_soft_rows_match_exact() {
        let g = parse_edge_list("a b\nb c\na c\nc d", &ParseOptions::default()).unwrap();
        let z = vec![0, 1, 1, 0];
        let labels = Labels::new(z.clone(), 2).unwrap();
        let tau = Tau::one_hot(&z, 2);
        for conv in [PairConvention::Distinct, PairConvention::WithDiagonal] {
            let mut exact = SuffStats::empty(2, false, conv, StatsMode::Exact);
            let mut soft = SuffStats::empty(2, false, conv, StatsMode::Expected);
            for (i, &c) in z.iter().enumerate() {
                exact.increment(&g, &labels, c).unwrap();
                soft.expected_increment(&g, &tau, tau.row(i)).unwrap();
            }
            assert!(exact.same_values(&soft));
        }
    }

    #[test]
    fn half_half_row_without_edges() {
        let g = Graph::empty(1, EdgeKind::Binary, false);
        let mut s = SuffStats::empty(2, false, PairConvention::Distinct, StatsMode::Expected);
        s.expected_increment(&g, &Tau::uniform(0, 2), &[0.5, 0.5]).unwrap();
        assert_eq!(s.counts(), &[0.5, 0.5]);
    }

    #[test]
    fn increment_rejects_bad_rows() {
        let g = Graph::empty(2, EdgeKind::Binary, false);
        let mut s = SuffStats::empty(2, false, PairConvention::Distinct, StatsMode::Expected);
        let empty = Tau::uniform(0, 2);
        assert!(s.expected_increment(&g, &empty, &[0.7, 0.7]).is_err());
        assert!(s.expected_increment(&g, &empty, &[0.5]).is_err());
        assert!(s.increment(&g, &Labels::new(vec![], 2).unwrap(), 5).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = Graph::empty(3, EdgeKind::Binary, false);
        assert!(stats_from_scratch(&g, &Tau::uniform(2, 2), PairConvention::Distinct).is_err());
    }
}
