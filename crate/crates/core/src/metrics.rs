//! Partition agreement, model selection and modularity.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{complete_log_likelihood_natural, ModelParams};
use crate::fit::{self, Algorithm, FitConfig, FitResult};
use crate::graph::{EdgeKind, Graph};

/// Cross-tabulation of two partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    /// Labels are arbitrary integers; they are compacted in order of first
    /// appearance.
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::dim(format!("partitions of length {} and {}", a.len(), b.len())));
        }
        let ia = compact(a);
        let ib = compact(b);
        let ra = ia.iter().max().map_or(0, |m| m + 1);
        let rb = ib.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0u64; rb]; ra];
        for (&x, &y) in ia.iter().zip(&ib) {
            counts[x][y] += 1;
        }
        let rows = counts.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..rb).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(ContingencyTable { counts, rows, cols, n: a.len() as u64 })
    }
}

fn compact(z: &[usize]) -> Vec<usize> {
    let mut ids = HashMap::new();
    z.iter()
        .map(|&v| {
            let next = ids.len();
            *ids.entry(v).or_insert(next)
        })
        .collect()
}

fn pairs(k: u64) -> f64 {
    let k = k as f64;
    k * (k - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(a, b)?;
    if t.n < 2 {
        return Err(Error::param("adjusted Rand index needs at least two items"));
    }
    let index: f64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sa: f64 = t.rows.iter().map(|&c| pairs(c)).sum();
    let sb: f64 = t.cols.iter().map(|&c| pairs(c)).sum();
    let expected = sa * sb / pairs(t.n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        // both partitions trivial in the same way
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Number of free connectivity parameters.
pub fn connectivity_params(q: usize, directed: bool) -> f64 {
    let q = q as f64;
    if directed {
        q * q
    } else {
        q * (q + 1.0) / 2.0
    }
}

/// `½·P·log(#pairs) + ((Q−1)/2)·log n`.
pub fn icl_penalty(q: usize, n: usize, directed: bool) -> f64 {
    let nf = n as f64;
    let pairs = if directed { nf * (nf - 1.0) } else { nf * (nf - 1.0) / 2.0 };
    0.5 * connectivity_params(q, directed) * pairs.max(1.0).ln() + (q as f64 - 1.0) / 2.0 * nf.max(1.0).ln()
}

pub fn icl_from_loglik(loglik: f64, q: usize, n: usize, directed: bool) -> f64 {
    loglik - icl_penalty(q, n, directed)
}

/// ICL of a fit on `g`: complete-data log-likelihood at the fit's hard
/// labels and parameters, minus the penalty.
pub fn icl(g: &Graph, fit: &FitResult) -> Result<f64> {
    let ll = complete_log_likelihood_natural(g, &fit.labels, &fit.params, fit.convention)?;
    Ok(icl_from_loglik(ll, fit.q(), g.n(), g.is_directed()))
}

/// Newman modularity `Σ_c (e_c/m − (d_c/2m)²)` over the undirected
/// (weighted) graph. Directed graphs are symmetrized first: binary edges by
/// union, counts by summing both directions. Self-loops are ignored.
pub fn modularity(g: &Graph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.n() {
        return Err(Error::dim(format!("{} labels for {} nodes", labels.len(), g.n())));
    }
    let mut weights: HashMap<(usize, usize), f64> = HashMap::new();
    for (i, j, v) in g.edge_triples() {
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        let w = weights.entry(key).or_insert(0.0);
        match g.kind() {
            EdgeKind::Binary => *w = 1.0,
            EdgeKind::Count => {
                if g.is_directed() {
                    *w += v as f64;
                } else {
                    *w = v as f64;
                }
            }
        }
    }
    let m: f64 = weights.values().sum();
    if m == 0.0 {
        return Err(Error::param("modularity is undefined without edges"));
    }
    let classes = labels.iter().max().map_or(0, |x| x + 1);
    let mut inside = vec![0.0; classes];
    let mut degree = vec![0.0; classes];
    for (&(i, j), &w) in &weights {
        degree[labels[i]] += w;
        degree[labels[j]] += w;
        if labels[i] == labels[j] {
            inside[labels[i]] += w;
        }
    }
    Ok(inside.iter().zip(&degree).map(|(e, d)| e / m - (d / (2.0 * m)).powi(2)).sum())
}

/// One row of an ICL scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectRow {
    pub q: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub loglik: f64,
    pub icl: f64,
}

/// Fits every `Q` in `qmin..=qmax` and returns the rows with the index of
/// the ICL maximizer (first on ties).
pub fn select_q(g: &Graph, qmin: usize, qmax: usize, algo: Algorithm, cfg: &FitConfig) -> Result<(Vec<SelectRow>, usize)> {
    if qmin < 1 || qmin > qmax || qmax > g.n() {
        return Err(Error::param(format!("need 1 <= qmin <= qmax <= n, got {qmin}..{qmax} with n = {}", g.n())));
    }
    let mut rows = Vec::with_capacity(qmax - qmin + 1);
    for q in qmin..=qmax {
        let r = fit::fit(g, q, algo, cfg)?;
        rows.push(SelectRow { q, j: r.j, loglik: r.loglik, icl: r.icl });
    }
    let mut best = 0;
    for (k, r) in rows.iter().enumerate() {
        if r.icl > rows[best].icl {
            best = k;
        }
    }
    Ok((rows, best))
}

/// Affiliation reduction of a fitted connectivity: `(λ̂, ε̂)` as the means
/// of the diagonal and off-diagonal entries.
pub fn affiliation_estimates(params: &ModelParams) -> (f64, f64) {
    let q = params.q();
    let mut diag = 0.0;
    let mut off = 0.0;
    for a in 0..q {
        for b in 0..q {
            if a == b {
                diag += params.psi(a, b);
            } else {
                off += params.psi(a, b);
            }
        }
    }
    let off = if q > 1 { off / (q * (q - 1)) as f64 } else { f64::NAN };
    (diag / q as f64, off)
}

/// Bias in percent (`100·mean(est − truth)/truth`) and root mean square
/// error for both affiliation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiasRmse {
    pub bias_eps: f64,
    pub bias_lambda: f64,
    pub rmse_eps: f64,
    pub rmse_lambda: f64,
}

pub fn bias_rmse(fits: &[ModelParams], lambda: f64, eps: f64) -> Result<BiasRmse> {
    if fits.is_empty() {
        return Err(Error::param("no fits to aggregate"));
    }
    let est: Vec<(f64, f64)> = fits.iter().map(affiliation_estimates).collect();
    let k = est.len() as f64;
    let summarize = |pick: fn(&(f64, f64)) -> f64, truth: f64| {
        let mean_err = est.iter().map(|e| pick(e) - truth).sum::<f64>() / k;
        let mse = est.iter().map(|e| (pick(e) - truth).powi(2)).sum::<f64>() / k;
        (100.0 * mean_err / truth, mse.sqrt())
    };
    let (bias_lambda, rmse_lambda) = summarize(|e| e.0, lambda);
    let (bias_eps, rmse_eps) = summarize(|e| e.1, eps);
    Ok(BiasRmse { bias_eps, bias_lambda, rmse_eps, rmse_lambda })
}

/// `name<TAB>class` lines.
pub fn write_labels(names: &[String], labels: &[usize]) -> String {
    let mut out = String::new();
    for (name, z) in names.iter().zip(labels) {
        out.push_str(name);
        out.push('\t');
        out.push_str(&z.to_string());
        out.push('\n');
    }
    out
}

/// Parses a labels file into `(name, class)` pairs in file order.
pub fn parse_labels(text: &str) -> Result<Vec<(String, usize)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: idx + 1, msg: format!("expected name and class, found {} fields", fields.len()) });
        }
        let z = fields[1]
            .parse()
            .map_err(|_| Error::Parse { line: idx + 1, msg: format!("class {:?} is not a non-negative integer", fields[1]) })?;
        out.push((fields[0].to_string(), z));
    }
    Ok(out)
}

/// Aligns two labels files by node name; fails if the name sets differ.
pub fn align_labels(a: &[(String, usize)], b: &[(String, usize)]) -> Result<(Vec<usize>, Vec<usize>)> {
    let lookup: HashMap<&str, usize> = b.iter().map(|(n, z)| (n.as_str(), *z)).collect();
    if lookup.len() != a.len() || b.len() != a.len() {
        return Err(Error::dim("labels files cover different node sets"));
    }
    let mut za = Vec::with_capacity(a.len());
    let mut zb = Vec::with_capacity(a.len());
    for (name, z) in a {
        let other = lookup.get(name.as_str()).ok_or_else(|| Error::dim(format!("node {name:?} missing from the second file")))?;
        za.push(*z);
        zb.push(*other);
    }
    Ok((za, zb))
}

/// Labels ordered like `names`.
pub fn labels_for(names: &[String], entries: &[(String, usize)]) -> Result<Vec<usize>> {
    let lookup: HashMap<&str, usize> = entries.iter().map(|(n, z)| (n.as_str(), *z)).collect();
    names
        .iter()
        .map(|n| lookup.get(n.as_str()).copied().ok_or_else(|| Error::dim(format!("no label for node {n:?}"))))
        .collect()
}
