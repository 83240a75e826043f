//! Edge distributions in natural-parameter form.
//!
//! Both families are written as
//! `log p(x | η) = η·h(x) + a(η) + b(x)` with `h(x) = x` and
//!
//! | family    | η            | a(η)       | b(x)        |
//! |-----------|--------------|------------|-------------|
//! | Bernoulli | log(π/(1−π)) | log(1 − π) | 0           |
//! | Poisson   | log λ        | −λ         | −log(x!)    |
//!
//! This sign convention is the one under which the node-level Gibbs
//! conditional and the variational row update take their usual
//! `exp(η·h + a)` form. Means are clamped before any logarithm:
//! Bernoulli to `[1e-6, 1 − 1e-6]`, Poisson to `[1e-8, ∞)`.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, Graph};
use crate::stats::{Labels, PairConvention, SuffStats};

pub const BERNOULLI_FLOOR: f64 = 1e-6;
pub const POISSON_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFamily {
    Bernoulli,
    Poisson,
}

impl EdgeFamily {
    pub fn for_kind(kind: EdgeKind) -> Self {
        match kind {
            EdgeKind::Binary => EdgeFamily::Bernoulli,
            EdgeKind::Count => EdgeFamily::Poisson,
        }
    }

    pub fn edge_kind(self) -> EdgeKind {
        match self {
            EdgeFamily::Bernoulli => EdgeKind::Binary,
            EdgeFamily::Poisson => EdgeKind::Count,
        }
    }

    /// Whether `mean` lies in the closed mean domain.
    pub fn is_valid_mean(self, mean: f64) -> bool {
        match self {
            EdgeFamily::Bernoulli => (0.0..=1.0).contains(&mean),
            EdgeFamily::Poisson => mean.is_finite() && mean >= 0.0,
        }
    }

    pub fn clamp(self, mean: f64) -> f64 {
        match self {
            EdgeFamily::Bernoulli => mean.clamp(BERNOULLI_FLOOR, 1.0 - BERNOULLI_FLOOR),
            EdgeFamily::Poisson => mean.max(POISSON_FLOOR),
        }
    }

    /// η for a mean (clamped first).
    pub fn natural(self, mean: f64) -> f64 {
        let m = self.clamp(mean);
        match self {
            EdgeFamily::Bernoulli => (m / (1.0 - m)).ln(),
            EdgeFamily::Poisson => m.ln(),
        }
    }

    /// Mean for a natural parameter; inverse of [`EdgeFamily::natural`].
    pub fn mean_of(self, eta: f64) -> f64 {
        match self {
            EdgeFamily::Bernoulli => 1.0 / (1.0 + (-eta).exp()),
            EdgeFamily::Poisson => eta.exp(),
        }
    }

    /// a(η) evaluated at a (clamped) mean.
    pub fn log_partition(self, mean: f64) -> f64 {
        let m = self.clamp(mean);
        match self {
            EdgeFamily::Bernoulli => (-m).ln_1p(),
            EdgeFamily::Poisson => -m,
        }
    }

    #[inline]
    pub fn h(x: u32) -> f64 {
        x as f64
    }

    pub fn base_measure(self, x: u32) -> f64 {
        match self {
            EdgeFamily::Bernoulli => 0.0,
            EdgeFamily::Poisson => -ln_factorial(x as u64),
        }
    }

    /// Exact log-density; `-inf` outside the support.
    pub fn log_prob(self, x: u32, mean: f64) -> f64 {
        if self == EdgeFamily::Bernoulli && x > 1 {
            return f64::NEG_INFINITY;
        }
        self.natural(mean) * Self::h(x) + self.log_partition(mean) + self.base_measure(x)
    }
}

/// `log p(x | ψ)` for one edge value.
pub fn edge_log_prob(family: EdgeFamily, x: u32, mean: f64) -> f64 {
    family.log_prob(x, mean)
}

/// Class proportions and the class-pair mean matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct ModelParams {
    q: usize,
    family: EdgeFamily,
    directed: bool,
    alpha: Vec<f64>,
    // row-major q×q
    psi: Vec<f64>,
}

/// JSON layout: `{q, family, directed, alpha: [...], psi: [[...]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct ParamsJson {
    q: usize,
    family: EdgeFamily,
    directed: bool,
    alpha: Vec<f64>,
    psi: Vec<Vec<f64>>,
}

impl TryFrom<ParamsJson> for ModelParams {
    type Error = Error;

    fn try_from(j: ParamsJson) -> Result<Self> {
        if j.alpha.len() != j.q {
            return Err(Error::dim(format!("alpha has {} entries, q = {}", j.alpha.len(), j.q)));
        }
        ModelParams::new(j.family, j.directed, j.alpha, j.psi)
    }
}

impl From<ModelParams> for ParamsJson {
    fn from(p: ModelParams) -> Self {
        let psi = p.psi_rows();
        ParamsJson { q: p.q, family: p.family, directed: p.directed, alpha: p.alpha, psi }
    }
}

impl ModelParams {
    pub fn new(family: EdgeFamily, directed: bool, alpha: Vec<f64>, psi: Vec<Vec<f64>>) -> Result<Self> {
        let q = alpha.len();
        if psi.len() != q || psi.iter().any(|r| r.len() != q) {
            return Err(Error::dim(format!("psi must be {q}x{q}")));
        }
        let flat = psi.into_iter().flatten().collect();
        Self::from_flat(family, directed, alpha, flat)
    }

    pub fn from_flat(family: EdgeFamily, directed: bool, alpha: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        let q = alpha.len();
        if q == 0 {
            return Err(Error::param("need at least one class"));
        }
        if psi.len() != q * q {
            return Err(Error::dim(format!("psi must have {} entries", q * q)));
        }
        if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::param("class proportions must be positive"));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("class proportions sum to {total}, not 1")));
        }
        if let Some(bad) = psi.iter().find(|&&m| !family.is_valid_mean(m)) {
            return Err(Error::param(format!("mean {bad} outside the {family:?} domain")));
        }
        if !directed {
            for a in 0..q {
                for b in 0..a {
                    if (psi[a * q + b] - psi[b * q + a]).abs() > 1e-12 {
                        return Err(Error::param("psi must be symmetric for an undirected model"));
                    }
                }
            }
        }
        Ok(ModelParams { q, family, directed, alpha, psi })
    }

    /// Affiliation model: `λ` on the diagonal, `ε` elsewhere, equal proportions.
    pub fn affiliation(q: usize, lambda: f64, eps: f64, directed: bool) -> Result<Self> {
        if q == 0 {
            return Err(Error::param("need at least one class"));
        }
        let alpha = vec![1.0 / q as f64; q];
        Self::affiliation_with(&alpha, lambda, eps, directed)
    }

    pub fn affiliation_with(alpha: &[f64], lambda: f64, eps: f64, directed: bool) -> Result<Self> {
        for (name, p) in [("lambda", lambda), ("eps", eps)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("{name} = {p} is not a probability")));
            }
        }
        let q = alpha.len();
        let mut psi = vec![eps; q * q];
        for k in 0..q {
            psi[k * q + k] = lambda;
        }
        Self::from_flat(EdgeFamily::Bernoulli, directed, alpha.to_vec(), psi)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn family(&self) -> EdgeFamily {
        self.family
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn psi(&self, a: usize, b: usize) -> f64 {
        self.psi[a * self.q + b]
    }

    pub fn psi_flat(&self) -> &[f64] {
        &self.psi
    }

    pub fn psi_rows(&self) -> Vec<Vec<f64>> {
        self.psi.chunks(self.q).map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn alpha_mut(&mut self) -> &mut [f64] {
        &mut self.alpha
    }

    pub(crate) fn psi_mut(&mut self) -> &mut [f64] {
        &mut self.psi
    }

    /// Relabels classes: new class `k` is old class `sigma[k]`.
    pub fn permuted(&self, sigma: &[usize]) -> ModelParams {
        let q = self.q;
        let alpha = sigma.iter().map(|&s| self.alpha[s]).collect();
        let mut psi = vec![0.0; q * q];
        for a in 0..q {
            for b in 0..q {
                psi[a * q + b] = self.psi(sigma[a], sigma[b]);
            }
        }
        ModelParams { psi, alpha, ..self.clone() }
    }

    /// Cached `log α`, `η` and `a(η)` for scoring.
    pub fn natural(&self) -> Natural {
        Natural {
            q: self.q,
            log_alpha: self.alpha.iter().map(|a| a.ln()).collect(),
            eta: self.psi.iter().map(|&m| self.family.natural(m)).collect(),
            a: self.psi.iter().map(|&m| self.family.log_partition(m)).collect(),
        }
    }
}

/// Natural-parameter view of [`ModelParams`], row-major like `psi`.
#[derive(Clone, Debug)]
pub struct Natural {
    pub q: usize,
    pub log_alpha: Vec<f64>,
    pub eta: Vec<f64>,
    pub a: Vec<f64>,
}

fn check_consistent(g: &Graph, labels: &[usize], params: &ModelParams) -> Result<()> {
    if labels.len() != g.n() {
        return Err(Error::dim(format!("{} labels for {} nodes", labels.len(), g.n())));
    }
    if let Some(&bad) = labels.iter().find(|&&z| z >= params.q) {
        return Err(Error::param(format!("label {bad} >= q = {}", params.q)));
    }
    if g.is_directed() != params.directed {
        return Err(Error::param("graph and model disagree on directedness"));
    }
    Ok(())
}

/// `Σ_i log α_{z_i} + Σ_pairs log p(x_ij | z_i, z_j)` by direct summation
/// over every pair in the convention's pair set.
pub fn complete_log_likelihood(
    g: &Graph,
    labels: &[usize],
    params: &ModelParams,
    convention: PairConvention,
) -> Result<f64> {
    check_consistent(g, labels, params)?;
    let n = g.n();
    let fam = params.family;
    let mut total: f64 = labels.iter().map(|&z| params.alpha[z].ln()).sum();
    for i in 0..n {
        let zi = labels[i];
        if convention.includes_diagonal() {
            total += fam.log_prob(g.self_loop(i), params.psi(zi, zi));
        }
        let range = if g.is_directed() { 0..n } else { i + 1..n };
        for j in range {
            if j == i {
                continue;
            }
            total += fam.log_prob(g.value(i, j), params.psi(zi, labels[j]));
        }
    }
    Ok(total)
}

/// Same quantity through the sufficient statistics:
/// `Σ_q N_q log α_q + Σ_cells (η·H + a(η)·G) + B(X)`.
pub fn complete_log_likelihood_natural(
    g: &Graph,
    labels: &[usize],
    params: &ModelParams,
    convention: PairConvention,
) -> Result<f64> {
    check_consistent(g, labels, params)?;
    let stats = SuffStats::from_assignment(g, &Labels::new(labels.to_vec(), params.q)?, convention)?;
    Ok(natural_form(&stats, params, base_measure_total(g, params.family, convention)))
}

/// `β^t T + B` for (possibly expected) statistics.
pub(crate) fn natural_form(stats: &SuffStats, params: &ModelParams, base: f64) -> f64 {
    let nat = params.natural();
    let q = params.q;
    let mut total = base;
    for k in 0..q {
        total += stats.counts()[k] * nat.log_alpha[k];
    }
    for a in 0..q {
        let lo = if params.directed { 0 } else { a };
        for b in lo..q {
            let c = a * q + b;
            total += nat.eta[c] * stats.h()[c] + nat.a[c] * stats.g()[c];
        }
    }
    total
}

/// `B(X) = Σ_pairs b(x_ij)`; only nonzero values contribute for both families.
pub fn base_measure_total(g: &Graph, family: EdgeFamily, convention: PairConvention) -> f64 {
    if family == EdgeFamily::Bernoulli {
        return 0.0;
    }
    g.edge_triples()
        .into_iter()
        .filter(|&(i, j, _)| i != j || convention.includes_diagonal())
        .map(|(_, _, v)| family.base_measure(v))
        .sum()
}
