//! Fitters.
//!
//! Three streaming fitters share one skeleton: a batch variational warm
//! start on the first `n0` nodes, then one pass over the remaining nodes in
//! index order, then `post_passes` sweeps over everything absorbed so far.
//!
//! * online SAEM draws the arriving node's label from its Gibbs conditional;
//! * online CEM takes the conditional's argmax instead;
//! * online variational EM keeps a soft row `τ` per node.
//!
//! Parameters are refreshed after every arriving node from the running
//! sufficient statistics. The batch variational EM baseline alternates full
//! fixed-point E-steps with M-steps until the parameters stop moving.
//! Every fitter runs `starts` seeded restarts and keeps the best one (by the
//! lower bound `J` for the variational fitters, by the complete-data
//! log-likelihood for the hard-assignment ones).

mod batch;
mod bound;
mod hard;
mod init;
mod moves;
mod variational;

pub use batch::{batch_estep, batch_fit, batch_from_labels, batch_mstep, BatchState};
pub use bound::{entropy, lower_bound};
pub use hard::{HardOnline, Sampling};
pub use moves::try_split;
pub use variational::VariationalState;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{complete_log_likelihood_natural, EdgeFamily, ModelParams, Natural};
use crate::graph::Graph;
use crate::metrics::icl_from_loglik;
use crate::rng::{self, Rng};
use crate::stats::{neighbor_masses, Assignment, PairConvention, SuffStats, Tau};

/// α entries are floored here before renormalizing.
pub const ALPHA_FLOOR: f64 = 1e-8;
/// Pair-count mass below which a cell keeps its previous mean.
const EMPTY_CELL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    OnlineVem,
    OnlineSaem,
    OnlineCem,
    BatchVem,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::OnlineSaem, Algorithm::OnlineVem, Algorithm::OnlineCem, Algorithm::BatchVem];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OnlineVem => "online-vem",
            Algorithm::OnlineSaem => "online-saem",
            Algorithm::OnlineCem => "online-cem",
            Algorithm::BatchVem => "batch-vem",
        }
    }

    pub fn is_online(self) -> bool {
        self != Algorithm::BatchVem
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::param(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Seeded restarts; the best one is kept.
    pub starts: usize,
    pub seed: u64,
    /// k-means runs per restart; the lowest-inertia one seeds the batch fit.
    pub kmeans_seedings: usize,
    /// Warm-start sample size for the online fitters.
    pub n0: usize,
    /// Batch runs tried on the warm-start sample.
    pub warm_starts: usize,
    /// Iteration cap for each warm-start run.
    pub warm_iters: usize,
    /// Sweeps over the absorbed nodes once streaming ends.
    pub post_passes: usize,
    pub convention: PairConvention,
    pub estep_tol: f64,
    pub estep_max_iters: usize,
    pub param_tol: f64,
    pub max_iters: usize,
    pub tau_floor: f64,
    /// Online variational EM refreshes parameters every `mstep_every` nodes.
    pub mstep_every: usize,
    /// How the SAEM fitter picks the arriving node's label.
    pub sampling: Sampling,
    /// Forces every variational row to its argmax (test hook).
    pub degenerate_tau: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 10,
            seed: 0,
            kmeans_seedings: 3,
            n0: 200,
            warm_starts: 2,
            warm_iters: 10,
            post_passes: 1,
            convention: PairConvention::Distinct,
            estep_tol: 1e-4,
            estep_max_iters: 50,
            param_tol: 1e-6,
            max_iters: 500,
            tau_floor: 1e-10,
            mstep_every: 1,
            sampling: Sampling::Gibbs,
            degenerate_tau: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::param("starts must be at least 1"));
        }
        if self.mstep_every == 0 {
            return Err(Error::param("mstep_every must be at least 1"));
        }
        if !(self.tau_floor >= 0.0 && self.tau_floor < 0.5) {
            return Err(Error::param("tau_floor must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub algo: Algorithm,
    pub params: ModelParams,
    pub convention: PairConvention,
    pub labels: Vec<usize>,
    pub tau: Tau,
    pub j: f64,
    pub loglik: f64,
    pub icl: f64,
    pub seconds: f64,
    pub seed: u64,
    /// Index of the winning restart.
    pub start: usize,
    /// Outer iterations (batch) or post-pass sweeps (online).
    pub iterations: usize,
    /// `J` after each batch iteration; criterion after each online sweep.
    pub trace: Vec<f64>,
}

/// Serialized form of a [`FitResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub algo: Algorithm,
    pub q: usize,
    pub family: EdgeFamily,
    pub directed: bool,
    pub n: usize,
    /// Node names in index order, when known.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub nodes: Vec<String>,
    pub alpha: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<Vec<Vec<f64>>>,
    #[serde(rename = "J")]
    pub j: f64,
    pub loglik: f64,
    pub icl: f64,
    pub seconds: f64,
    pub seed: u64,
    pub start: usize,
    pub iterations: usize,
    pub pairs: PairConvention,
}

impl FitResult {
    pub fn q(&self) -> usize {
        self.params.q()
    }

    pub fn report(&self, with_tau: bool) -> FitReport {
        FitReport {
            algo: self.algo,
            q: self.params.q(),
            family: self.params.family(),
            directed: self.params.is_directed(),
            n: self.labels.len(),
            nodes: Vec::new(),
            alpha: self.params.alpha().to_vec(),
            psi: self.params.psi_rows(),
            labels: self.labels.clone(),
            tau: with_tau.then(|| self.tau.to_rows()),
            j: self.j,
            loglik: self.loglik,
            icl: self.icl,
            seconds: self.seconds,
            seed: self.seed,
            start: self.start,
            iterations: self.iterations,
            pairs: self.convention,
        }
    }
}

impl FitReport {
    /// Model parameters carried by the report.
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.family, self.directed, self.alpha.clone(), self.psi.clone())
    }
}

/// Fits `q` classes to `g` with `algo`. The edge family follows the graph's
/// edge kind.
pub fn fit(g: &Graph, q: usize, algo: Algorithm, cfg: &FitConfig) -> Result<FitResult> {
    check_problem(g, q)?;
    cfg.validate()?;
    let started = Instant::now();
    let mut result = match algo {
        Algorithm::BatchVem => batch_fit(g, q, cfg)?,
        _ => {
            let (mut best, start) = best_online(g, q, algo, cfg)?;
            stream_rest(g, best.as_mut())?;
            let mut trace = Vec::with_capacity(cfg.post_passes);
            for _ in 0..cfg.post_passes {
                best.refine(g)?;
                trace.push(best.criterion(g)?);
            }
            let mut res = finish(g, algo, best.params().clone(), best.tau(), cfg, start)?;
            res.iterations = cfg.post_passes;
            res.trace = trace;
            res
        }
    };
    result.seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

pub fn saem_fit(g: &Graph, q: usize, cfg: &FitConfig) -> Result<FitResult> {
    fit(g, q, Algorithm::OnlineSaem, cfg)
}

pub fn cem_fit(g: &Graph, q: usize, cfg: &FitConfig) -> Result<FitResult> {
    fit(g, q, Algorithm::OnlineCem, cfg)
}

pub fn ovem_fit(g: &Graph, q: usize, cfg: &FitConfig) -> Result<FitResult> {
    fit(g, q, Algorithm::OnlineVem, cfg)
}

pub(crate) fn check_problem(g: &Graph, q: usize) -> Result<()> {
    if q < 1 {
        return Err(Error::param("q must be at least 1"));
    }
    if g.n() == 0 {
        return Err(Error::param("graph has no nodes"));
    }
    if q > g.n() {
        return Err(Error::param(format!("q = {q} exceeds the {} nodes", g.n())));
    }
    Ok(())
}

/// A streaming fitter that can keep absorbing nodes of a growing graph.
pub trait OnlineFitter: Send {
    fn algorithm(&self) -> Algorithm;
    /// Number of nodes absorbed so far (always a prefix of the graph).
    fn absorbed(&self) -> usize;
    /// Absorbs node `absorbed()` of `g`.
    fn absorb_next(&mut self, g: &Graph) -> Result<()>;
    /// One sweep over every absorbed node at fixed size, then an M-step.
    fn refine(&mut self, g: &Graph) -> Result<()>;
    fn params(&self) -> &ModelParams;
    /// Current assignment (one-hot rows for hard fitters).
    fn tau(&self) -> Tau;
    /// Restart-selection criterion on the absorbed prefix.
    fn criterion(&self, g: &Graph) -> Result<f64>;
    /// Replaces the assignment of the absorbed nodes by hard `labels` and
    /// re-estimates the parameters.
    fn reset_labels(&mut self, g: &Graph, labels: &[usize]) -> Result<()>;
    fn clone_box(&self) -> Box<dyn OnlineFitter>;
}

/// Warm-started fitter for one seeded restart.
pub fn start_online(g: &Graph, q: usize, algo: Algorithm, cfg: &FitConfig, start: usize) -> Result<Box<dyn OnlineFitter>> {
    check_problem(g, q)?;
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, &[start as u64]));
    let fitter: Box<dyn OnlineFitter> = match algo {
        Algorithm::OnlineVem => Box::new(VariationalState::warm_start(g, q, cfg, &mut rng)?),
        Algorithm::OnlineSaem => Box::new(HardOnline::warm_start(g, q, cfg, cfg.sampling, rng)?),
        Algorithm::OnlineCem => Box::new(HardOnline::warm_start(g, q, cfg, Sampling::Argmax, rng)?),
        Algorithm::BatchVem => return Err(Error::param("batch-vem is not an online algorithm")),
    };
    Ok(fitter)
}

pub fn stream_rest(g: &Graph, fitter: &mut dyn OnlineFitter) -> Result<()> {
    while fitter.absorbed() < g.n() {
        fitter.absorb_next(g)?;
    }
    Ok(())
}

/// Runs every restart through the stream and returns the best one.
pub fn best_online(g: &Graph, q: usize, algo: Algorithm, cfg: &FitConfig) -> Result<(Box<dyn OnlineFitter>, usize)> {
    let runs: Vec<Result<(f64, Box<dyn OnlineFitter>)>> = (0..cfg.starts)
        .into_par_iter()
        .map(|s| {
            let mut f = start_online(g, q, algo, cfg, s)?;
            stream_rest(g, f.as_mut())?;
            let score = f.criterion(g)?;
            Ok((score, f))
        })
        .collect();
    pick_best(runs)
}

pub(crate) fn pick_best<T>(runs: Vec<Result<(f64, T)>>) -> Result<(T, usize)> {
    let mut best: Option<(f64, T, usize)> = None;
    for (idx, run) in runs.into_iter().enumerate() {
        let (score, item) = run?;
        let better = match &best {
            None => true,
            Some((b, _, _)) => score > *b || (b.is_nan() && !score.is_nan()),
        };
        if better {
            best = Some((score, item, idx));
        }
    }
    let (_, item, idx) = best.ok_or_else(|| Error::param("no restarts ran"))?;
    Ok((item, idx))
}

/// Assembles a [`FitResult`] with all criteria evaluated from scratch.
pub(crate) fn finish(g: &Graph, algo: Algorithm, params: ModelParams, tau: Tau, cfg: &FitConfig, start: usize) -> Result<FitResult> {
    let conv = cfg.convention.effective(g);
    let labels = tau.argmax();
    let loglik = complete_log_likelihood_natural(g, &labels, &params, conv)?;
    let j = lower_bound(g, &tau, &params, conv)?;
    let icl = icl_from_loglik(loglik, params.q(), g.n(), g.is_directed());
    Ok(FitResult {
        algo,
        params,
        convention: conv,
        labels,
        tau,
        j,
        loglik,
        icl,
        seconds: 0.0,
        seed: cfg.seed,
        start,
        iterations: 0,
        trace: Vec::new(),
    })
}

/// Unnormalized log-probability of each class for one node given its
/// neighbor masses and the class totals of the other nodes:
///
/// `log α_q + Σ_l (η_ql m_l + a(η_ql) N_l)`, plus `Σ_l (η_lq m'_l + a(η_lq) N_l)`
/// for in-links of directed graphs, plus `η_qq x_ii + a(η_qq)` when the
/// diagonal pair is part of the model.
pub(crate) fn class_log_scores(
    nat: &Natural,
    directed: bool,
    diagonal: bool,
    out_mass: &[f64],
    in_mass: &[f64],
    others: &[f64],
    loop_value: f64,
    scores: &mut [f64],
) {
    let q = nat.q;
    for a in 0..q {
        let mut s = nat.log_alpha[a];
        for b in 0..q {
            let c = a * q + b;
            s += nat.eta[c] * out_mass[b] + nat.a[c] * others[b];
            if directed {
                let r = b * q + a;
                s += nat.eta[r] * in_mass[b] + nat.a[r] * others[b];
            }
        }
        if diagonal {
            let c = a * q + a;
            s += nat.eta[c] * loop_value + nat.a[c];
        }
        scores[a] = s;
    }
}

/// Class probabilities of node `i` given the assignment of the other nodes
/// `< limit`: the Gibbs conditional for hard labels, the unfloored
/// variational row update for soft rows.
pub fn node_conditional<A: Assignment + ?Sized>(
    g: &Graph,
    i: usize,
    limit: usize,
    assign: &A,
    params: &ModelParams,
    convention: PairConvention,
) -> Result<Vec<f64>> {
    let q = params.q();
    if i >= g.n() {
        return Err(Error::NodeOutOfRange { node: i, n: g.n() });
    }
    if limit > g.n() || assign.len() < limit {
        return Err(Error::dim(format!("assignment covers {} nodes, {limit} needed", assign.len())));
    }
    if assign.q() != q {
        return Err(Error::dim(format!("assignment has {} classes, parameters {q}", assign.q())));
    }
    let mut others = vec![0.0; q];
    let mut row = vec![0.0; q];
    for j in (0..limit).filter(|&j| j != i) {
        assign.write_row(j, &mut row);
        for (o, r) in others.iter_mut().zip(&row) {
            *o += r;
        }
    }
    let mut out_mass = vec![0.0; q];
    let mut in_mass = vec![0.0; q];
    neighbor_masses(g, i, limit, assign, &mut out_mass, &mut in_mass);
    let conv = convention.effective(g);
    class_log_scores(
        &params.natural(),
        g.is_directed(),
        conv.includes_diagonal(),
        &out_mass,
        &in_mass,
        &others,
        g.self_loop(i) as f64,
        &mut row,
    );
    softmax(&mut row);
    Ok(row)
}

/// In-place log-space normalization with max subtraction.
pub(crate) fn softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

/// Floors every entry at `floor`, then renormalizes.
pub(crate) fn apply_floor(row: &mut [f64], floor: f64) {
    if floor <= 0.0 {
        return;
    }
    let mut total = 0.0;
    for t in row.iter_mut() {
        *t = t.max(floor);
        total += *t;
    }
    for t in row.iter_mut() {
        *t /= total;
    }
}

/// Closed-form M-step: `α_q = N_q / n`, `ψ_ql = H_ql / G_ql`; a cell with
/// no pair mass keeps its previous mean.
pub(crate) fn mstep(prev: &ModelParams, stats: &SuffStats) -> ModelParams {
    let mut next = prev.clone();
    let n = stats.n() as f64;
    if n > 0.0 {
        let alpha = next.alpha_mut();
        let mut total = 0.0;
        for (a, &c) in alpha.iter_mut().zip(stats.counts()) {
            *a = (c / n).max(ALPHA_FLOOR);
            total += *a;
        }
        for a in alpha.iter_mut() {
            *a /= total;
        }
    }
    let family = prev.family();
    for (c, psi) in next.psi_mut().iter_mut().enumerate() {
        let g = stats.g()[c];
        if g > EMPTY_CELL {
            *psi = to_domain(family, stats.h()[c] / g);
        }
    }
    next
}

/// Keeps a ratio inside the closed mean domain despite rounding.
pub(crate) fn to_domain(family: EdgeFamily, m: f64) -> f64 {
    match family {
        EdgeFamily::Bernoulli => m.clamp(0.0, 1.0),
        EdgeFamily::Poisson => m.max(0.0),
    }
}

/// Warm start on the first `min(n0, n)` nodes: the best (by `J`) of
/// `warm_starts` short batch variational runs, or random hard labels when
/// the sample has fewer than `2q` nodes.
pub(crate) fn warm_start(g: &Graph, q: usize, cfg: &FitConfig, rng: &mut Rng) -> Result<(Tau, usize)> {
    let n0 = cfg.n0.clamp(1, g.n()).max(q);
    let sample = g.prefix(n0);
    if n0 < 2 * q {
        let labels = batch::random_labels(n0, q, rng);
        return Ok((Tau::one_hot(&labels, q), n0));
    }
    let warm = FitConfig { max_iters: cfg.warm_iters.max(1), degenerate_tau: false, ..cfg.clone() };
    let mut best: Option<batch::BatchState> = None;
    for _ in 0..cfg.warm_starts.max(1) {
        let state = batch::run_single(&sample, q, &warm, rng)?;
        if best.as_ref().map_or(true, |b| state.j > b.j) {
            best = Some(state);
        }
    }
    let best = best.expect("at least one warm-start run");
    Ok((best.tau, n0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
        assert!("kmeans".parse::<Algorithm>().is_err());
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let mut a = vec![1.0, 2.0, -3.0];
        let mut b: Vec<f64> = a.iter().map(|x| x + 700.0).collect();
        softmax(&mut a);
        softmax(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn floor_keeps_rows_stochastic() {
        let mut r = vec![1.0, 0.0, 0.0];
        apply_floor(&mut r, 1e-10);
        assert!(r.iter().all(|&t| t >= 1e-10 * 0.99));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pick_best_prefers_first_on_ties() {
        let runs: Vec<Result<(f64, char)>> = vec![Ok((1.0, 'a')), Ok((3.0, 'b')), Ok((3.0, 'c'))];
        assert_eq!(pick_best(runs).unwrap(), ('b', 1));
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig { starts: 0, ..Default::default() }.validate().is_err());
        assert!(FitConfig { mstep_every: 0, ..Default::default() }.validate().is_err());
    }
}
