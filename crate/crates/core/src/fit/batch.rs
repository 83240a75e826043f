//! Batch variational EM.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{apply_floor, check_problem, class_log_scores, finish, mstep, pick_best, softmax, Algorithm, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::family::{EdgeFamily, ModelParams};
use crate::graph::Graph;
use crate::rng::{self, Rng};
use crate::stats::{argmax, neighbor_masses, Assignment, PairConvention, SuffStats, Tau};

/// Converged state of one batch run.
#[derive(Clone, Debug)]
pub struct BatchState {
    pub tau: Tau,
    pub params: ModelParams,
    pub j: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

const KMEANS_ITERS: usize = 50;

/// Balanced random labels: `i mod q`, shuffled.
pub(crate) fn random_labels(n: usize, q: usize, rng: &mut Rng) -> Vec<usize> {
    let mut z: Vec<usize> = (0..n).map(|i| i % q).collect();
    z.shuffle(rng);
    z
}


/// Uniform proportions and the graph's mean edge value in every cell.
pub(crate) fn flat_params(g: &Graph, q: usize, convention: PairConvention) -> Result<ModelParams> {
    let family = EdgeFamily::for_kind(g.kind());
    let n = g.n() as f64;
    let mut pairs = if g.is_directed() { n * (n - 1.0) } else { n * (n - 1.0) / 2.0 };
    if convention.includes_diagonal() {
        pairs += n;
    }
    let mean = if pairs > 0.0 { g.total_mass() as f64 / pairs } else { 0.0 };
    let mean = super::to_domain(family, mean);
    ModelParams::from_flat(family, g.is_directed(), vec![1.0 / q as f64; q], vec![mean; q * q])
}

/// Cyclic fixed-point E-step: each row is replaced by the normalized
/// conditional given all other rows, until the largest change drops below
/// `tol` or `max_sweeps` sweeps have run. Returns the sweeps performed.
#[allow(clippy::too_many_arguments)]
pub fn batch_estep(
    g: &Graph,
    tau: &mut Tau,
    params: &ModelParams,
    convention: PairConvention,
    tol: f64,
    max_sweeps: usize,
    floor: f64,
    degenerate: bool,
) -> Result<usize> {
    if tau.n() != g.n() || tau.q() != params.q() {
        return Err(Error::dim("tau does not match the graph and model"));
    }
    let q = params.q();
    let n = g.n();
    let conv = convention.effective(g);
    let nat = params.natural();
    let mut totals = vec![0.0; q];
    for row in tau.rows() {
        totals.iter_mut().zip(row).for_each(|(t, r)| *t += r);
    }
    let mut out_mass = vec![0.0; q];
    let mut in_mass = vec![0.0; q];
    let mut others = vec![0.0; q];
    let mut scores = vec![0.0; q];
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for i in 0..n {
            neighbor_masses(g, i, n, tau, &mut out_mass, &mut in_mass);
            let old = tau.row(i);
            for k in 0..q {
                others[k] = totals[k] - old[k];
            }
            class_log_scores(&nat, g.is_directed(), conv.includes_diagonal(), &out_mass, &in_mass, &others, g.self_loop(i) as f64, &mut scores);
            if degenerate {
                let best = argmax(&scores);
                scores.fill(0.0);
                scores[best] = 1.0;
            } else {
                softmax(&mut scores);
                apply_floor(&mut scores, floor);
            }
            let row = tau.row_mut(i);
            for k in 0..q {
                change = change.max((scores[k] - row[k]).abs());
                totals[k] = others[k] + scores[k];
                row[k] = scores[k];
            }
        }
        if !change.is_finite() {
            return Err(Error::Numerical("non-finite tau in the E-step".into()));
        }
        if change < tol {
            break;
        }
    }
    Ok(sweeps)
}

/// M-step from full expected statistics of `tau`.
pub fn batch_mstep(g: &Graph, tau: &Tau, prev: &ModelParams, convention: PairConvention) -> Result<ModelParams> {
    let stats = SuffStats::from_assignment(g, tau, convention.effective(g))?;
    Ok(mstep(prev, &stats))
}

fn max_param_change(a: &ModelParams, b: &ModelParams) -> f64 {
    let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    d(a.alpha(), b.alpha()).max(d(a.psi_flat(), b.psi_flat()))
}

/// Alternates E- and M-steps from `tau` until the parameters stop moving.
pub(crate) fn iterate(g: &Graph, mut tau: Tau, cfg: &FitConfig) -> Result<BatchState> {
    let conv = cfg.convention.effective(g);
    let q = tau.q();
    let mut params = batch_mstep(g, &tau, &flat_params(g, q, conv)?, conv)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        batch_estep(g, &mut tau, &params, conv, cfg.estep_tol, cfg.estep_max_iters, cfg.tau_floor, cfg.degenerate_tau)?;
        let next = batch_mstep(g, &tau, &params, conv)?;
        let delta = max_param_change(&params, &next);
        params = next;
        trace.push(super::lower_bound(g, &tau, &params, conv)?);
        if delta < cfg.param_tol {
            break;
        }
    }
    let j = *trace.last().unwrap_or(&f64::NEG_INFINITY);
    Ok(BatchState { tau, params, j, iterations, trace })
}

/// One batch run started from a k-means partition.
pub(crate) fn run_single(g: &Graph, q: usize, cfg: &FitConfig, rng: &mut Rng) -> Result<BatchState> {
    let labels = super::init::kmeans_labels(g, q, rng, cfg.kmeans_seedings, KMEANS_ITERS);
    iterate(g, Tau::one_hot(&labels, q), cfg)
}

/// Batch variational EM with `cfg.starts` restarts, best `J` kept.
pub fn batch_fit(g: &Graph, q: usize, cfg: &FitConfig) -> Result<FitResult> {
    check_problem(g, q)?;
    cfg.validate()?;
    let runs: Vec<Result<(f64, BatchState)>> = (0..cfg.starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::seeded(rng::derive_seed(cfg.seed, &[s as u64]));
            let st = run_single(g, q, cfg, &mut rng)?;
            Ok((st.j, st))
        })
        .collect();
    let (best, start) = pick_best(runs)?;
    let mut res = finish(g, Algorithm::BatchVem, best.params, best.tau, cfg, start)?;
    res.iterations = best.iterations;
    res.trace = best.trace;
    Ok(res)
}

/// Batch run started from given hard labels.
pub fn batch_from_labels(g: &Graph, labels: &[usize], q: usize, cfg: &FitConfig) -> Result<BatchState> {
    check_problem(g, q)?;
    if labels.len() != g.n() || labels.iter().any(|&z| z >= q) {
        return Err(Error::dim("labels do not match the graph and q"));
    }
    iterate(g, Tau::one_hot(labels, q), cfg)
}
