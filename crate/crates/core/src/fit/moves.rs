//! Split moves for a running online fitter.
//!
//! Single-node updates cannot undo a merge: once two true classes share a
//! label, another label is left nearly empty and stays that way. A split
//! move refills the smallest class by cutting a populous one in two with
//! k-means on its members' adjacency profiles, refines the proposal with a
//! few sweeps and keeps it only if the fitter's criterion rises.

use std::cmp::Reverse;

use super::init::kmeans_rows;
use super::variational::absorbed_view;
use super::OnlineFitter;
use crate::error::Result;
use crate::graph::Graph;
use crate::rng::Rng;

const SPLIT_SEEDINGS: usize = 3;
const SPLIT_ITERS: usize = 50;

/// Proposes splits of the `candidates` largest classes into the smallest
/// one. The best improving proposal replaces `fitter`; returns whether one
/// was accepted.
pub fn try_split(g: &Graph, fitter: &mut Box<dyn OnlineFitter>, candidates: usize, sweeps: usize, rng: &mut Rng) -> Result<bool> {
    let q = fitter.params().q();
    let m = fitter.absorbed();
    if q < 2 || candidates == 0 || m < 2 * q {
        return Ok(false);
    }
    let tau = fitter.tau();
    let labels = tau.argmax();
    let mut sizes = vec![0usize; q];
    labels.iter().for_each(|&z| sizes[z] += 1);
    let small = (0..q).min_by_key(|&k| (sizes[k], k)).expect("q >= 2");
    let mut order: Vec<usize> = (0..q).filter(|&k| k != small && sizes[k] >= 4).collect();
    order.sort_by_key(|&k| (Reverse(sizes[k]), k));

    // the small class's members fall back to their second choice
    let mut base = labels;
    for (i, z) in base.iter_mut().enumerate() {
        if *z == small {
            let row = tau.row(i);
            *z = (0..q).filter(|&k| k != small).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).expect("q >= 2");
        }
    }

    let view = absorbed_view(g, m);
    let mut best: Option<(f64, Box<dyn OnlineFitter>)> = None;
    let mut bar = fitter.criterion(g)?;
    for &c in order.iter().take(candidates) {
        let members: Vec<usize> = (0..m).filter(|&i| base[i] == c).collect();
        let halves = kmeans_rows(&view, &members, 2, rng, SPLIT_SEEDINGS, SPLIT_ITERS);
        let mut z = base.clone();
        for (&i, &h) in members.iter().zip(&halves) {
            if h == 1 {
                z[i] = small;
            }
        }
        let mut proposal = fitter.clone_box();
        proposal.reset_labels(g, &z)?;
        for _ in 0..sweeps {
            proposal.refine(g)?;
        }
        let score = proposal.criterion(g)?;
        if score > bar {
            bar = score;
            best = Some((score, proposal));
        }
    }
    Ok(match best {
        Some((_, proposal)) => {
            *fitter = proposal;
            true
        }
        None => false,
    })
}
