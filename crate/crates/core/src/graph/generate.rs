//! Planted-partition generators.

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{EdgeKind, Graph, GraphBuilder};
use crate::error::{Error, Result};
use crate::family::{EdgeFamily, ModelParams};
use crate::rng::{self, Rng};

/// Ground-truth labels of a simulated graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedPartition {
    pub labels: Vec<usize>,
    pub q: usize,
    pub params: ModelParams,
}

/// Affiliation model: within-class probability `lambda`, between-class `eps`.
pub fn sample_affiliation(
    n: usize,
    q: usize,
    lambda: f64,
    eps: f64,
    proportions: &[f64],
    directed: bool,
    seed: u64,
) -> Result<(Graph, PlantedPartition)> {
    if q < 1 {
        return Err(Error::param("need at least one class"));
    }
    if proportions.len() != q {
        return Err(Error::dim(format!("{} proportions for {q} classes", proportions.len())));
    }
    let params = ModelParams::affiliation_with(proportions, lambda, eps, directed)?;
    sample_mixnet(n, &params, seed)
}

/// General block-model generator: labels from `α`, one draw per pair from
/// the family implied by `params`.
pub fn sample_mixnet(n: usize, params: &ModelParams, seed: u64) -> Result<(Graph, PlantedPartition)> {
    let mut rng = rng::seeded(seed);
    let kind = params.family().edge_kind();
    let mut graph = GraphBuilder::new(kind, params.is_directed()).build();
    let mut truth = PlantedPartition { labels: Vec::with_capacity(n), q: params.q(), params: params.clone() };
    grow_mixnet(&mut graph, &mut truth, n, &mut rng)?;
    Ok((graph, truth))
}

/// Appends `new_nodes` nodes drawn from `truth.params`: each new node picks
/// a label from `α` and connects to every earlier node per `ψ`.
pub fn grow_mixnet(graph: &mut Graph, truth: &mut PlantedPartition, new_nodes: usize, rng: &mut Rng) -> Result<()> {
    let params = &truth.params.clone();
    if graph.n() != truth.labels.len() {
        return Err(Error::dim("partition does not cover the graph"));
    }
    if graph.kind() != params.family().edge_kind() || graph.is_directed() != params.is_directed() {
        return Err(Error::param("graph kind or directedness differs from the model"));
    }
    let q = params.q();
    let cumulative: Vec<f64> = params
        .alpha()
        .iter()
        .scan(0.0, |acc, &a| {
            *acc += a;
            Some(*acc)
        })
        .collect();
    let poisson: Vec<Option<Poisson<f64>>> = params
        .psi_flat()
        .iter()
        .map(|&m| {
            if params.family() == EdgeFamily::Poisson && m > 0.0 {
                Poisson::new(m).ok()
            } else {
                None
            }
        })
        .collect();
    let kind = graph.kind();
    let directed = graph.is_directed();
    let draw = |rng: &mut Rng, a: usize, b: usize| -> u32 {
        let c = a * q + b;
        match kind {
            EdgeKind::Binary => u32::from(rng.random::<f64>() < params.psi_flat()[c]),
            EdgeKind::Count => poisson[c].as_ref().map_or(0, |d| d.sample(rng) as u32),
        }
    };
    let mut out = Vec::new();
    let mut inc = Vec::new();
    for _ in 0..new_nodes {
        let u: f64 = rng.random();
        let z = cumulative.iter().position(|&c| u < c).unwrap_or(q - 1);
        out.clear();
        inc.clear();
        for (j, &zj) in truth.labels.iter().enumerate() {
            if directed {
                let to = draw(rng, z, zj);
                if to > 0 {
                    out.push((j, to));
                }
                let from = draw(rng, zj, z);
                if from > 0 {
                    inc.push((j, from));
                }
            } else {
                let v = draw(rng, zj, z);
                if v > 0 {
                    out.push((j, v));
                }
            }
        }
        graph.push_node(None, &out, &inc)?;
        truth.labels.push(z);
    }
    Ok(())
}
