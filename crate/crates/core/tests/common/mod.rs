//! Small random instances and brute-force reference computations.

#![allow(dead_code)]

use mixnet::graph::GraphBuilder;
use mixnet::{EdgeFamily, EdgeKind, Graph, ModelParams, PairConvention};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Instance {
    pub g: Graph,
    pub params: ModelParams,
    pub labels: Vec<usize>,
    pub convention: PairConvention,
}

/// Random graph with `n` nodes, arbitrary edge values, a matching random
/// parameter set and random labels.
pub fn instance(seed: u64, n: usize, q: usize, directed: bool, poisson: bool, loops: bool, diag: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = if poisson { EdgeKind::Count } else { EdgeKind::Binary };
    let mut b = GraphBuilder::new(kind, directed).self_loops(loops).with_nodes(n);
    for i in 0..n {
        let range: Vec<usize> = if directed { (0..n).collect() } else { (i..n).collect() };
        for j in range {
            if i == j && !loops {
                continue;
            }
            let v = if poisson { rng.random_range(0..4u32) } else { u32::from(rng.random_bool(0.5)) };
            if v > 0 {
                b.add_edge(i, j, v).unwrap();
            }
        }
    }
    let g = b.build();
    let mut alpha: Vec<f64> = (0..q).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = alpha.iter().sum();
    alpha.iter_mut().for_each(|a| *a /= s);
    let mut psi = vec![vec![0.0; q]; q];
    for a in 0..q {
        for c in 0..q {
            if directed || c >= a {
                psi[a][c] = if poisson { rng.random_range(0.2..3.0) } else { rng.random_range(0.05..0.95) };
            } else {
                psi[a][c] = psi[c][a];
            }
        }
    }
    let family = if poisson { EdgeFamily::Poisson } else { EdgeFamily::Bernoulli };
    let params = ModelParams::new(family, directed, alpha, psi).unwrap();
    let labels = (0..n).map(|_| rng.random_range(0..q)).collect();
    let convention = if diag { PairConvention::WithDiagonal } else { PairConvention::Distinct };
    Instance { g, params, labels, convention }
}

fn ln_factorial(x: u32) -> f64 {
    (2..=x).map(|k| (k as f64).ln()).sum()
}

/// Edge log-density written directly from the probability mass function.
pub fn edge_logpmf(family: EdgeFamily, x: u32, mean: f64) -> f64 {
    match family {
        EdgeFamily::Bernoulli => {
            if x == 1 {
                mean.ln()
            } else {
                (1.0 - mean).ln()
            }
        }
        EdgeFamily::Poisson => x as f64 * mean.ln() - mean - ln_factorial(x),
    }
}

pub fn uses_diagonal(g: &Graph, convention: PairConvention) -> bool {
    convention == PairConvention::WithDiagonal || g.allows_self_loops()
}

/// `log p(X, Z)` by direct summation over node pairs of the first `m` nodes.
pub fn joint_loglik(g: &Graph, z: &[usize], p: &ModelParams, convention: PairConvention, m: usize) -> f64 {
    let fam = p.family();
    let diag = uses_diagonal(g, convention);
    let mut total = 0.0;
    for i in 0..m {
        total += p.alpha()[z[i]].ln();
        if diag {
            total += edge_logpmf(fam, g.self_loop(i), p.psi(z[i], z[i]));
        }
        for j in 0..m {
            if j == i || (!g.is_directed() && j < i) {
                continue;
            }
            total += edge_logpmf(fam, g.value(i, j), p.psi(z[i], z[j]));
        }
    }
    total
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Conditional of node `i`'s label by enumerating its `q` values in the
/// joint over the first `m` nodes.
pub fn enumerated_conditional(g: &Graph, z: &[usize], i: usize, p: &ModelParams, convention: PairConvention, m: usize) -> Vec<f64> {
    let mut zz = z.to_vec();
    zz.resize(m.max(i + 1), 0);
    let logs: Vec<f64> = (0..p.q())
        .map(|k| {
            zz[i] = k;
            joint_loglik(g, &zz, p, convention, m.max(i + 1))
        })
        .collect();
    let lse = logsumexp(&logs);
    logs.iter().map(|l| (l - lse).exp()).collect()
}

/// `log p(X)` summing the joint over all `q^n` labelings.
pub fn log_marginal(g: &Graph, p: &ModelParams, convention: PairConvention) -> f64 {
    let n = g.n();
    let q = p.q();
    let total = q.pow(n as u32);
    let mut logs = Vec::with_capacity(total);
    let mut z = vec![0; n];
    for code in 0..total {
        let mut c = code;
        for zi in z.iter_mut() {
            *zi = c % q;
            c /= q;
        }
        logs.push(joint_loglik(g, &z, p, convention, n));
    }
    logsumexp(&logs)
}

/// Adjusted Rand index from the four pair counts.
pub fn pair_count_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0.0 {
        1.0
    } else {
        2.0 * (n00 * n11 - n01 * n10) / den
    }
}

/// Two disjoint cliques of `k` nodes each, with their labels.
pub fn two_cliques(k: usize) -> (Graph, Vec<usize>) {
    let mut b = GraphBuilder::new(EdgeKind::Binary, false).with_nodes(2 * k);
    for c in 0..2 {
        for i in 0..k {
            for j in i + 1..k {
                b.add_edge(c * k + i, c * k + j, 1).unwrap();
            }
        }
    }
    let labels = (0..2 * k).map(|i| i / k).collect();
    (b.build(), labels)
}
