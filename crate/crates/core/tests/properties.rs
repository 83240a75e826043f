mod common;

use common::*;
use mixnet::bench::{run_growth, GrowthSpec, Template};
use mixnet::family::{complete_log_likelihood, complete_log_likelihood_natural};
use mixnet::fit::{self, HardOnline, OnlineFitter, Sampling, VariationalState};
use mixnet::graph::{parse_edge_list_with_nodes, parse_node_list, sample_affiliation, sample_mixnet, GraphBuilder, ParseOptions};
use mixnet::metrics::{adjusted_rand, icl_from_loglik, modularity};
use mixnet::rng::{derive_seed, seeded};
use mixnet::stats::stats_from_scratch;
use mixnet::{Algorithm, EdgeFamily, EdgeKind, FitConfig, FitResult, Labels, ModelParams};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> impl Strategy<Value = (u64, usize, usize, bool, bool, bool, bool)> {
    (any::<u64>(), 2usize..=8, 1usize..=3, any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn edge_list_round_trip((seed, n, q, directed, poisson, loops, diag) in small()) {
        let inst = instance(seed, n, q, directed, poisson, loops, diag);
        let opts = ParseOptions::default().kind(inst.g.kind()).directed(directed).self_loops(loops);
        let nodes = parse_node_list(&inst.g.to_node_list());
        let back = parse_edge_list_with_nodes(&inst.g.to_edge_list(), &nodes, &opts).unwrap();
        prop_assert_eq!(back.names(), inst.g.names());
        prop_assert_eq!(back.edge_triples(), inst.g.edge_triples());
        for i in 0..n {
            prop_assert_eq!(back.self_loop(i), inst.g.self_loop(i));
        }
    }

    #[test]
    fn node_by_node_extension_rebuilds_graph((seed, n, q, directed, poisson, _l, diag) in small()) {
        let inst = instance(seed, n, q, directed, poisson, false, diag);
        let mut g = GraphBuilder::new(inst.g.kind(), directed).build();
        for i in 0..n {
            let out: Vec<(usize, u32)> = (0..i).map(|j| (j, inst.g.value(i, j))).filter(|&(_, v)| v > 0).collect();
            let inc: Vec<(usize, u32)> = if directed {
                (0..i).map(|j| (j, inst.g.value(j, i))).filter(|&(_, v)| v > 0).collect()
            } else {
                Vec::new()
            };
            g = g.extended(&out, &inc).unwrap();
        }
        prop_assert_eq!(g.n(), n);
        prop_assert_eq!(g.edge_triples(), inst.g.edge_triples());
    }

    #[test]
    fn likelihood_factorizes((seed, n, q, directed, poisson, loops, diag) in small()) {
        let inst = instance(seed, n, q, directed, poisson, loops, diag);
        let direct = joint_loglik(&inst.g, &inst.labels, &inst.params, inst.convention, n);
        let conv = inst.convention.effective(&inst.g);
        let lib = complete_log_likelihood(&inst.g, &inst.labels, &inst.params, conv).unwrap();
        let nat = complete_log_likelihood_natural(&inst.g, &inst.labels, &inst.params, conv).unwrap();
        prop_assert!((direct - lib).abs() < 1e-9 * direct.abs().max(1.0));
        prop_assert!((direct - nat).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn class_permutation_permutes_stats((seed, n, q, directed, poisson, loops, diag) in small(), perm_seed in any::<u64>()) {
        let inst = instance(seed, n, q, directed, poisson, loops, diag);
        let conv = inst.convention.effective(&inst.g);
        let mut sigma: Vec<usize> = (0..q).collect();
        sigma.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let relabeled: Vec<usize> = inst.labels.iter().map(|&z| sigma[z]).collect();
        let a = stats_from_scratch(&inst.g, &Labels::new(inst.labels.clone(), q).unwrap(), conv).unwrap();
        let b = stats_from_scratch(&inst.g, &Labels::new(relabeled, q).unwrap(), conv).unwrap();
        for k in 0..q {
            prop_assert_eq!(a.counts()[k], b.counts()[sigma[k]]);
            for l in 0..q {
                let (src, dst) = (k * q + l, sigma[k] * q + sigma[l]);
                let alt = sigma[l] * q + sigma[k];
                // undirected cells live on one side of the diagonal
                let dst = if directed || b.g()[dst] != 0.0 || b.h()[dst] != 0.0 || a.g()[src] == 0.0 { dst } else { alt };
                prop_assert_eq!(a.h()[src], b.h()[dst]);
                prop_assert_eq!(a.g()[src], b.g()[dst]);
            }
        }
    }

    #[test]
    fn modularity_ignores_class_names(seed in any::<u64>(), shift in 1usize..5) {
        let (g, _) = sample_affiliation(40, 3, 0.5, 0.1, &[0.3, 0.3, 0.4], false, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
        let renamed: Vec<usize> = z.iter().map(|&c| (c + shift) % 3 + 10).collect();
        let a = modularity(&g, &z).unwrap();
        prop_assert!((a - modularity(&g, &renamed).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a));
        prop_assert!(modularity(&g, &vec![0; 40]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn split_moves_never_lower_the_criterion(seed in any::<u64>(), q in 2usize..5, algo in 0usize..3) {
        let algo = [Algorithm::OnlineVem, Algorithm::OnlineSaem, Algorithm::OnlineCem][algo];
        let (g, _) = sample_affiliation(60, q, 0.5, 0.1, &vec![1.0 / q as f64; q], false, seed).unwrap();
        let cfg = FitConfig { starts: 1, n0: 20, seed, ..Default::default() };
        let mut f = fit::start_online(&g, q, algo, &cfg, 0).unwrap();
        fit::stream_rest(&g, f.as_mut()).unwrap();
        let before = f.criterion(&g).unwrap();
        let accepted = fit::try_split(&g, &mut f, 2, 2, &mut seeded(seed)).unwrap();
        let after = f.criterion(&g).unwrap();
        let consistent = if accepted { after > before } else { after == before };
        prop_assert!(consistent, "accepted {} before {} after {}", accepted, before, after);
        prop_assert_eq!(f.absorbed(), 60);
    }
}

#[test]
fn random_partitions_have_zero_mean_ari() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mean = (0..200)
        .map(|_| {
            let a: Vec<usize> = (0..1000).map(|_| rng.random_range(0..4)).collect();
            let b: Vec<usize> = (0..1000).map(|_| rng.random_range(0..4)).collect();
            adjusted_rand(&a, &b).unwrap()
        })
        .sum::<f64>()
        / 200.0;
    assert!(mean.abs() <= 0.02, "mean ARI {mean}");
}

#[test]
fn icl_with_one_class_per_node_is_finite() {
    let (g, _) = sample_affiliation(12, 2, 0.8, 0.1, &[0.5, 0.5], false, 4).unwrap();
    let res = fit::fit(&g, 12, Algorithm::OnlineCem, &FitConfig { starts: 2, ..Default::default() }).unwrap();
    assert!(res.icl.is_finite());
    let q2 = fit::fit(&g, 2, Algorithm::OnlineCem, &FitConfig { starts: 2, ..Default::default() }).unwrap();
    assert!(icl_from_loglik(res.loglik, 12, 12, false) < q2.icl);
}

#[test]
fn affiliation_densities_converge() {
    let (lambda, eps) = (0.3, 0.05);
    let (g, truth) = sample_affiliation(2000, 4, lambda, eps, &[0.25; 4], false, 8).unwrap();
    let (mut within, mut within_pairs, mut between, mut between_pairs) = (0.0, 0.0, 0.0, 0.0);
    let size = |c| truth.labels.iter().filter(|&&z| z == c).count() as f64;
    for c in 0..4 {
        within_pairs += size(c) * (size(c) - 1.0) / 2.0;
    }
    between_pairs += 2000.0 * 1999.0 / 2.0 - within_pairs;
    for (i, j, _) in g.edge_triples() {
        if truth.labels[i] == truth.labels[j] {
            within += 1.0;
        } else {
            between += 1.0;
        }
    }
    let within_sd = (lambda * (1.0 - lambda) / within_pairs).sqrt();
    let between_sd = (eps * (1.0 - eps) / between_pairs).sqrt();
    assert!((within / within_pairs - lambda).abs() < 3.0 * within_sd);
    assert!((between / between_pairs - eps).abs() < 3.0 * between_sd);
}

fn assert_valid(p: &ModelParams) {
    assert!((p.alpha().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(p.psi_flat().iter().all(|&m| p.family().is_valid_mean(m)));
}

#[test]
fn streaming_invariants_hold_after_every_node() {
    for (seed, directed, poisson) in [(1, false, false), (2, true, false), (3, false, true), (4, true, true)] {
        let (g, _) = if poisson {
            let p = ModelParams::new(EdgeFamily::Poisson, directed, vec![0.5, 0.5], vec![vec![2.0, 0.3], vec![0.3, 1.5]]).unwrap();
            sample_mixnet(80, &p, seed).unwrap()
        } else {
            sample_affiliation(80, 2, 0.6, 0.1, &[0.5, 0.5], directed, seed).unwrap()
        };
        let cfg = FitConfig { n0: 10, ..Default::default() };
        let mut v = VariationalState::warm_start(&g, 2, &cfg, &mut seeded(seed)).unwrap();
        let mut h = HardOnline::warm_start(&g, 2, &cfg, Sampling::Gibbs, seeded(seed)).unwrap();
        while v.absorbed() < g.n() {
            v.absorb_next(&g).unwrap();
            h.absorb_next(&g).unwrap();
            assert_valid(v.params());
            assert_valid(h.params());
            assert_eq!(v.stats().n(), v.absorbed());
            assert_eq!(h.stats().n(), h.labels().as_slice().len());
            let last = v.tau_ref().row(v.absorbed() - 1);
            assert!((last.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let scratch = stats_from_scratch(&g, v.tau_ref(), cfg.convention).unwrap();
        assert!(v.stats().max_abs_diff(&scratch) < 1e-8);
        let scratch = stats_from_scratch(&g, h.labels(), cfg.convention).unwrap();
        assert!(h.stats().same_values(&scratch));
    }
}

fn same_fit(a: &FitResult, b: &FitResult) {
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.params, b.params);
    assert_eq!(a.tau, b.tau);
    assert_eq!(a.j.to_bits(), b.j.to_bits());
    assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    assert_eq!(a.trace, b.trace);
}

#[test]
fn argmax_saem_and_degenerate_vem_reproduce_cem() {
    for seed in 0..6u64 {
        let (g, _) = sample_affiliation(120, 3, 0.5, 0.15, &[0.3, 0.3, 0.4], seed % 2 == 1, seed).unwrap();
        for post_passes in [0, 1] {
            let base = FitConfig { seed, starts: 3, n0: 30, post_passes, ..Default::default() };
            let cem = fit::fit(&g, 3, Algorithm::OnlineCem, &base).unwrap();
            let saem = fit::fit(&g, 3, Algorithm::OnlineSaem, &FitConfig { sampling: Sampling::Argmax, ..base.clone() }).unwrap();
            let vem = fit::fit(&g, 3, Algorithm::OnlineVem, &FitConfig { degenerate_tau: true, ..base.clone() }).unwrap();
            same_fit(&cem, &saem);
            assert_eq!(cem.labels, vem.labels, "seed {seed}");
            assert_eq!(cem.params, vem.params, "seed {seed}");
        }
    }
}

#[test]
fn seeded_fits_repeat_exactly() {
    let (g, _) = sample_affiliation(150, 3, 0.5, 0.1, &[0.3, 0.3, 0.4], false, 2).unwrap();
    for algo in Algorithm::ALL {
        let cfg = FitConfig { seed: 9, starts: 3, n0: 40, ..Default::default() };
        same_fit(&fit::fit(&g, 3, algo, &cfg).unwrap(), &fit::fit(&g, 3, algo, &cfg).unwrap());
    }
}

#[test]
fn two_cliques_are_separated_in_one_pass() {
    let (g, truth) = two_cliques(30);
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..60).collect();
        o.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
        o
    };
    let g = g.permuted(&order).unwrap();
    let truth: Vec<usize> = order.iter().map(|&i| truth[i]).collect();
    for algo in [Algorithm::OnlineVem, Algorithm::OnlineSaem, Algorithm::OnlineCem] {
        let cfg = FitConfig { post_passes: 0, n0: 10, ..Default::default() };
        let res = fit::fit(&g, 2, algo, &cfg).unwrap();
        assert_eq!(adjusted_rand(&res.labels, &truth).unwrap(), 1.0, "{algo}");
        for a in 0..2 {
            for b in 0..2 {
                let p = res.params.psi(a, b);
                if a == b {
                    assert!(p >= 0.99, "{algo}: diagonal {p}");
                } else {
                    assert!(p <= 0.01, "{algo}: off-diagonal {p}");
                }
            }
        }
    }
}

#[test]
fn split_move_undoes_a_merge() {
    let (g, truth) = sample_affiliation(150, 3, 0.6, 0.05, &[1.0 / 3.0; 3], false, 8).unwrap();
    let mut merged: Vec<usize> = truth.labels.iter().map(|&z| z.min(1)).collect();
    merged[0] = 2;
    let mut f: Box<dyn OnlineFitter> = Box::new(VariationalState::resume(&g, mixnet::Tau::one_hot(&merged, 3), ModelParams::affiliation(3, 0.5, 0.1, false).unwrap(), &FitConfig::default()).unwrap());
    f.reset_labels(&g, &merged).unwrap();
    assert!(fit::try_split(&g, &mut f, 2, 2, &mut seeded(1)).unwrap());
    assert_eq!(adjusted_rand(&f.tau().argmax(), &truth.labels).unwrap(), 1.0);
}

#[test]
fn single_stage_growth_equals_plain_fit() {
    let params = ModelParams::affiliation(3, 0.6, 0.05, false).unwrap();
    let spec = GrowthSpec {
        template: Template::Custom(params.clone()),
        initial: 90,
        additions: vec![],
        algorithm: Algorithm::OnlineVem,
        replicates: 1,
        split_candidates: 3,
    };
    let cfg = FitConfig { starts: 3, ..Default::default() };
    let rows = run_growth(&spec, &cfg, 21, false).unwrap();
    assert_eq!(rows.len(), 1);
    let rep = derive_seed(21, &[0]);
    let (g, truth) = sample_mixnet(90, &params, derive_seed(rep, &[0])).unwrap();
    let plain = fit::fit(&g, 3, Algorithm::OnlineVem, &FitConfig { seed: derive_seed(rep, &[2]), ..cfg }).unwrap();
    assert_eq!(rows[0].ari, adjusted_rand(&plain.labels, &truth.labels).unwrap());
}

#[test]
fn count_graphs_fit_with_poisson_edges() {
    let p = ModelParams::new(EdgeFamily::Poisson, false, vec![0.5, 0.5], vec![vec![3.0, 0.2], vec![0.2, 2.0]]).unwrap();
    let (g, truth) = sample_mixnet(200, &p, 6).unwrap();
    assert_eq!(g.kind(), EdgeKind::Count);
    let res = fit::fit(&g, 2, Algorithm::OnlineVem, &FitConfig::default()).unwrap();
    assert_eq!(res.params.family(), EdgeFamily::Poisson);
    assert!(adjusted_rand(&res.labels, &truth.labels).unwrap() > 0.99);
}
