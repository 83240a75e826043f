//! Variational lower bound.

use crate::error::Result;
use crate::family::{base_measure_total, natural_form, ModelParams};
use crate::graph::Graph;
use crate::stats::{PairConvention, SuffStats, Tau};

/// `−Σ_i Σ_q τ_iq log τ_iq`, with `0 log 0 = 0`.
pub fn entropy(tau: &Tau) -> f64 {
    -tau.rows().flatten().filter(|&&t| t > 0.0).map(|&t| t * t.ln()).sum::<f64>()
}

/// `J(τ, θ) = E_τ[log p(X, Z; θ)] + H(τ)`.
///
/// Under the mean-field factorization the expected complete-data
/// log-likelihood is linear in the expected sufficient statistics, so `J`
/// costs one statistics pass.
pub fn lower_bound(g: &Graph, tau: &Tau, params: &ModelParams, convention: PairConvention) -> Result<f64> {
    let conv = convention.effective(g);
    let stats = SuffStats::from_assignment(g, tau, conv)?;
    let base = base_measure_total(g, params.family(), conv);
    Ok(natural_form(&stats, params, base) + entropy(tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{complete_log_likelihood, EdgeFamily};
    use crate::graph::{parse_edge_list, ParseOptions};

    #[test]
    fn hard_rows_reduce_to_complete_loglik() {
        let g = parse_edge_list("a b 2\nb c 1\nc d 3\na d 1", &ParseOptions::count()).unwrap();
        let p = ModelParams::new(EdgeFamily::Poisson, false, vec![0.4, 0.6], vec![vec![1.5, 0.3], vec![0.3, 2.0]]).unwrap();
        let z = vec![0, 1, 1, 0];
        let tau = Tau::one_hot(&z, 2);
        let j = lower_bound(&g, &tau, &p, PairConvention::Distinct).unwrap();
        let l = complete_log_likelihood(&g, &z, &p, PairConvention::Distinct).unwrap();
        assert!((j - l).abs() < 1e-10, "{j} vs {l}");
        assert_eq!(entropy(&tau), 0.0);
    }

    #[test]
    fn uniform_entropy() {
        let tau = Tau::uniform(5, 4);
        assert!((entropy(&tau) - 5.0 * 4f64.ln()).abs() < 1e-12);
    }
}
