//! Fits the three online algorithms to the same graph.

use mixnet::graph::sample_affiliation;
use mixnet::metrics::{adjusted_rand, affiliation_estimates};
use mixnet::{fit, Algorithm, FitConfig};

fn main() -> mixnet::Result<()> {
    let (g, truth) = sample_affiliation(1000, 4, 0.3, 0.05, &[0.25; 4], false, 7)?;
    let cfg = FitConfig { seed: 3, ..Default::default() };
    for algo in [Algorithm::OnlineSaem, Algorithm::OnlineVem, Algorithm::OnlineCem] {
        let res = fit::fit(&g, 4, algo, &cfg)?;
        let (lambda, eps) = affiliation_estimates(&res.params);
        println!(
            "{:<12} ARI {:.3}  lambda {:.4}  eps {:.4}  J {:.1}  {:.2}s",
            algo.name(),
            adjusted_rand(&res.labels, &truth.labels)?,
            lambda,
            eps,
            res.j,
            res.seconds
        );
    }
    Ok(())
}
