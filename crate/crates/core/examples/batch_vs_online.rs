//! Weak structure: the batch fit recovers classes a single online pass misses.

use mixnet::graph::sample_affiliation;
use mixnet::metrics::{adjusted_rand, affiliation_estimates};
use mixnet::{fit, Algorithm, FitConfig};

fn main() -> mixnet::Result<()> {
    let (g, truth) = sample_affiliation(500, 5, 0.6, 0.4, &[0.2; 5], false, 3)?;
    for algo in [Algorithm::OnlineVem, Algorithm::BatchVem] {
        let res = fit::fit(&g, 5, algo, &FitConfig::default())?;
        let (lambda, eps) = affiliation_estimates(&res.params);
        println!(
            "{:<11} ARI {:.3}  lambda {:.3}  eps {:.3}  {:.2}s",
            algo.name(),
            adjusted_rand(&res.labels, &truth.labels)?,
            lambda,
            eps,
            res.seconds
        );
    }
    Ok(())
}
