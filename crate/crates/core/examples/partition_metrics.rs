//! Adjusted Rand index, modularity and the bias/RMSE summary.

use mixnet::graph::sample_affiliation;
use mixnet::metrics::{adjusted_rand, bias_rmse, modularity};
use mixnet::{fit, Algorithm, FitConfig};

fn main() -> mixnet::Result<()> {
    println!("ARI((1,1,2,2), (1,2,1,2)) = {}", adjusted_rand(&[1, 1, 2, 2], &[1, 2, 1, 2])?);
    let (lambda, eps) = (0.5, 0.1);
    let mut fits = Vec::new();
    for seed in 0..5 {
        let (g, truth) = sample_affiliation(300, 3, lambda, eps, &[1.0 / 3.0; 3], false, seed)?;
        let res = fit::fit(&g, 3, Algorithm::OnlineVem, &FitConfig { seed, ..Default::default() })?;
        println!(
            "seed {seed}: ARI {:.3}, modularity truth {:.3} fit {:.3}",
            adjusted_rand(&res.labels, &truth.labels)?,
            modularity(&g, &truth.labels)?,
            modularity(&g, &res.labels)?
        );
        fits.push(res.params);
    }
    let b = bias_rmse(&fits, lambda, eps)?;
    println!("B%(eps) {:.2}  B%(lambda) {:.2}  RMSE(eps) {:.4}  RMSE(lambda) {:.4}", b.bias_eps, b.bias_lambda, b.rmse_eps, b.rmse_lambda);
    Ok(())
}
