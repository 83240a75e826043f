//! Poisson edges: a directed network of interaction counts.

use mixnet::graph::sample_mixnet;
use mixnet::metrics::adjusted_rand;
use mixnet::{fit, Algorithm, EdgeFamily, FitConfig, ModelParams};

fn main() -> mixnet::Result<()> {
    let psi = vec![vec![4.0, 0.5, 0.1], vec![0.2, 2.0, 1.0], vec![0.1, 0.1, 3.0]];
    let truth_params = ModelParams::new(EdgeFamily::Poisson, true, vec![0.3, 0.3, 0.4], psi)?;
    let (g, truth) = sample_mixnet(400, &truth_params, 5)?;
    println!("{} nodes, {} links, total count {}", g.n(), g.edge_count(), g.total_mass());
    let res = fit::fit(&g, 3, Algorithm::OnlineVem, &FitConfig::default())?;
    println!("ARI {:.3}", adjusted_rand(&res.labels, &truth.labels)?);
    for row in res.params.psi_rows() {
        println!("  {}", row.iter().map(|m| format!("{m:6.3}")).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
