//! Runs a reduced affiliation grid and writes the CSV tables.

use mixnet::bench::{reference_models, run_grid, write_tables, BenchSpec};
use mixnet::{Algorithm, FitConfig};

fn main() -> mixnet::Result<()> {
    let out = std::env::temp_dir().join("mixnet-bench-example");
    let spec = BenchSpec {
        models: reference_models(),
        q: vec![3],
        n: vec![150],
        replicates: 3,
        algorithms: vec![Algorithm::OnlineVem, Algorithm::OnlineCem],
        seed: 1,
        directed: false,
        full: false,
        record_timing: true,
        fit: FitConfig { starts: 3, ..Default::default() },
        growth: None,
        out_dir: out.clone(),
    };
    let result = run_grid(&spec)?;
    for c in &result.cells {
        println!("model {} {:<11} ARI {:.3}  B%(lambda) {:7.2}", c.model, c.algo.name(), c.ari_mean, c.bias.bias_lambda);
    }
    for p in write_tables(&result, &out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
