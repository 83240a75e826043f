//! Grows an 11-class network in four stages and tracks clustering quality.

use mixnet::bench::{run_growth, GrowthSpec, Template};
use mixnet::{Algorithm, FitConfig};

fn main() -> mixnet::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse().ok());
    let reps = args.next().flatten().unwrap_or(1);
    let seed = args.next().flatten().unwrap_or(42);
    let spec = GrowthSpec {
        template: Template::ElevenClass,
        initial: 200,
        additions: vec![200, 400, 800],
        algorithm: Algorithm::OnlineVem,
        replicates: reps,
        split_candidates: 3,
    };
    let rows = run_growth(&spec, &FitConfig::default(), seed as u64, true)?;
    println!("replicate  stage  nodes  ari     seconds");
    for r in rows {
        println!("{:>9}  {:>5}  {:>5}  {:.4}  {:.3}", r.replicate, r.stage, r.n, r.ari, r.seconds);
    }
    Ok(())
}
