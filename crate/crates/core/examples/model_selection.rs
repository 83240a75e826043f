//! Chooses the number of classes by ICL.

use mixnet::graph::sample_affiliation;
use mixnet::metrics::select_q;
use mixnet::{Algorithm, FitConfig};

fn main() -> mixnet::Result<()> {
    let (g, _) = sample_affiliation(500, 5, 0.7, 0.3, &[0.2; 5], false, 12)?;
    let (rows, best) = select_q(&g, 1, 8, Algorithm::OnlineVem, &FitConfig::default())?;
    println!(" Q  loglik         ICL");
    for (k, r) in rows.iter().enumerate() {
        println!("{:>2}  {:>12.1}  {:>12.1}{}", r.q, r.loglik, r.icl, if k == best { "  <- best" } else { "" });
    }
    Ok(())
}
