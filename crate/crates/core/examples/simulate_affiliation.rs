//! Samples an affiliation graph and checks its block densities.

use mixnet::graph::sample_affiliation;

fn main() -> mixnet::Result<()> {
    let (lambda, eps) = (0.7, 0.3);
    let (g, truth) = sample_affiliation(500, 5, lambda, eps, &[0.2; 5], false, 1)?;
    let (mut within, mut between) = (0usize, 0usize);
    for (i, j, _) in g.edge_triples() {
        if truth.labels[i] == truth.labels[j] {
            within += 1;
        } else {
            between += 1;
        }
    }
    let sizes: Vec<usize> = (0..5).map(|c| truth.labels.iter().filter(|&&z| z == c).count()).collect();
    let within_pairs: usize = sizes.iter().map(|s| s * (s - 1) / 2).sum();
    let between_pairs = 500 * 499 / 2 - within_pairs;
    println!("nodes {}, edges {}", g.n(), g.edge_count());
    println!("class sizes {sizes:?}");
    println!("within density  {:.4} (lambda {lambda})", within as f64 / within_pairs as f64);
    println!("between density {:.4} (eps {eps})", between as f64 / between_pairs as f64);
    println!("first lines of the edge list:");
    for line in g.to_edge_list().lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
