//! Absorbs nodes one by one as they join the graph.

use mixnet::fit::{start_online, OnlineFitter};
use mixnet::graph::{grow_mixnet, sample_mixnet};
use mixnet::metrics::adjusted_rand;
use mixnet::rng::seeded;
use mixnet::{Algorithm, FitConfig, ModelParams};

fn main() -> mixnet::Result<()> {
    let params = ModelParams::affiliation(3, 0.4, 0.05, false)?;
    let (mut g, mut truth) = sample_mixnet(150, &params, 2)?;
    let cfg = FitConfig { n0: 150, ..Default::default() };
    let mut fitter: Box<dyn OnlineFitter> = start_online(&g, 3, Algorithm::OnlineVem, &cfg, 0)?;
    let mut rng = seeded(9);
    for batch in 0..5 {
        grow_mixnet(&mut g, &mut truth, 100, &mut rng)?;
        while fitter.absorbed() < g.n() {
            fitter.absorb_next(&g)?;
        }
        let ari = adjusted_rand(&fitter.tau().argmax(), &truth.labels)?;
        println!("after batch {batch}: {} nodes, ARI {ari:.3}, alpha {:.3?}", g.n(), fitter.params().alpha());
    }
    Ok(())
}
