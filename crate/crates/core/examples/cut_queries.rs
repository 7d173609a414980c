//! Simultaneous confidence intervals for many cut values, plus bounds on the
//! largest and smallest of them.

use lapcert::bootstrap::{algorithm2_cut_cis, BootstrapConfig};
use lapcert::graph::CutVector;
use lapcert::harness::generators::{bernoulli_cuts, erdos_renyi};
use lapcert::sampling::{draw_sample, Scheme};

fn main() -> lapcert::Result<()> {
    let g = erdos_renyi(200, 0.1, 1);
    let probs = Scheme::EdgeWeight.probabilities(&g)?;
    let sample = draw_sample(&g, &probs, (g.num_edges() / 10) as u64, 5)?;

    let mut cuts = bernoulli_cuts(g.n(), 50, 9);
    cuts.push(CutVector::from_indices(g.n(), &(0..100).collect::<Vec<_>>())?);
    let ci = algorithm2_cut_cis(&sample, &cuts, &BootstrapConfig::new(0.1, 2))?;

    let mut covered = 0;
    for (cut, interval) in cuts.iter().zip(&ci.cuts) {
        let truth = g.cut_value(cut)?;
        covered += (interval.lo <= truth && truth <= interval.hi) as usize;
    }
    println!("q_hat = {:.4}", ci.q_hat);
    println!("{covered} of {} true cut values inside their intervals", cuts.len());
    println!("max cut in [{:.3}, {:.3}]", ci.cmax_interval.0, ci.cmax_interval.1);
    println!("min cut in [{:.3}, {:.3}]", ci.cmin_interval.0, ci.cmin_interval.1);
    Ok(())
}
