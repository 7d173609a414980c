//! Intervals for the bottom Laplacian eigenvalues of a sparsified kernel
//! graph. The widest separation between intervals suggests the number of
//! clusters.

use lapcert::bootstrap::{eigenvalue_cis, BootstrapConfig};
use lapcert::harness::generators::three_cluster_mixture;
use lapcert::sampling::{draw_sample, Scheme};
use lapcert::spectral::SolverConfig;

fn main() -> lapcert::Result<()> {
    let (g, _labels) = three_cluster_mixture(40, 0.2, 4)?;
    let probs = Scheme::EffectiveResistance { tol: 1e-10 }.probabilities(&g)?;
    let sample = draw_sample(&g, &probs, (g.num_edges() / 5) as u64, 8)?;
    let ci = eigenvalue_cis(&sample, 6, &BootstrapConfig::new(0.1, 3), &SolverConfig::eigen())?;
    for (j, (lambda, (lo, hi))) in ci.eigenvalues.iter().zip(&ci.intervals).enumerate() {
        println!("lambda_{} = {lambda:8.4}  in [{lo:.4}, {hi:.4}]", j + 1);
    }
    match ci.largest_gap_index() {
        Some(k) => println!("largest certified gap after index {k}"),
        None => println!("no separated gap"),
    }
    Ok(())
}
