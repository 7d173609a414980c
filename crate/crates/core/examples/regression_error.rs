//! Error bound for Laplacian-regularised regression solved on a sparsifier
//! instead of the full graph.

use lapcert::bootstrap::{algorithm1_quantile, BootstrapConfig};
use lapcert::functionals::{eval_functional, FunctionalSpec, LaplacianOperand};
use lapcert::harness::generators::erdos_renyi;
use lapcert::harness::synth_regression_data;
use lapcert::sampling::{draw_sample, Scheme};

fn main() -> lapcert::Result<()> {
    let g = erdos_renyi(150, 0.1, 2);
    let data = synth_regression_data(&g, 6)?;
    let spec = FunctionalSpec::regression(data.y, 0.01);

    let probs = Scheme::EdgeWeight.probabilities(&g)?;
    let sample = draw_sample(&g, &probs, (g.num_edges() / 10) as u64, 1)?;
    let est = algorithm1_quantile(&sample, &spec, &BootstrapConfig::new(0.05, 4))?;
    let actual = eval_functional(&spec, &LaplacianOperand::sampled(&sample), &LaplacianOperand::Exact(&g))?;

    println!("95% bound on |beta_hat - beta|: {:.5}", est.q_hat);
    println!("actual error on this sample:   {actual:.5}");
    Ok(())
}
