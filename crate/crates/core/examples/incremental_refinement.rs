//! Start with a small sample, estimate its error, and forecast the sample
//! size needed to reach a target accuracy.

use lapcert::bootstrap::{algorithm1_quantile, extrapolate_quantile, forecast_sample_size, BootstrapConfig};
use lapcert::functionals::FunctionalSpec;
use lapcert::harness::generators::erdos_renyi;
use lapcert::sampling::{draw_sample, Scheme};

fn main() -> lapcert::Result<()> {
    let g = erdos_renyi(200, 0.1, 1);
    let probs = Scheme::EdgeWeight.probabilities(&g)?;
    let cfg = BootstrapConfig::new(0.05, 2);
    let n0 = (g.num_edges() / 50) as u64;
    let first = draw_sample(&g, &probs, n0, 3)?;
    let q0 = algorithm1_quantile(&first, &FunctionalSpec::Frobenius, &cfg)?.q_hat;

    let threshold = q0 / 3.0;
    let n1 = forecast_sample_size(q0, n0, threshold)?;
    println!("N0 = {n0}: q_hat = {q0:.3}; target {threshold:.3} needs N = {n1}");
    for n in [n0, 2 * n0, n1] {
        println!("  forecast at N = {n:5}: {:.3}", extrapolate_quantile(q0, n0, n)?);
    }

    let second = draw_sample(&g, &probs, n1, 4)?;
    let q1 = algorithm1_quantile(&second, &FunctionalSpec::Frobenius, &cfg)?.q_hat;
    println!("re-estimated at N = {n1}: q_hat = {q1:.3}");
    Ok(())
}
