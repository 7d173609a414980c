//! Sparsify a random graph and attach bootstrap error bounds for the
//! Frobenius, operator-norm and regression functionals.

use lapcert::bootstrap::{algorithm1_quantile, BootstrapConfig, QuantileEstimate};
use lapcert::functionals::FunctionalSpec;
use lapcert::harness::generators::erdos_renyi;
use lapcert::harness::synth_regression_data;
use lapcert::sampling::{draw_sample, Scheme};

fn main() -> lapcert::Result<()> {
    let g = erdos_renyi(200, 0.1, 1);
    let probs = Scheme::EdgeWeight.probabilities(&g)?;
    let draws = (g.num_edges() / 10) as u64;
    let sample = draw_sample(&g, &probs, draws, 7)?;
    println!(
        "{} edges, {} draws, {} distinct edges kept",
        g.num_edges(),
        sample.draws(),
        sample.num_unique()
    );

    let data = synth_regression_data(&g, 3)?;
    let specs = [
        FunctionalSpec::Frobenius,
        FunctionalSpec::operator_norm(),
        FunctionalSpec::regression(data.y, 0.01),
    ];
    let cfg = BootstrapConfig::new(0.05, 11);
    let estimates = specs
        .iter()
        .map(|spec| algorithm1_quantile(&sample, spec, &cfg))
        .collect::<lapcert::Result<Vec<_>>>()?;
    QuantileEstimate::write_csv(&estimates, std::io::stdout())?;
    Ok(())
}
