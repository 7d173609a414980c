//! Sample an edge list that is read block by block, never holding the whole
//! graph in memory.

use std::io::{BufReader, Cursor};

use lapcert::bootstrap::{algorithm1_quantile, BootstrapConfig};
use lapcert::functionals::FunctionalSpec;
use lapcert::graph::{EdgeBlockReader, LoadOptions};
use lapcert::harness::generators::erdos_renyi;
use lapcert::sampling::poisson_stream_sample;

fn main() -> lapcert::Result<()> {
    let g = erdos_renyi(300, 0.05, 1);
    let mut text = String::new();
    for e in g.edges() {
        text.push_str(&format!("{} {} {}\n", e.u, e.v, e.weight));
    }

    let reader = EdgeBlockReader::new(BufReader::new(Cursor::new(text)), LoadOptions::default(), 500)?;
    let target = (g.num_edges() / 10) as u64;
    let sample = poisson_stream_sample(reader, g.n(), g.num_edges(), target, 42)?;
    println!(
        "target {target} draws, realised {}, {} distinct edges",
        sample.draws(),
        sample.num_unique()
    );

    let est = algorithm1_quantile(&sample, &FunctionalSpec::Frobenius, &BootstrapConfig::new(0.05, 1))?;
    println!("95% Frobenius error bound: {:.4}", est.q_hat);
    Ok(())
}
