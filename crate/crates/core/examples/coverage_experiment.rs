//! Repeat sampling and bootstrapping many times and measure how often the
//! intervals cover the truth.
//!
//! Pass a TOML config path to override the small built-in setup.

use lapcert::harness::{run_coverage_experiment, write_report, ExperimentConfig, GraphSource};

fn main() -> lapcert::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => {
            let mut cfg = ExperimentConfig::desk_scale();
            cfg.graph = GraphSource::ErdosRenyi;
            cfg.n = 80;
            cfg.p = 0.2;
            cfg.trials = 60;
            cfg.cuts = 20;
            cfg
        }
    };
    let report = run_coverage_experiment(&cfg)?;
    write_report(&report, std::io::stdout())?;
    eprintln!("{} trials in {:.1}s", report.trials, report.wall_time.as_secs_f64());
    Ok(())
}
