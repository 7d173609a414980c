//! The `lapcert` command line.
//!
//! Exit codes: 0 on success (and for `--help`), 1 for usage errors, 2 when
//! the computation itself fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bootstrap::{
    algorithm1_quantile, algorithm2_cut_cis, eigenvalue_cis, extrapolate_quantile, forecast_sample_size,
    BootstrapConfig, QuantileEstimate,
};
use crate::error::Error;
use crate::functionals::FunctionalSpec;
use crate::graph::{load_edge_list, CutVector, EdgeListFormat, Graph, LoadOptions};
use crate::harness::{run_coverage_experiment, write_report, ExperimentConfig};
use crate::report::format_number;
use crate::rng::derive_seed;
use crate::sampling::{draw_sample, Scheme, SparsifiedSample};
use crate::spectral::SolverConfig;

#[derive(Debug, Parser)]
#[command(name = "lapcert", version, about = "Sparsify graph Laplacians and certify the error by bootstrap")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "LAPCERT_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw N edges and write the sample file
    Sparsify(SparsifyArgs),
    /// Bootstrap quantile of an error functional
    Estimate(EstimateArgs),
    /// Simultaneous confidence intervals for cut values
    CutCi(CutCiArgs),
    /// Simultaneous confidence intervals for the smallest eigenvalues
    EigCi(EigCiArgs),
    /// Forecast the sample size needed to reach an error threshold
    Refine(RefineArgs),
    /// Run a coverage experiment described by a TOML file
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ew,
    Er,
    Aer,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum FunctionalArg {
    Fro,
    Fro2,
    Op,
    Reg,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge list (whitespace, .csv, or .mtx)
    #[arg(long)]
    graph: PathBuf,
    /// Vertex ids in the edge list start at 1
    #[arg(long)]
    one_based: bool,
}

#[derive(Debug, Args)]
struct SparsifyArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_enum, default_value = "ew")]
    scheme: SchemeArg,
    /// Number of draws N
    #[arg(long, conflicts_with = "fraction", required_unless_present = "fraction", value_parser = clap::value_parser!(u64).range(1..))]
    n_samples: Option<u64>,
    /// N as a fraction of the edge count (rounded, at least 1)
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Output sample file
    #[arg(long)]
    out: PathBuf,
    /// Sketch accuracy for aer
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Relative residual tolerance for the Laplacian solves of er and aer
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Sample file written by `sparsify`
    #[arg(long)]
    sample: PathBuf,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Debug, Args)]
struct FunctionalArgs {
    #[arg(long, value_enum)]
    functional: FunctionalArg,
    /// Ridge parameter for reg
    #[arg(long)]
    tau: Option<f64>,
    /// Response vector for reg, one value per vertex
    #[arg(long)]
    y: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BootArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    b_outer: usize,
    #[arg(long, default_value_t = 30)]
    b_inner: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    functional: FunctionalArgs,
    #[command(flatten)]
    boot: BootArgs,
    /// CSV output (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CutCiArgs {
    #[command(flatten)]
    sample: SampleArgs,
    /// One cut per line: a 0/1 string of length n or a list of member indices
    #[arg(long)]
    cuts: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates
    #[arg(long, default_value_t = 50)]
    b: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EigCiArgs {
    #[command(flatten)]
    sample: SampleArgs,
    /// Number of smallest eigenvalues
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    r: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates
    #[arg(long, default_value_t = 50)]
    b: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    functional: FunctionalArgs,
    #[command(flatten)]
    boot: BootArgs,
    /// Target error
    #[arg(long)]
    threshold: f64,
    /// Sample sizes at which to report the extrapolated quantile
    #[arg(long, value_delimiter = ',')]
    grid: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoverageArgs {
    /// Experiment description (TOML)
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Compute(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 2;
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Sparsify(a) => sparsify(a),
        Command::Estimate(a) => estimate(a),
        Command::CutCi(a) => cut_ci(a),
        Command::EigCi(a) => eig_ci(a),
        Command::Refine(a) => refine(a),
        Command::Coverage(a) => coverage(a),
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Compute(Error::Io(e).context(path.display().to_string())))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io(e).context(p.display().to_string()))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn load_graph(a: &GraphArgs) -> CliResult<Graph> {
    let opts = LoadOptions {
        format: EdgeListFormat::from_path(&a.graph),
        one_based: a.one_based,
        ..Default::default()
    };
    let loaded = load_edge_list(open(&a.graph)?, &opts).map_err(|e| e.context(a.graph.display().to_string()))?;
    Ok(loaded.graph)
}

fn load_sample(a: &SampleArgs) -> CliResult<(Graph, SparsifiedSample)> {
    let g = load_graph(&a.graph)?;
    let s = SparsifiedSample::read_from(open(&a.sample)?, &g).map_err(|e| e.context(a.sample.display().to_string()))?;
    Ok((g, s))
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn boot_config(b: &BootArgs) -> CliResult<BootstrapConfig> {
    check_alpha(b.alpha)?;
    let cfg = BootstrapConfig {
        b_outer: b.b_outer,
        b_inner: b.b_inner,
        alpha: b.alpha,
        seed: b.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn read_vector(path: &Path, n: usize) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
    let mut y = Vec::with_capacity(n);
    for (idx, line) in text.lines().enumerate() {
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: f64 = tok
                .parse()
                .map_err(|_| usage(format!("{}: line {}: '{tok}' is not a number", path.display(), idx + 1)))?;
            y.push(v);
        }
    }
    if y.len() != n {
        return Err(usage(format!("{}: expected {n} values, found {}", path.display(), y.len())));
    }
    Ok(y)
}

fn functional_spec(a: &FunctionalArgs, n: usize) -> CliResult<FunctionalSpec> {
    Ok(match a.functional {
        FunctionalArg::Fro => FunctionalSpec::Frobenius,
        FunctionalArg::Fro2 => FunctionalSpec::FrobeniusSq,
        FunctionalArg::Op => FunctionalSpec::operator_norm(),
        FunctionalArg::Reg => {
            let (Some(tau), Some(y)) = (a.tau, a.y.as_ref()) else {
                return Err(usage("--functional reg needs both --tau and --y"));
            };
            if !(tau > 0.0) {
                return Err(usage(format!("--tau must be positive, got {tau}")));
            }
            FunctionalSpec::regression(read_vector(y, n)?, tau)
        }
    })
}

fn sparsify(a: SparsifyArgs) -> CliResult<()> {
    if let Some(f) = a.fraction {
        if !(f > 0.0 && f.is_finite()) {
            return Err(usage(format!("--fraction must be positive, got {f}")));
        }
    }
    if !(a.eps > 0.0 && a.eps <= 1.0) {
        return Err(usage(format!("--eps must lie in (0, 1], got {}", a.eps)));
    }
    if !(a.tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let g = load_graph(&a.graph)?;
    let m = g.num_edges();
    let draws = match (a.n_samples, a.fraction) {
        (Some(n), _) => n,
        (None, Some(f)) => ((f * m as f64).round() as u64).max(1),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let scheme = match a.scheme {
        SchemeArg::Ew => Scheme::EdgeWeight,
        SchemeArg::Er => Scheme::EffectiveResistance { tol: a.tol },
        SchemeArg::Aer => Scheme::ApproxEffectiveResistance {
            eps: a.eps,
            seed: derive_seed(a.seed, "aer", &[]),
            tol: a.tol,
        },
    };
    let probs = scheme.probabilities(&g)?;
    let sample = draw_sample(&g, &probs, draws, a.seed)?;
    let mut out = output(Some(&a.out))?;
    sample.write_to(&mut out)?;
    out.flush()?;
    let (pmin, pmax) = probs
        .probs()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    println!("scheme {}", probs.scheme());
    println!("edges {m}");
    println!("N {draws}");
    println!("unique {}", sample.num_unique());
    println!("max_scale {}", format_number(sample.max_scale()));
    println!("p_min {}", format_number(pmin));
    println!("p_max {}", format_number(pmax));
    Ok(())
}

fn estimate(a: EstimateArgs) -> CliResult<()> {
    let cfg = boot_config(&a.boot)?;
    let (g, sample) = load_sample(&a.sample)?;
    let spec = functional_spec(&a.functional, g.n())?;
    let q = algorithm1_quantile(&sample, &spec, &cfg)?;
    QuantileEstimate::write_csv(&[q], output(a.out.as_deref())?)?;
    Ok(())
}

/// One cut per nonempty line; `#` starts a comment line. A line made only of
/// `0`/`1` characters is a membership string, anything else a list of member
/// indices separated by spaces or commas.
fn read_cuts(path: &Path, n: usize) -> CliResult<Vec<CutVector>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
    let mut cuts = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = |msg: String| usage(format!("{}: line {}: {msg}", path.display(), idx + 1));
        let is_bits = t.len() > 1 && t.bytes().all(|b| b == b'0' || b == b'1') || (n == 1 && (t == "0" || t == "1"));
        if is_bits {
            if t.len() != n {
                return Err(bad(format!("cut has length {}, graph has {n} vertices", t.len())));
            }
            let bits: Vec<bool> = t.bytes().map(|b| b == b'1').collect();
            cuts.push(CutVector::from_bools(&bits));
        } else {
            let members = t
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| bad(format!("'{s}' is not a vertex index"))))
                .collect::<CliResult<Vec<_>>>()?;
            cuts.push(CutVector::from_indices(n, &members).map_err(|e| bad(e.to_string()))?);
        }
    }
    if cuts.is_empty() {
        return Err(usage(format!("{}: no cuts", path.display())));
    }
    Ok(cuts)
}

fn cut_ci(a: CutCiArgs) -> CliResult<()> {
    check_alpha(a.alpha)?;
    if a.b < 2 {
        return Err(usage("--b must be at least 2"));
    }
    let (g, sample) = load_sample(&a.sample)?;
    let cuts = read_cuts(&a.cuts, g.n())?;
    let cfg = BootstrapConfig {
        b_outer: a.b,
        alpha: a.alpha,
        seed: a.seed,
        ..Default::default()
    };
    algorithm2_cut_cis(&sample, &cuts, &cfg)?.write_csv(output(a.out.as_deref())?)?;
    Ok(())
}

fn eig_ci(a: EigCiArgs) -> CliResult<()> {
    check_alpha(a.alpha)?;
    if a.b < 2 {
        return Err(usage("--b must be at least 2"));
    }
    let (g, sample) = load_sample(&a.sample)?;
    let r = a.r as usize;
    if r > g.n() {
        return Err(usage(format!("--r {r} exceeds the vertex count {}", g.n())));
    }
    let cfg = BootstrapConfig {
        b_outer: a.b,
        alpha: a.alpha,
        seed: a.seed,
        ..Default::default()
    };
    eigenvalue_cis(&sample, r, &cfg, &SolverConfig::eigen())?.write_csv(output(a.out.as_deref())?)?;
    Ok(())
}

fn refine(a: RefineArgs) -> CliResult<()> {
    let cfg = boot_config(&a.boot)?;
    if !(a.threshold > 0.0) {
        return Err(usage(format!("--threshold must be positive, got {}", a.threshold)));
    }
    let (g, sample) = load_sample(&a.sample)?;
    let n0 = sample.draws();
    if let Some(&bad) = a.grid.iter().find(|&&n| n < n0) {
        return Err(usage(format!("grid point {bad} is below the current sample size {n0}")));
    }
    let spec = functional_spec(&a.functional, g.n())?;
    let q0 = algorithm1_quantile(&sample, &spec, &cfg)?.q_hat;
    let n1 = forecast_sample_size(q0, n0, a.threshold)?;
    if n1 == n0 {
        eprintln!("no refinement needed: q_hat {} <= {}", format_number(q0), format_number(a.threshold));
    } else {
        eprintln!("forecast N1 = {n1} (q_hat {} at N0 = {n0})", format_number(q0));
    }
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["kind", "N", "q_hat"])?;
    w.write_record(["current", &n0.to_string(), &format_number(q0)])?;
    w.write_record(["forecast", &n1.to_string(), &format_number(extrapolate_quantile(q0, n0, n1)?)])?;
    for &n in &a.grid {
        w.write_record(["grid", &n.to_string(), &format_number(extrapolate_quantile(q0, n0, n)?)])?;
    }
    w.flush()?;
    Ok(())
}

fn coverage(a: CoverageArgs) -> CliResult<()> {
    let cfg = ExperimentConfig::load(&a.config).map_err(|e| usage(e.to_string()))?;
    let report = run_coverage_experiment(&cfg)?;
    write_report(&report, output(a.out.as_deref())?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn cut_lines_in_both_forms() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cuts.txt");
        std::fs::write(&p, "# comment\n0110\n1 2\n\n0,3\n").unwrap();
        let cuts = read_cuts(&p, 4).unwrap();
        assert_eq!(cuts.len(), 3);
        assert_eq!(cuts[0], cuts[1]);
        assert_eq!(cuts[2], CutVector::from_bools(&[true, false, false, true]));
        std::fs::write(&p, "0110\n011\n").unwrap();
        match read_cuts(&p, 4) {
            Err(Failure::Usage(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            _ => panic!("expected a usage error"),
        }
    }
}
