//! Bootstrap error estimates for sparsified Laplacians.
//!
//! Every replicate reweights the sample's distinct edges with a multinomial
//! vector instead of materialising resampled draws; the two are equal in
//! distribution. Replicate `b` owns the random stream `(seed, "outer", b)`
//! and its inner replicate `b'` owns `(seed, "outer/inner", b, b')`, so the
//! results do not depend on the thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{FunctionalEvaluator, FunctionalSpec, LaplacianOperand};
use crate::graph::{CutVector, Graph};
use crate::report::format_number;
use crate::rng::{stream, StreamRng};
use crate::sampling::{multinomial_counts_int, SparsifiedSample};
use crate::spectral::{bottom_eigenvalues, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub b_outer: usize,
    pub b_inner: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            b_outer: 50,
            b_inner: 30,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn new(alpha: f64, seed: u64) -> Self {
        BootstrapConfig {
            alpha,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_outer < 2 || self.b_inner < 2 {
            return Err(Error::InvalidArgument(format!(
                "replicate counts must be at least 2 (outer {}, inner {})",
                self.b_outer, self.b_inner
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// The smallest member `a0` of `values` with `#{a <= a0} / |values| >= level`.
pub fn empirical_quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty set".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level must lie in (0, 1), got {level}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("quantile input contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len();
    // the ratio test avoids rounding trouble in ceil(level * len)
    let idx = (0..len).find(|&i| (i + 1) as f64 / len as f64 >= level).unwrap_or(len - 1);
    Ok(sorted[idx])
}

/// Resamples `N = sum(base)` draws with probabilities `base / N`, collapsed
/// onto the categories of `base`.
pub fn multinomial_weights(base: &[u64], rng: &mut StreamRng) -> Vec<u64> {
    let total = base.iter().sum();
    multinomial_counts_int(total, base, rng)
}

fn outer_weights(counts: &[u64], seed: u64, b: usize) -> Vec<u64> {
    multinomial_weights(counts, &mut stream(seed, "outer", &[b as u64]))
}

fn inner_weights(outer: &[u64], seed: u64, b: usize, b2: usize) -> Vec<u64> {
    multinomial_weights(outer, &mut stream(seed, "outer/inner", &[b as u64, b2 as u64]))
}

/// Mean and divide-by-`B` standard deviation. A constant input has exactly
/// zero spread.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len;
    (mean, var.sqrt())
}

/// Raw outputs of the double bootstrap.
#[derive(Debug, Clone)]
pub struct Algorithm1Replicates {
    /// `psi(L*_b, L_hat)` for each outer replicate.
    pub eps_star: Vec<f64>,
    /// Studentised outer replicates.
    pub zeta: Vec<f64>,
    pub mu_hat: f64,
    pub sigma_hat: f64,
}

impl Algorithm1Replicates {
    /// The shifted and scaled replicates `mu + sigma zeta_b`.
    pub fn calibrated(&self) -> Vec<f64> {
        self.zeta.iter().map(|z| self.mu_hat + self.sigma_hat * z).collect()
    }

    pub fn quantile(&self, level: f64) -> Result<f64> {
        empirical_quantile(&self.calibrated(), level)
    }
}

/// Runs both bootstrap loops for `spec` on `sample`.
///
/// The Frobenius norm is computed through its square: the returned replicates
/// are those of the squared functional. [`algorithm1_quantile`] maps back.
pub fn algorithm1_replicates(
    sample: &SparsifiedSample,
    spec: &FunctionalSpec,
    cfg: &BootstrapConfig,
) -> Result<Algorithm1Replicates> {
    cfg.validate()?;
    let internal = match spec {
        FunctionalSpec::Frobenius => &FunctionalSpec::FrobeniusSq,
        other => other,
    };
    let counts = sample.counts();
    let base = FunctionalEvaluator::new(internal, LaplacianOperand::sampled(sample))?;
    let per_outer: Vec<(f64, f64)> = (0..cfg.b_outer)
        .into_par_iter()
        .map(|b| {
            let ctx = |e: Error| e.context(format!("outer replicate {b}"));
            let w_star = outer_weights(&counts, cfg.seed, b);
            let eps_star = base.eval(&LaplacianOperand::reweighted(sample, &w_star)).map_err(ctx)?;
            let inner = FunctionalEvaluator::new(internal, LaplacianOperand::reweighted(sample, &w_star)).map_err(ctx)?;
            let eps_inner = (0..cfg.b_inner)
                .map(|b2| {
                    let w2 = inner_weights(&w_star, cfg.seed, b, b2);
                    inner
                        .eval(&LaplacianOperand::reweighted(sample, &w2))
                        .map_err(|e| e.context(format!("outer replicate {b}, inner replicate {b2}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mu, sd) = mean_sd(&eps_inner);
            let zeta = if sd == 0.0 { 0.0 } else { (eps_star - mu) / sd };
            Ok((eps_star, zeta))
        })
        .collect::<Result<_>>()?;
    let eps_star: Vec<f64> = per_outer.iter().map(|p| p.0).collect();
    let zeta: Vec<f64> = per_outer.iter().map(|p| p.1).collect();
    let (mu_hat, sigma_hat) = mean_sd(&eps_star);
    Ok(Algorithm1Replicates {
        eps_star,
        zeta,
        mu_hat,
        sigma_hat,
    })
}

/// Algorithm 1 output with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub functional: String,
    pub q_hat: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub alpha: f64,
    #[serde(rename = "B_outer")]
    pub b_outer: usize,
    #[serde(rename = "B_inner")]
    pub b_inner: usize,
    pub seed: u64,
}

impl QuantileEstimate {
    pub const CSV_HEADER: [&'static str; 8] =
        ["functional", "q_hat", "mu_hat", "sigma_hat", "alpha", "B_outer", "B_inner", "seed"];

    fn from_replicates(
        reps: &Algorithm1Replicates,
        spec: &FunctionalSpec,
        cfg: &BootstrapConfig,
        level: f64,
        alpha: f64,
    ) -> Result<Self> {
        let q = reps.quantile(level)?;
        let (q_hat, mu_hat, sigma_hat) = match spec {
            FunctionalSpec::Frobenius => {
                let roots: Vec<f64> = reps.eps_star.iter().map(|e| e.sqrt()).collect();
                let (mu, sd) = mean_sd(&roots);
                (q.max(0.0).sqrt(), mu, sd)
            }
            _ => (q, reps.mu_hat, reps.sigma_hat),
        };
        Ok(QuantileEstimate {
            functional: spec.tag().to_string(),
            q_hat,
            mu_hat,
            sigma_hat,
            alpha,
            b_outer: cfg.b_outer,
            b_inner: cfg.b_inner,
            seed: cfg.seed,
        })
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.functional.clone(),
            format_number(self.q_hat),
            format_number(self.mu_hat),
            format_number(self.sigma_hat),
            format_number(self.alpha),
            self.b_outer.to_string(),
            self.b_inner.to_string(),
            self.seed.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(estimates: &[QuantileEstimate], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for e in estimates {
            w.write_record(e.csv_record())?;
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(estimates: &[QuantileEstimate], mut out: W) -> Result<()> {
        for e in estimates {
            serde_json::to_writer(&mut out, e).map_err(|err| Error::Io(err.into()))?;
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Algorithm 1: the `1 - alpha` quantile estimate of `psi(L_hat, L)`.
pub fn algorithm1_quantile(sample: &SparsifiedSample, spec: &FunctionalSpec, cfg: &BootstrapConfig) -> Result<QuantileEstimate> {
    let reps = algorithm1_replicates(sample, spec, cfg)?;
    QuantileEstimate::from_replicates(&reps, spec, cfg, 1.0 - cfg.alpha, cfg.alpha)
}

/// Estimates at several levels from one set of replicates.
pub fn algorithm1_quantiles(
    sample: &SparsifiedSample,
    spec: &FunctionalSpec,
    cfg: &BootstrapConfig,
    levels: &[f64],
) -> Result<Vec<QuantileEstimate>> {
    let reps = algorithm1_replicates(sample, spec, cfg)?;
    levels
        .iter()
        .map(|&l| QuantileEstimate::from_replicates(&reps, spec, cfg, l, 1.0 - l))
        .collect()
}

/// Cut estimates and the sample-only data needed to bootstrap them.
#[derive(Debug, Clone)]
pub struct CutStatistics {
    pub c_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// For each cut, the sample entries that cross it.
    crossing: Vec<Vec<u32>>,
    /// `w(e)/p(e)` per sample entry.
    values: Vec<f64>,
    counts: Vec<u64>,
    draws: u64,
}

impl CutStatistics {
    pub fn num_cuts(&self) -> usize {
        self.c_hat.len()
    }

    /// Entries of the sample crossing cut `k`.
    pub fn crossing(&self, k: usize) -> &[u32] {
        &self.crossing[k]
    }

    /// `max over cuts of |sum_e (W_e - c_e) v_e| / (N sigma(x))`, zero terms for `sigma = 0`.
    pub fn xi(&self, weights: &[u64]) -> f64 {
        let n = self.draws as f64;
        let mut best = 0.0f64;
        for (k, cross) in self.crossing.iter().enumerate() {
            let s = self.sigma_hat[k];
            if s == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for &i in cross {
                let i = i as usize;
                acc += (weights[i] as f64 - self.counts[i] as f64) * self.values[i];
            }
            best = best.max(acc.abs() / (n * s));
        }
        best
    }
}

/// Cut estimates `C_hat(x)` and the population spread of the per-draw values.
pub fn cut_statistics(sample: &SparsifiedSample, cuts: &[CutVector]) -> Result<CutStatistics> {
    if cuts.is_empty() {
        return Err(Error::InvalidArgument("no cuts given".into()));
    }
    let n = sample.n();
    for (k, c) in cuts.iter().enumerate() {
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: c.len(),
            })
            .map_err(|e| e.context(format!("cut {k}")));
        }
    }
    let entries = sample.entries();
    let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
    let counts = sample.counts();
    let draws = sample.draws();
    let nf = draws as f64;
    let per_cut: Vec<(Vec<u32>, f64, f64)> = cuts
        .par_iter()
        .map(|cut| {
            let cross: Vec<u32> = entries
                .iter()
                .enumerate()
                .filter(|(_, e)| cut.get(e.u) != cut.get(e.v))
                .map(|(i, _)| i as u32)
                .collect();
            let crossing_draws: u64 = cross.iter().map(|&i| counts[i as usize]).sum();
            let c_hat = cross.iter().map(|&i| counts[i as usize] as f64 * values[i as usize]).sum::<f64>() / nf;
            let first = cross.first().map(|&i| values[i as usize]);
            let constant = cross.is_empty()
                || (crossing_draws == draws && cross.iter().all(|&i| Some(values[i as usize]) == first));
            let sigma = if constant {
                0.0
            } else {
                let inside: f64 = cross
                    .iter()
                    .map(|&i| counts[i as usize] as f64 * (values[i as usize] - c_hat).powi(2))
                    .sum();
                let outside = (draws - crossing_draws) as f64 * c_hat * c_hat;
                ((inside + outside) / nf).sqrt()
            };
            (cross, c_hat, sigma)
        })
        .collect();
    let mut stats = CutStatistics {
        c_hat: Vec::with_capacity(cuts.len()),
        sigma_hat: Vec::with_capacity(cuts.len()),
        crossing: Vec::with_capacity(cuts.len()),
        values,
        counts,
        draws,
    };
    for (cross, c, s) in per_cut {
        stats.crossing.push(cross);
        stats.c_hat.push(c);
        stats.sigma_hat.push(s);
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutInterval {
    pub id: usize,
    pub c_hat: f64,
    pub sigma_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutCIResult {
    pub q_hat: f64,
    pub cuts: Vec<CutInterval>,
    pub cmax_interval: (f64, f64),
    pub cmin_interval: (f64, f64),
    pub alpha: f64,
    pub b_outer: usize,
    pub seed: u64,
}

impl CutCIResult {
    pub const CSV_HEADER: [&'static str; 10] =
        ["kind", "id", "c_hat", "sigma_hat", "lo", "hi", "q_hat", "alpha", "B_outer", "seed"];

    fn from_parts(stats: &CutStatistics, q_hat: f64, alpha: f64, b_outer: usize, seed: u64) -> Self {
        let cuts: Vec<CutInterval> = stats
            .c_hat
            .iter()
            .zip(&stats.sigma_hat)
            .enumerate()
            .map(|(id, (&c, &s))| CutInterval {
                id,
                c_hat: c,
                sigma_hat: s,
                lo: c - s * q_hat,
                hi: c + s * q_hat,
            })
            .collect();
        let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&CutInterval) -> f64| cuts.iter().map(g).fold(init, f);
        let cmax_interval = (fold(f64::max, f64::NEG_INFINITY, |c| c.lo), fold(f64::max, f64::NEG_INFINITY, |c| c.hi));
        let cmin_interval = (fold(f64::min, f64::INFINITY, |c| c.lo), fold(f64::min, f64::INFINITY, |c| c.hi));
        CutCIResult {
            q_hat,
            cuts,
            cmax_interval,
            cmin_interval,
            alpha,
            b_outer,
            seed,
        }
    }

    /// Per-cut rows, then one `cmax` and one `cmin` row whose `c_hat` is the
    /// extreme point estimate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        let meta = [format_number(self.q_hat), format_number(self.alpha), self.b_outer.to_string(), self.seed.to_string()];
        for c in &self.cuts {
            let mut rec = vec![
                "cut".to_string(),
                c.id.to_string(),
                format_number(c.c_hat),
                format_number(c.sigma_hat),
                format_number(c.lo),
                format_number(c.hi),
            ];
            rec.extend(meta.iter().cloned());
            w.write_record(&rec)?;
        }
        let cmax = self.cuts.iter().map(|c| c.c_hat).fold(f64::NEG_INFINITY, f64::max);
        let cmin = self.cuts.iter().map(|c| c.c_hat).fold(f64::INFINITY, f64::min);
        for (kind, point, (lo, hi)) in [("cmax", cmax, self.cmax_interval), ("cmin", cmin, self.cmin_interval)] {
            let mut rec = vec![
                kind.to_string(),
                String::new(),
                format_number(point),
                String::new(),
                format_number(lo),
                format_number(hi),
            ];
            rec.extend(meta.iter().cloned());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cut statistics plus the outer bootstrap replicates of Algorithm 2.
#[derive(Debug, Clone)]
pub struct Algorithm2Replicates {
    pub stats: CutStatistics,
    pub xi: Vec<f64>,
    pub b_outer: usize,
    pub seed: u64,
}

impl Algorithm2Replicates {
    pub fn intervals(&self, level: f64) -> Result<CutCIResult> {
        let q = empirical_quantile(&self.xi, level)?;
        Ok(CutCIResult::from_parts(&self.stats, q, 1.0 - level, self.b_outer, self.seed))
    }
}

pub fn algorithm2_replicates(sample: &SparsifiedSample, cuts: &[CutVector], cfg: &BootstrapConfig) -> Result<Algorithm2Replicates> {
    cfg.validate()?;
    let stats = cut_statistics(sample, cuts)?;
    let counts = sample.counts();
    let xi = (0..cfg.b_outer)
        .into_par_iter()
        .map(|b| stats.xi(&outer_weights(&counts, cfg.seed, b)))
        .collect();
    Ok(Algorithm2Replicates {
        stats,
        xi,
        b_outer: cfg.b_outer,
        seed: cfg.seed,
    })
}

/// Algorithm 2: simultaneous intervals for every cut in `cuts`.
pub fn algorithm2_cut_cis(sample: &SparsifiedSample, cuts: &[CutVector], cfg: &BootstrapConfig) -> Result<CutCIResult> {
    let mut ci = algorithm2_replicates(sample, cuts, cfg)?.intervals(1.0 - cfg.alpha)?;
    ci.alpha = cfg.alpha;
    Ok(ci)
}

/// `[lambda / (1 + q), lambda / (1 - q)]`, with an infinite upper end once `q >= 1`.
pub fn eigen_interval(lambda: f64, q: f64) -> (f64, f64) {
    let hi = if q >= 1.0 { f64::INFINITY } else { lambda / (1.0 - q) };
    (lambda / (1.0 + q), hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigCIResult {
    pub q_hat: f64,
    /// `lambda_1..lambda_r` of the sparsified Laplacian.
    pub eigenvalues: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    pub alpha: f64,
    pub b_outer: usize,
    pub seed: u64,
}

impl EigCIResult {
    pub const CSV_HEADER: [&'static str; 8] = ["index", "lambda_hat", "lo", "hi", "q_hat", "alpha", "B_outer", "seed"];

    fn from_parts(eigenvalues: &[f64], q_hat: f64, alpha: f64, b_outer: usize, seed: u64) -> Self {
        let intervals = eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &l)| if j == 0 { (0.0, 0.0) } else { eigen_interval(l, q_hat) })
            .collect();
        EigCIResult {
            q_hat,
            eigenvalues: eigenvalues.to_vec(),
            intervals,
            alpha,
            b_outer,
            seed,
        }
    }

    /// Index `j` (1-based) maximising the gap `lo_{j+1} - hi_j` between
    /// consecutive intervals.
    pub fn largest_gap_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.intervals.len().saturating_sub(1) {
            let gap = self.intervals[j + 1].0 - self.intervals[j].1;
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((j + 1, gap));
            }
        }
        best.map(|b| b.0)
    }

    /// Whether every interval contains the matching entry of `truth`.
    pub fn covers(&self, truth: &[f64]) -> bool {
        self.intervals
            .iter()
            .zip(truth)
            .enumerate()
            .all(|(j, (&(lo, hi), &t))| if j == 0 { true } else { lo <= t && t <= hi })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for (j, (&(lo, hi), &l)) in self.intervals.iter().zip(&self.eigenvalues).enumerate() {
            let lambda = if j == 0 { 0.0 } else { l };
            w.write_record([
                (j + 1).to_string(),
                format_number(lambda),
                format_number(lo),
                format_number(hi),
                format_number(self.q_hat),
                format_number(self.alpha),
                self.b_outer.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EigenReplicates {
    pub eigenvalues: Vec<f64>,
    pub xi: Vec<f64>,
    pub b_outer: usize,
    pub seed: u64,
}

impl EigenReplicates {
    pub fn intervals(&self, level: f64) -> Result<EigCIResult> {
        let q = empirical_quantile(&self.xi, level)?;
        Ok(EigCIResult::from_parts(&self.eigenvalues, q, 1.0 - level, self.b_outer, self.seed))
    }
}

/// Bootstrap replicates of `max_{2<=j<=r} |lambda_j(L*) / lambda_j(L_hat) - 1|`.
///
/// `lambda_j(L_hat)` is zero exactly for `j` up to the number of connected
/// components of the sampled graph (counting vertices no sampled edge
/// touches); those terms are skipped because a replicate can only drop edges.
pub fn eigenvalue_replicates(sample: &SparsifiedSample, r: usize, cfg: &BootstrapConfig, solver: &SolverConfig) -> Result<EigenReplicates> {
    cfg.validate()?;
    if r < 2 || r > sample.n() {
        return Err(Error::InvalidArgument(format!("r must lie in [2, n = {}], got {r}", sample.n())));
    }
    let base_graph: Graph = sample.to_graph(None)?;
    let zeros = base_graph.num_components();
    let lambda = bottom_eigenvalues(&sample.operator_unchecked(None), r, solver)
        .map_err(|e| e.context("spectrum of the sparsified Laplacian"))?;
    let counts = sample.counts();
    let xi = (0..cfg.b_outer)
        .into_par_iter()
        .map(|b| {
            let w = outer_weights(&counts, cfg.seed, b);
            let star = bottom_eigenvalues(&sample.operator_unchecked(Some(&w)), r, solver)
                .map_err(|e| e.context(format!("outer replicate {b}")))?;
            Ok((1..r)
                .filter(|&j| j >= zeros)
                .map(|j| (star[j] / lambda[j] - 1.0).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(EigenReplicates {
        eigenvalues: lambda,
        xi,
        b_outer: cfg.b_outer,
        seed: cfg.seed,
    })
}

pub fn eigenvalue_cis(sample: &SparsifiedSample, r: usize, cfg: &BootstrapConfig, solver: &SolverConfig) -> Result<EigCIResult> {
    let mut ci = eigenvalue_replicates(sample, r, cfg, solver)?.intervals(1.0 - cfg.alpha)?;
    ci.alpha = cfg.alpha;
    Ok(ci)
}

/// `sqrt(N0 / N) q0`, for `N >= N0`.
pub fn extrapolate_quantile(q0: f64, n0: u64, n: u64) -> Result<f64> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("N0 must be positive".into()));
    }
    if n < n0 {
        return Err(Error::InvalidArgument(format!("cannot extrapolate backwards from N0 = {n0} to N = {n}")));
    }
    if !(q0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("q0 must be nonnegative, got {q0}")));
    }
    Ok((n0 as f64 / n as f64).sqrt() * q0)
}

/// Smallest `N1 >= N0` whose extrapolated quantile is at most `threshold`.
pub fn forecast_sample_size(q0: f64, n0: u64, threshold: f64) -> Result<u64> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    extrapolate_quantile(q0, n0.max(1), n0.max(1))?;
    let n0 = n0.max(1);
    let ratio = q0 / threshold;
    let guess = (n0 as f64 * ratio * ratio).ceil();
    if guess >= u64::MAX as f64 / 2.0 {
        return Ok(u64::MAX);
    }
    let mut n1 = (guess as u64).max(n0);
    let at = |n: u64| (n0 as f64 / n as f64).sqrt() * q0;
    while at(n1) > threshold {
        n1 += 1;
    }
    while n1 > n0 && at(n1 - 1) <= threshold {
        n1 -= 1;
    }
    Ok(n1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators;
    use crate::sampling::{draw_sample, edge_weight_probs};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample_of(g: &Graph, draws: u64, seed: u64) -> SparsifiedSample {
        draw_sample(g, &edge_weight_probs(g).unwrap(), draws, seed).unwrap()
    }

    fn small_cfg(seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            b_outer: 20,
            b_inner: 10,
            alpha: 0.1,
            seed,
        }
    }

    #[test]
    fn quantile_examples() {
        let tenths: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(empirical_quantile(&tenths, 0.9).unwrap(), 0.9);
        assert_eq!(empirical_quantile(&[3.5], 0.01).unwrap(), 3.5);
        assert_eq!(empirical_quantile(&[3.5], 0.99).unwrap(), 3.5);
        assert_eq!(empirical_quantile(&[1.0, 1.0, 1.0, 5.0], 0.75).unwrap(), 1.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::default().validate().is_ok());
        assert!(BootstrapConfig { b_outer: 1, ..Default::default() }.validate().is_err());
        assert!(BootstrapConfig { alpha: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn multinomial_weight_examples() {
        let mut rng = stream(1, "t", &[]);
        assert_eq!(multinomial_weights(&[0, 7, 0], &mut rng), vec![0, 7, 0]);
        let w = multinomial_weights(&[3, 0, 5, 2], &mut rng);
        assert_eq!(w.iter().sum::<u64>(), 10);
        assert_eq!(w[1], 0);
    }

    #[test]
    fn multinomial_weight_moments() {
        let n = 10_000u64;
        let draws = 2000;
        let firsts: Vec<f64> = (0..draws)
            .map(|i| multinomial_weights(&[n / 2, n / 2], &mut stream(9, "moments", &[i]))[0] as f64)
            .collect();
        let mean = firsts.iter().sum::<f64>() / draws as f64;
        let var = firsts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let expected_var = n as f64 * 0.25;
        let se = (expected_var / draws as f64).sqrt();
        assert!((mean - n as f64 / 2.0).abs() <= 3.0 * se);
        assert!((var / expected_var - 1.0).abs() <= 0.1);
    }

    #[test]
    fn single_edge_is_exact_for_every_estimator() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        let s = sample_of(&g, 8, 1);
        for spec in [FunctionalSpec::Frobenius, FunctionalSpec::FrobeniusSq, FunctionalSpec::operator_norm(), FunctionalSpec::regression(vec![1.0, -1.0], 0.5)] {
            let q = algorithm1_quantile(&s, &spec, &small_cfg(3)).unwrap();
            assert_eq!((q.q_hat, q.mu_hat, q.sigma_hat), (0.0, 0.0, 0.0), "{spec}");
        }
        let cut = CutVector::from_bools(&[true, false]);
        let ci = algorithm2_cut_cis(&s, &[cut], &small_cfg(3)).unwrap();
        assert_eq!(ci.q_hat, 0.0);
        assert_eq!(ci.cuts[0].sigma_hat, 0.0);
        assert_eq!(ci.cuts[0].lo, ci.cuts[0].hi);
        let eig = eigenvalue_cis(&s, 2, &small_cfg(3), &SolverConfig::eigen()).unwrap();
        assert_eq!(eig.q_hat, 0.0);
        assert_eq!(eig.intervals[0], (0.0, 0.0));
        assert_eq!(eig.intervals[1], (eig.eigenvalues[1], eig.eigenvalues[1]));
        assert_relative_eq!(eig.eigenvalues[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn frobenius_pipeline_is_root_of_squared() {
        let g = generators::erdos_renyi(30, 0.3, 4);
        let s = sample_of(&g, 40, 2);
        let cfg = small_cfg(8);
        let sq = algorithm1_quantile(&s, &FunctionalSpec::FrobeniusSq, &cfg).unwrap();
        let root = algorithm1_quantile(&s, &FunctionalSpec::Frobenius, &cfg).unwrap();
        assert_eq!(root.q_hat, sq.q_hat.sqrt());
    }

    #[test]
    fn algorithm1_is_schedule_independent() {
        let g = generators::erdos_renyi(40, 0.2, 5);
        let s = sample_of(&g, 60, 1);
        for spec in [FunctionalSpec::FrobeniusSq, FunctionalSpec::operator_norm()] {
            let a = algorithm1_quantile(&s, &spec, &small_cfg(2)).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
            let b = pool.install(|| algorithm1_quantile(&s, &spec, &small_cfg(2)).unwrap());
            assert_eq!(a, b);
            let c = algorithm1_quantile(&s, &spec, &small_cfg(3)).unwrap();
            assert_ne!(a.q_hat, c.q_hat);
        }
    }

    #[test]
    fn algorithm1_quantile_lies_within_calibrated_range() {
        let g = generators::erdos_renyi(25, 0.3, 6);
        for seed in 0..5 {
            let s = sample_of(&g, 30, seed);
            let reps = algorithm1_replicates(&s, &FunctionalSpec::FrobeniusSq, &small_cfg(seed)).unwrap();
            let cal = reps.calibrated();
            let lo = cal.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = cal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let q90 = reps.quantile(0.9).unwrap();
            let q95 = reps.quantile(0.95).unwrap();
            assert!(lo <= q90 && q90 <= q95 && q95 <= hi);
        }
    }

    #[test]
    fn cut_statistics_hand_example() {
        // three draws: one of edge {0,1} twice with value 1.5 would not fit the
        // example, so build the sample directly with values {0, 1, 1}
        use crate::sampling::{SampleEntry, Scheme};
        let s = SparsifiedSample::from_entries(
            3,
            vec![
                SampleEntry { edge: 0, u: 0, v: 1, count: 2, value: 1.0 },
                SampleEntry { edge: 1, u: 1, v: 2, count: 1, value: 4.0 },
            ],
            0,
            Scheme::EdgeWeight,
        )
        .unwrap();
        // x = {0}: crosses {0,1} only, so C_i = (1, 1, 0)
        let stats = cut_statistics(&s, &[CutVector::from_bools(&[true, false, false]), CutVector::zeros(3)]).unwrap();
        assert_relative_eq!(stats.c_hat[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(stats.sigma_hat[0].powi(2), 2.0 / 9.0, epsilon = 1e-15);
        assert_eq!((stats.c_hat[1], stats.sigma_hat[1]), (0.0, 0.0));
    }

    #[test]
    fn single_edge_cut_is_exact() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        let s = sample_of(&g, 5, 0);
        let stats = cut_statistics(&s, &[CutVector::from_bools(&[false, true])]).unwrap();
        assert_eq!(stats.c_hat[0], 1.0);
        assert_eq!(stats.sigma_hat[0], 0.0);
    }

    #[test]
    fn cut_intervals_are_centered() {
        let g = generators::erdos_renyi(40, 0.2, 2);
        let s = sample_of(&g, 80, 3);
        let cuts = generators::bernoulli_cuts(40, 30, 5);
        let ci = algorithm2_cut_cis(&s, &cuts, &small_cfg(1)).unwrap();
        for c in &ci.cuts {
            assert!(c.lo <= c.c_hat && c.c_hat <= c.hi);
            assert_relative_eq!(c.hi - c.c_hat, c.c_hat - c.lo, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(c.hi - c.c_hat, c.sigma_hat * ci.q_hat, max_relative = 1e-9, epsilon = 1e-12);
        }
        assert!(ci.cmax_interval.0 <= ci.cmax_interval.1);
        assert!(ci.cmin_interval.0 <= ci.cmin_interval.1);
        assert!(ci.cmin_interval.1 <= ci.cmax_interval.1);
        let reps = algorithm2_replicates(&s, &cuts, &small_cfg(1)).unwrap();
        assert!(reps.xi.iter().all(|x| *x >= 0.0));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let again = pool.install(|| algorithm2_cut_cis(&s, &cuts, &small_cfg(1)).unwrap());
        assert_eq!(ci, again);
    }

    #[test]
    fn cut_xi_matches_per_draw_definition() {
        // expand the sample into individual draws and evaluate the statistic literally
        let g = generators::erdos_renyi(15, 0.4, 7);
        let s = sample_of(&g, 25, 4);
        let cuts = generators::bernoulli_cuts(15, 6, 1);
        let stats = cut_statistics(&s, &cuts).unwrap();
        let w = outer_weights(&s.counts(), 3, 0);
        let draws: Vec<(usize, usize)> = s
            .entries()
            .iter()
            .enumerate()
            .flat_map(|(i, e)| std::iter::repeat_n((i, e.count as usize), e.count as usize))
            .collect();
        let mut oracle = 0.0f64;
        for (k, cut) in cuts.iter().enumerate() {
            let ci: Vec<f64> = draws
                .iter()
                .map(|&(i, _)| {
                    let e = s.entries()[i];
                    if cut.get(e.u) != cut.get(e.v) { e.value } else { 0.0 }
                })
                .collect();
            let nn = ci.len() as f64;
            let mean = ci.iter().sum::<f64>() / nn;
            let sd = (ci.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / nn).sqrt();
            assert_relative_eq!(mean, stats.c_hat[k], max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(sd, stats.sigma_hat[k], max_relative = 1e-9, epsilon = 1e-14);
            if sd > 0.0 {
                // spread entry i's replicate weight evenly over its draws
                let sum: f64 = draws
                    .iter()
                    .zip(&ci)
                    .map(|(&(i, c), v)| (w[i] as f64 / c as f64 - 1.0) * v)
                    .sum();
                oracle = oracle.max((sum / nn).abs() / sd);
            }
        }
        assert_relative_eq!(stats.xi(&w), oracle, max_relative = 1e-9);
    }

    #[test]
    fn cut_length_mismatch() {
        let g = generators::path(4);
        let s = sample_of(&g, 5, 0);
        assert!(cut_statistics(&s, &[CutVector::zeros(3)]).is_err());
        assert!(cut_statistics(&s, &[]).is_err());
    }

    #[test]
    fn eigen_interval_examples() {
        let (lo, hi) = eigen_interval(2.0, 0.25);
        assert_relative_eq!(lo, 1.6);
        assert_relative_eq!(hi, 2.0 / 0.75);
        assert_eq!(eigen_interval(2.0, 1.0).1, f64::INFINITY);
    }

    #[test]
    fn eigen_cis_on_small_graph() {
        let g = generators::erdos_renyi(30, 0.4, 3);
        let s = sample_of(&g, 150, 2);
        let res = eigenvalue_cis(&s, 5, &small_cfg(4), &SolverConfig::eigen()).unwrap();
        assert_eq!(res.intervals.len(), 5);
        assert_eq!(res.intervals[0], (0.0, 0.0));
        for j in 1..5 {
            let (lo, hi) = res.intervals[j];
            assert!(lo <= res.eigenvalues[j] && res.eigenvalues[j] <= hi);
        }
        assert!(eigenvalue_cis(&s, 1, &small_cfg(4), &SolverConfig::eigen()).is_err());
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("1,0,0,0,"));
    }

    #[test]
    fn extrapolation_examples() {
        assert_eq!(extrapolate_quantile(1.0, 100, 400).unwrap(), 0.5);
        assert_eq!(extrapolate_quantile(0.7, 100, 100).unwrap(), 0.7);
        assert_eq!(extrapolate_quantile(0.0, 3, 1000).unwrap(), 0.0);
        assert!(extrapolate_quantile(1.0, 100, 99).is_err());
        assert_eq!(forecast_sample_size(1.0, 100, 0.25).unwrap(), 1600);
        assert_eq!(forecast_sample_size(0.1, 100, 0.25).unwrap(), 100);
        assert_eq!(forecast_sample_size(0.5, 200, 0.1).unwrap(), 5000);
    }

    #[test]
    fn quantile_estimate_serialisation() {
        let q = QuantileEstimate {
            functional: "fro".into(),
            q_hat: 0.125,
            mu_hat: 0.1,
            sigma_hat: 0.01,
            alpha: 0.05,
            b_outer: 50,
            b_inner: 30,
            seed: 7,
        };
        let mut buf = Vec::new();
        QuantileEstimate::write_jsonl(&[q.clone()], &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        for key in ["q_hat", "mu_hat", "sigma_hat", "alpha", "B_outer", "B_inner", "seed"] {
            assert!(line.contains(&format!("\"{key}\"")), "{line}");
        }
        let back: QuantileEstimate = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, q);
        let mut csv_buf = Vec::new();
        QuantileEstimate::write_csv(&[q], &mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "functional,q_hat,mu_hat,sigma_hat,alpha,B_outer,B_inner,seed");
        assert_eq!(text.lines().nth(1).unwrap(), "fro,0.125,0.1,0.01,0.05,50,30,7");
    }

    #[test]
    fn reports_keep_the_configured_alpha() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 3.0), (0, 2, 2.0)]).unwrap();
        let s = sample_of(&g, 20, 1);
        let cfg = BootstrapConfig {
            b_outer: 4,
            b_inner: 3,
            ..BootstrapConfig::new(0.05, 2)
        };
        assert_eq!(algorithm1_quantile(&s, &FunctionalSpec::Frobenius, &cfg).unwrap().alpha, 0.05);
        let cuts = [CutVector::from_indices(3, &[0]).unwrap()];
        assert_eq!(algorithm2_cut_cis(&s, &cuts, &cfg).unwrap().alpha, 0.05);
        assert_eq!(eigenvalue_cis(&s, 2, &cfg, &SolverConfig::eigen()).unwrap().alpha, 0.05);
    }

    proptest! {
        #[test]
        fn quantile_is_monotone_in_level(values in proptest::collection::vec(-100.0f64..100.0, 1..60)) {
            let a = empirical_quantile(&values, 0.9).unwrap();
            let b = empirical_quantile(&values, 0.95).unwrap();
            prop_assert!(b >= a);
            prop_assert!(values.contains(&a));
        }

        #[test]
        fn quantile_meets_definition(values in proptest::collection::vec(-10.0f64..10.0, 1..40), level in 0.01f64..0.99) {
            let q = empirical_quantile(&values, level).unwrap();
            let len = values.len() as f64;
            let at = values.iter().filter(|v| **v <= q).count() as f64 / len;
            prop_assert!(at >= level);
            let below = values.iter().filter(|v| **v < q).count() as f64 / len;
            prop_assert!(below < level);
        }

        #[test]
        fn forecast_is_tight(q0 in 0.0f64..10.0, n0 in 1u64..10_000, thr in 0.01f64..5.0) {
            let n1 = forecast_sample_size(q0, n0, thr).unwrap();
            prop_assert!(n1 >= n0);
            prop_assert!(extrapolate_quantile(q0, n0, n1).unwrap() <= thr);
            if n1 > n0 {
                prop_assert!(extrapolate_quantile(q0, n0, n1 - 1).unwrap() > thr);
            }
        }

        #[test]
        fn multinomial_weights_preserve_total(base in proptest::collection::vec(0u64..20, 1..15), seed in 0u64..1000) {
            let w = multinomial_weights(&base, &mut stream(seed, "p", &[]));
            prop_assert_eq!(w.iter().sum::<u64>(), base.iter().sum::<u64>());
            for (a, b) in w.iter().zip(&base) {
                if *b == 0 { prop_assert_eq!(*a, 0); }
            }
        }
    }
}
