//! Edge sampling distributions and sparsified Laplacians.
//!
//! A [`SparsifiedSample`] stores the outcome of `N` i.i.d. edge draws as
//! per-edge counts. Draw `i` of edge `e` stands for the operator
//! `(w(e)/p(e)) Delta_e`; the sparsified Laplacian is their average, so edge
//! `e` carries weight `c_e w(e) / (N p(e))`. Bootstrap replicates reuse the
//! same entries with different integer weights in place of `c_e`.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{stream, StreamRng};
use crate::spectral::{cg_solve_deflated, EdgeOperator, Nullspace, SolverConfig};

/// How sampling probabilities were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// `p(e) ∝ w(e)`.
    EdgeWeight,
    /// `p(e) ∝ w(e) R_eff(e)` with resistances solved to relative residual `tol`.
    EffectiveResistance { tol: f64 },
    /// Sketched resistances with `k = ceil(24 ln n / eps^2)` projection rows.
    ApproxEffectiveResistance { eps: f64, seed: u64, tol: f64 },
    /// Blockwise Poisson counts over an equal-weight edge stream (`p(e) = 1/m`).
    PoissonStream,
}

impl Scheme {
    /// Short name used in files and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::EdgeWeight => "ew",
            Scheme::EffectiveResistance { .. } => "er",
            Scheme::ApproxEffectiveResistance { .. } => "aer",
            Scheme::PoissonStream => "poisson",
        }
    }

    /// Recomputes the probabilities this scheme assigns to `g`.
    pub fn probabilities(&self, g: &Graph) -> Result<EdgeProbabilities> {
        match *self {
            Scheme::EdgeWeight => edge_weight_probs(g),
            Scheme::EffectiveResistance { tol } => effective_resistance_probs(g, tol),
            Scheme::ApproxEffectiveResistance { eps, seed, tol } => {
                approx_effective_resistance_probs(g, eps, seed, tol)
            }
            Scheme::PoissonStream => {
                if g.num_edges() == 0 {
                    return Err(Error::EmptyGraph);
                }
                let m = g.num_edges();
                EdgeProbabilities::new(vec![1.0 / m as f64; m], Scheme::PoissonStream)
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::EdgeWeight | Scheme::PoissonStream => write!(f, "{}", self.name()),
            Scheme::EffectiveResistance { tol } => write!(f, "er tol={tol:e}"),
            Scheme::ApproxEffectiveResistance { eps, seed, tol } => {
                write!(f, "aer eps={eps} seed={seed} tol={tol:e}")
            }
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) form; missing parameters take defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let name = parts.next().unwrap_or("");
        let mut tol = SolverConfig::solve().tol;
        let mut eps = 1.0;
        let mut seed = 0u64;
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("bad scheme parameter '{kv}'")))?;
            let bad = |_| Error::InvalidArgument(format!("bad value for scheme parameter '{k}'"));
            match k {
                "tol" => tol = v.parse().map_err(bad)?,
                "eps" => eps = v.parse().map_err(bad)?,
                "seed" => seed = v.parse().map_err(|_| Error::InvalidArgument(format!("bad seed '{v}'")))?,
                _ => return Err(Error::InvalidArgument(format!("unknown scheme parameter '{k}'"))),
            }
        }
        match name {
            "ew" => Ok(Scheme::EdgeWeight),
            "er" => Ok(Scheme::EffectiveResistance { tol }),
            "aer" => Ok(Scheme::ApproxEffectiveResistance { eps, seed, tol }),
            "poisson" => Ok(Scheme::PoissonStream),
            other => Err(Error::InvalidArgument(format!("unknown sampling scheme '{other}'"))),
        }
    }
}

/// A sampling distribution over the edges of a graph, aligned with `Graph::edges`.
#[derive(Debug, Clone)]
pub struct EdgeProbabilities {
    probs: Vec<f64>,
    scheme: Scheme,
}

impl EdgeProbabilities {
    /// Validates that every entry is positive and the total is 1 within 1e-12.
    pub fn new(probs: Vec<f64>, scheme: Scheme) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if let Some(e) = probs.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "edge {e} has sampling probability {}",
                probs[e]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(EdgeProbabilities { probs, scheme })
    }

    /// Normalises nonnegative scores into probabilities.
    pub fn from_scores(scores: Vec<f64>, scheme: Scheme) -> Result<Self> {
        let total: f64 = scores.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidArgument(format!("sampling scores sum to {total}")));
        }
        let mut probs: Vec<f64> = scores.iter().map(|s| s / total).collect();
        // fold the rounding residue into the largest entry
        let resid = 1.0 - probs.iter().sum::<f64>();
        if let Some(i) = (0..probs.len()).max_by(|&a, &b| probs[a].total_cmp(&probs[b])) {
            probs[i] += resid;
        }
        EdgeProbabilities::new(probs, scheme)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn edge_weight_probs(g: &Graph) -> Result<EdgeProbabilities> {
    if g.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    let total = g.total_weight();
    let probs = g.edges().iter().map(|e| e.weight / total).collect();
    EdgeProbabilities::new(probs, Scheme::EdgeWeight)
        .or_else(|_| EdgeProbabilities::from_scores(g.edges().iter().map(|e| e.weight).collect(), Scheme::EdgeWeight))
}

/// Above this vertex count resistances are solved per edge rather than per vertex.
const COLUMN_SOLVE_MAX_N: usize = 2048;

/// Exact effective resistances `delta_e^T L^+ delta_e` for every edge.
///
/// When the graph has more edges than vertices (and `n` is moderate) this
/// solves once per vertex for the columns of `L^+` and reads each resistance
/// off three entries; otherwise it solves once per edge. Both paths use
/// component-deflated CG, so disconnected graphs are handled per component.
pub fn effective_resistances(g: &Graph, tol: f64) -> Result<Vec<f64>> {
    let cfg = SolverConfig::solve().with_tol(tol);
    cfg.validate()?;
    let n = g.n();
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let nullspace = Nullspace::Components(g.component_ids());
    if m > n && n <= COLUMN_SOLVE_MAX_N {
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut b = vec![0.0; n];
                b[i] = 1.0;
                cg_solve_deflated(g, &b, nullspace, &cfg)
                    .map(|s| s.x)
                    .map_err(|e| e.context(format!("resistance solve for vertex {i}")))
            })
            .collect::<Result<_>>()?;
        Ok(g.edges()
            .iter()
            .map(|e| columns[e.u][e.u] + columns[e.v][e.v] - 2.0 * columns[e.u][e.v])
            .collect())
    } else {
        g.edges()
            .par_iter()
            .enumerate()
            .map(|(k, e)| {
                let mut b = vec![0.0; n];
                b[e.u] = 1.0;
                b[e.v] = -1.0;
                cg_solve_deflated(g, &b, nullspace, &cfg)
                    .map(|s| s.x[e.u] - s.x[e.v])
                    .map_err(|err| err.context(format!("resistance solve for edge {k} ({}, {})", e.u, e.v)))
            })
            .collect()
    }
}

pub fn effective_resistance_probs(g: &Graph, tol: f64) -> Result<EdgeProbabilities> {
    let r = effective_resistances(g, tol)?;
    let scores = g.edges().iter().zip(&r).map(|(e, r)| e.weight * r).collect();
    EdgeProbabilities::from_scores(scores, Scheme::EffectiveResistance { tol })
}

/// Number of sketch rows for accuracy `eps` on `n` vertices.
pub fn sketch_rows(n: usize, eps: f64) -> usize {
    ((24.0 * (n as f64).ln() / (eps * eps)).ceil() as usize).max(1)
}

/// Sketched effective-resistance probabilities.
///
/// Each of the `k` rows draws a Rademacher vector `rho` over edges with
/// entries `±1/sqrt(k)`, forms `b = B^T (sqrt(w) rho)` and solves `L z = b`;
/// the score of edge `{i, j}` is `w (sum over rows of (z_i - z_j)^2)`.
pub fn approx_effective_resistance_probs(g: &Graph, eps: f64, seed: u64, tol: f64) -> Result<EdgeProbabilities> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    let cfg = SolverConfig::solve().with_tol(tol);
    cfg.validate()?;
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = g.n();
    let k = sketch_rows(n, eps);
    let amp = 1.0 / (k as f64).sqrt();
    let sqrt_w: Vec<f64> = g.edges().iter().map(|e| e.weight.sqrt()).collect();
    let nullspace = Nullspace::Components(g.component_ids());
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|row| {
            let mut rng = stream(seed, "aer-row", &[row as u64]);
            let mut b = vec![0.0; n];
            for (e, sw) in g.edges().iter().zip(&sqrt_w) {
                let s = if rng.random::<bool>() { amp } else { -amp } * sw;
                b[e.u] += s;
                b[e.v] -= s;
            }
            let z = cg_solve_deflated(g, &b, nullspace, &cfg)
                .map_err(|err| err.context(format!("sketch row {row}")))?
                .x;
            Ok(g.edges().iter().map(|e| (z[e.u] - z[e.v]).powi(2)).collect())
        })
        .collect::<Result<_>>()?;
    let mut scores = vec![0.0; m];
    for row in &rows {
        for (s, v) in scores.iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, e) in scores.iter_mut().zip(g.edges()) {
        *s *= e.weight;
    }
    EdgeProbabilities::from_scores(scores, Scheme::ApproxEffectiveResistance { eps, seed, tol })
}

/// Multinomial counts by the conditional-binomial method in fixed category order.
///
/// `weights` need not be normalised; categories with zero weight get zero.
pub fn multinomial_counts(total: u64, weights: &[f64], rng: &mut StreamRng) -> Vec<u64> {
    let mut out = vec![0; weights.len()];
    let mut suffix = vec![0.0; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    let mut remaining = total;
    let last = weights.iter().rposition(|w| *w > 0.0);
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if w <= 0.0 {
            continue;
        }
        if Some(i) == last {
            out[i] = remaining;
            break;
        }
        let p = (w / suffix[i]).clamp(0.0, 1.0);
        let c = binomial(remaining, p, rng);
        out[i] = c;
        remaining -= c;
    }
    out
}

/// Multinomial counts with integer category weights, exact conditional ratios.
pub fn multinomial_counts_int(total: u64, base: &[u64], rng: &mut StreamRng) -> Vec<u64> {
    let mut out = vec![0; base.len()];
    let mut mass: u64 = base.iter().sum();
    let mut remaining = total;
    for (i, &b) in base.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if b == 0 {
            continue;
        }
        if b == mass {
            out[i] = remaining;
            break;
        }
        let c = binomial(remaining, b as f64 / mass as f64, rng);
        out[i] = c;
        remaining -= c;
        mass -= b;
    }
    out
}

fn binomial(n: u64, p: f64, rng: &mut StreamRng) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
}

/// One sampled edge with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEntry {
    /// Index into the source graph's edge list (or stream row).
    pub edge: usize,
    pub u: usize,
    pub v: usize,
    pub count: u64,
    /// `w(e) / p(e)`, the operator weight of a single draw.
    pub value: f64,
}

/// The outcome of `N` i.i.d. edge draws, stored per distinct edge.
#[derive(Debug, Clone)]
pub struct SparsifiedSample {
    n: usize,
    draws: u64,
    entries: Vec<SampleEntry>,
    seed: u64,
    scheme: Scheme,
}

impl SparsifiedSample {
    /// Builds a sample from raw entries; checks counts and vertex ranges.
    pub fn from_entries(n: usize, entries: Vec<SampleEntry>, seed: u64, scheme: Scheme) -> Result<Self> {
        let draws: u64 = entries.iter().map(|e| e.count).sum();
        if draws == 0 {
            return Err(Error::InvalidArgument("sample has no draws".into()));
        }
        for e in &entries {
            if e.count == 0 || e.u >= n || e.v >= n || e.u == e.v || !(e.value > 0.0) || !e.value.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid sample entry {e:?}")));
            }
        }
        Ok(SparsifiedSample {
            n,
            draws,
            entries,
            seed,
            scheme,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The number of draws `N`.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn entries(&self) -> &[SampleEntry] {
        &self.entries
    }

    pub fn num_unique(&self) -> usize {
        self.entries.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.count).collect()
    }

    /// `s_e = w(e) / (N p(e))` for entry `i`.
    pub fn scale(&self, i: usize) -> f64 {
        self.entries[i].value / self.draws as f64
    }

    /// Largest per-entry scale, a diagnostic for heavy-tailed probabilities.
    pub fn max_scale(&self) -> f64 {
        (0..self.entries.len()).map(|i| self.scale(i)).fold(0.0, f64::max)
    }

    /// Checks a bootstrap weight vector against the entry set.
    pub fn check_reweight(&self, weights: &[u64]) -> Result<()> {
        if weights.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                actual: weights.len(),
            });
        }
        let total: u64 = weights.iter().sum();
        if total != self.draws {
            return Err(Error::InvalidArgument(format!(
                "reweight sums to {total}, sample has N = {}",
                self.draws
            )));
        }
        Ok(())
    }

    /// Edge coefficient of entry `i` under `weights` (or the sample's own counts).
    #[inline]
    pub(crate) fn coefficient(&self, i: usize, weights: Option<&[u64]>) -> f64 {
        let r = weights.map_or(self.entries[i].count, |w| w[i]);
        r as f64 * self.entries[i].value / self.draws as f64
    }

    /// The (reweighted) sparsified Laplacian as an edge operator.
    pub fn operator(&self, weights: Option<&[u64]>) -> Result<EdgeOperator> {
        if let Some(w) = weights {
            self.check_reweight(w)?;
        }
        Ok(self.operator_unchecked(weights))
    }

    pub(crate) fn operator_unchecked(&self, weights: Option<&[u64]>) -> EdgeOperator {
        let terms = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| weights.is_none_or(|w| w[*i] > 0))
            .map(|(i, e)| (e.u, e.v, self.coefficient(i, weights)))
            .collect();
        EdgeOperator::new(self.n, terms)
    }

    /// The sparsified Laplacian as a [`Graph`] (for component counts and
    /// dense spectra).
    pub fn to_graph(&self, weights: Option<&[u64]>) -> Result<Graph> {
        let op = self.operator(weights)?;
        Graph::new(self.n, op.terms)
    }

    /// Serialises the sample: a header, then one `edge_index count` line per entry.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# lapcert sample")?;
        writeln!(out, "n {}", self.n)?;
        writeln!(out, "draws {}", self.draws)?;
        writeln!(out, "seed {}", self.seed)?;
        writeln!(out, "scheme {}", self.scheme)?;
        writeln!(out, "entries {}", self.entries.len())?;
        for e in &self.entries {
            writeln!(out, "{} {}", e.edge, e.count)?;
        }
        Ok(())
    }

    /// Reads a sample written by [`write_to`](Self::write_to), re-deriving the
    /// per-draw values `w/p` from `g` and the recorded scheme.
    pub fn read_from<R: BufRead>(source: R, g: &Graph) -> Result<Self> {
        let mut header: std::collections::HashMap<String, (usize, String)> = Default::default();
        let mut pairs: Vec<(usize, usize, u64)> = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, rest) = t.split_once(char::is_whitespace).unwrap_or((t, ""));
            if key.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                header.insert(key.to_string(), (lineno, rest.trim().to_string()));
                continue;
            }
            let parse_err = |m: &str| Error::Parse {
                line: lineno,
                message: m.to_string(),
            };
            let mut f = t.split_whitespace();
            let edge = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad edge index"))?;
            let count = f.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad count"))?;
            if f.next().is_some() {
                return Err(parse_err("expected 'edge_index count'"));
            }
            pairs.push((lineno, edge, count));
        }
        let get = |k: &str| {
            header.get(k).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("sample header is missing '{k}'"),
            })
        };
        let num = |k: &str| -> Result<u64> {
            let (line, v) = get(k)?;
            v.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("bad value for '{k}'"),
            })
        };
        let n = num("n")? as usize;
        let draws = num("draws")?;
        let seed = num("seed")?;
        let expected_entries = num("entries")? as usize;
        let scheme: Scheme = get("scheme")?.1.parse()?;
        if n != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                actual: n,
            });
        }
        if pairs.len() != expected_entries {
            return Err(Error::Parse {
                line: 0,
                message: format!("header declares {expected_entries} entries, found {}", pairs.len()),
            });
        }
        let probs = scheme.probabilities(g)?;
        let mut entries = Vec::with_capacity(pairs.len());
        for (line, edge, count) in pairs {
            let e = g.edges().get(edge).ok_or_else(|| Error::Parse {
                line,
                message: format!("edge index {edge} out of range ({} edges)", g.num_edges()),
            })?;
            entries.push(SampleEntry {
                edge,
                u: e.u,
                v: e.v,
                count,
                value: e.weight / probs.probs()[edge],
            });
        }
        let s = SparsifiedSample::from_entries(n, entries, seed, scheme)?;
        if s.draws != draws {
            return Err(Error::Parse {
                line: 0,
                message: format!("header declares {draws} draws, counts sum to {}", s.draws),
            });
        }
        Ok(s)
    }
}

/// Draws `N` edges i.i.d. from `p` and returns the collapsed sample.
pub fn draw_sample(g: &Graph, p: &EdgeProbabilities, draws: u64, seed: u64) -> Result<SparsifiedSample> {
    if draws == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if p.len() != g.num_edges() {
        return Err(Error::DimensionMismatch {
            expected: g.num_edges(),
            actual: p.len(),
        });
    }
    let mut rng = stream(seed, "draw", &[]);
    let counts = multinomial_counts(draws, p.probs(), &mut rng);
    let entries = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(i, &c)| {
            let e = g.edges()[i];
            SampleEntry {
                edge: i,
                u: e.u,
                v: e.v,
                count: c,
                value: e.weight / p.probs()[i],
            }
        })
        .collect();
    SparsifiedSample::from_entries(g.n(), entries, seed, p.scheme())
}

/// Poisson approximation to `N_target` draws from an equal-weight edge stream.
///
/// Each row independently receives a Poisson(`N_target / m`) count, using the
/// stream `(seed, "poisson", block)` for each block so blocks can be
/// processed in any order. Only rows with a positive count are retained. The
/// realised total is the sample's `N`.
pub fn poisson_stream_sample<I>(blocks: I, n: usize, m: usize, target: u64, seed: u64) -> Result<SparsifiedSample>
where
    I: IntoIterator<Item = Result<Vec<(usize, usize, f64)>>>,
{
    if target == 0 || m == 0 {
        return Err(Error::InvalidArgument("N_target and |E| must be positive".into()));
    }
    let rate = target as f64 / m as f64;
    let poisson = Poisson::new(rate).map_err(|e| Error::InvalidArgument(format!("Poisson rate {rate}: {e}")))?;
    let mut kept: Vec<(usize, usize, usize, u64)> = Vec::new();
    let mut weight: Option<f64> = None;
    let mut row = 0usize;
    for (b, block) in blocks.into_iter().enumerate() {
        let block = block?;
        let mut rng = stream(seed, "poisson", &[b as u64]);
        for (i, j, w) in block {
            let expected = *weight.get_or_insert(w);
            if (w - expected).abs() > 1e-12 * expected.abs() {
                return Err(Error::UnequalWeights {
                    row,
                    expected,
                    found: w,
                });
            }
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidGraph(format!("stream row {row}: bad edge ({i}, {j}) for n = {n}")));
            }
            let c = poisson.sample(&mut rng) as u64;
            if c > 0 {
                kept.push((row, i.min(j), i.max(j), c));
            }
            row += 1;
        }
    }
    if row != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: row,
        });
    }
    if kept.is_empty() {
        return Err(Error::EmptyPoissonSample { seed });
    }
    let w = weight.unwrap_or(1.0);
    let entries = kept
        .into_iter()
        .map(|(edge, u, v, count)| SampleEntry {
            edge,
            u,
            v,
            count,
            value: w * m as f64,
        })
        .collect();
    SparsifiedSample::from_entries(n, entries, seed, Scheme::PoissonStream)
}

/// `(sum_e r_e s_e Delta_e) v` with `r` the reweight or the sample counts.
pub fn sparsified_matvec(s: &SparsifiedSample, reweight: Option<&[u64]>, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != s.n {
        return Err(Error::DimensionMismatch {
            expected: s.n,
            actual: v.len(),
        });
    }
    if let Some(w) = reweight {
        s.check_reweight(w)?;
    }
    let mut out = vec![0.0; s.n];
    for (i, e) in s.entries.iter().enumerate() {
        let c = s.coefficient(i, reweight);
        let d = c * (v[e.u] - v[e.v]);
        out[e.u] += d;
        out[e.v] -= d;
    }
    Ok(out)
}
