//! Weighted undirected graphs, their Laplacian action and cut values.
//!
//! A [`Graph`] is immutable once built. Duplicate unordered pairs are merged
//! by summing weights, zero-weight edges are dropped, and self-loops or
//! negative weights are rejected. The Laplacian is never stored: every
//! consumer goes through [`Graph::laplacian_matvec`] or walks the edge list.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Smaller endpoint.
    pub u: usize,
    /// Larger endpoint.
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    total_weight: f64,
    component_ids: Vec<usize>,
    num_components: usize,
}

impl Graph {
    /// Builds a graph from `(i, j, w)` triples.
    ///
    /// An empty edge list is accepted here (the zero Laplacian is a valid
    /// operand); file loaders reject it.
    pub fn new<I>(n: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        for (i, j, w) in triples {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has invalid weight {w}"
                )));
            }
            let key = (i.min(j), i.max(j));
            match index.get(&key) {
                Some(&k) => edges[k].weight += w,
                None => {
                    index.insert(key, edges.len());
                    edges.push(Edge {
                        u: key.0,
                        v: key.1,
                        weight: w,
                    });
                }
            }
        }
        edges.retain(|e| e.weight > 0.0);
        let total_weight = edges.iter().map(|e| e.weight).sum();
        let (component_ids, num_components) = components(n, edges.iter().map(|e| (e.u, e.v)));
        Ok(Graph {
            n,
            edges,
            total_weight,
            component_ids,
            num_components,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Connected-component label of each vertex, labels dense in `0..num_components`.
    pub fn component_ids(&self) -> &[usize] {
        &self.component_ids
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    /// Rescales weights to sum to one; returns the graph and the divisor.
    pub fn normalize_weights(&self) -> Result<(Graph, f64)> {
        if !(self.total_weight > 0.0) {
            return Err(Error::InvalidGraph("total weight is zero".into()));
        }
        let scale = self.total_weight;
        let g = self.scaled(1.0 / scale);
        Ok((g, scale))
    }

    /// Copy with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Graph {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge {
                weight: e.weight * factor,
                ..*e
            })
            .collect();
        let total_weight = edges.iter().map(|e| e.weight).sum();
        Graph {
            n: self.n,
            edges,
            total_weight,
            component_ids: self.component_ids.clone(),
            num_components: self.num_components,
        }
    }

    /// `L v` computed edge by edge.
    pub fn laplacian_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        let mut out = vec![0.0; self.n];
        self.laplacian_matvec_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn laplacian_matvec_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for e in &self.edges {
            let d = e.weight * (v[e.u] - v[e.v]);
            out[e.u] += d;
            out[e.v] -= d;
        }
    }

    /// Total weight of edges crossing the bipartition `x`.
    pub fn cut_value(&self, x: &CutVector) -> Result<f64> {
        check_len(self.n, x.len())?;
        Ok(self
            .edges
            .iter()
            .filter(|e| x.get(e.u) != x.get(e.v))
            .map(|e| e.weight)
            .sum())
    }

    /// Weighted degrees, i.e. the diagonal of `L`.
    pub fn degree_vector(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for e in &self.edges {
            d[e.u] += e.weight;
            d[e.v] += e.weight;
        }
        d
    }

    /// `tr(L^2) = sum_i d_i^2 + 2 sum_e w_e^2`.
    pub fn trace_laplacian_squared(&self) -> f64 {
        let d2: f64 = self.degree_vector().iter().map(|d| d * d).sum();
        let w2: f64 = self.edges.iter().map(|e| e.weight * e.weight).sum();
        d2 + 2.0 * w2
    }

    /// Dense Laplacian. Only for small graphs and test oracles.
    pub fn dense_laplacian(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            m[(e.u, e.u)] += e.weight;
            m[(e.v, e.v)] += e.weight;
            m[(e.u, e.v)] -= e.weight;
            m[(e.v, e.u)] -= e.weight;
        }
        m
    }

    /// Position of the edge `{i, j}` in [`Graph::edges`], if present.
    pub fn find_edge(&self, i: usize, j: usize) -> Option<usize> {
        let (u, v) = (i.min(j), i.max(j));
        self.edges.iter().position(|e| e.u == u && e.v == v)
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Union-find labelling of connected components. Labels follow the order in
/// which each component's smallest vertex appears.
pub(crate) fn components<I>(n: usize, pairs: I) -> (Vec<usize>, usize)
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in pairs {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut ids = vec![0; n];
    let mut next = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        ids[v] = label[r];
    }
    (ids, next)
}

/// A bipartition of the vertex set, stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutVector {
    len: usize,
    words: Vec<u64>,
}

impl CutVector {
    pub fn zeros(len: usize) -> Self {
        CutVector {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut x = CutVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                x.set(i, true);
            }
        }
        x
    }

    /// Cut whose `1` side is `members`.
    pub fn from_indices(len: usize, members: &[usize]) -> Result<Self> {
        let mut x = CutVector::zeros(len);
        for &i in members {
            if i >= len {
                return Err(Error::InvalidArgument(format!(
                    "cut member {i} out of range for n = {len}"
                )));
            }
            x.set(i, true);
        }
        Ok(x)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn complement(&self) -> Self {
        let mut x = self.clone();
        for w in &mut x.words {
            *w = !*w;
        }
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = x.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        x
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len).map(|i| if self.get(i) { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    /// `i j [w]` separated by whitespace.
    Whitespace,
    /// `i,j[,w]`.
    Csv,
    /// Matrix Market symmetric coordinate file.
    MatrixMarket,
}

impl EdgeListFormat {
    /// Guess from a file extension: `.csv`, `.mtx`, anything else is whitespace.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => EdgeListFormat::Csv,
            Some("mtx") => EdgeListFormat::MatrixMarket,
            _ => EdgeListFormat::Whitespace,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: EdgeListFormat,
    pub one_based: bool,
    pub header: bool,
    /// Overrides the inferred vertex count.
    pub n: Option<usize>,
    /// Treat vertex tokens as opaque labels and remap them to dense ids.
    pub remap_ids: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: EdgeListFormat::Whitespace,
            one_based: false,
            header: false,
            n: None,
            remap_ids: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Original label of each dense vertex id when `remap_ids` was set.
    pub id_map: Option<Vec<String>>,
}

/// Reads an edge list. Comment lines start with `#` or `%`.
pub fn load_edge_list<R: BufRead>(source: R, opts: &LoadOptions) -> Result<LoadedGraph> {
    if opts.format == EdgeListFormat::MatrixMarket {
        return load_matrix_market(source, opts);
    }
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut id_map: Vec<String> = Vec::new();
    let mut triples = Vec::new();
    let mut max_id = 0usize;
    let mut header_pending = opts.header;
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields = split_row(trimmed, opts.format);
        let (i, j, w) = if opts.remap_ids {
            let (a, b, w) = raw_row(&fields, lineno)?;
            let mut id = |tok: &str| -> usize {
                *labels.entry(tok.to_string()).or_insert_with(|| {
                    id_map.push(tok.to_string());
                    id_map.len() - 1
                })
            };
            (id(a), id(b), w)
        } else {
            parse_row(&fields, opts.one_based, lineno)?
        };
        if i == j {
            return Err(Error::Parse {
                line: lineno,
                message: format!("self-loop at vertex {i}"),
            });
        }
        max_id = max_id.max(i).max(j);
        triples.push((i, j, w));
    }
    if triples.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let inferred = if opts.remap_ids { id_map.len() } else { max_id + 1 };
    let n = match opts.n {
        Some(n) if n < inferred => {
            return Err(Error::InvalidGraph(format!(
                "vertex count {n} is smaller than the largest id + 1 = {inferred}"
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    let graph = Graph::new(n, triples)?;
    if graph.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(LoadedGraph {
        graph,
        id_map: opts.remap_ids.then_some(id_map),
    })
}

fn split_row(line: &str, format: EdgeListFormat) -> Vec<&str> {
    match format {
        EdgeListFormat::Csv => line.split(',').map(str::trim).collect(),
        _ => line.split_whitespace().collect(),
    }
}

fn raw_row<'a>(fields: &[&'a str], line: usize) -> Result<(&'a str, &'a str, f64)> {
    if fields.len() < 2 || fields.len() > 3 {
        return Err(Error::Parse {
            line,
            message: format!("expected 2 or 3 fields, found {}", fields.len()),
        });
    }
    let w = match fields.get(2) {
        Some(tok) => tok.parse::<f64>().map_err(|_| Error::Parse {
            line,
            message: format!("bad weight '{tok}'"),
        })?,
        None => 1.0,
    };
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("negative or non-finite weight {w}"),
        });
    }
    Ok((fields[0], fields[1], w))
}

fn parse_row(fields: &[&str], one_based: bool, line: usize) -> Result<(usize, usize, f64)> {
    let (a, b, w) = raw_row(fields, line)?;
    let id = |tok: &str| -> Result<usize> {
        let raw: usize = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad vertex id '{tok}'"),
        })?;
        if one_based {
            raw.checked_sub(1).ok_or_else(|| Error::Parse {
                line,
                message: "vertex id 0 in a 1-based file".into(),
            })
        } else {
            Ok(raw)
        }
    };
    Ok((id(a)?, id(b)?, w))
}

fn load_matrix_market<R: BufRead>(source: R, opts: &LoadOptions) -> Result<LoadedGraph> {
    let mut lines = source.lines().enumerate();
    let (_, banner) = lines.next().ok_or(Error::EmptyGraph)?;
    let banner = banner?.to_lowercase();
    let tokens: Vec<&str> = banner.split_whitespace().collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            message: "expected '%%MatrixMarket matrix coordinate <field> symmetric'".into(),
        });
    }
    let pattern = tokens[3] == "pattern";
    if tokens[4] != "symmetric" {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported symmetry '{}'", tokens[4]),
        });
    }
    let mut size: Option<(usize, usize)> = None;
    let mut triples = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let lineno = lineno + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if size.is_none() {
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "expected 'rows cols nnz'".into(),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad size '{s}'"),
                })
            };
            let (r, c) = (parse(fields[0])?, parse(fields[1])?);
            if r != c {
                return Err(Error::Parse {
                    line: lineno,
                    message: "matrix is not square".into(),
                });
            }
            size = Some((r, parse(fields[2])?));
            continue;
        }
        let expected = if pattern { 2 } else { 3 };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let (i, j, _) = parse_row(&fields[..2], true, lineno)?;
        let w = match fields.get(2) {
            Some(tok) => tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad value '{tok}'"),
            })?,
            None => 1.0,
        };
        if !w.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite value {w}"),
            });
        }
        if i == j {
            return Err(Error::Parse {
                line: lineno,
                message: format!("diagonal entry at {}", i + 1),
            });
        }
        // Off-diagonal entries of a Laplacian are -w; adjacency files store +w.
        triples.push((i, j, w.abs()));
    }
    let (n, _) = size.ok_or(Error::EmptyGraph)?;
    if triples.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = opts.n.unwrap_or(n);
    let graph = Graph::new(n, triples)?;
    if graph.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(LoadedGraph {
        graph,
        id_map: None,
    })
}

/// Reads an edge list in fixed-size blocks without building a [`Graph`].
///
/// Rows are returned as they appear in the file (no merging); the row index
/// of each edge is its global position in the stream.
pub struct EdgeBlockReader<R> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
    opts: LoadOptions,
    block_size: usize,
    header_pending: bool,
    done: bool,
}

pub const DEFAULT_BLOCK_SIZE: usize = 1 << 22;

impl<R: BufRead> EdgeBlockReader<R> {
    pub fn new(source: R, opts: LoadOptions, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        if opts.format == EdgeListFormat::MatrixMarket || opts.remap_ids {
            return Err(Error::InvalidArgument(
                "streaming supports plain edge lists with integer ids only".into(),
            ));
        }
        Ok(EdgeBlockReader {
            lines: source.lines().enumerate(),
            header_pending: opts.header,
            opts,
            block_size,
            done: false,
        })
    }
}

impl<R: BufRead> Iterator for EdgeBlockReader<R> {
    type Item = Result<Vec<(usize, usize, f64)>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut block = Vec::with_capacity(self.block_size.min(1 << 16));
        while block.len() < self.block_size {
            let Some((lineno, line)) = self.lines.next() else {
                self.done = true;
                break;
            };
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
                continue;
            }
            if self.header_pending {
                self.header_pending = false;
                continue;
            }
            let fields = split_row(t, self.opts.format);
            match parse_row(&fields, self.opts.one_based, lineno + 1) {
                Ok(row) => block.push(row),
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        if block.is_empty() {
            None
        } else {
            Some(Ok(block))
        }
    }
}
