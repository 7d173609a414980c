//! Matrix-free symmetric linear algebra: deflated conjugate gradients,
//! Lanczos extremal eigenvalues, operator norms and the graph-regularised
//! regression solve.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A symmetric linear map on `R^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`. Both slices have length `dim`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Diagonal entries, when cheaply available (enables Jacobi preconditioning).
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    /// Dense materialisation by probing unit vectors.
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

impl LinearOperator for Graph {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.laplacian_matvec_into(x, y);
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.degree_vector())
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.dense_laplacian()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        (**self).diagonal()
    }
    fn to_dense(&self) -> DMatrix<f64> {
        (**self).to_dense()
    }
}

/// `sum_k c_k Delta_{(u_k, v_k)}` with arbitrary real coefficients.
///
/// Covers every Laplacian-shaped operand in the crate, including signed
/// differences such as `L_hat* - L_hat`.
#[derive(Debug, Clone, Default)]
pub struct EdgeOperator {
    pub n: usize,
    pub terms: Vec<(usize, usize, f64)>,
}

impl EdgeOperator {
    pub fn new(n: usize, terms: Vec<(usize, usize, f64)>) -> Self {
        EdgeOperator { n, terms }
    }

    /// Restriction to the vertices touched by a nonzero term. The spectrum of
    /// the result equals the original spectrum minus some zero eigenvalues.
    pub fn compact(&self) -> EdgeOperator {
        let mut map = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut terms = Vec::with_capacity(self.terms.len());
        for &(u, v, c) in &self.terms {
            if c == 0.0 {
                continue;
            }
            for w in [u, v] {
                if map[w] == usize::MAX {
                    map[w] = next;
                    next += 1;
                }
            }
            terms.push((map[u], map[v], c));
        }
        EdgeOperator {
            n: next,
            terms,
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        // Assumes distinct vertex pairs; diagonal entries are signed degrees.
        let mut diag = vec![0.0; self.n];
        let mut off = 0.0;
        for &(u, v, c) in &self.terms {
            diag[u] += c;
            diag[v] += c;
            off += c * c;
        }
        diag.iter().map(|d| d * d).sum::<f64>() + 2.0 * off
    }
}

impl LinearOperator for EdgeOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|o| *o = 0.0);
        for &(u, v, c) in &self.terms {
            let d = c * (x[u] - x[v]);
            y[u] += d;
            y[v] -= d;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.n];
        for &(u, v, c) in &self.terms {
            d[u] += c;
            d[v] += c;
        }
        Some(d)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(u, v, c) in &self.terms {
            m[(u, u)] += c;
            m[(v, v)] += c;
            m[(u, v)] -= c;
            m[(v, u)] -= c;
        }
        m
    }
}

/// `I + tau A`.
pub struct IdentityPlus<A> {
    pub op: A,
    pub tau: f64,
}

impl<A: LinearOperator> LinearOperator for IdentityPlus<A> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi + self.tau * *yi;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        self.op
            .diagonal()
            .map(|d| d.into_iter().map(|di| 1.0 + self.tau * di).collect())
    }
}

/// `shift I - A`.
struct ShiftedNegation<'a, A: ?Sized> {
    op: &'a A,
    shift: f64,
}

impl<A: LinearOperator + ?Sized> LinearOperator for ShiftedNegation<'_, A> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi - *yi;
        }
    }
}

/// Dense symmetric matrix as an operator, mainly for oracles.
pub struct DenseOperator(pub DMatrix<f64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.0.nrows();
        for i in 0..n {
            y[i] = (0..n).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.0.diagonal().iter().copied().collect())
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.0.clone()
    }
}

/// Iterative solver settings.
///
/// The defaults are engineering choices: solves run to `1e-10` relative
/// residual and eigenvalues to `1e-6` relative accuracy, well below the
/// bootstrap noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    /// Iteration cap; `None` means `5 n`.
    pub max_iter: Option<usize>,
    /// Jacobi preconditioning for CG.
    pub jacobi: bool,
}

impl SolverConfig {
    pub fn solve() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: None,
            jacobi: false,
        }
    }

    pub fn eigen() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iter: None,
            jacobi: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(5 * n.max(1))
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::solve()
    }
}

/// Known null space to deflate during CG.
#[derive(Debug, Clone, Copy)]
pub enum Nullspace<'a> {
    None,
    /// Orthonormal vectors.
    Vectors(&'a [Vec<f64>]),
    /// Constants on each connected component, given as per-vertex labels.
    Components(&'a [usize]),
}

impl Nullspace<'_> {
    fn project(&self, x: &mut [f64], scratch: &mut Vec<f64>) {
        match *self {
            Nullspace::None => {}
            Nullspace::Vectors(vs) => {
                for v in vs {
                    let c = dot(v, x);
                    axpy(-c, v, x);
                }
            }
            Nullspace::Components(labels) => {
                let k = labels.iter().copied().max().map_or(0, |m| m + 1);
                scratch.clear();
                scratch.resize(2 * k, 0.0);
                for (xi, &l) in x.iter().zip(labels) {
                    scratch[l] += xi;
                    scratch[k + l] += 1.0;
                }
                for (xi, &l) in x.iter_mut().zip(labels) {
                    *xi -= scratch[l] / scratch[k + l];
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||A x - b|| / ||b||` after projection.
    pub relative_residual: f64,
}

/// Conjugate gradients on a PSD operator, restricted to the orthogonal
/// complement of `nullspace`. With per-component constants as the null space
/// of a graph Laplacian this computes `L^+ b`.
pub fn cg_solve_deflated<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    nullspace: Nullspace<'_>,
    cfg: &SolverConfig,
) -> Result<CgSolution> {
    cfg.validate()?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut scratch = Vec::new();
    let mut r = b.to_vec();
    nullspace.project(&mut r, &mut scratch);
    let bnorm = norm(&r);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Option<Vec<f64>> = if cfg.jacobi {
        a.diagonal()
            .map(|d| d.into_iter().map(|di| if di > 0.0 { 1.0 / di } else { 1.0 }).collect())
    } else {
        None
    };
    let precondition = |r: &[f64], z: &mut Vec<f64>, scratch: &mut Vec<f64>| {
        z.clear();
        match &inv_diag {
            Some(m) => z.extend(r.iter().zip(m).map(|(ri, mi)| ri * mi)),
            None => z.extend_from_slice(r),
        }
        nullspace.project(z, scratch);
    };
    let mut z = Vec::with_capacity(n);
    precondition(&r, &mut z, &mut scratch);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let cap = cfg.cap(n);
    let mut rel = 1.0;
    for it in 1..=cap {
        a.apply(&p, &mut ap);
        nullspace.project(&mut ap, &mut scratch);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Direction lies in the (numerical) null space: nothing left to reduce.
            break;
        }
        let step = rz / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        rel = norm(&r) / bnorm;
        if rel <= cfg.tol {
            nullspace.project(&mut x, &mut scratch);
            let true_rel = residual(a, &x, b, nullspace, &mut scratch) / bnorm;
            if true_rel <= cfg.tol * 10.0 {
                return Ok(CgSolution {
                    x,
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
            // recurrence drifted; restart from the true residual
            r = b.to_vec();
            nullspace.project(&mut r, &mut scratch);
            a.apply(&x, &mut ap);
            axpy(-1.0, &ap, &mut r);
            nullspace.project(&mut r, &mut scratch);
            precondition(&r, &mut z, &mut scratch);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precondition(&r, &mut z, &mut scratch);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    nullspace.project(&mut x, &mut scratch);
    let true_rel = residual(a, &x, b, nullspace, &mut scratch) / bnorm;
    if true_rel <= cfg.tol {
        return Ok(CgSolution {
            x,
            iterations: cap,
            relative_residual: true_rel,
        });
    }
    Err(Error::NonConvergence {
        iterations: cap,
        residual: true_rel.min(rel.max(true_rel)),
        context: None,
    })
}

fn residual<A: LinearOperator + ?Sized>(
    a: &A,
    x: &[f64],
    b: &[f64],
    nullspace: Nullspace<'_>,
    scratch: &mut Vec<f64>,
) -> f64 {
    let mut ax = vec![0.0; x.len()];
    a.apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    nullspace.project(&mut r, scratch);
    norm(&r)
}

/// Solves `(I + tau A) beta = y`, the minimiser of
/// `||y - beta||^2 + tau beta^T A beta`.
pub fn regression_fit<A: LinearOperator + ?Sized>(
    a: &A,
    y: &[f64],
    tau: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be nonnegative, got {tau}")));
    }
    if y.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: y.len(),
        });
    }
    if tau == 0.0 {
        return Ok(y.to_vec());
    }
    let system = IdentityPlus { op: a, tau };
    let sol = cg_solve_deflated(&system, y, Nullspace::None, cfg)?;
    debug_assert!(sol.relative_residual <= cfg.tol * 10.0);
    Ok(sol.x)
}

/// Which eigensolver [`bottom_eigenvalues_with`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense for `n <= DENSE_CROSSOVER`, Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

pub const DENSE_CROSSOVER: usize = 2048;
const LANCZOS_CAP: usize = 400;

/// Smallest `r` eigenvalues of a symmetric operator, ascending.
pub fn bottom_eigenvalues<A: LinearOperator + ?Sized>(
    a: &A,
    r: usize,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    bottom_eigenvalues_with(a, r, cfg, EigenMethod::Auto)
}

pub fn bottom_eigenvalues_with<A: LinearOperator + ?Sized>(
    a: &A,
    r: usize,
    cfg: &SolverConfig,
    method: EigenMethod,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = a.dim();
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!(
            "requested {r} eigenvalues of a {n}-dimensional operator"
        )));
    }
    let dense = match method {
        EigenMethod::Auto => n <= DENSE_CROSSOVER,
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
    };
    if dense {
        let m = a.to_dense();
        let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals.truncate(r);
        return Ok(vals);
    }
    lanczos_bottom(a, r, cfg)
}

/// Bottom eigenvalues through Lanczos on `sigma I - A` with locking.
///
/// Each pass runs a fully reorthogonalised Lanczos process in the complement
/// of the locked Ritz vectors and locks the pairs that converged. Repeated
/// eigenvalues surface in later passes, so the loop ends only when a fresh
/// pass finds nothing above the current r-th value.
fn lanczos_bottom<A: LinearOperator + ?Sized>(a: &A, r: usize, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = a.dim();
    let anorm = power_norm_estimate(a, 30);
    if anorm == 0.0 {
        return Ok(vec![0.0; r]);
    }
    let shift = 1.05 * anorm;
    let shifted = ShiftedNegation { op: a, shift };
    let cap = cfg.max_iter.unwrap_or(LANCZOS_CAP).min(n).max(1);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut rng = crate::rng::stream(0x5eed, "lanczos-start", &[n as u64]);
    let mut passes = 0;
    loop {
        passes += 1;
        if locked.len() >= n || passes > 4 * r + 4 {
            break;
        }
        let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let locked_vecs: Vec<&[f64]> = locked.iter().map(|(_, v)| v.as_slice()).collect();
        let want = r.saturating_sub(locked.len()).max(1);
        let run = lanczos(&shifted, &start, &locked_vecs, cap.min(n - locked.len()), |al, be, bnext| {
            if al.len() < want || al.len() % 5 != 0 {
                return false;
            }
            let (vals, last) = tridiag_eigen_rows(al, be, &[al.len() - 1]);
            let k = vals.len();
            (0..want.min(k)).all(|i| (bnext * last[0][k - 1 - i]).abs() <= cfg.tol * shift)
        });
        if run.basis.is_empty() {
            break;
        }
        let k = run.alpha.len();
        let rows: Vec<usize> = (0..k).collect();
        let (vals, z) = tridiag_eigen_rows(&run.alpha, &run.beta[..k - 1], &rows);
        let threshold = {
            let mut top: Vec<f64> = locked.iter().map(|(t, _)| *t).collect();
            top.sort_by(|x, y| y.total_cmp(x));
            top.get(r - 1).copied()
        };
        let mut newly = 0;
        for idx in (0..k).rev() {
            let theta = vals[idx];
            let resid = (run.beta_next * z[k - 1][idx]).abs();
            if resid > cfg.tol * shift && !run.exhausted {
                break;
            }
            if let Some(t) = threshold {
                if theta <= t + cfg.tol * shift {
                    break;
                }
            }
            let mut y = vec![0.0; n];
            for (j, q) in run.basis.iter().enumerate() {
                axpy(z[j][idx], q, &mut y);
            }
            for (_, l) in &locked {
                let c = dot(l, &y);
                axpy(-c, l, &mut y);
            }
            let ny = norm(&y);
            if ny < 0.5 {
                break;
            }
            y.iter_mut().for_each(|v| *v /= ny);
            locked.push((theta, y));
            newly += 1;
            if newly >= want && threshold.is_none() && locked.len() >= r {
                break;
            }
        }
        if newly == 0 {
            if locked.len() >= r {
                break;
            }
            return Err(Error::NonConvergence {
                iterations: k,
                residual: (run.beta_next * z[k - 1][k - 1]).abs() / shift,
                context: Some("Lanczos bottom eigenvalues".into()),
            });
        }
    }
    if locked.len() < r {
        return Err(Error::NonConvergence {
            iterations: cap,
            residual: f64::NAN,
            context: Some(format!("Lanczos located {} of {r} eigenvalues", locked.len())),
        });
    }
    let mut out: Vec<f64> = locked.iter().map(|(t, _)| shift - t).collect();
    out.sort_by(f64::total_cmp);
    out.truncate(r);
    Ok(out)
}

/// `max(|lambda_min|, |lambda_max|)` via Lanczos run to both spectrum ends.
pub fn operator_norm<A: LinearOperator + ?Sized>(a: &A, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let n = a.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let mut rng = crate::rng::stream(0x5eed, "opnorm-start", &[n as u64]);
    let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let cap = cfg.max_iter.unwrap_or(LANCZOS_CAP).min(n);
    let run = lanczos(a, &start, &[], cap, |al, be, bnext| {
        let k = al.len();
        if k < 2 {
            return false;
        }
        let (vals, last) = tridiag_eigen_rows(al, be, &[k - 1]);
        let scale = vals[0].abs().max(vals[k - 1].abs());
        let lo = (bnext * last[0][0]).abs();
        let hi = (bnext * last[0][k - 1]).abs();
        lo <= cfg.tol * scale && hi <= cfg.tol * scale
    });
    let k = run.alpha.len();
    if k == 0 {
        return Ok(0.0);
    }
    let (vals, last) = tridiag_eigen_rows(&run.alpha, &run.beta[..k - 1], &[k - 1]);
    let scale = vals[0].abs().max(vals[k - 1].abs());
    if !run.exhausted && !run.converged {
        let resid = (run.beta_next * last[0][0]).abs().max((run.beta_next * last[0][k - 1]).abs());
        return Err(Error::NonConvergence {
            iterations: k,
            residual: resid / scale.max(f64::MIN_POSITIVE),
            context: Some("Lanczos operator norm".into()),
        });
    }
    Ok(scale)
}

fn power_norm_estimate<A: LinearOperator + ?Sized>(a: &A, iters: usize) -> f64 {
    let n = a.dim();
    let mut rng = crate::rng::stream(0x5eed, "power-start", &[n as u64]);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..iters {
        a.apply(&x, &mut y);
        let ny = norm(&y);
        if ny == 0.0 {
            return est;
        }
        est = ny;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    // power iteration underestimates; Gershgorin-free safety margin
    est * 1.1
}

struct LanczosRun {
    basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    /// `beta[j]` couples basis vectors `j` and `j + 1`.
    beta: Vec<f64>,
    /// Norm of the residual after the last step.
    beta_next: f64,
    /// The Krylov space became invariant (or hit the dimension).
    exhausted: bool,
    converged: bool,
}

/// Lanczos with full reorthogonalisation against the basis and `locked`.
/// `converged(alpha, beta, beta_next)` is polled after every step.
fn lanczos<A, F>(a: &A, start: &[f64], locked: &[&[f64]], max_steps: usize, mut converged: F) -> LanczosRun
where
    A: LinearOperator + ?Sized,
    F: FnMut(&[f64], &[f64], f64) -> bool,
{
    let n = a.dim();
    let mut run = LanczosRun {
        basis: Vec::new(),
        alpha: Vec::new(),
        beta: Vec::new(),
        beta_next: 0.0,
        exhausted: false,
        converged: false,
    };
    let mut q = start.to_vec();
    for l in locked {
        let c = dot(l, &q);
        axpy(-c, l, &mut q);
    }
    let nq = norm(&q);
    if nq == 0.0 || max_steps == 0 {
        run.exhausted = true;
        return run;
    }
    q.iter_mut().for_each(|v| *v /= nq);
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    loop {
        a.apply(&q, &mut w);
        let alpha = dot(&q, &w);
        axpy(-alpha, &q, &mut w);
        if let (Some(prev), Some(&b)) = (run.basis.last(), run.beta.last()) {
            axpy(-b, prev, &mut w);
        }
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for l in locked {
                let c = dot(l, &w);
                axpy(-c, l, &mut w);
            }
            for v in run.basis.iter().chain(std::iter::once(&q)) {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let beta = norm(&w);
        scale = scale.max(alpha.abs() + beta);
        run.alpha.push(alpha);
        run.basis.push(std::mem::take(&mut q));
        run.beta_next = beta;
        let steps = run.alpha.len();
        if beta <= 1e-13 * scale.max(f64::MIN_POSITIVE) || steps >= n {
            run.exhausted = true;
            run.beta_next = if beta <= 1e-13 * scale { 0.0 } else { beta };
            return run;
        }
        if converged(&run.alpha, &run.beta, beta) {
            run.converged = true;
            return run;
        }
        if steps >= max_steps {
            return run;
        }
        run.beta.push(beta);
        q = w.iter().map(|v| v / beta).collect();
    }
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e`, plus the requested rows of the eigenvector
/// matrix: `rows_out[t][i]` is component `rows[t]` of eigenvector `i`.
///
/// Implicit QL with Wilkinson shifts; only the tracked rows are rotated.
pub fn tridiag_eigen_rows(d: &[f64], e: &[f64], rows: &[usize]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).take(n).collect();
    e.resize(n, 0.0);
    let mut z: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| (0..n).map(|j| if j == r { 1.0 } else { 0.0 }).collect())
        .collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for zr in z.iter_mut() {
                    let f = zr[i + 1];
                    zr[i + 1] = s * zr[i] + c * f;
                    zr[i] = c * zr[i] - s * f;
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let z = z
        .into_iter()
        .map(|zr| order.iter().map(|&i| zr[i]).collect())
        .collect();
    (vals, z)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
