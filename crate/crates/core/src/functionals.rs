//! Error functionals between two Laplacian operands.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::SparsifiedSample;
use crate::spectral::{operator_norm, regression_fit, EdgeOperator, LinearOperator, SolverConfig};

/// Which discrepancy to measure.
#[derive(Debug, Clone)]
pub enum FunctionalSpec {
    /// Squared Frobenius norm of the difference.
    FrobeniusSq,
    Frobenius,
    /// Spectral norm of the difference.
    OperatorNorm { solver: SolverConfig },
    /// `||r(A) - r(B)||_2` where `r(A)` solves `(I + tau A) beta = y`.
    RegressionL2 { y: Arc<Vec<f64>>, tau: f64, solver: SolverConfig },
}

impl FunctionalSpec {
    pub fn operator_norm() -> Self {
        FunctionalSpec::OperatorNorm {
            solver: SolverConfig::eigen(),
        }
    }

    pub fn regression(y: Vec<f64>, tau: f64) -> Self {
        FunctionalSpec::RegressionL2 {
            y: Arc::new(y),
            tau,
            solver: SolverConfig::solve(),
        }
    }

    /// Short tag used in reports: `fro2`, `fro`, `op` or `reg`.
    pub fn tag(&self) -> &'static str {
        match self {
            FunctionalSpec::FrobeniusSq => "fro2",
            FunctionalSpec::Frobenius => "fro",
            FunctionalSpec::OperatorNorm { .. } => "op",
            FunctionalSpec::RegressionL2 { .. } => "reg",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            FunctionalSpec::RegressionL2 { y, tau, solver } => {
                if y.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: y.len(),
                    });
                }
                if !(*tau >= 0.0) {
                    return Err(Error::InvalidArgument(format!("tau must be nonnegative, got {tau}")));
                }
                solver.validate()
            }
            FunctionalSpec::OperatorNorm { solver } => solver.validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// An exact Laplacian, or a sparsified one under optional bootstrap weights.
#[derive(Debug, Clone, Copy)]
pub enum LaplacianOperand<'a> {
    Exact(&'a Graph),
    Sampled {
        sample: &'a SparsifiedSample,
        weights: Option<&'a [u64]>,
    },
}

impl<'a> LaplacianOperand<'a> {
    pub fn sampled(sample: &'a SparsifiedSample) -> Self {
        LaplacianOperand::Sampled { sample, weights: None }
    }

    pub fn reweighted(sample: &'a SparsifiedSample, weights: &'a [u64]) -> Self {
        LaplacianOperand::Sampled {
            sample,
            weights: Some(weights),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            LaplacianOperand::Exact(g) => g.n(),
            LaplacianOperand::Sampled { sample, .. } => sample.n(),
        }
    }

    fn check(&self) -> Result<()> {
        if let LaplacianOperand::Sampled {
            sample,
            weights: Some(w),
        } = self
        {
            sample.check_reweight(w)?;
        }
        Ok(())
    }

    pub fn operator(&self) -> EdgeOperator {
        match *self {
            LaplacianOperand::Exact(g) => {
                EdgeOperator::new(g.n(), g.edges().iter().map(|e| (e.u, e.v, e.weight)).collect())
            }
            LaplacianOperand::Sampled { sample, weights } => sample.operator_unchecked(weights),
        }
    }
}

/// `A - B` as a signed edge operator over the union of their supports.
pub fn difference(a: &LaplacianOperand<'_>, b: &LaplacianOperand<'_>) -> Result<EdgeOperator> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            actual: b.n(),
        });
    }
    a.check()?;
    b.check()?;
    use LaplacianOperand::*;
    let n = a.n();
    match (*a, *b) {
        (Sampled { sample: sa, weights: wa }, Sampled { sample: sb, weights: wb }) if std::ptr::eq(sa, sb) => {
            let terms = sa
                .entries()
                .iter()
                .enumerate()
                .map(|(i, e)| (e.u, e.v, sa.coefficient(i, wa) - sa.coefficient(i, wb)))
                .filter(|t| t.2 != 0.0)
                .collect();
            Ok(EdgeOperator::new(n, terms))
        }
        (Exact(g), Sampled { sample, weights }) => exact_minus_sampled(g, sample, weights, 1.0),
        (Sampled { sample, weights }, Exact(g)) => exact_minus_sampled(g, sample, weights, -1.0),
        _ => {
            let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (op, sign) in [(a.operator(), 1.0), (b.operator(), -1.0)] {
                for (u, v, c) in op.terms {
                    *acc.entry((u.min(v), u.max(v))).or_insert(0.0) += sign * c;
                }
            }
            Ok(EdgeOperator::new(
                n,
                acc.into_iter().filter(|(_, c)| *c != 0.0).map(|((u, v), c)| (u, v, c)).collect(),
            ))
        }
    }
}

fn exact_minus_sampled(g: &Graph, s: &SparsifiedSample, weights: Option<&[u64]>, sign: f64) -> Result<EdgeOperator> {
    let mut coef: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
    let mut extra: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, e) in s.entries().iter().enumerate() {
        let c = s.coefficient(i, weights);
        match g.edges().get(e.edge) {
            Some(ge) if ge.u == e.u && ge.v == e.v => coef[e.edge] -= c,
            // sample indices refer to a different edge list: fall back to matching by pair
            _ => match g.find_edge(e.u, e.v) {
                Some(k) => coef[k] -= c,
                None => *extra.entry((e.u, e.v)).or_insert(0.0) -= c,
            },
        }
    }
    let terms = g
        .edges()
        .iter()
        .zip(coef)
        .map(|(e, c)| (e.u, e.v, sign * c))
        .chain(extra.into_iter().map(|((u, v), c)| (u, v, sign * c)))
        .filter(|t| t.2 != 0.0)
        .collect();
    Ok(EdgeOperator::new(g.n(), terms))
}

fn regression_solution(op: &LaplacianOperand<'_>, y: &[f64], tau: f64, solver: &SolverConfig) -> Result<Vec<f64>> {
    match op {
        LaplacianOperand::Exact(g) => regression_fit(*g, y, tau, solver),
        _ => regression_fit(&op.operator(), y, tau, solver),
    }
}

/// `psi(A, B)` for a single pair of operands.
pub fn eval_functional(spec: &FunctionalSpec, a: &LaplacianOperand<'_>, b: &LaplacianOperand<'_>) -> Result<f64> {
    FunctionalEvaluator::new(spec, *b)?.eval(a)
}

/// Evaluates `psi(., B)` repeatedly against a fixed second operand.
///
/// For the regression functional the fit `r(B)` is solved once and reused,
/// which is how the bootstrap loops compare many replicates to one anchor.
pub struct FunctionalEvaluator<'a> {
    spec: &'a FunctionalSpec,
    anchor: LaplacianOperand<'a>,
    anchor_fit: Option<Vec<f64>>,
}

impl<'a> FunctionalEvaluator<'a> {
    pub fn new(spec: &'a FunctionalSpec, anchor: LaplacianOperand<'a>) -> Result<Self> {
        spec.validate(anchor.n())?;
        anchor.check()?;
        let anchor_fit = match spec {
            FunctionalSpec::RegressionL2 { y, tau, solver } => Some(
                regression_solution(&anchor, y, *tau, solver).map_err(|e| e.context("regression fit of anchor operand"))?,
            ),
            _ => None,
        };
        Ok(FunctionalEvaluator {
            spec,
            anchor,
            anchor_fit,
        })
    }

    pub fn eval(&self, a: &LaplacianOperand<'_>) -> Result<f64> {
        match self.spec {
            FunctionalSpec::FrobeniusSq => Ok(difference(a, &self.anchor)?.frobenius_sq()),
            FunctionalSpec::Frobenius => Ok(difference(a, &self.anchor)?.frobenius_sq().sqrt()),
            FunctionalSpec::OperatorNorm { solver } => {
                let d = difference(a, &self.anchor)?.compact();
                if d.dim() == 0 {
                    return Ok(0.0);
                }
                operator_norm(&d, solver).map_err(|e| e.context("operator norm"))
            }
            FunctionalSpec::RegressionL2 { y, tau, solver } => {
                if a.n() != self.anchor.n() {
                    return Err(Error::DimensionMismatch {
                        expected: self.anchor.n(),
                        actual: a.n(),
                    });
                }
                a.check()?;
                let fit = regression_solution(a, y, *tau, solver).map_err(|e| e.context("regression fit"))?;
                let anchor = self.anchor_fit.as_ref().expect("anchor fit computed for regression");
                Ok(fit
                    .iter()
                    .zip(anchor)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators;
    use crate::sampling::{draw_sample, edge_weight_probs};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dense_fro_sq(a: &LaplacianOperand<'_>, b: &LaplacianOperand<'_>) -> f64 {
        let d = a.operator().to_dense() - b.operator().to_dense();
        d.iter().map(|x| x * x).sum()
    }

    fn all_specs(n: usize) -> Vec<FunctionalSpec> {
        vec![
            FunctionalSpec::FrobeniusSq,
            FunctionalSpec::Frobenius,
            FunctionalSpec::operator_norm(),
            FunctionalSpec::regression((0..n).map(|i| (i as f64 * 0.7).cos()).collect(), 0.5),
        ]
    }

    #[test]
    fn identical_operands_give_zero() {
        let g = generators::erdos_renyi(20, 0.3, 1);
        let s = draw_sample(&g, &edge_weight_probs(&g).unwrap(), 40, 2).unwrap();
        for spec in all_specs(20) {
            for op in [LaplacianOperand::Exact(&g), LaplacianOperand::sampled(&s)] {
                assert_eq!(eval_functional(&spec, &op, &op).unwrap(), 0.0, "{spec}");
            }
        }
    }

    #[test]
    fn single_edge_against_empty_graph() {
        let g = Graph::new(2, [(0, 1, 1.0)]).unwrap();
        let empty = Graph::new(2, []).unwrap();
        let v = eval_functional(&FunctionalSpec::FrobeniusSq, &LaplacianOperand::Exact(&g), &LaplacianOperand::Exact(&empty)).unwrap();
        assert_eq!(v, 4.0);
        let op = eval_functional(&FunctionalSpec::operator_norm(), &LaplacianOperand::Exact(&g), &LaplacianOperand::Exact(&empty)).unwrap();
        assert_relative_eq!(op, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn regression_with_zero_tau_is_zero() {
        let g = generators::erdos_renyi(15, 0.4, 3);
        let s = draw_sample(&g, &edge_weight_probs(&g).unwrap(), 10, 2).unwrap();
        let spec = FunctionalSpec::regression(vec![1.5; 15].into_iter().enumerate().map(|(i, v)| v * i as f64).collect(), 0.0);
        assert_eq!(eval_functional(&spec, &LaplacianOperand::sampled(&s), &LaplacianOperand::Exact(&g)).unwrap(), 0.0);
    }

    #[test]
    fn regression_matches_dense_solve() {
        let g = generators::erdos_renyi(25, 0.3, 9);
        let s = draw_sample(&g, &edge_weight_probs(&g).unwrap(), 60, 4).unwrap();
        let y: Vec<f64> = (0..25).map(|i| (i as f64).sin()).collect();
        let tau = 0.3;
        let spec = FunctionalSpec::regression(y.clone(), tau);
        let got = eval_functional(&spec, &LaplacianOperand::sampled(&s), &LaplacianOperand::Exact(&g)).unwrap();
        let yv = nalgebra::DVector::from_vec(y);
        let eye = nalgebra::DMatrix::<f64>::identity(25, 25);
        let fit = |m: nalgebra::DMatrix<f64>| (&eye + m * tau).lu().solve(&yv).unwrap();
        let oracle = (fit(s.operator(None).unwrap().to_dense()) - fit(g.dense_laplacian())).norm();
        assert_relative_eq!(got, oracle, max_relative = 1e-8);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Graph::new(3, [(0, 1, 1.0)]).unwrap();
        let b = Graph::new(4, [(0, 1, 1.0)]).unwrap();
        let err = eval_functional(&FunctionalSpec::FrobeniusSq, &LaplacianOperand::Exact(&a), &LaplacianOperand::Exact(&b));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let spec = FunctionalSpec::regression(vec![0.0; 5], 1.0);
        assert!(eval_functional(&spec, &LaplacianOperand::Exact(&a), &LaplacianOperand::Exact(&a)).is_err());
    }

    #[test]
    fn frobenius_mean_identity_small_graph() {
        // two disjoint edges of weight 1/2: E||L_hat - L||_F^2 = (4 - 2)/N
        let g = Graph::new(4, [(0, 1, 0.5), (2, 3, 0.5)]).unwrap();
        let p = edge_weight_probs(&g).unwrap();
        let trials = 2000;
        let vals: Vec<f64> = (0..trials)
            .map(|seed| {
                let s = draw_sample(&g, &p, 10, seed).unwrap();
                eval_functional(&FunctionalSpec::FrobeniusSq, &LaplacianOperand::sampled(&s), &LaplacianOperand::Exact(&g)).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - 0.2).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn general_merge_path_matches_fast_paths() {
        let g = generators::erdos_renyi(18, 0.4, 5);
        let p = edge_weight_probs(&g).unwrap();
        let s1 = draw_sample(&g, &p, 30, 1).unwrap();
        let s2 = draw_sample(&g, &p, 30, 2).unwrap();
        let a = LaplacianOperand::sampled(&s1);
        let b = LaplacianOperand::sampled(&s2);
        let got = eval_functional(&FunctionalSpec::FrobeniusSq, &a, &b).unwrap();
        assert_relative_eq!(got, dense_fro_sq(&a, &b), max_relative = 1e-10);
        // a graph whose edge order differs from the sample's source
        let shuffled = Graph::new(18, g.edges().iter().rev().map(|e| (e.v, e.u, e.weight))).unwrap();
        let x = eval_functional(&FunctionalSpec::FrobeniusSq, &a, &LaplacianOperand::Exact(&shuffled)).unwrap();
        let y = eval_functional(&FunctionalSpec::FrobeniusSq, &a, &LaplacianOperand::Exact(&g)).unwrap();
        assert_relative_eq!(x, y, max_relative = 1e-12);
    }

    fn random_setup(seed: u64) -> (Graph, SparsifiedSample, Vec<u64>) {
        let g = generators::erdos_renyi(12 + (seed % 30) as usize, 0.3, seed);
        let g = if g.num_edges() == 0 { generators::path(5) } else { g };
        let p = edge_weight_probs(&g).unwrap();
        let s = draw_sample(&g, &p, 25, seed).unwrap();
        let mut rng = crate::rng::stream(seed, "test-reweight", &[]);
        let w = crate::sampling::multinomial_counts_int(s.draws(), &s.counts(), &mut rng);
        (g, s, w)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn frobenius_matches_dense_oracle(seed in 0u64..10_000) {
            let (g, s, w) = random_setup(seed);
            let pairs = [
                (LaplacianOperand::sampled(&s), LaplacianOperand::Exact(&g)),
                (LaplacianOperand::reweighted(&s, &w), LaplacianOperand::sampled(&s)),
                (LaplacianOperand::Exact(&g), LaplacianOperand::reweighted(&s, &w)),
            ];
            for (a, b) in pairs {
                let got = eval_functional(&FunctionalSpec::FrobeniusSq, &a, &b).unwrap();
                let oracle = dense_fro_sq(&a, &b);
                prop_assert!((got - oracle).abs() <= 1e-10 * oracle.max(1e-300));
            }
        }

        #[test]
        fn symmetry_and_norm_consistency(seed in 0u64..10_000) {
            let (g, s, _) = random_setup(seed);
            let a = LaplacianOperand::sampled(&s);
            let b = LaplacianOperand::Exact(&g);
            let f2 = eval_functional(&FunctionalSpec::FrobeniusSq, &a, &b).unwrap();
            let f = eval_functional(&FunctionalSpec::Frobenius, &a, &b).unwrap();
            let op = eval_functional(&FunctionalSpec::operator_norm(), &a, &b).unwrap();
            prop_assert!((f * f - f2).abs() <= 1e-12 * f2);
            prop_assert!(op <= f * (1.0 + 1e-9));
            for spec in [FunctionalSpec::FrobeniusSq, FunctionalSpec::Frobenius] {
                prop_assert_eq!(eval_functional(&spec, &a, &b).unwrap(), eval_functional(&spec, &b, &a).unwrap());
            }
            let op_rev = eval_functional(&FunctionalSpec::operator_norm(), &b, &a).unwrap();
            prop_assert!((op - op_rev).abs() <= 1e-6 * op);
        }
    }
}
