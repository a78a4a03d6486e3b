//! Row-stochastic kernels on finite graphs: the maximum-entropy walk kernel,
//! the degree-normalized generic walk, entropy rates and path probabilities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::Eigenpair;

#[derive(Debug, Clone, Serialize)]
pub struct MarkovKernel {
    rows: Vec<Vec<(usize, f64)>>,
    /// Normalized invariant probability measure, when known.
    invariant: Option<Vec<f64>>,
}

impl MarkovKernel {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, invariant: Option<Vec<f64>>) -> Self {
        Self { rows, invariant }
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .iter()
            .find(|&&(t, _)| t == to)
            .map(|&(_, p)| p)
            .unwrap_or(0.0)
    }

    pub fn invariant_measure(&self) -> Option<&[f64]> {
        self.invariant.as_deref()
    }

    pub fn set_invariant_measure(&mut self, pi: Vec<f64>) {
        self.invariant = Some(pi);
    }

    /// max over rows of |sum - 1|. Rows are never renormalized; the deviation
    /// is reported as computed.
    pub fn row_sum_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| (row.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// max-norm of pi P - pi for the stored invariant measure.
    pub fn invariant_fixed_point_deviation(&self) -> Option<f64> {
        let pi = self.invariant.as_ref()?;
        let mut pushed = vec![0.0; self.rows.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                pushed[y] += pi[x] * p;
            }
        }
        Some(
            pushed
                .iter()
                .zip(pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Maximum-entropy kernel p(x,y) = A(x,y) psi(y) / (rho psi(x)) with
/// invariant measure psi^2 (normalized). Refuses eigenpairs whose residual
/// exceeds the tolerance they were computed against.
pub fn merw_kernel(graph: &WeightedGraph, eig: &Eigenpair) -> Result<MarkovKernel> {
    if !eig.is_accepted() {
        return Err(Error::ResidualTooLarge {
            residual: eig.residual,
            tol: eig.tol,
        });
    }
    if eig.psi.len() != graph.vertex_count() {
        return Err(Error::Structural(
            "eigenfunction length does not match graph".into(),
        ));
    }
    let rows = (0..graph.vertex_count())
        .map(|x| {
            graph
                .row(x)
                .iter()
                .map(|&(y, w)| (y, w * eig.psi[y] / (eig.rho * eig.psi[x])))
                .collect()
        })
        .collect();
    let norm: f64 = eig.psi.iter().map(|p| p * p).sum();
    let pi = eig.psi.iter().map(|p| p * p / norm).collect();
    Ok(MarkovKernel::from_rows(rows, Some(pi)))
}

/// Generic walk p(x,y) = A(x,y) / V(x). For undirected graphs the stationary
/// measure is degree-proportional and is attached; for directed graphs it is
/// left unset (solve it explicitly).
pub fn grw_kernel(graph: &WeightedGraph) -> Result<MarkovKernel> {
    let n = graph.vertex_count();
    let mut rows = Vec::with_capacity(n);
    let mut degrees = Vec::with_capacity(n);
    for x in 0..n {
        let v = graph.out_weight(x);
        if v <= 0.0 {
            return Err(Error::Structural(format!("vertex {x} has zero out-weight")));
        }
        degrees.push(v);
        rows.push(graph.row(x).iter().map(|&(y, w)| (y, w / v)).collect());
    }
    let invariant = if graph.directed() {
        None
    } else {
        let total: f64 = degrees.iter().sum();
        Some(degrees.iter().map(|d| d / total).collect())
    };
    Ok(MarkovKernel::from_rows(rows, invariant))
}

/// Entropy rate h = -sum_x pi(x) sum_y p(x,y) ln p(x,y).
///
/// Requires an invariant probability measure; it is renormalized defensively
/// before use so that unnormalized inputs do not skew the rate.
pub fn entropy_rate(kernel: &MarkovKernel) -> Result<f64> {
    let pi = kernel
        .invariant_measure()
        .ok_or(Error::MissingInvariantMeasure)?;
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Data("invariant measure has zero mass".into()));
    }
    let mut h = 0.0;
    for (x, row) in kernel.rows.iter().enumerate() {
        let px = pi[x] / total;
        for &(_, p) in row {
            if p > 0.0 {
                h -= px * p * p.ln();
            }
        }
    }
    Ok(h)
}

/// Stationary distribution by fixed-point iteration on pi <- pi (P + I)/2.
/// The lazy average handles periodic kernels.
pub fn solve_stationary(kernel: &MarkovKernel, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = kernel.state_count();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for iter in 0..max_iter {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (x, row) in kernel.rows.iter().enumerate() {
            for &(y, p) in row {
                next[y] += pi[x] * p;
            }
        }
        let mut delta = 0.0f64;
        for i in 0..n {
            next[i] = 0.5 * (next[i] + pi[i]);
            delta = delta.max((next[i] - pi[i]).abs());
        }
        std::mem::swap(&mut pi, &mut next);
        if delta <= tol {
            let total: f64 = pi.iter().sum();
            for v in pi.iter_mut() {
                *v /= total;
            }
            return Ok(pi);
        }
        let _ = iter;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Probability of a concrete vertex path under a kernel, together with the
/// closed-form value psi(y) / (rho^n psi(x)) it must match on unit-weight
/// graphs.
#[derive(Debug, Clone, Serialize)]
pub struct PathProbability {
    pub product: f64,
    pub doob_formula: f64,
    /// Index of the first step with zero kernel mass, if any.
    pub zero_step: Option<usize>,
}

pub fn path_probability(kernel: &MarkovKernel, eig: &Eigenpair, path: &[usize]) -> PathProbability {
    let mut product = 1.0;
    let mut zero_step = None;
    for (i, pair) in path.windows(2).enumerate() {
        let p = kernel.probability(pair[0], pair[1]);
        if p == 0.0 && zero_step.is_none() {
            zero_step = Some(i);
        }
        product *= p;
    }
    let doob_formula = match (path.first(), path.last()) {
        (Some(&x), Some(&y)) => {
            let n = path.len() as i32 - 1;
            eig.psi[y] / (eig.rho.powi(n) * eig.psi[x])
        }
        _ => f64::NAN,
    };
    PathProbability {
        product,
        doob_formula,
        zero_step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle_graph, path_graph, WeightedGraph};
    use crate::spectral::{power_iterate, PowerOptions};
    use approx::assert_relative_eq;

    fn three_path_pair() -> (WeightedGraph, Eigenpair) {
        let g = path_graph(3);
        let eig = power_iterate(&g, &PowerOptions::default()).unwrap();
        (g, eig)
    }

    #[test]
    fn merw_kernel_of_three_path() {
        let (g, eig) = three_path_pair();
        let k = merw_kernel(&g, &eig).unwrap();
        assert_relative_eq!(k.probability(0, 1), 1.0, epsilon = 1e-12);
        assert_relative_eq!(k.probability(1, 0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(k.probability(1, 2), 0.5, epsilon = 1e-12);
        assert!(k.row_sum_deviation() < 1e-12);
        let pi = k.invariant_measure().unwrap();
        assert_relative_eq!(pi[0], 0.25, epsilon = 1e-10);
        assert_relative_eq!(pi[1], 0.5, epsilon = 1e-10);
        assert_relative_eq!(pi[2], 0.25, epsilon = 1e-10);
        assert!(k.invariant_fixed_point_deviation().unwrap() < 1e-10);
    }

    #[test]
    fn merw_refuses_sloppy_eigenpair() {
        let (g, mut eig) = three_path_pair();
        eig.residual = 1.0;
        assert!(matches!(
            merw_kernel(&g, &eig),
            Err(Error::ResidualTooLarge { .. })
        ));
    }

    #[test]
    fn merw_equals_grw_on_regular_graph() {
        let g = cycle_graph(4);
        let eig = power_iterate(&g, &PowerOptions::default()).unwrap();
        let merw = merw_kernel(&g, &eig).unwrap();
        let grw = grw_kernel(&g).unwrap();
        for x in 0..4 {
            for &(y, p) in merw.row(x) {
                assert_relative_eq!(p, grw.probability(x, y), epsilon = 1e-10);
                assert_relative_eq!(p, 0.5, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn grw_on_weighted_star() {
        // Hub 0 with spokes of weight 2 and 1.
        let mut g = WeightedGraph::new(3, false);
        g.add_edge(0, 1, 2.0).unwrap();
        g.add_edge(0, 2, 1.0).unwrap();
        let k = grw_kernel(&g).unwrap();
        assert_relative_eq!(k.probability(0, 1), 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(k.probability(0, 2), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn grw_rejects_dangling_vertex() {
        let mut g = WeightedGraph::new(2, true);
        g.add_edge(0, 1, 1.0).unwrap();
        assert!(matches!(grw_kernel(&g), Err(Error::Structural(_))));
    }

    #[test]
    fn merw_entropy_rate_is_ln_rho() {
        let (g, eig) = three_path_pair();
        let k = merw_kernel(&g, &eig).unwrap();
        let h = entropy_rate(&k).unwrap();
        assert_relative_eq!(h, 2.0f64.sqrt().ln(), epsilon = 1e-9);
    }

    #[test]
    fn grw_entropy_rate_on_regular_graph_is_ln_degree() {
        let g = cycle_graph(5);
        let k = grw_kernel(&g).unwrap();
        assert_relative_eq!(entropy_rate(&k).unwrap(), 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn deterministic_cycle_has_zero_entropy_rate() {
        let mut g = WeightedGraph::new(3, true);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(1, 2, 1.0).unwrap();
        g.add_edge(2, 0, 1.0).unwrap();
        let mut k = grw_kernel(&g).unwrap();
        let pi = solve_stationary(&k, 1e-14, 100_000).unwrap();
        k.set_invariant_measure(pi);
        assert_relative_eq!(entropy_rate(&k).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_rate_requires_invariant_measure() {
        let mut g = WeightedGraph::new(2, true);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(1, 0, 1.0).unwrap();
        let k = grw_kernel(&g).unwrap();
        assert!(k.invariant_measure().is_none());
        assert!(matches!(
            entropy_rate(&k),
            Err(Error::MissingInvariantMeasure)
        ));
    }

    #[test]
    fn path_probability_examples() {
        let (g, eig) = three_path_pair();
        let k = merw_kernel(&g, &eig).unwrap();
        // Path (1, 0, 1): product 1/2 * 1 = 1/2 = psi(1)/(rho^2 psi(1)).
        let p = path_probability(&k, &eig, &[1, 0, 1]);
        assert_relative_eq!(p.product, 0.5, epsilon = 1e-12);
        assert_relative_eq!(p.product, p.doob_formula, epsilon = 1e-10);
        assert!(p.zero_step.is_none());
        // Length-0 path.
        let p0 = path_probability(&k, &eig, &[2]);
        assert_relative_eq!(p0.product, 1.0);
        assert_relative_eq!(p0.doob_formula, 1.0, epsilon = 1e-12);
        // Non-adjacent step.
        let pz = path_probability(&k, &eig, &[0, 2]);
        assert_eq!(pz.product, 0.0);
        assert_eq!(pz.zero_step, Some(0));
    }
}
