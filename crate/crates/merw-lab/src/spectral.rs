//! Perron eigenpairs by shifted power iteration, the discrete ground-state
//! identity, and the non-uniqueness demonstration on the looped lattice.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{lattice_with_loops, WeightedGraph};
use crate::kernel::MarkovKernel;

#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair {
    /// Spectral radius estimate.
    pub rho: f64,
    /// Positive eigenfunction, normalized to unit 2-norm.
    pub psi: Vec<f64>,
    /// max |(A psi)_x - rho psi_x| / (rho * max |psi|).
    pub residual: f64,
    /// Tolerance the pair was accepted against.
    pub tol: f64,
    pub iterations: usize,
}

impl Eigenpair {
    pub fn is_accepted(&self) -> bool {
        self.residual <= self.tol
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Diagonal shift added during iteration so that periodic (e.g.
    /// bipartite) graphs still converge; removed from the reported rho.
    pub shift: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
            shift: 1.0,
        }
    }
}

/// Relative infinity-norm residual of (rho, psi) as an eigenpair of A.
fn eigen_residual(graph: &WeightedGraph, rho: f64, psi: &[f64], apsi: &[f64]) -> f64 {
    let _ = graph;
    let mut worst = 0.0f64;
    let mut amp = 0.0f64;
    for (&a, &p) in apsi.iter().zip(psi) {
        worst = worst.max((a - rho * p).abs());
        amp = amp.max(p.abs());
    }
    worst / (rho * amp)
}

/// Power iteration with Rayleigh-quotient estimate on an irreducible
/// non-negative adjacency. The Perron root is simple, so no deflation.
pub fn power_iterate(graph: &WeightedGraph, opts: &PowerOptions) -> Result<Eigenpair> {
    let n = graph.vertex_count();
    if n == 0 || graph.edge_count() == 0 {
        return Err(Error::Structural("graph has no edges".into()));
    }
    if !graph.is_irreducible() {
        return Err(Error::Structural(
            "graph is not irreducible on its positive-weight support".into(),
        ));
    }

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut last_residual = f64::INFINITY;

    for iter in 0..opts.max_iter {
        graph.matvec(&x, &mut ax);
        // x has unit 2-norm, so the Rayleigh quotient is x . Ax.
        let rho: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        if rho > 0.0 {
            let res = eigen_residual(graph, rho, &x, &ax);
            last_residual = res;
            if res <= opts.tol {
                return Ok(Eigenpair {
                    rho,
                    psi: x,
                    residual: res,
                    tol: opts.tol,
                    iterations: iter,
                });
            }
        }
        // One shifted step: y = (A + shift I) x, renormalized.
        let mut norm = 0.0;
        for i in 0..n {
            ax[i] += opts.shift * x[i];
            norm += ax[i] * ax[i];
        }
        let norm = norm.sqrt();
        for i in 0..n {
            x[i] = ax[i] / norm;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: last_residual,
    })
}

/// Residual report for the discrete Schroedinger ground-state identity.
///
/// With the graph Laplacian `Delta psi(x) = sum_y A(x,y) psi(y) - V(x) psi(x)`
/// and potential `V(x) = -sum_y A(x,y)`, the equation
/// `-Delta psi + V psi = -rho psi` collapses algebraically to `A psi = rho psi`;
/// evaluating it as written guards the sign and degree conventions.
#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub max_residual: f64,
    /// Per-vertex |(-Delta psi + V psi) + rho psi|, unnormalized.
    pub residuals: Vec<f64>,
}

pub fn verify_ground_state(graph: &WeightedGraph, eig: &Eigenpair) -> GroundStateReport {
    let n = graph.vertex_count();
    let mut apsi = vec![0.0; n];
    graph.matvec(&eig.psi, &mut apsi);
    let mut residuals = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for x in 0..n {
        let degree = graph.out_weight(x);
        let laplacian = apsi[x] - degree * eig.psi[x];
        let potential = -degree;
        let lhs = -laplacian + potential * eig.psi[x];
        let rhs = -eig.rho * eig.psi[x];
        let r = (lhs - rhs).abs();
        worst = worst.max(r);
        residuals.push(r);
    }
    GroundStateReport {
        max_residual: worst,
        residuals,
    }
}

/// Finite-section sensitivity: spectral radius at truncation sizes N and 2N.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub n: usize,
    pub rho_n: f64,
    pub rho_2n: f64,
    pub delta: f64,
}

pub fn truncation_sensitivity<F: Fn(usize) -> WeightedGraph>(
    build: F,
    n: usize,
    opts: &PowerOptions,
) -> Result<TruncationReport> {
    let rho_n = power_iterate(&build(n), opts)?.rho;
    let rho_2n = power_iterate(&build(2 * n), opts)?.rho;
    Ok(TruncationReport {
        n,
        rho_n,
        rho_2n,
        delta: (rho_2n - rho_n).abs(),
    })
}

/// One mixture case of the non-uniqueness demonstration.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureCase {
    pub lambda: f64,
    /// max |(A psi)(x) - 3 psi(x)| over interior vertices; exactly 0.0 in
    /// double precision because all quantities are small integers or halves.
    pub max_interior_residual: f64,
    /// Residual at the truncation wall (nonzero: the wall removes edges).
    pub max_boundary_residual: f64,
    /// max |row sum - 1| of the mixture kernel over interior vertices.
    pub max_interior_row_defect: f64,
}

/// Report for the looped-lattice example where the eigenfunction at rho = 3
/// is not unique: psi_plus(x) = 1 + x for x >= 0 (1 to the left) and its
/// mirror psi_minus both solve A psi = 3 psi, as does every convex mixture.
#[derive(Debug, Clone, Serialize)]
pub struct NonuniquenessReport {
    pub half_width: usize,
    pub rho: f64,
    pub cases: Vec<MixtureCase>,
    /// Transition probabilities out of the origin under the psi_plus kernel
    /// (to -1 and to +1).
    pub plus_origin: (f64, f64),
    /// Same under the psi_minus kernel.
    pub minus_origin: (f64, f64),
    #[serde(skip)]
    pub kernel_plus: MarkovKernel,
    #[serde(skip)]
    pub kernel_minus: MarkovKernel,
}

fn mixture_psi(half_width: usize, lambda: f64) -> Vec<f64> {
    let n = 2 * half_width + 1;
    (0..n)
        .map(|i| {
            let x = i as f64 - half_width as f64;
            let plus = 1.0 + x.max(0.0);
            let minus = 1.0 + (-x).max(0.0);
            lambda * plus + (1.0 - lambda) * minus
        })
        .collect()
}

/// Kernel p(x, y) = A(x, y) psi(y) / (rho psi(x)) for an explicit psi.
fn doob_kernel(graph: &WeightedGraph, rho: f64, psi: &[f64]) -> MarkovKernel {
    let rows = (0..graph.vertex_count())
        .map(|x| {
            graph
                .row(x)
                .iter()
                .map(|&(y, w)| (y, w * psi[y] / (rho * psi[x])))
                .collect()
        })
        .collect();
    MarkovKernel::from_rows(rows, None)
}

pub fn nonuniqueness_demo(half_width: usize) -> NonuniquenessReport {
    let rho = 3.0;
    let graph = lattice_with_loops(half_width);
    let n = graph.vertex_count();
    let origin = half_width;
    let mut apsi = vec![0.0; n];

    let mut cases = Vec::new();
    for &lambda in &[1.0, 0.5, 0.0] {
        let psi = mixture_psi(half_width, lambda);
        graph.matvec(&psi, &mut apsi);
        let mut interior = 0.0f64;
        let mut boundary = 0.0f64;
        for x in 0..n {
            let r = (apsi[x] - rho * psi[x]).abs();
            if x == 0 || x == n - 1 {
                boundary = boundary.max(r);
            } else {
                interior = interior.max(r);
            }
        }
        let kernel = doob_kernel(&graph, rho, &psi);
        let mut row_defect = 0.0f64;
        for x in 1..n - 1 {
            let s: f64 = kernel.row(x).iter().map(|&(_, p)| p).sum();
            row_defect = row_defect.max((s - 1.0).abs());
        }
        cases.push(MixtureCase {
            lambda,
            max_interior_residual: interior,
            max_boundary_residual: boundary,
            max_interior_row_defect: row_defect,
        });
    }

    let psi_plus = mixture_psi(half_width, 1.0);
    let psi_minus = mixture_psi(half_width, 0.0);
    let kernel_plus = doob_kernel(&graph, rho, &psi_plus);
    let kernel_minus = doob_kernel(&graph, rho, &psi_minus);
    let origin_probs = |k: &MarkovKernel| {
        let down = k
            .row(origin)
            .iter()
            .find(|&&(t, _)| t == origin - 1)
            .map(|&(_, p)| p)
            .unwrap_or(0.0);
        let up = k
            .row(origin)
            .iter()
            .find(|&&(t, _)| t == origin + 1)
            .map(|&(_, p)| p)
            .unwrap_or(0.0);
        (down, up)
    };
    NonuniquenessReport {
        half_width,
        rho,
        plus_origin: origin_probs(&kernel_plus),
        minus_origin: origin_probs(&kernel_minus),
        cases,
        kernel_plus,
        kernel_minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle_graph, path_graph};
    use approx::assert_relative_eq;

    #[test]
    fn three_path_eigenpair_matches_closed_form() {
        // Adjacency of the 3-path has eigenvalues sqrt(2), 0, -sqrt(2) with
        // Perron vector proportional to (1, sqrt(2), 1).
        let eig = power_iterate(&path_graph(3), &PowerOptions::default()).unwrap();
        assert_relative_eq!(eig.rho, 2.0f64.sqrt(), epsilon = 1e-12);
        let scale = eig.psi[0];
        assert_relative_eq!(eig.psi[1] / scale, 2.0f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(eig.psi[2] / scale, 1.0, epsilon = 1e-10);
        let norm: f64 = eig.psi.iter().map(|p| p * p).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
        assert!(eig.psi.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn single_vertex_self_loop_has_rho_gamma() {
        let mut g = WeightedGraph::new(1, false);
        g.add_edge(0, 0, 0.7).unwrap();
        let eig = power_iterate(&g, &PowerOptions::default()).unwrap();
        assert_relative_eq!(eig.rho, 0.7, epsilon = 1e-14);
        assert_relative_eq!(eig.psi[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reducible_graph_is_a_structural_error() {
        let mut g = WeightedGraph::new(4, false);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(2, 3, 1.0).unwrap();
        assert!(matches!(
            power_iterate(&g, &PowerOptions::default()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn non_convergence_reports_last_residual() {
        let opts = PowerOptions {
            max_iter: 3,
            ..Default::default()
        };
        match power_iterate(&path_graph(6), &opts) {
            Err(Error::NonConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn cycle_rho_is_two() {
        let eig = power_iterate(&cycle_graph(4), &PowerOptions::default()).unwrap();
        assert_relative_eq!(eig.rho, 2.0, epsilon = 1e-12);
        // Regular graph: psi is constant.
        for &p in &eig.psi {
            assert_relative_eq!(p, 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn scale_invariance_of_rho_and_kernel() {
        let g = path_graph(5);
        let eig1 = power_iterate(&g, &PowerOptions::default()).unwrap();
        let g3 = g.scaled(3.0);
        let eig3 = power_iterate(&g3, &PowerOptions::default()).unwrap();
        assert_relative_eq!(eig3.rho, 3.0 * eig1.rho, epsilon = 1e-10);
        let k1 = crate::kernel::merw_kernel(&g, &eig1).unwrap();
        let k3 = crate::kernel::merw_kernel(&g3, &eig3).unwrap();
        for x in 0..5 {
            for (&(t1, p1), &(t3, p3)) in k1.row(x).iter().zip(k3.row(x)) {
                assert_eq!(t1, t3);
                assert_relative_eq!(p1, p3, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ground_state_identity_holds_for_three_path() {
        let g = path_graph(3);
        let eig = power_iterate(&g, &PowerOptions::default()).unwrap();
        let report = verify_ground_state(&g, &eig);
        assert!(report.max_residual < 1e-10, "{}", report.max_residual);
    }

    #[test]
    fn perturbed_psi_shows_residual_of_matching_size() {
        let g = path_graph(3);
        let mut eig = power_iterate(&g, &PowerOptions::default()).unwrap();
        let clean = verify_ground_state(&g, &eig).max_residual;
        eig.psi[1] += 1e-3;
        let dirty = verify_ground_state(&g, &eig).max_residual;
        assert!(dirty > 1e-4 && dirty < 1e-2, "{clean} -> {dirty}");
    }

    #[test]
    fn looped_lattice_psi_plus_is_exact_in_the_interior() {
        // Hand check at x = 1: psi(0) + psi(2) + psi(1) = 1 + 3 + 2 = 6 = 3 psi(1).
        let report = nonuniqueness_demo(30);
        for case in &report.cases {
            assert_eq!(case.max_interior_residual, 0.0, "lambda={}", case.lambda);
            assert!(case.max_boundary_residual > 0.0);
            assert!(case.max_interior_row_defect < 1e-15);
        }
        // The two extremal kernels genuinely differ at the origin.
        assert_relative_eq!(report.plus_origin.1, 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(report.plus_origin.0, 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(report.minus_origin.1, 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(report.minus_origin.0, 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn truncated_looped_lattice_rho_approaches_three() {
        let opts = PowerOptions {
            tol: 1e-10,
            max_iter: 4_000_000,
            shift: 1.0,
        };
        let report = truncation_sensitivity(lattice_with_loops, 50, &opts).unwrap();
        assert!(report.rho_n < 3.0);
        assert!(report.rho_2n < 3.0);
        assert!(report.rho_2n > report.rho_n);
        assert!(3.0 - report.rho_2n < 5e-3, "rho_2n = {}", report.rho_2n);
    }
}
