//! Optimality measures, the descent potential, theory constants and the
//! statistical checks built on them.

mod checks;
mod fista;
mod potential;
mod theory;
mod trace;

pub use checks::{
    fit_loglog, plateau, rate_check, rounds_to_epsilon, strictly_decreasing, variance_bound_check, RateReport,
    VarianceReport,
};
pub use fista::{minimize_composite, CompositeSolution};
pub use potential::{PotentialEvaluator, PotentialParts};
pub use theory::{feasible_config, theory_constants, TheoryConstants, TheoryInputs};
pub use trace::{RunTrace, TraceMeta, TraceRecord, TRACE_HEADER};

use crate::graph::{apply_incidence, Graph};
use crate::linalg::{spectral_norm, Stacked};
use crate::oracles::{OracleError, Problem};
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("inner solver for {what} did not reach tolerance {tol:e} in {iterations} iterations")]
    InnerSolverDiverged { what: &'static str, tol: f64, iterations: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("infeasible parameters: {0} does not hold")]
    InfeasibleParameters(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o: {0}")]
    Io(String),
}

/// `σ_A`, the largest singular value of the incidence matrix.
pub fn incidence_norm(g: &Graph) -> f64 {
    if g.edge_count() == 0 {
        return 0.0;
    }
    spectral_norm(&crate::graph::IncidencePair::new(g).signed_dense()).expect("incidence entries are finite")
}

/// `Q(x, λ) = ‖x − prox_r¹(x − ∇f(x) − Aᵀλ)‖² + ‖Ax‖²`.
pub fn optimality_gap(problem: &Problem, g: &Graph, x: &Stacked, dual_image: &Stacked) -> f64 {
    let grad = problem.gradient(x);
    let dim = x.dim();
    let mut v = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut total = 0.0;
    for i in 0..x.agents() {
        for l in 0..dim {
            v[l] = x.row(i)[l] - grad.row(i)[l] - dual_image.row(i)[l];
        }
        problem.regularizers[i].prox_into(&v, 1.0, &mut u);
        total += x.row(i).iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    total + apply_incidence(g, x).norm_sq()
}

/// `(‖x̄ − prox_r̄¹(x̄ − Σ_i ∇f_i(x̄))‖², (1/N) Σ_i ‖x_i − x̄‖²)` with
/// `r̄ = Σ_i r_i` on a single copy.
pub fn stationarity_and_consensus(problem: &Problem, x: &Stacked) -> (f64, f64) {
    let mean = x.mean_row();
    let dim = mean.len();
    let mut total_grad = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for f in &problem.smooth {
        f.gradient(&mean, &mut g);
        for (t, v) in total_grad.iter_mut().zip(&g) {
            *t += v;
        }
    }
    let v: Vec<f64> = mean.iter().zip(&total_grad).map(|(a, b)| a - b).collect();
    let u = problem.aggregate_regularizer().prox(&v, 1.0);
    let stationarity = mean.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum();
    let consensus = x
        .rows()
        .map(|r| r.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum::<f64>()
        / x.agents() as f64;
    (stationarity, consensus)
}
