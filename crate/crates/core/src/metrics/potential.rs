use super::fista::minimize_composite;
use super::{incidence_norm, MetricsError};
use crate::graph::{apply_laplacian, Graph};
use crate::linalg::{dot, Stacked};
use crate::oracles::Problem;
use crate::solver::{SolverConfig, SolverState};

/// The pieces of `φ = L_c(x, z; λ) + τ‖x − x_prev‖² + 2P(z) − 2d(z; λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParts {
    pub lagrangian: f64,
    pub momentum: f64,
    /// `P(z) = min_{x: Ax = 0} f(x) + r(x) + κ/2‖x − z‖²`.
    pub primal: f64,
    /// `d(z; λ) = min_x L_c(x, z; λ)`.
    pub dual: f64,
    pub phi: f64,
}

/// Evaluates the potential along a trajectory, warm-starting both inner
/// minimizations from the previous call.
#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    graph: Graph,
    c: f64,
    kappa: f64,
    tau: f64,
    lap_norm: f64,
    pub tol: f64,
    pub max_iter: usize,
    dual_warm: Option<Vec<f64>>,
    primal_warm: Option<Vec<f64>>,
}

fn fill(dst: &mut Stacked, src: &[f64]) {
    dst.as_mut_slice().copy_from_slice(src);
}

impl PotentialEvaluator {
    pub fn new(graph: &Graph, cfg: &SolverConfig, tau: f64) -> Self {
        let sa = incidence_norm(graph);
        Self {
            graph: graph.clone(),
            c: cfg.c,
            kappa: cfg.kappa,
            tau,
            lap_norm: sa * sa,
            tol: 1e-10,
            max_iter: 200_000,
            dual_warm: None,
            primal_warm: None,
        }
    }

    /// `L_c(x, z; λ)` with `p = Aᵀλ`.
    pub fn lagrangian(&self, problem: &Problem, x: &Stacked, z: &Stacked, p: &Stacked) -> f64 {
        problem.smooth_value(x) + problem.regularizer_value(x) + self.smooth_extra(x, z, p)
    }

    fn smooth_extra(&self, x: &Stacked, z: &Stacked, p: &Stacked) -> f64 {
        let lx = apply_laplacian(&self.graph, x);
        dot(p.as_slice(), x.as_slice())
            + 0.5 * self.c * dot(x.as_slice(), lx.as_slice())
            + 0.5 * self.kappa * x.dist_sq(z)
    }

    /// `d(z; λ)`.
    pub fn dual_function(&mut self, problem: &Problem, z: &Stacked, p: &Stacked) -> Result<f64, MetricsError> {
        let (n, dim) = (z.agents(), z.dim());
        let start = self.dual_warm.clone().unwrap_or_else(|| z.as_slice().to_vec());
        let mut xs = Stacked::zeros(n, dim);
        let (c, kappa) = (self.c, self.kappa);
        let graph = &self.graph;
        let smooth = |v: &[f64], grad: &mut [f64]| {
            fill(&mut xs, v);
            let g = problem.gradient(&xs);
            let lx = apply_laplacian(graph, &xs);
            let mut val = problem.smooth_value(&xs) + 0.5 * c * dot(v, lx.as_slice());
            for l in 0..v.len() {
                let dz = v[l] - z.as_slice()[l];
                grad[l] = g.as_slice()[l] + p.as_slice()[l] + c * lx.as_slice()[l] + kappa * dz;
                val += p.as_slice()[l] * v[l] + 0.5 * kappa * dz * dz;
            }
            val
        };
        let prox = |v: &[f64], t: f64, out: &mut [f64]| {
            for i in 0..n {
                problem.regularizers[i].prox_into(&v[i * dim..(i + 1) * dim], 1.0 / t, &mut out[i * dim..(i + 1) * dim]);
            }
        };
        let guess = problem.lipschitz + c * self.lap_norm + kappa;
        let sol = minimize_composite("d(z; lambda)", &start, smooth, prox, guess, self.tol, self.max_iter)?;
        let mut xs = Stacked::zeros(n, dim);
        fill(&mut xs, &sol.x);
        let value = sol.smooth_value + problem.regularizer_value(&xs);
        self.dual_warm = Some(sol.x);
        Ok(value)
    }

    /// `P(z)`, minimized over a single shared copy `u`.
    pub fn primal_function(&mut self, problem: &Problem, z: &Stacked) -> Result<f64, MetricsError> {
        let (n, dim) = (z.agents(), z.dim());
        let start = self.primal_warm.clone().unwrap_or_else(|| z.mean_row());
        let kappa = self.kappa;
        let reg = problem.aggregate_regularizer();
        let mut gi = vec![0.0; dim];
        let smooth = |u: &[f64], grad: &mut [f64]| {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut val = 0.0;
            for (i, f) in problem.smooth.iter().enumerate() {
                val += f.value(u);
                f.gradient(u, &mut gi);
                for l in 0..dim {
                    let dz = u[l] - z.row(i)[l];
                    grad[l] += gi[l] + kappa * dz;
                    val += 0.5 * kappa * dz * dz;
                }
            }
            val
        };
        let prox = |v: &[f64], t: f64, out: &mut [f64]| reg.prox_into(v, 1.0 / t, out);
        let guess = n as f64 * (problem.lipschitz + kappa);
        let sol = minimize_composite("P(z)", &start, smooth, prox, guess, self.tol, self.max_iter)?;
        let value = sol.smooth_value + reg.value(&sol.x);
        self.primal_warm = Some(sol.x);
        Ok(value)
    }

    /// `φ` at a solver state, pairing `x^k` with `z^k` and `p^k`.
    pub fn evaluate(&mut self, problem: &Problem, st: &SolverState) -> Result<PotentialParts, MetricsError> {
        let lagrangian = self.lagrangian(problem, &st.x, &st.z, &st.p);
        let momentum = self.tau * st.x.dist_sq(&st.x_prev);
        let primal = self.primal_function(problem, &st.z)?;
        let dual = self.dual_function(problem, &st.z, &st.p)?;
        Ok(PotentialParts {
            lagrangian,
            momentum,
            primal,
            dual,
            phi: lagrangian + momentum + 2.0 * primal - 2.0 * dual,
        })
    }
}
