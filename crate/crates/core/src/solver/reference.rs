use super::{ensure_finite, agent_gradient_stacked, DualInit, EtaSchedule, Method, SolverConfig, SolverError};
use crate::graph::{apply_incidence, apply_incidence_transpose, apply_signless_laplacian, Graph};
use crate::linalg::Stacked;
use crate::oracles::Problem;

/// The same method written as inexact primal-dual steps on the augmented
/// Lagrangian, with an explicit multiplier per edge:
///
/// `λ ← λ + αAx`, `s = x + η(x − x_prev)`,
/// `x ← prox_r^Ψ(Ψ⁻¹(γs + cBᵀBx + κz − G(s) − Aᵀλ))`, `z ← z + β(x − z)`.
///
/// It draws gradient estimates from the same per-(agent, round) streams as
/// [`super::Sppdm`], so the two trajectories agree up to rounding.
#[derive(Debug, Clone)]
pub struct ReferenceSolver {
    graph: Graph,
    cfg: SolverConfig,
    psi: Vec<f64>,
    schedule: EtaSchedule,
    k: usize,
    x: Stacked,
    x_prev: Stacked,
    z: Stacked,
    lambda: Stacked,
}

impl ReferenceSolver {
    pub fn new(graph: &Graph, cfg: SolverConfig, x0: Stacked) -> Result<Self, SolverError> {
        cfg.validate()?;
        let psi = (0..graph.node_count()).map(|i| cfg.psi(graph.degree(i))).collect();
        Ok(Self {
            graph: graph.clone(),
            psi,
            schedule: EtaSchedule::new(cfg.momentum),
            k: 0,
            x_prev: x0.clone(),
            z: x0.clone(),
            lambda: Stacked::zeros(graph.edge_count(), x0.dim()),
            x: x0,
            cfg,
        })
    }

    /// Edge multipliers `λ^k`.
    pub fn lambda(&self) -> &Stacked {
        &self.lambda
    }

    /// `Aᵀλ^k`.
    pub fn dual_image(&self) -> Stacked {
        apply_incidence_transpose(&self.graph, &self.lambda)
    }

    pub fn z(&self) -> &Stacked {
        &self.z
    }
}

impl Method for ReferenceSolver {
    fn name(&self) -> &str {
        "reference"
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn iterate(&self) -> &Stacked {
        &self.x
    }

    fn gap_dual(&self) -> Option<Stacked> {
        let mut lam = apply_incidence(&self.graph, &self.x);
        for (o, v) in lam.as_mut_slice().iter_mut().zip(self.lambda.as_slice()) {
            *o = v + self.cfg.alpha * *o;
        }
        Some(apply_incidence_transpose(&self.graph, &lam))
    }

    fn step(&mut self, problem: &Problem) -> Result<(), SolverError> {
        let k = self.k;
        let ascend = k > 0 || self.cfg.dual_init == DualInit::AscentFromZero;
        if ascend {
            let ax = apply_incidence(&self.graph, &self.x);
            for (l, v) in self.lambda.as_mut_slice().iter_mut().zip(ax.as_slice()) {
                *l += self.cfg.alpha * v;
            }
        }
        let eta = if k == 0 { 0.0 } else { self.schedule.eta(k) };
        let mut s = self.x.clone();
        for ((sv, x), xp) in s.as_mut_slice().iter_mut().zip(self.x.as_slice()).zip(self.x_prev.as_slice()) {
            *sv = x + eta * (x - xp);
        }
        let g = agent_gradient_stacked(problem, &s, self.cfg.batch, self.cfg.seed, k)?;
        let btb = apply_signless_laplacian(&self.graph, &self.x);
        let at_lambda = apply_incidence_transpose(&self.graph, &self.lambda);
        let (n_agents, dim) = (self.x.agents(), self.x.dim());
        let mut next = Stacked::zeros(n_agents, dim);
        let mut arg = vec![0.0; dim];
        for i in 0..n_agents {
            for l in 0..dim {
                arg[l] = (self.cfg.gamma * s.row(i)[l] + self.cfg.c * btb.row(i)[l] + self.cfg.kappa * self.z.row(i)[l]
                    - g.row(i)[l]
                    - at_lambda.row(i)[l])
                    / self.psi[i];
            }
            problem.regularizers[i].prox_into(&arg, self.psi[i], next.row_mut(i));
        }
        ensure_finite(&next, k + 1)?;
        for (z, x) in self.z.as_mut_slice().iter_mut().zip(next.as_slice()) {
            *z += self.cfg.beta * (x - *z);
        }
        self.x_prev = std::mem::replace(&mut self.x, next);
        self.k = k + 1;
        Ok(())
    }
}
