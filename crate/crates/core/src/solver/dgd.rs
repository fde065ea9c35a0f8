use super::{agent_gradient_stacked, ensure_finite, Batch, Method, SolverError};
use crate::graph::MixingMatrix;
use crate::linalg::Stacked;
use crate::oracles::Problem;

/// Diminishing step `ℓ_k = 1/(3√(k + 100))`.
pub fn dgd_step_size(k: usize) -> f64 {
    1.0 / (3.0 * ((k + 100) as f64).sqrt())
}

/// Proximal decentralized gradient descent:
/// `x^{k+1} = prox_r^{1/ℓ_k}(W x^k − ℓ_k ∇f(x^k))`.
#[derive(Debug, Clone)]
pub struct ProxDgd {
    w: MixingMatrix,
    k: usize,
    x: Stacked,
}

impl ProxDgd {
    pub fn new(w: MixingMatrix, x0: Stacked) -> Self {
        Self { w, k: 0, x: x0 }
    }
}

impl Method for ProxDgd {
    fn name(&self) -> &str {
        "prox_dgd"
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn iterate(&self) -> &Stacked {
        &self.x
    }

    fn step(&mut self, problem: &Problem) -> Result<(), SolverError> {
        let step = dgd_step_size(self.k);
        let g = problem.gradient(&self.x);
        let mut v = self.w.matrix().apply_stacked(&self.x);
        for (vv, gv) in v.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *vv -= step * gv;
        }
        let mut next = Stacked::zeros(v.agents(), v.dim());
        for i in 0..v.agents() {
            problem.regularizers[i].prox_into(v.row(i), 1.0 / step, next.row_mut(i));
        }
        ensure_finite(&next, self.k + 1)?;
        self.x = next;
        self.k += 1;
        Ok(())
    }
}

/// Projected stochastic gradient with mixing:
/// `x^{k+1} = Π_box(W x^k − ℓ_k Ḡ(x^k, ξ^k))`; only the box part of each
/// regularizer is used.
#[derive(Debug, Clone)]
pub struct Psgd {
    w: MixingMatrix,
    batch: Batch,
    seed: u64,
    k: usize,
    x: Stacked,
}

impl Psgd {
    pub fn new(w: MixingMatrix, batch: Batch, seed: u64, x0: Stacked) -> Self {
        Self {
            w,
            batch,
            seed,
            k: 0,
            x: x0,
        }
    }
}

impl Method for Psgd {
    fn name(&self) -> &str {
        "psgd"
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn iterate(&self) -> &Stacked {
        &self.x
    }

    fn step(&mut self, problem: &Problem) -> Result<(), SolverError> {
        let step = dgd_step_size(self.k);
        let g = agent_gradient_stacked(problem, &self.x, self.batch, self.seed, self.k)?;
        let mut v = self.w.matrix().apply_stacked(&self.x);
        for (vv, gv) in v.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *vv -= step * gv;
        }
        let mut next = Stacked::zeros(v.agents(), v.dim());
        for i in 0..v.agents() {
            problem.regularizers[i].project_box(v.row(i), next.row_mut(i));
        }
        ensure_finite(&next, self.k + 1)?;
        self.x = next;
        self.k += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::oracles::{DiagonalQuadratic, Regularizer, SmoothTerm};

    #[test]
    fn first_step_size() {
        assert!((dgd_step_size(0) - 1.0 / 30.0).abs() < 1e-17);
    }

    #[test]
    fn complete_graph_reduces_to_centralized_descent() {
        let n = 4;
        let c = vec![0.5, -1.0, 2.0];
        let smooth: Vec<Box<dyn SmoothTerm>> = (0..n)
            .map(|_| Box::new(DiagonalQuadratic::new(vec![1.0, 2.0, 0.5], c.clone())) as Box<dyn SmoothTerm>)
            .collect();
        let p = Problem::new(smooth, vec![Regularizer::Zero; n]);
        let mut u = crate::solver::uniform_start(n, 3, -1.0, 1.0, 3).mean_row();
        let w = MixingMatrix::metropolis(&Graph::complete(n).unwrap());
        let mut m = ProxDgd::new(w, Stacked::consensus(n, &u));
        let f = DiagonalQuadratic::new(vec![1.0, 2.0, 0.5], c.clone());
        let mut g = vec![0.0; 3];
        for k in 0..50 {
            m.step(&p).unwrap();
            f.gradient(&u, &mut g);
            for (uv, gv) in u.iter_mut().zip(&g) {
                *uv -= dgd_step_size(k) * gv;
            }
            for i in 0..n {
                for l in 0..3 {
                    assert!((m.iterate().row(i)[l] - u[l]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn psgd_clamps_to_box() {
        let n = 2;
        let smooth: Vec<Box<dyn SmoothTerm>> = (0..n)
            .map(|_| Box::new(DiagonalQuadratic::isotropic(1.0, vec![100.0])) as Box<dyn SmoothTerm>)
            .collect();
        let p = Problem::new(smooth, vec![Regularizer::unit_box(); n]);
        let mut m = Psgd::new(MixingMatrix::metropolis(&Graph::path(2).unwrap()), Batch::Full, 0, Stacked::consensus(2, &[0.99]));
        m.step(&p).unwrap();
        assert_eq!(m.iterate().as_slice(), &[1.0, 1.0]);
    }
}
