use super::{ensure_finite, Method, SolverConfig, SolverError, UpdateMatrices};
use crate::graph::{Graph, MixingMatrix};
use crate::linalg::{DenseMatrix, Stacked};
use crate::oracles::Problem;

/// Which mixing matrix forms the first half iterate `M x⁰ − step ∘ ∇f(x⁰)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtraInit {
    /// `M = W` (the customary start).
    Standard,
    /// `M = W̃`.
    Tilde,
}

/// Proximal EXTRA with per-agent step sizes:
///
/// `x^{k+1/2} = x^{k−1/2} + W x^k − W̃ x^{k−1} − step ∘ (∇f(x^k) − ∇f(x^{k−1}))`,
/// `x^{k+1} = prox_r^{weight}(x^{k+1/2})`.
#[derive(Debug, Clone)]
pub struct PgExtra {
    name: String,
    w: DenseMatrix,
    wt: DenseMatrix,
    step: Vec<f64>,
    prox_weight: Vec<f64>,
    init: ExtraInit,
    k: usize,
    x: Stacked,
    x_prev: Stacked,
    x_half: Stacked,
    grad_prev: Stacked,
}

impl PgExtra {
    pub fn new(
        w: DenseMatrix,
        wt: DenseMatrix,
        step: Vec<f64>,
        prox_weight: Vec<f64>,
        init: ExtraInit,
        x0: Stacked,
    ) -> Self {
        let (n, d) = (x0.agents(), x0.dim());
        Self {
            name: "pg_extra".into(),
            w,
            wt,
            step,
            prox_weight,
            init,
            k: 0,
            x_prev: x0.clone(),
            x: x0,
            x_half: Stacked::zeros(n, d),
            grad_prev: Stacked::zeros(n, d),
        }
    }

    /// `W = U + (γ+κ)Ψ⁻¹`, `W̃ = Ũ + (γ+κ)Ψ⁻¹`, step `Ψ⁻¹`, prox weight `Ψ`.
    pub fn from_update_matrices(g: &Graph, cfg: &SolverConfig, init: ExtraInit, x0: Stacked) -> Self {
        let m = UpdateMatrices::new(g, cfg);
        let (w, wt) = m.extra_mixing(g, cfg);
        let psi = m.psi();
        let step = psi.iter().map(|p| 1.0 / p).collect();
        Self::new(w, wt, step, psi, init, x0)
    }

    /// `W` given, `W̃ = (I + W)/2`, a uniform step `ℓ` and prox weight `1/ℓ`.
    pub fn with_mixing(w: &MixingMatrix, step: f64, x0: Stacked) -> Self {
        let n = w.size();
        let mut wt = w.matrix().clone();
        for i in 0..n {
            for j in 0..n {
                wt[(i, j)] = 0.5 * (wt[(i, j)] + if i == j { 1.0 } else { 0.0 });
            }
        }
        Self::new(w.matrix().clone(), wt, vec![step; n], vec![1.0 / step; n], ExtraInit::Standard, x0)
    }

    pub fn mixing(&self) -> (&DenseMatrix, &DenseMatrix) {
        (&self.w, &self.wt)
    }
}

impl Method for PgExtra {
    fn name(&self) -> &str {
        &self.name
    }

    fn iteration(&self) -> usize {
        self.k
    }

    fn iterate(&self) -> &Stacked {
        &self.x
    }

    fn step(&mut self, problem: &Problem) -> Result<(), SolverError> {
        let g = problem.gradient(&self.x);
        let mut half = if self.k == 0 {
            match self.init {
                ExtraInit::Standard => self.w.apply_stacked(&self.x),
                ExtraInit::Tilde => self.wt.apply_stacked(&self.x),
            }
        } else {
            let wx = self.w.apply_stacked(&self.x);
            let wtx = self.wt.apply_stacked(&self.x_prev);
            let mut h = self.x_half.clone();
            for ((hv, a), b) in h.as_mut_slice().iter_mut().zip(wx.as_slice()).zip(wtx.as_slice()) {
                *hv += a - b;
            }
            h
        };
        for i in 0..half.agents() {
            let st = self.step[i];
            let gp = self.grad_prev.row(i).to_vec();
            let first = self.k == 0;
            for ((hv, gv), gpv) in half.row_mut(i).iter_mut().zip(g.row(i)).zip(&gp) {
                *hv -= if first { st * gv } else { st * (gv - gpv) };
            }
        }
        let mut next = Stacked::zeros(half.agents(), half.dim());
        for i in 0..half.agents() {
            problem.regularizers[i].prox_into(half.row(i), self.prox_weight[i], next.row_mut(i));
        }
        ensure_finite(&next, self.k + 1)?;
        self.x_half = half;
        self.grad_prev = g;
        self.x_prev = std::mem::replace(&mut self.x, next);
        self.k += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{DiagonalQuadratic, Regularizer, SmoothTerm};

    #[test]
    fn consensus_stationary_point_is_fixed() {
        let g = Graph::circle(3).unwrap();
        let c = vec![0.2, -0.4];
        let smooth: Vec<Box<dyn SmoothTerm>> = (0..3)
            .map(|_| Box::new(DiagonalQuadratic::isotropic(2.0, c.clone())) as Box<dyn SmoothTerm>)
            .collect();
        let p = Problem::new(smooth, vec![Regularizer::Zero; 3]);
        let x0 = Stacked::consensus(3, &c);
        let mut m = PgExtra::from_update_matrices(&g, &SolverConfig::default(), ExtraInit::Standard, x0.clone());
        for _ in 0..10 {
            m.step(&p).unwrap();
            assert!(m.iterate().max_abs_diff(&x0) <= 1e-14);
        }
    }
}
