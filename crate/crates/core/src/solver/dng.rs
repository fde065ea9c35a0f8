use super::{DualInit, EtaSchedule, SolverConfig, SolverError, UpdateMatrices};
use crate::graph::Graph;
use crate::linalg::{DenseMatrix, Stacked};
use crate::oracles::Problem;

/// Predicts the next iterate through the accelerated-gradient rewriting
///
/// `x^{k+1} = W̃ s^k − Ψ⁻¹∇f(s^k) + C^k`,
/// `C^k = Ψ⁻¹(cBᵀB + κI)(x^k − s^k) − Σ_t (I − W̃) x^t`,
///
/// valid when `α = c`, `β = 1` and `r ≡ 0`. The sum runs over the rounds in
/// which a dual ascent has been applied: `t = 1..k` for [`DualInit::Zero`],
/// `t = 0..k` for [`DualInit::AscentFromZero`].
#[derive(Debug, Clone)]
pub struct DngCheck {
    wt: DenseMatrix,
    /// `Ψ⁻¹(cBᵀB + κI)`.
    corr: DenseMatrix,
    psi: Vec<f64>,
    cfg: SolverConfig,
    schedule: EtaSchedule,
    k: usize,
    x_prev: Option<Stacked>,
    /// `Σ_t (I − W̃) x^t`.
    cumulative: Option<Stacked>,
    last_correction: Option<Stacked>,
}

impl DngCheck {
    pub fn new(problem: &Problem, g: &Graph, cfg: &SolverConfig) -> Result<Self, SolverError> {
        if cfg.alpha != cfg.c {
            return Err(SolverError::PreconditionViolated(format!(
                "alpha ({}) must equal c ({})",
                cfg.alpha, cfg.c
            )));
        }
        if cfg.beta != 1.0 {
            return Err(SolverError::PreconditionViolated(format!("beta must be 1, got {}", cfg.beta)));
        }
        if !problem.regularizers.iter().all(|r| r.is_zero()) {
            return Err(SolverError::PreconditionViolated("regularizer must vanish".into()));
        }
        let m = UpdateMatrices::new(g, cfg);
        let (_, wt) = m.extra_mixing(g, cfg);
        let (_, ut) = m.to_dense(g);
        let psi = m.psi();
        let mut corr = ut;
        for (i, p) in psi.iter().enumerate() {
            corr[(i, i)] += cfg.kappa / p;
        }
        Ok(Self {
            wt,
            corr,
            psi,
            cfg: *cfg,
            schedule: EtaSchedule::new(cfg.momentum),
            k: 0,
            x_prev: None,
            cumulative: None,
            last_correction: None,
        })
    }

    /// `I − W̃`.
    pub fn i_minus_wt(&self) -> DenseMatrix {
        let n = self.wt.rows;
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = if i == j { 1.0 } else { 0.0 } - self.wt[(i, j)];
            }
        }
        m
    }

    /// The correction `C^k` for the current `x^k` and extrapolation `s^k`.
    pub fn correction(&self, x: &Stacked, s: &Stacked) -> Stacked {
        let mut diff = x.clone();
        for (d, sv) in diff.as_mut_slice().iter_mut().zip(s.as_slice()) {
            *d -= sv;
        }
        let mut c = self.corr.apply_stacked(&diff);
        if let Some(sum) = &self.cumulative {
            for (cv, sv) in c.as_mut_slice().iter_mut().zip(sum.as_slice()) {
                *cv -= sv;
            }
        }
        c
    }

    /// `C^k` used by the most recent [`DngCheck::predict`].
    pub fn last_correction(&self) -> Option<&Stacked> {
        self.last_correction.as_ref()
    }

    /// Feeds `x^k` and returns the predicted `x^{k+1}`; call once per round
    /// starting from `x⁰`.
    pub fn predict(&mut self, problem: &Problem, x: &Stacked) -> Stacked {
        let k = self.k;
        let s = match &self.x_prev {
            None => x.clone(),
            Some(prev) => {
                let eta = self.schedule.eta(k);
                let mut s = x.clone();
                for ((sv, a), b) in s.as_mut_slice().iter_mut().zip(x.as_slice()).zip(prev.as_slice()) {
                    *sv = a + eta * (a - b);
                }
                s
            }
        };
        let ascended = k > 0 || self.cfg.dual_init == DualInit::AscentFromZero;
        if ascended {
            let add = self.i_minus_wt().apply_stacked(x);
            match &mut self.cumulative {
                None => self.cumulative = Some(add),
                Some(sum) => {
                    for (a, b) in sum.as_mut_slice().iter_mut().zip(add.as_slice()) {
                        *a += b;
                    }
                }
            }
        }
        let c = self.correction(x, &s);
        let grad = problem.gradient(&s);
        let mut next = self.wt.apply_stacked(&s);
        for i in 0..next.agents() {
            let inv = 1.0 / self.psi[i];
            let (gi, ci) = (grad.row(i).to_vec(), c.row(i).to_vec());
            for ((v, g), cv) in next.row_mut(i).iter_mut().zip(&gi).zip(&ci) {
                *v += cv - inv * g;
            }
        }
        self.last_correction = Some(c);
        self.x_prev = Some(x.clone());
        self.k += 1;
        next
    }
}
