//! The primal-dual momentum method, its explicit-dual reference form, the
//! PG-EXTRA and D-NG rewritings, and the averaging baselines.
//!
//! Every solver is a synchronous round: agents read the frozen `k`-state and
//! the whole `(k+1)`-state is produced before anything else looks at it.

mod dgd;
mod dng;
mod matrices;
mod pg_extra;
mod reference;
mod schedule;
mod sppdm;

pub use crate::oracles::Batch;
pub use dgd::{dgd_step_size, ProxDgd, Psgd};
pub use dng::DngCheck;
pub use matrices::{AgentRow, UpdateMatrices};
pub use pg_extra::{ExtraInit, PgExtra};
pub use reference::ReferenceSolver;
pub use schedule::{nesterov_schedule, EtaSchedule};
pub use sppdm::{
    agent_dual_update, agent_extrapolate, agent_gradient, agent_half_step, agent_init_half, agent_relax,
    AgentView, SolverState, Sppdm,
};

use crate::linalg::Stacked;
use crate::oracles::{OracleError, Problem};
use serde::{Deserialize, Serialize};

/// Extrapolation schedule `η_k` for `s^k = x^k + η_k (x^k − x^{k−1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Momentum {
    #[default]
    Zero,
    Constant(f64),
    Nesterov,
}

/// Value of the dual image `p = Aᵀλ` that the first primal update sees.
///
/// `Zero` reproduces the initialisation step as written (neighbour averaging
/// with weights `(γ + c d_i + κ, c)`); `AscentFromZero` starts from `λ = 0`
/// and applies one dual ascent `λ ← αA x⁰` before the first primal update,
/// which makes the first step coincide with the usual PG-EXTRA start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DualInit {
    #[default]
    Zero,
    AscentFromZero,
}

/// Parameters of the primal-dual momentum method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Dual step.
    pub alpha: f64,
    /// Step of the proximal variable `z`, in `(0, 1]`.
    pub beta: f64,
    /// Curvature of the linearised surrogate.
    pub gamma: f64,
    /// Penalty on `‖Ax‖²`.
    pub c: f64,
    /// Weight of `‖x − z‖²`.
    pub kappa: f64,
    pub momentum: Momentum,
    pub batch: Batch,
    pub seed: u64,
    pub dual_init: DualInit,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 0.9,
            gamma: 3.0,
            c: 2.0,
            kappa: 1.0,
            momentum: Momentum::Nesterov,
            batch: Batch::Full,
            seed: 0,
            dual_init: DualInit::Zero,
        }
    }
}

impl SolverConfig {
    /// Returns the name of the first offending field.
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("c", self.c),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidParameter(name));
            }
        }
        if self.beta > 1.0 {
            return Err(SolverError::InvalidParameter("beta"));
        }
        if let Momentum::Constant(eta) = self.momentum {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(SolverError::InvalidParameter("momentum"));
            }
        }
        if self.batch == Batch::Mini(0) {
            return Err(SolverError::InvalidParameter("batch"));
        }
        Ok(())
    }

    /// `ψ_i = γ + 2c d_i + κ`.
    pub fn psi(&self, degree: usize) -> f64 {
        self.gamma + 2.0 * self.c * degree as f64 + self.kappa
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver parameter `{0}`")]
    InvalidParameter(&'static str),
    #[error("non-finite iterate at iteration {0}")]
    NonFiniteIterate(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
}

/// Common driver interface used by the harness and the netsim comparisons.
pub trait Method {
    fn name(&self) -> &str;
    /// Index `k` of the iterate returned by [`Method::iterate`].
    fn iteration(&self) -> usize;
    fn iterate(&self) -> &Stacked;
    /// The dual image `Aᵀλ^{k+1}` paired with `x^k` in the optimality gap,
    /// when the method carries a dual variable.
    fn gap_dual(&self) -> Option<Stacked> {
        None
    }
    fn step(&mut self, problem: &Problem) -> Result<(), SolverError>;
}

/// Per-agent gradient estimates at `x` for round `k`, each agent drawing
/// from its own replayable stream.
pub fn agent_gradient_stacked(
    problem: &Problem,
    x: &Stacked,
    batch: Batch,
    seed: u64,
    k: usize,
) -> Result<Stacked, OracleError> {
    let mut g = Stacked::zeros(x.agents(), x.dim());
    for i in 0..x.agents() {
        agent_gradient(problem, i, x.row(i), batch, seed, k, g.row_mut(i))?;
    }
    Ok(g)
}

pub(crate) fn ensure_finite(x: &Stacked, k: usize) -> Result<(), SolverError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SolverError::NonFiniteIterate(k))
    }
}

/// Iid `U[lo, hi]` starting point, one row per agent.
pub fn uniform_start(agents: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> Stacked {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x = Stacked::zeros(agents, dim);
    for v in x.as_mut_slice() {
        *v = rng.random_range(lo..=hi);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters() {
        let c = SolverConfig::default();
        assert_eq!((c.alpha, c.kappa, c.c, c.gamma, c.beta), (2.0, 1.0, 2.0, 3.0, 0.9));
        assert_eq!(c.psi(2), 12.0);
        c.validate().unwrap();
    }

    #[test]
    fn validation_names_the_field() {
        let c = SolverConfig {
            gamma: -1.0,
            ..SolverConfig::default()
        };
        assert_eq!(c.validate(), Err(SolverError::InvalidParameter("gamma")));
        let c = SolverConfig {
            beta: 1.5,
            ..SolverConfig::default()
        };
        assert_eq!(c.validate(), Err(SolverError::InvalidParameter("beta")));
    }
}
