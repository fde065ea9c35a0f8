//! Per-agent objective pieces: smooth losses with full and mini-batch
//! gradients, and polyhedral regularizers with closed-form proximal maps.

mod regression;
mod regularizer;
mod sampling;
mod smooth;

pub use regression::{generate_regression, AgentData, RegressionDataset, RegressionSpec};
pub use regularizer::{prox_l1_box, Epigraph, Regularizer};
pub use sampling::{sample_stream, Batch};
pub use smooth::{
    empirical_lipschitz, truncated_loss_gradient, truncated_loss_value, DiagonalQuadratic, LeastSquares, SmoothTerm,
    TruncatedLoss,
};

use crate::linalg::Stacked;
use rand::RngCore;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mini-batch size must be at least 1")]
    EmptyBatch,
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("bad sizes: {0}")]
    BadSizes(String),
    #[error("regularizer has no polyhedral epigraph: {0}")]
    NotPolyhedral(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// A decentralized problem instance: one smooth term and one regularizer per
/// agent, plus the Lipschitz / weak-convexity constants the theory uses.
///
/// `lipschitz` and `weak_convexity` describe the stacked objective
/// `f(x) = Σ_i f_i(x_i)`, i.e. the max (resp. min) over agents.
#[derive(Debug)]
pub struct Problem {
    pub smooth: Vec<Box<dyn SmoothTerm>>,
    pub regularizers: Vec<Regularizer>,
    pub lipschitz: f64,
    pub weak_convexity: f64,
}

impl Problem {
    /// Constants default to the extreme values reported by the agents.
    pub fn new(smooth: Vec<Box<dyn SmoothTerm>>, regularizers: Vec<Regularizer>) -> Self {
        assert_eq!(smooth.len(), regularizers.len(), "one regularizer per agent");
        assert!(!smooth.is_empty(), "problem needs at least one agent");
        let dim = smooth[0].dim();
        assert!(smooth.iter().all(|s| s.dim() == dim), "agents disagree on dimension");
        let lipschitz = smooth.iter().map(|s| s.lipschitz()).fold(0.0, f64::max);
        let weak_convexity = smooth
            .iter()
            .map(|s| s.weak_convexity())
            .fold(f64::INFINITY, f64::min);
        Self {
            smooth,
            regularizers,
            lipschitz,
            weak_convexity,
        }
    }

    pub fn with_constants(mut self, lipschitz: f64, weak_convexity: f64) -> Self {
        self.lipschitz = lipschitz;
        self.weak_convexity = weak_convexity;
        self
    }

    pub fn agents(&self) -> usize {
        self.smooth.len()
    }

    pub fn dim(&self) -> usize {
        self.smooth[0].dim()
    }

    pub fn smooth_value(&self, x: &Stacked) -> f64 {
        self.smooth
            .iter()
            .enumerate()
            .map(|(i, f)| f.value(x.row(i)))
            .sum()
    }

    pub fn regularizer_value(&self, x: &Stacked) -> f64 {
        self.regularizers
            .iter()
            .enumerate()
            .map(|(i, r)| r.value(x.row(i)))
            .sum()
    }

    pub fn gradient(&self, x: &Stacked) -> Stacked {
        let mut g = Stacked::zeros(x.agents(), x.dim());
        for (i, f) in self.smooth.iter().enumerate() {
            f.gradient(x.row(i), g.row_mut(i));
        }
        g
    }

    /// Mini-batch gradient of every agent, each drawing from its own stream.
    pub fn stochastic_gradient(
        &self,
        x: &Stacked,
        batch: Batch,
        mut stream: impl FnMut(usize) -> Box<dyn RngCore>,
    ) -> Result<Stacked, OracleError> {
        let mut g = Stacked::zeros(x.agents(), x.dim());
        for (i, f) in self.smooth.iter().enumerate() {
            let mut rng = stream(i);
            f.stochastic_gradient(x.row(i), rng.as_mut(), batch, g.row_mut(i))?;
        }
        Ok(g)
    }

    /// Blockwise prox with per-agent weights `ψ_i`.
    pub fn prox(&self, v: &Stacked, psi: &[f64]) -> Stacked {
        let mut out = Stacked::zeros(v.agents(), v.dim());
        for (i, r) in self.regularizers.iter().enumerate() {
            r.prox_into(v.row(i), psi[i], out.row_mut(i));
        }
        out
    }

    /// The regularizer `Σ_i r_i` acting on a single shared copy.
    pub fn aggregate_regularizer(&self) -> Regularizer {
        Regularizer::sum(&self.regularizers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_default_to_extremes() {
        let p = Problem::new(
            vec![
                Box::new(DiagonalQuadratic::new(vec![1.0, 3.0], vec![0.0, 0.0])),
                Box::new(DiagonalQuadratic::new(vec![2.0, 0.5], vec![0.0, 0.0])),
            ],
            vec![Regularizer::Zero, Regularizer::Zero],
        );
        assert_eq!(p.lipschitz, 3.0);
        assert_eq!(p.weak_convexity, 0.5);
    }
}
