use super::SolverConfig;
use crate::graph::Graph;
use crate::linalg::DenseMatrix;

/// One agent's coefficients in the difference-form update.
///
/// Both the matrix-form solver and the message-passing agents evaluate the
/// update through [`super::agent_half_step`] with these coefficients, so the
/// two executions perform the same floating-point operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentRow {
    pub psi: f64,
    /// `U_ii = d_i (c − α)/ψ_i`.
    pub u_diag: f64,
    /// `U_ij = (c + α)/ψ_i` for neighbours `j`.
    pub u_off: f64,
    /// `Ũ_ii = d_i c/ψ_i`.
    pub ut_diag: f64,
    /// `Ũ_ij = c/ψ_i`.
    pub ut_off: f64,
    pub gamma_over_psi: f64,
    pub kappa_over_psi: f64,
    pub inv_psi: f64,
}

impl AgentRow {
    pub fn new(degree: usize, cfg: &SolverConfig) -> Self {
        let d = degree as f64;
        let psi = cfg.psi(degree);
        Self {
            psi,
            u_diag: d * (cfg.c - cfg.alpha) / psi,
            u_off: (cfg.c + cfg.alpha) / psi,
            ut_diag: d * cfg.c / psi,
            ut_off: cfg.c / psi,
            gamma_over_psi: cfg.gamma / psi,
            kappa_over_psi: cfg.kappa / psi,
            inv_psi: 1.0 / psi,
        }
    }
}

/// `Ψ`, `U` and `Ũ`, stored per agent over the edge structure.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMatrices {
    pub rows: Vec<AgentRow>,
}

impl UpdateMatrices {
    pub fn new(g: &Graph, cfg: &SolverConfig) -> Self {
        Self {
            rows: (0..g.node_count()).map(|i| AgentRow::new(g.degree(i), cfg)).collect(),
        }
    }

    pub fn psi(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.psi).collect()
    }

    pub fn psi_dense(&self) -> DenseMatrix {
        let n = self.rows.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            m[(i, i)] = r.psi;
        }
        m
    }

    /// Dense `(U, Ũ)`.
    pub fn to_dense(&self, g: &Graph) -> (DenseMatrix, DenseMatrix) {
        let n = self.rows.len();
        let mut u = DenseMatrix::zeros(n, n);
        let mut ut = DenseMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            u[(i, i)] = r.u_diag;
            ut[(i, i)] = r.ut_diag;
            for &j in g.neighbors(i) {
                u[(i, j)] = r.u_off;
                ut[(i, j)] = r.ut_off;
            }
        }
        (u, ut)
    }

    /// `W = U + (γ + κ)Ψ⁻¹` and `W̃ = Ũ + (γ + κ)Ψ⁻¹`.
    pub fn extra_mixing(&self, g: &Graph, cfg: &SolverConfig) -> (DenseMatrix, DenseMatrix) {
        let (mut w, mut wt) = self.to_dense(g);
        for (i, r) in self.rows.iter().enumerate() {
            let extra = (cfg.gamma + cfg.kappa) / r.psi;
            w[(i, i)] += extra;
            wt[(i, i)] += extra;
        }
        (w, wt)
    }
}
