use super::Graph;
use crate::linalg::{DenseMatrix, Stacked};

/// Signed and signless edge-node incidence matrices, stored as small
/// integers so the identity `ÃᵀÃ + B̃ᵀB̃ = 2D` can be checked exactly.
///
/// Row `ℓ` corresponds to canonical edge `(i, j)`, `i < j`, with
/// `Ã[ℓ, i] = +1`, `Ã[ℓ, j] = -1` and `B̃ = |Ã|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidencePair {
    pub edges: usize,
    pub nodes: usize,
    pub signed: Vec<i64>,
    pub signless: Vec<i64>,
}

impl IncidencePair {
    pub fn new(g: &Graph) -> Self {
        let (e, n) = (g.edge_count(), g.node_count());
        let mut signed = vec![0i64; e * n];
        let mut signless = vec![0i64; e * n];
        for (l, &(i, j)) in g.edges().iter().enumerate() {
            signed[l * n + i] = 1;
            signed[l * n + j] = -1;
            signless[l * n + i] = 1;
            signless[l * n + j] = 1;
        }
        Self {
            edges: e,
            nodes: n,
            signed,
            signless,
        }
    }

    /// `MᵀM` in integer arithmetic.
    pub fn gram(m: &[i64], rows: usize, cols: usize) -> Vec<i64> {
        let mut out = vec![0i64; cols * cols];
        for r in 0..rows {
            let row = &m[r * cols..(r + 1) * cols];
            for a in 0..cols {
                if row[a] == 0 {
                    continue;
                }
                for b in 0..cols {
                    out[a * cols + b] += row[a] * row[b];
                }
            }
        }
        out
    }

    pub fn signed_gram(&self) -> Vec<i64> {
        Self::gram(&self.signed, self.edges, self.nodes)
    }

    pub fn signless_gram(&self) -> Vec<i64> {
        Self::gram(&self.signless, self.edges, self.nodes)
    }

    pub fn signed_dense(&self) -> DenseMatrix {
        to_dense(&self.signed, self.edges, self.nodes)
    }

    pub fn signless_dense(&self) -> DenseMatrix {
        to_dense(&self.signless, self.edges, self.nodes)
    }
}

fn to_dense(m: &[i64], rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix {
        rows,
        cols,
        data: m.iter().map(|&v| v as f64).collect(),
    }
}

/// Edge-stacked vector `A x`, one row per canonical edge: `x_i - x_j`.
pub fn apply_incidence(g: &Graph, x: &Stacked) -> Stacked {
    let mut out = Stacked::zeros(g.edge_count(), x.dim());
    for (l, &(i, j)) in g.edges().iter().enumerate() {
        let (xi, xj) = (x.row(i), x.row(j));
        for ((o, a), b) in out.row_mut(l).iter_mut().zip(xi).zip(xj) {
            *o = a - b;
        }
    }
    out
}

/// `Aᵀ λ` for an edge-stacked `λ`.
pub fn apply_incidence_transpose(g: &Graph, lambda: &Stacked) -> Stacked {
    let mut out = Stacked::zeros(g.node_count(), lambda.dim());
    for (l, &(i, j)) in g.edges().iter().enumerate() {
        let lam = lambda.row(l).to_vec();
        for (o, v) in out.row_mut(i).iter_mut().zip(&lam) {
            *o += v;
        }
        for (o, v) in out.row_mut(j).iter_mut().zip(&lam) {
            *o -= v;
        }
    }
    out
}

/// `AᵀA x` (graph Laplacian applied blockwise).
pub fn apply_laplacian(g: &Graph, x: &Stacked) -> Stacked {
    let mut out = Stacked::zeros(x.agents(), x.dim());
    for i in 0..g.node_count() {
        let d = g.degree(i) as f64;
        let row = out.row_mut(i);
        for (o, v) in row.iter_mut().zip(x.row(i)) {
            *o = d * v;
        }
        for &j in g.neighbors(i) {
            for (o, v) in row.iter_mut().zip(x.row(j)) {
                *o -= v;
            }
        }
    }
    out
}

/// `BᵀB x` (signless Laplacian applied blockwise).
pub fn apply_signless_laplacian(g: &Graph, x: &Stacked) -> Stacked {
    let mut out = Stacked::zeros(x.agents(), x.dim());
    for i in 0..g.node_count() {
        let d = g.degree(i) as f64;
        let row = out.row_mut(i);
        for (o, v) in row.iter_mut().zip(x.row(i)) {
            *o = d * v;
        }
        for &j in g.neighbors(i) {
            for (o, v) in row.iter_mut().zip(x.row(j)) {
                *o += v;
            }
        }
    }
    out
}

/// `‖A x‖²`: total squared disagreement over edges.
pub fn constraint_violation(g: &Graph, x: &Stacked) -> f64 {
    g.edges()
        .iter()
        .map(|&(i, j)| {
            x.row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}
