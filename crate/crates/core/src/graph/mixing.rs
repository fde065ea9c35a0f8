use super::Graph;
use crate::linalg::DenseMatrix;

/// Symmetric, row-stochastic weights supported on the edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(pub DenseMatrix);

impl MixingMatrix {
    /// Metropolis weights: `1/(max(d_i, d_j) + 1)` on edges, the diagonal
    /// absorbs the remainder so each row sums to one.
    pub fn metropolis(g: &Graph) -> Self {
        let n = g.node_count();
        let mut w = DenseMatrix::zeros(n, n);
        for &(i, j) in g.edges() {
            let v = 1.0 / (g.degree(i).max(g.degree(j)) as f64 + 1.0);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        for i in 0..n {
            let off: f64 = g.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
            w[(i, i)] = 1.0 - off;
        }
        Self(w)
    }

    /// Uniform averaging `11ᵀ/N`; the Metropolis matrix of a complete graph.
    pub fn averaging(n: usize) -> Self {
        Self(DenseMatrix {
            rows: n,
            cols: n,
            data: vec![1.0 / n as f64; n * n],
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.rows
    }
}
