//! Small dense helpers. Problem sizes here are desk-scale, so everything is
//! plain `Vec<f64>` with explicit loops.

use std::fmt;

/// Per-agent vectors stored row-major: row `i` is agent `i`'s local copy.
#[derive(Clone, PartialEq)]
pub struct Stacked {
    agents: usize,
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Stacked {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stacked")
            .field("agents", &self.agents)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Stacked {
    pub fn zeros(agents: usize, dim: usize) -> Self {
        Self {
            agents,
            dim,
            data: vec![0.0; agents * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let agents = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(agents * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { agents, dim, data }
    }

    /// Every agent holds the same vector.
    pub fn consensus(agents: usize, value: &[f64]) -> Self {
        let mut s = Self::zeros(agents, value.len());
        for i in 0..agents {
            s.row_mut(i).copy_from_slice(value);
        }
        s
    }

    #[inline]
    pub fn agents(&self) -> usize {
        self.agents
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.agents)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    /// `max |a - b|` over all entries.
    pub fn max_abs_diff(&self, other: &Stacked) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn dist_sq(&self, other: &Stacked) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            axpy(1.0, r, &mut m);
        }
        let inv = 1.0 / self.agents as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Row-major dense matrix, used for the N×N and |E|×N graph operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x))
            .collect()
    }

    /// Apply an N×N operator blockwise to per-agent vectors (`M ⊗ I_n`).
    pub fn apply_stacked(&self, x: &Stacked) -> Stacked {
        assert_eq!(self.cols, x.agents());
        let mut out = Stacked::zeros(self.rows, x.dim());
        for i in 0..self.rows {
            let row = out.row_mut(i);
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a != 0.0 {
                    axpy(a, x.row(j), row);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Largest singular value by power iteration on `MᵀM`, started from the
/// all-ones vector.
///
/// If the ones vector is (numerically) orthogonal to the dominant singular
/// subspace the iteration restarts from a fixed deterministic perturbation.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64, SpectralError> {
    if !m.is_finite() {
        return Err(SpectralError::NonFinite);
    }
    if m.rows == 0 || m.cols == 0 {
        return Ok(0.0);
    }
    let starts = [
        vec![1.0; m.cols],
        (0..m.cols)
            .map(|j| 1.0 + ((j * 7919) % 97) as f64 / 97.0 * if j % 2 == 0 { 1.0 } else { -1.0 })
            .collect::<Vec<_>>(),
    ];
    let mut best = 0.0f64;
    for start in starts {
        best = best.max(power_iteration(m, start));
    }
    Ok(best)
}

fn power_iteration(m: &DenseMatrix, mut v: Vec<f64>) -> f64 {
    let nrm = norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let mv = m.matvec(&v);
        let mut w = vec![0.0; m.cols];
        for i in 0..m.rows {
            axpy(mv[i], &m.data[i * m.cols..(i + 1) * m.cols], &mut w);
        }
        let nw = norm_sq(&w).sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        w.iter_mut().for_each(|x| *x /= nw);
        let converged = (next - lambda).abs() <= 1e-15 * next.abs().max(1e-300);
        lambda = next;
        v = w;
        if converged {
            break;
        }
    }
    lambda.max(0.0).sqrt()
}
