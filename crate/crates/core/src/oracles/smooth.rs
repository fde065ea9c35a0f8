use super::{Batch, OracleError};
use crate::linalg::{axpy, dot, norm_sq, spectral_norm, DenseMatrix};
use rand::{Rng, RngCore};
use std::fmt::Debug;

/// A smooth local loss `f_i` that is an average of per-sample losses.
///
/// `gradient` must equal the mean of `sample_gradient` over all samples, and
/// the mini-batch estimator built from it is unbiased.
pub trait SmoothTerm: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn sample_count(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Full gradient, written into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Gradient of sample `j`'s loss, written into `out`.
    fn sample_gradient(&self, x: &[f64], j: usize, out: &mut [f64]);
    /// Reported gradient-Lipschitz constant `L`.
    fn lipschitz(&self) -> f64;
    /// Reported weak-convexity modulus `μ` (possibly negative).
    fn weak_convexity(&self) -> f64;

    /// Mean of `|I|` per-sample gradients drawn uniformly with replacement,
    /// or the exact gradient for [`Batch::Full`].
    fn stochastic_gradient(
        &self,
        x: &[f64],
        rng: &mut dyn RngCore,
        batch: Batch,
        out: &mut [f64],
    ) -> Result<(), OracleError> {
        let size = match batch {
            Batch::Full => {
                self.gradient(x, out);
                return Ok(());
            }
            Batch::Mini(0) => return Err(OracleError::EmptyBatch),
            Batch::Mini(b) => b,
        };
        let m = self.sample_count();
        if m == 0 {
            return Err(OracleError::EmptyDataset);
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut g = vec![0.0; self.dim()];
        for _ in 0..size {
            let j = rng.random_range(0..m);
            self.sample_gradient(x, j, &mut g);
            axpy(1.0, &g, out);
        }
        let inv = size as f64;
        out.iter_mut().for_each(|v| *v /= inv);
        Ok(())
    }

    /// Exact single-sample variance `(1/m) Σ_j ‖∇f_ij(x) − ∇f_i(x)‖²`.
    fn sample_variance(&self, x: &[f64]) -> f64 {
        let m = self.sample_count();
        if m == 0 {
            return 0.0;
        }
        let mut full = vec![0.0; self.dim()];
        self.gradient(x, &mut full);
        let mut g = vec![0.0; self.dim()];
        let mut acc = 0.0;
        for j in 0..m {
            self.sample_gradient(x, j, &mut g);
            acc += g.iter().zip(&full).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        acc / m as f64
    }
}

fn check_dims(h: &[f64], y: &[f64], x: &[f64]) -> Result<usize, OracleError> {
    let n = x.len();
    if n == 0 || h.len() != y.len() * n {
        return Err(OracleError::DimensionMismatch {
            expected: y.len() * n,
            got: h.len(),
        });
    }
    Ok(n)
}

/// `(ρ/(2m)) Σ_j log(1 + (y_j − h_jᵀx)²/ρ)` for row-major `H` (m×n).
pub fn truncated_loss_value(h: &[f64], y: &[f64], x: &[f64], rho: f64) -> Result<f64, OracleError> {
    let n = check_dims(h, y, x)?;
    if y.is_empty() {
        return Err(OracleError::EmptyDataset);
    }
    let sum: f64 = h
        .chunks_exact(n)
        .zip(y)
        .map(|(row, yj)| {
            let r = yj - dot(row, x);
            (r * r / rho).ln_1p()
        })
        .sum();
    Ok(rho / (2.0 * y.len() as f64) * sum)
}

/// `(1/m) Σ_j h_j (h_jᵀx − y_j) ρ/(ρ + (h_jᵀx − y_j)²)`.
pub fn truncated_loss_gradient(
    h: &[f64],
    y: &[f64],
    x: &[f64],
    rho: f64,
) -> Result<Vec<f64>, OracleError> {
    let n = check_dims(h, y, x)?;
    if y.is_empty() {
        return Err(OracleError::EmptyDataset);
    }
    let mut g = vec![0.0; n];
    for (row, yj) in h.chunks_exact(n).zip(y) {
        let r = dot(row, x) - yj;
        axpy(r * rho / (rho + r * r), row, &mut g);
    }
    let m = y.len() as f64;
    g.iter_mut().for_each(|v| *v /= m);
    Ok(g)
}

/// Largest eigenvalue of `HᵀH/m`.
fn gram_top_eigenvalue(h: &[f64], m: usize, n: usize) -> f64 {
    let mat = DenseMatrix {
        rows: m,
        cols: n,
        data: h.to_vec(),
    };
    let s = spectral_norm(&mat).unwrap_or(f64::NAN);
    s * s / m as f64
}

/// Non-convex truncated least-squares loss on a local data block.
#[derive(Debug, Clone)]
pub struct TruncatedLoss {
    pub h: Vec<f64>,
    pub y: Vec<f64>,
    pub dim: usize,
    pub rho: f64,
    pub lipschitz: f64,
    pub weak_convexity: f64,
}

impl TruncatedLoss {
    /// Reported constants default to `L = 1`, `μ = −1`.
    pub fn new(h: Vec<f64>, y: Vec<f64>, dim: usize, rho: f64) -> Result<Self, OracleError> {
        if rho <= 0.0 {
            return Err(OracleError::BadParameters(format!("rho must be positive, got {rho}")));
        }
        if dim == 0 || h.len() != y.len() * dim {
            return Err(OracleError::DimensionMismatch {
                expected: y.len() * dim,
                got: h.len(),
            });
        }
        Ok(Self {
            h,
            y,
            dim,
            rho,
            lipschitz: 1.0,
            weak_convexity: -1.0,
        })
    }

    pub fn with_constants(mut self, lipschitz: f64, weak_convexity: f64) -> Self {
        self.lipschitz = lipschitz;
        self.weak_convexity = weak_convexity;
        self
    }

    /// Global curvature bounds `(L, μ)`.
    ///
    /// The Hessian is `(1/m) Σ_j h_j h_jᵀ ρ(ρ − t_j)/(ρ + t_j)²` with
    /// `t_j` the squared residual; that scalar weight lies in `[−1/8, 1]`,
    /// so `L = λ_max(HᵀH/m)` and `μ = −L/8`.
    pub fn curvature_bounds(&self) -> (f64, f64) {
        let top = gram_top_eigenvalue(&self.h, self.y.len(), self.dim);
        (top, -top / 8.0)
    }

    fn residual(&self, x: &[f64], j: usize) -> f64 {
        dot(&self.h[j * self.dim..(j + 1) * self.dim], x) - self.y[j]
    }
}

impl SmoothTerm for TruncatedLoss {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_count(&self) -> usize {
        self.y.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let sum: f64 = (0..self.y.len())
            .map(|j| {
                let r = self.residual(x, j);
                (r * r / self.rho).ln_1p()
            })
            .sum();
        self.rho / (2.0 * self.y.len() as f64) * sum
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut g = vec![0.0; self.dim];
        for j in 0..self.y.len() {
            self.sample_gradient(x, j, &mut g);
            axpy(1.0, &g, out);
        }
        let m = self.y.len() as f64;
        out.iter_mut().for_each(|v| *v /= m);
    }

    fn sample_gradient(&self, x: &[f64], j: usize, out: &mut [f64]) {
        let r = self.residual(x, j);
        let w = r * self.rho / (self.rho + r * r);
        let row = &self.h[j * self.dim..(j + 1) * self.dim];
        for (o, hv) in out.iter_mut().zip(row) {
            *o = w * hv;
        }
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn weak_convexity(&self) -> f64 {
        self.weak_convexity
    }
}

/// `(1/(2m)) Σ_j (h_jᵀx − y_j)²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub h: Vec<f64>,
    pub y: Vec<f64>,
    pub dim: usize,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(h: Vec<f64>, y: Vec<f64>, dim: usize) -> Result<Self, OracleError> {
        if dim == 0 || h.len() != y.len() * dim {
            return Err(OracleError::DimensionMismatch {
                expected: y.len() * dim,
                got: h.len(),
            });
        }
        let lipschitz = gram_top_eigenvalue(&h, y.len(), dim);
        Ok(Self { h, y, dim, lipschitz })
    }
}

impl SmoothTerm for LeastSquares {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_count(&self) -> usize {
        self.y.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .h
            .chunks_exact(self.dim)
            .zip(&self.y)
            .map(|(row, yj)| {
                let r = dot(row, x) - yj;
                r * r
            })
            .sum();
        s / (2.0 * self.y.len() as f64)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut g = vec![0.0; self.dim];
        for j in 0..self.y.len() {
            self.sample_gradient(x, j, &mut g);
            axpy(1.0, &g, out);
        }
        let m = self.y.len() as f64;
        out.iter_mut().for_each(|v| *v /= m);
    }

    fn sample_gradient(&self, x: &[f64], j: usize, out: &mut [f64]) {
        let row = &self.h[j * self.dim..(j + 1) * self.dim];
        let r = dot(row, x) - self.y[j];
        for (o, hv) in out.iter_mut().zip(row) {
            *o = r * hv;
        }
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn weak_convexity(&self) -> f64 {
        0.0
    }
}

/// Deterministic separable quadratic `½ Σ_l a_l (x_l − c_l)²`, one "sample".
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub curvature: Vec<f64>,
    pub center: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(curvature: Vec<f64>, center: Vec<f64>) -> Self {
        assert_eq!(curvature.len(), center.len());
        Self { curvature, center }
    }

    pub fn isotropic(a: f64, center: Vec<f64>) -> Self {
        Self::new(vec![a; center.len()], center)
    }
}

impl SmoothTerm for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn sample_count(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self
            .curvature
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((a, c), v)| a * (v - c) * (v - c))
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (((o, a), c), v) in out.iter_mut().zip(&self.curvature).zip(&self.center).zip(x) {
            *o = a * (v - c);
        }
    }

    fn sample_gradient(&self, x: &[f64], _j: usize, out: &mut [f64]) {
        self.gradient(x, out);
    }

    fn lipschitz(&self) -> f64 {
        self.curvature.iter().copied().fold(0.0, f64::max)
    }

    fn weak_convexity(&self) -> f64 {
        self.curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn sample_variance(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Empirical Lipschitz estimate `max ‖∇f(a) − ∇f(b)‖/‖a − b‖` over pairs.
pub fn empirical_lipschitz(f: &dyn SmoothTerm, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let n = f.dim();
    let (mut ga, mut gb) = (vec![0.0; n], vec![0.0; n]);
    let mut best = 0.0f64;
    for (a, b) in pairs {
        f.gradient(a, &mut ga);
        f.gradient(b, &mut gb);
        let num: Vec<f64> = ga.iter().zip(&gb).map(|(p, q)| p - q).collect();
        let den: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
        let d = norm_sq(&den).sqrt();
        if d > 0.0 {
            best = best.max(norm_sq(&num).sqrt() / d);
        }
    }
    best
}
