use super::OracleError;
use crate::linalg::DenseMatrix;
use serde::{Deserialize, Serialize};

/// Non-smooth local term `r_i`.
///
/// `L1Box` covers the ℓ1 norm (`lo = -∞`, `hi = ∞`), the box indicator
/// (`weight = 0`) and their sum; `Ridge` is the one supported term whose
/// epigraph is not polyhedral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    Zero,
    L1Box { weight: f64, lo: f64, hi: f64 },
    Ridge { weight: f64 },
}

/// Polyhedral epigraph `{(x, y) : S_x x + S_y y ≥ ζ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Epigraph {
    pub sx: DenseMatrix,
    pub sy: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl Epigraph {
    pub fn contains(&self, x: &[f64], y: f64, tol: f64) -> bool {
        let sxx = self.sx.matvec(x);
        sxx.iter()
            .zip(&self.sy)
            .zip(&self.zeta)
            .all(|((a, b), z)| a + b * y >= z - tol)
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Exact minimizer of `(ψ/2)‖v − u‖² + ς‖u‖₁ + I_[lo,hi](u)`.
pub fn prox_l1_box(v: &[f64], psi: f64, weight: f64, lo: f64, hi: f64) -> Result<Vec<f64>, OracleError> {
    let r = Regularizer::l1_box(weight, lo, hi)?;
    if !(psi > 0.0) {
        return Err(OracleError::BadParameters(format!("prox weight must be positive, got {psi}")));
    }
    let mut out = vec![0.0; v.len()];
    r.prox_into(v, psi, &mut out);
    Ok(out)
}

/// Epigraph rows beyond this many coordinates would need 2^n sign patterns.
const MAX_L1_EPIGRAPH_DIM: usize = 16;

impl Regularizer {
    pub fn l1_box(weight: f64, lo: f64, hi: f64) -> Result<Self, OracleError> {
        if !(weight >= 0.0) {
            return Err(OracleError::BadParameters(format!("l1 weight must be ≥ 0, got {weight}")));
        }
        if !(lo <= 0.0 && 0.0 <= hi) {
            return Err(OracleError::BadParameters(format!("box [{lo}, {hi}] must contain 0")));
        }
        Ok(Regularizer::L1Box { weight, lo, hi })
    }

    pub fn l1(weight: f64) -> Result<Self, OracleError> {
        Self::l1_box(weight, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn unit_box() -> Self {
        Regularizer::L1Box {
            weight: 0.0,
            lo: -1.0,
            hi: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Regularizer::Zero => true,
            Regularizer::L1Box { weight, lo, hi } => weight == 0.0 && lo == f64::NEG_INFINITY && hi == f64::INFINITY,
            Regularizer::Ridge { weight } => weight == 0.0,
        }
    }

    /// The box this term restricts to, if any.
    pub fn domain_box(&self) -> Option<(f64, f64)> {
        match *self {
            Regularizer::L1Box { lo, hi, .. } if lo.is_finite() || hi.is_finite() => Some((lo, hi)),
            _ => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1Box { weight, lo, hi } => {
                if x.iter().any(|&v| v < lo || v > hi) {
                    f64::INFINITY
                } else {
                    weight * x.iter().map(|v| v.abs()).sum::<f64>()
                }
            }
            Regularizer::Ridge { weight } => 0.5 * weight * x.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    /// `argmin_u (ψ/2)‖v − u‖² + r(u)`; `ψ` must be positive.
    pub fn prox_into(&self, v: &[f64], psi: f64, out: &mut [f64]) {
        debug_assert!(psi > 0.0);
        match *self {
            Regularizer::Zero => out.copy_from_slice(v),
            Regularizer::L1Box { weight, lo, hi } => {
                let t = weight / psi;
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = soft_threshold(vi, t).clamp(lo, hi);
                }
            }
            Regularizer::Ridge { weight } => {
                let s = psi / (psi + weight);
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = s * vi;
                }
            }
        }
    }

    pub fn prox(&self, v: &[f64], psi: f64) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.prox_into(v, psi, &mut out);
        out
    }

    /// Projection onto the domain box (identity when unconstrained).
    pub fn project_box(&self, v: &[f64], out: &mut [f64]) {
        match self.domain_box() {
            Some((lo, hi)) => {
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = vi.clamp(lo, hi);
                }
            }
            None => out.copy_from_slice(v),
        }
    }

    /// `Σ_i r_i` acting on one shared copy: weights add, boxes intersect.
    pub fn sum(terms: &[Regularizer]) -> Regularizer {
        let mut l1 = 0.0;
        let mut ridge = 0.0;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut any_l1box = false;
        for t in terms {
            match *t {
                Regularizer::Zero => {}
                Regularizer::L1Box { weight, lo: a, hi: b } => {
                    any_l1box = true;
                    l1 += weight;
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
                Regularizer::Ridge { weight } => ridge += weight,
            }
        }
        match (any_l1box, ridge > 0.0) {
            (false, false) => Regularizer::Zero,
            (true, false) => Regularizer::L1Box { weight: l1, lo, hi },
            (false, true) => Regularizer::Ridge { weight: ridge },
            (true, true) => panic!("mixed ridge and l1/box regularizers have no closed-form aggregate prox"),
        }
    }

    /// Polyhedral description of `{(x, y) : r(x) ≤ y}` for `x ∈ ℝⁿ`.
    ///
    /// Rows, in order: `y ≥ 0` when there is no ℓ1 part, otherwise one row
    /// `y − ς sᵀx ≥ 0` per sign pattern `s` (`+` before `−`, first coordinate
    /// slowest); then `x_l ≥ lo` and `−x_l ≥ −hi` for each finite bound.
    pub fn epigraph(&self, n: usize) -> Result<Epigraph, OracleError> {
        let (weight, lo, hi) = match *self {
            Regularizer::Zero => (0.0, f64::NEG_INFINITY, f64::INFINITY),
            Regularizer::L1Box { weight, lo, hi } => (weight, lo, hi),
            Regularizer::Ridge { weight } if weight == 0.0 => (0.0, f64::NEG_INFINITY, f64::INFINITY),
            Regularizer::Ridge { .. } => {
                return Err(OracleError::NotPolyhedral("squared ℓ2 penalty".into()))
            }
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut sy = Vec::new();
        let mut zeta = Vec::new();
        if weight == 0.0 {
            rows.push(vec![0.0; n]);
            sy.push(1.0);
            zeta.push(0.0);
        } else {
            if n > MAX_L1_EPIGRAPH_DIM {
                return Err(OracleError::NotPolyhedral(format!(
                    "ℓ1 epigraph in {n} dimensions needs 2^{n} rows"
                )));
            }
            for pattern in 0..(1usize << n) {
                let row = (0..n)
                    .map(|l| {
                        let negative = (pattern >> (n - 1 - l)) & 1 == 1;
                        if negative {
                            weight
                        } else {
                            -weight
                        }
                    })
                    .collect();
                rows.push(row);
                sy.push(1.0);
                zeta.push(0.0);
            }
        }
        for l in 0..n {
            if lo.is_finite() {
                let mut row = vec![0.0; n];
                row[l] = 1.0;
                rows.push(row);
                sy.push(0.0);
                zeta.push(lo);
            }
            if hi.is_finite() {
                let mut row = vec![0.0; n];
                row[l] = -1.0;
                rows.push(row);
                sy.push(0.0);
                zeta.push(-hi);
            }
        }
        let sx = if rows.is_empty() {
            DenseMatrix::zeros(0, n)
        } else {
            DenseMatrix::from_rows(&rows)
        };
        Ok(Epigraph { sx, sy, zeta })
    }
}
