use super::MetricsError;
use crate::linalg::{dot, norm_sq};

/// Result of [`minimize_composite`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSolution {
    pub x: Vec<f64>,
    /// Smooth part at `x`.
    pub smooth_value: f64,
    /// Norm of the gradient map at termination.
    pub residual: f64,
    pub iterations: usize,
}

/// Accelerated proximal gradient with backtracking and adaptive restart for
/// `min_x h(x) + r(x)`.
///
/// `smooth(x, grad)` returns `h(x)` and writes `∇h(x)`; `prox(v, t, out)`
/// writes `argmin_u r(u) + ‖u − v‖²/(2t)`. Stops once the gradient-map norm
/// `L‖y − x⁺‖` is at most `tol`.
pub fn minimize_composite(
    what: &'static str,
    x0: &[f64],
    mut smooth: impl FnMut(&[f64], &mut [f64]) -> f64,
    prox: impl Fn(&[f64], f64, &mut [f64]),
    lipschitz_guess: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CompositeSolution, MetricsError> {
    let n = x0.len();
    let diverged = |iterations| MetricsError::InnerSolverDiverged { what, tol, iterations };
    let mut lip = lipschitz_guess.max(1e-12);
    let mut x = vec![0.0; n];
    prox(x0, 1.0 / lip, &mut x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut gy = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut xn = vec![0.0; n];
    for it in 0..max_iter {
        let fy = smooth(&y, &mut gy);
        if !fy.is_finite() {
            return Err(diverged(it));
        }
        let fxn = loop {
            for l in 0..n {
                v[l] = y[l] - gy[l] / lip;
            }
            prox(&v, 1.0 / lip, &mut xn);
            let fxn = smooth(&xn, &mut gx);
            let d: Vec<f64> = xn.iter().zip(&y).map(|(a, b)| a - b).collect();
            let model = fy + dot(&gy, &d) + 0.5 * lip * norm_sq(&d);
            if fxn <= model + 1e-13 * (1.0 + fy.abs()) {
                break fxn;
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(diverged(it));
            }
        };
        let step_sq: f64 = xn.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let residual = lip * step_sq.sqrt();
        if residual <= tol {
            return Ok(CompositeSolution {
                x: xn,
                smooth_value: fxn,
                residual,
                iterations: it + 1,
            });
        }
        let restart = y
            .iter()
            .zip(&xn)
            .zip(&x)
            .map(|((yv, a), b)| (yv - a) * (a - b))
            .sum::<f64>()
            > 0.0;
        if restart {
            t = 1.0;
            y.copy_from_slice(&xn);
        } else {
            let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let w = (t - 1.0) / tn;
            for l in 0..n {
                y[l] = xn[l] + w * (xn[l] - x[l]);
            }
            t = tn;
        }
        std::mem::swap(&mut x, &mut xn);
    }
    Err(diverged(max_iter))
}
