use super::MetricsError;
use crate::graph::Graph;
use crate::linalg::Stacked;
use crate::oracles::{Batch, Problem};
use crate::solver::{EtaSchedule, Method, SolverConfig, SolverState, Sppdm};

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), MetricsError> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(MetricsError::InsufficientData(format!(
            "{} positive points for a log-log fit, need 3",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MetricsError::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub slope: f64,
    pub intercept: f64,
    /// `(k, min_{t ≤ k} Q_t)` at the fitted points.
    pub points: Vec<(f64, f64)>,
}

/// Fits `ln min_{t ≤ k} Q_t` against `ln k` at about 40 log-spaced rounds in
/// `[k_lo, k_hi]`. `series[t]` is the value after round `iters[t]`.
pub fn rate_check(iters: &[usize], series: &[f64], k_lo: usize, k_hi: usize) -> Result<RateReport, MetricsError> {
    if iters.len() != series.len() || k_lo == 0 || k_lo >= k_hi {
        return Err(MetricsError::InsufficientData(format!(
            "window [{k_lo}, {k_hi}] over {} records",
            iters.len()
        )));
    }
    let mut running = Vec::with_capacity(series.len());
    let mut best = f64::INFINITY;
    for &v in series {
        best = best.min(v);
        running.push(best);
    }
    let ratio = (k_hi as f64 / k_lo as f64).powf(1.0 / 39.0);
    let mut targets: Vec<usize> = (0..40).map(|j| (k_lo as f64 * ratio.powi(j)).round() as usize).collect();
    targets.dedup();
    let mut points = Vec::new();
    for t in targets {
        if let Ok(pos) = iters.binary_search(&t) {
            points.push((t as f64, running[pos]));
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let (slope, intercept) = fit_loglog(&xs, &ys)?;
    Ok(RateReport {
        slope,
        intercept,
        points,
    })
}

/// Mean of the last `frac` share of a series.
pub fn plateau(series: &[f64], frac: f64) -> Result<f64, MetricsError> {
    let tail = ((series.len() as f64 * frac).ceil() as usize).clamp(1, series.len().max(1));
    if series.is_empty() {
        return Err(MetricsError::InsufficientData("empty series".into()));
    }
    let s = &series[series.len() - tail..];
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// First position whose value is at most `eps`.
pub fn rounds_to_epsilon(series: &[f64], eps: f64) -> Option<usize> {
    series.iter().position(|&v| v <= eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    /// Mean of `‖x^{k+1} − x̂^{k+1}‖²` over the trials.
    pub empirical: f64,
    /// `Nσ²/((γ + 2c + κ)²|I|)`.
    pub bound: f64,
    pub sigma2: f64,
    pub trials: usize,
}

/// Compares one stochastic step from `state` against the same step with
/// exact gradients, over `trials` independent batch draws.
pub fn variance_bound_check(
    problem: &Problem,
    graph: &Graph,
    cfg: &SolverConfig,
    state: &SolverState,
    trials: usize,
) -> Result<VarianceReport, MetricsError> {
    let Batch::Mini(b) = cfg.batch else {
        return Err(MetricsError::InsufficientData("variance check needs a mini-batch".into()));
    };
    if trials == 0 {
        return Err(MetricsError::InsufficientData("zero trials".into()));
    }
    let mut exact = Sppdm::from_state(graph, SolverConfig { batch: Batch::Full, ..*cfg }, state.clone())?;
    exact.step(problem)?;
    let x_hat = exact.iterate().clone();
    let mut total = 0.0;
    for t in 0..trials {
        let c = SolverConfig {
            seed: cfg.seed.wrapping_add(t as u64),
            ..*cfg
        };
        let mut m = Sppdm::from_state(graph, c, state.clone())?;
        m.step(problem)?;
        total += m.iterate().dist_sq(&x_hat);
    }
    let eta = EtaSchedule::new(cfg.momentum).eta(state.iteration);
    let mut s = Stacked::zeros(state.x.agents(), state.x.dim());
    for ((o, x), xp) in s.as_mut_slice().iter_mut().zip(state.x.as_slice()).zip(state.x_prev.as_slice()) {
        *o = x + eta * (x - xp);
    }
    let sigma2 = problem
        .smooth
        .iter()
        .enumerate()
        .map(|(i, f)| f.sample_variance(s.row(i)))
        .fold(0.0, f64::max);
    let n = graph.node_count() as f64;
    let bound = n * sigma2 / ((cfg.gamma + 2.0 * cfg.c + cfg.kappa).powi(2) * b as f64);
    Ok(VarianceReport {
        empirical: total / trials as f64,
        bound,
        sigma2,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_recovers_power_law() {
        let xs: Vec<f64> = (1..50).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|k| 3.0 * k.powf(-1.5)).collect();
        let (s, b) = fit_loglog(&xs, &ys).unwrap();
        assert!((s + 1.5).abs() < 1e-12 && (b - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let iters: Vec<usize> = (0..=1000).collect();
        let r = rate_check(&iters, &vec![0.5; 1001], 10, 1000).unwrap();
        assert!(r.slope.abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_loglog(&[1.0, 2.0], &[1.0, 0.5]),
            Err(MetricsError::InsufficientData(_))
        ));
        assert!(matches!(
            rate_check(&[0, 1, 2], &[1.0, 1.0, 1.0], 1, 2),
            Err(MetricsError::InsufficientData(_))
        ));
    }

    #[test]
    fn plateau_and_epsilon() {
        let s: Vec<f64> = (0..100).map(|k| 1.0 / (k + 1) as f64).collect();
        assert_eq!(rounds_to_epsilon(&s, 0.1), Some(9));
        assert_eq!(rounds_to_epsilon(&s, 1e-9), None);
        let p = plateau(&s, 0.1).unwrap();
        assert!((p - s[90..].iter().sum::<f64>() / 10.0).abs() < 1e-15);
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]) && !strictly_decreasing(&[1.0, 1.0]));
    }
}
