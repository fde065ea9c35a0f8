use super::{OracleError, Problem, Regularizer, SmoothTerm, TruncatedLoss};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Sizes and noise of a synthetic sparse regression task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionSpec {
    pub agents: usize,
    pub samples: usize,
    pub dim: usize,
    pub sparsity: usize,
    pub rho: f64,
    pub noise_sd: f64,
    pub l1_weight: f64,
    pub box_lo: f64,
    pub box_hi: f64,
}

impl Default for RegressionSpec {
    /// Desk scale.
    fn default() -> Self {
        Self {
            agents: 5,
            samples: 20,
            dim: 32,
            sparsity: 4,
            rho: 3.0,
            noise_sd: 2.0,
            l1_weight: 0.01,
            box_lo: -1.0,
            box_hi: 1.0,
        }
    }
}

impl RegressionSpec {
    pub fn full_scale() -> Self {
        Self {
            agents: 20,
            samples: 150,
            dim: 256,
            sparsity: 16,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.agents == 0 || self.samples == 0 || self.dim == 0 {
            return Err(OracleError::BadSizes(format!(
                "agents, samples and dim must be positive (got {}, {}, {})",
                self.agents, self.samples, self.dim
            )));
        }
        if self.sparsity > self.dim {
            return Err(OracleError::BadSizes(format!(
                "sparsity {} exceeds dim {}",
                self.sparsity, self.dim
            )));
        }
        if !(self.rho > 0.0) || !(self.noise_sd >= 0.0) {
            return Err(OracleError::BadParameters(format!(
                "rho must be positive and noise_sd non-negative (got {}, {})",
                self.rho, self.noise_sd
            )));
        }
        Regularizer::l1_box(self.l1_weight, self.box_lo, self.box_hi)?;
        Ok(())
    }

    pub fn regularizer(&self) -> Regularizer {
        Regularizer::L1Box {
            weight: self.l1_weight,
            lo: self.box_lo,
            hi: self.box_hi,
        }
    }
}

/// One agent's local block: row-major `H` (m×n) and response `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentData {
    pub h: Vec<f64>,
    pub y: Vec<f64>,
    pub dim: usize,
}

impl AgentData {
    pub fn samples(&self) -> usize {
        self.y.len()
    }

    /// Header-less CSV: one row per sample, features then response.
    pub fn write_csv(&self, path: &Path) -> Result<(), OracleError> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| OracleError::Csv(e.to_string()))?;
        for (row, yj) in self.h.chunks_exact(self.dim).zip(&self.y) {
            let rec: Vec<String> = row.iter().chain(std::iter::once(yj)).map(|v| format!("{v:e}")).collect();
            w.write_record(&rec).map_err(|e| OracleError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| OracleError::Csv(e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<Self, OracleError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| OracleError::Csv(e.to_string()))?;
        let mut h = Vec::new();
        let mut y = Vec::new();
        let mut dim = None;
        for rec in r.records() {
            let rec = rec.map_err(|e| OracleError::Csv(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| OracleError::Csv(e.to_string()))?;
            if vals.len() < 2 {
                return Err(OracleError::Csv("row needs at least one feature and a response".into()));
            }
            let n = vals.len() - 1;
            match dim {
                None => dim = Some(n),
                Some(d) if d != n => return Err(OracleError::DimensionMismatch { expected: d, got: n }),
                _ => {}
            }
            h.extend_from_slice(&vals[..n]);
            y.push(vals[n]);
        }
        let dim = dim.ok_or(OracleError::EmptyDataset)?;
        Ok(Self { h, y, dim })
    }
}

/// Generated data plus the planted sparse solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub spec: RegressionSpec,
    pub agents: Vec<AgentData>,
    pub truth: Vec<f64>,
}

impl RegressionDataset {
    /// Truncated-loss problem with the default reported constants.
    pub fn problem(&self) -> Result<Problem, OracleError> {
        let smooth = self
            .agents
            .iter()
            .map(|a| {
                TruncatedLoss::new(a.h.clone(), a.y.clone(), a.dim, self.spec.rho)
                    .map(|t| Box::new(t) as Box<dyn SmoothTerm>)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let regs = vec![self.spec.regularizer(); self.agents.len()];
        Ok(Problem::new(smooth, regs))
    }

    /// Problem whose `L`, `μ` are the rigorous global curvature bounds.
    pub fn problem_with_curvature_bounds(&self) -> Result<Problem, OracleError> {
        let smooth = self
            .agents
            .iter()
            .map(|a| {
                let t = TruncatedLoss::new(a.h.clone(), a.y.clone(), a.dim, self.spec.rho)?;
                let (l, mu) = t.curvature_bounds();
                Ok(Box::new(t.with_constants(l, mu)) as Box<dyn SmoothTerm>)
            })
            .collect::<Result<Vec<_>, OracleError>>()?;
        let regs = vec![self.spec.regularizer(); self.agents.len()];
        Ok(Problem::new(smooth, regs))
    }

    /// Writes `agent_<i>.csv` for every agent; returns the paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>, OracleError> {
        std::fs::create_dir_all(dir).map_err(|e| OracleError::Csv(e.to_string()))?;
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = dir.join(format!("agent_{i}.csv"));
                a.write_csv(&p).map(|_| p)
            })
            .collect()
    }
}

/// Draws `H ~ N(0,1)`, an `S`-sparse `x*` with `U[−1,1]` entries on a uniform
/// support, `ν ~ N(0, noise_sd²)` and sets `y = Hx* + ν`.
pub fn generate_regression<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &RegressionSpec,
) -> Result<(Problem, RegressionDataset), OracleError> {
    spec.validate()?;
    let n = spec.dim;
    let mut truth = vec![0.0; n];
    let mut support = sample(rng, n, spec.sparsity).into_vec();
    support.sort_unstable();
    for &l in &support {
        truth[l] = rng.random_range(-1.0..=1.0);
    }
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| OracleError::BadParameters(e.to_string()))?;
    let mut agents = Vec::with_capacity(spec.agents);
    for _ in 0..spec.agents {
        let h: Vec<f64> = (0..spec.samples * n).map(|_| StandardNormal.sample(rng)).collect();
        let y: Vec<f64> = h
            .chunks_exact(n)
            .map(|row| crate::linalg::dot(row, &truth) + noise.sample(rng))
            .collect();
        agents.push(AgentData { h, y, dim: n });
    }
    let data = RegressionDataset {
        spec: *spec,
        agents,
        truth,
    };
    Ok((data.problem()?, data))
}
