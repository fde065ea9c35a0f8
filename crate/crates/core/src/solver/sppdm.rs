use super::{
    ensure_finite, AgentRow, DualInit, EtaSchedule, Method, SolverConfig, SolverError, UpdateMatrices,
};
use crate::graph::{apply_laplacian, Graph};
use crate::linalg::Stacked;
use crate::oracles::{sample_stream, Batch, OracleError, Problem};
use std::path::Path;

/// Everything an agent carries between rounds, stacked over agents.
///
/// With `k = iteration`: `x = x^k`, `x_prev = x^{k−1}`, `x_half = x^{k−1/2}`,
/// `s_prev = s^{k−1}`, `z = z^k`, `z_prev = z^{k−1}`, `grad_prev` is the
/// estimate drawn at `s^{k−1}` and `p = p^k = Aᵀλ^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub iteration: usize,
    pub x: Stacked,
    pub x_prev: Stacked,
    pub x_half: Stacked,
    pub s_prev: Stacked,
    pub z: Stacked,
    pub z_prev: Stacked,
    pub grad_prev: Stacked,
    pub p: Stacked,
}

const CHECKPOINT_FIELDS: [&str; 8] = ["x", "x_prev", "x_half", "s_prev", "z", "z_prev", "grad_prev", "p"];

impl SolverState {
    fn fields(&self) -> [&Stacked; 8] {
        [
            &self.x,
            &self.x_prev,
            &self.x_half,
            &self.s_prev,
            &self.z,
            &self.z_prev,
            &self.grad_prev,
            &self.p,
        ]
    }

    /// Checkpoint as CSV: one row per (field, agent), one column per coordinate.
    pub fn write_csv(&self, path: &Path) -> Result<(), OracleError> {
        let err = |e: csv::Error| OracleError::Csv(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        let dim = self.x.dim();
        let mut header = vec!["field".to_string(), "iter".into(), "agent".into()];
        header.extend((0..dim).map(|l| format!("c{l}")));
        w.write_record(&header).map_err(err)?;
        for (name, field) in CHECKPOINT_FIELDS.iter().zip(self.fields()) {
            for (i, row) in field.rows().enumerate() {
                let mut rec = vec![name.to_string(), self.iteration.to_string(), i.to_string()];
                rec.extend(row.iter().map(|v| format!("{v:e}")));
                w.write_record(&rec).map_err(err)?;
            }
        }
        w.flush().map_err(|e| OracleError::Csv(e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<Self, OracleError> {
        let err = |e: csv::Error| OracleError::Csv(e.to_string());
        let mut r = csv::Reader::from_path(path).map_err(err)?;
        let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); CHECKPOINT_FIELDS.len()];
        let mut iteration = None;
        for rec in r.records() {
            let rec = rec.map_err(err)?;
            let bad = |m: &str| OracleError::Csv(m.to_string());
            let field = rec.get(0).ok_or_else(|| bad("missing field column"))?;
            let slot = CHECKPOINT_FIELDS
                .iter()
                .position(|f| *f == field)
                .ok_or_else(|| bad(&format!("unknown field `{field}`")))?;
            let it: usize = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad iter column"))?;
            if *iteration.get_or_insert(it) != it {
                return Err(bad("mixed iterations in one checkpoint"));
            }
            let agent: usize = rec
                .get(2)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad agent column"))?;
            if agent != rows[slot].len() {
                return Err(bad("agents out of order"));
            }
            let vals = rec
                .iter()
                .skip(3)
                .map(|s| s.parse::<f64>().map_err(|e| bad(&e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            rows[slot].push(vals);
        }
        let mut it = rows.into_iter().map(|r| Stacked::from_rows(&r));
        let mut next = || it.next().unwrap();
        Ok(Self {
            iteration: iteration.ok_or(OracleError::EmptyDataset)?,
            x: next(),
            x_prev: next(),
            x_half: next(),
            s_prev: next(),
            z: next(),
            z_prev: next(),
            grad_prev: next(),
            p: next(),
        })
    }
}

/// Local inputs of one agent's difference-form update.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub half_prev: &'a [f64],
    pub x: &'a [f64],
    pub x_prev: &'a [f64],
    pub s: &'a [f64],
    pub s_prev: &'a [f64],
    pub z: &'a [f64],
    pub z_prev: &'a [f64],
    pub grad: &'a [f64],
    pub grad_prev: &'a [f64],
}

/// `x_i^{k+1/2}` from the agent's own history and its neighbours'
/// `(x_j^k, x_j^{k−1})`, which must be supplied in increasing `j`.
pub fn agent_half_step(row: &AgentRow, v: AgentView<'_>, neighbors: &[(&[f64], &[f64])], out: &mut [f64]) {
    for l in 0..out.len() {
        let mut acc = v.half_prev[l] + row.u_diag * v.x[l] - row.ut_diag * v.x_prev[l];
        for (xj, xj_prev) in neighbors {
            acc += row.u_off * xj[l] - row.ut_off * xj_prev[l];
        }
        acc += row.gamma_over_psi * (v.s[l] - v.s_prev[l]);
        acc += row.kappa_over_psi * (v.z[l] - v.z_prev[l]);
        acc -= row.inv_psi * (v.grad[l] - v.grad_prev[l]);
        out[l] = acc;
    }
}

/// Initial half iterate `((γ + c d_i + κ)x_i⁰ + c Σ_j x_j⁰ − g_i − p_i¹)/ψ_i`.
pub fn agent_init_half(
    row: &AgentRow,
    cfg: &SolverConfig,
    degree: usize,
    x0: &[f64],
    neighbors: &[&[f64]],
    grad: &[f64],
    p1: &[f64],
    out: &mut [f64],
) {
    let self_weight = cfg.gamma + cfg.c * degree as f64 + cfg.kappa;
    for l in 0..out.len() {
        let mut acc = self_weight * x0[l];
        for xj in neighbors {
            acc += cfg.c * xj[l];
        }
        out[l] = (acc - grad[l] - p1[l]) / row.psi;
    }
}

/// `p_i + α(d_i x_i − Σ_j x_j)`.
pub fn agent_dual_update(alpha: f64, degree: usize, p: &[f64], x: &[f64], neighbors: &[&[f64]], out: &mut [f64]) {
    let d = degree as f64;
    for l in 0..out.len() {
        let mut lap = d * x[l];
        for xj in neighbors {
            lap -= xj[l];
        }
        out[l] = p[l] + alpha * lap;
    }
}

/// `s_i = x_i + η(x_i − x_i^{prev})`.
pub fn agent_extrapolate(eta: f64, x: &[f64], x_prev: &[f64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(x_prev) {
        *o = a + eta * (a - b);
    }
}

/// `z_i + β(x_i − z_i)`.
pub fn agent_relax(beta: f64, z: &[f64], x: &[f64], out: &mut [f64]) {
    for ((o, zi), xi) in out.iter_mut().zip(z).zip(x) {
        *o = zi + beta * (xi - zi);
    }
}

/// Agent `i`'s gradient estimate at `s` in round `k`.
pub fn agent_gradient(
    problem: &Problem,
    i: usize,
    s: &[f64],
    batch: Batch,
    seed: u64,
    k: usize,
    out: &mut [f64],
) -> Result<(), OracleError> {
    let f = &problem.smooth[i];
    match batch {
        Batch::Full => {
            f.gradient(s, out);
            Ok(())
        }
        _ => f.stochastic_gradient(s, &mut sample_stream(seed, i, k), batch, out),
    }
}

/// The primal-dual momentum method in its communication-efficient form:
/// agents exchange only `x`, and the dual variable is folded into the
/// running half iterate.
#[derive(Debug, Clone)]
pub struct Sppdm {
    name: String,
    graph: Graph,
    cfg: SolverConfig,
    mats: UpdateMatrices,
    schedule: EtaSchedule,
    x0: Stacked,
    state: Option<SolverState>,
}

impl Sppdm {
    /// Holds `x⁰`; the first [`Method::step`] performs the initial round.
    pub fn new(graph: &Graph, cfg: SolverConfig, x0: Stacked) -> Result<Self, SolverError> {
        cfg.validate()?;
        if x0.agents() != graph.node_count() {
            return Err(OracleError::DimensionMismatch {
                expected: graph.node_count(),
                got: x0.agents(),
            }
            .into());
        }
        Ok(Self {
            name: "sppdm".into(),
            graph: graph.clone(),
            mats: UpdateMatrices::new(graph, &cfg),
            schedule: EtaSchedule::new(cfg.momentum),
            cfg,
            x0,
            state: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Resume from a checkpoint.
    pub fn from_state(graph: &Graph, cfg: SolverConfig, state: SolverState) -> Result<Self, SolverError> {
        let mut s = Self::new(graph, cfg, state.x.clone())?;
        s.state = Some(state);
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn matrices(&self) -> &UpdateMatrices {
        &self.mats
    }

    pub fn state(&self) -> Option<&SolverState> {
        self.state.as_ref()
    }

    pub fn eta(&mut self, k: usize) -> f64 {
        self.schedule.eta(k)
    }

    fn neighbor_rows<'a>(&self, x: &'a Stacked, i: usize) -> Vec<&'a [f64]> {
        self.graph.neighbors(i).iter().map(|&j| x.row(j)).collect()
    }

    fn initialize(&mut self, problem: &Problem) -> Result<SolverState, SolverError> {
        let (n_agents, dim) = (self.x0.agents(), self.x0.dim());
        let x0 = &self.x0;
        let mut grad = Stacked::zeros(n_agents, dim);
        for i in 0..n_agents {
            agent_gradient(problem, i, x0.row(i), self.cfg.batch, self.cfg.seed, 0, grad.row_mut(i))?;
        }
        let p1 = match self.cfg.dual_init {
            DualInit::Zero => Stacked::zeros(n_agents, dim),
            DualInit::AscentFromZero => {
                let mut p = Stacked::zeros(n_agents, dim);
                let zero = vec![0.0; dim];
                for i in 0..n_agents {
                    let nb = self.neighbor_rows(x0, i);
                    agent_dual_update(self.cfg.alpha, self.graph.degree(i), &zero, x0.row(i), &nb, p.row_mut(i));
                }
                p
            }
        };
        let mut half = Stacked::zeros(n_agents, dim);
        let mut x1 = Stacked::zeros(n_agents, dim);
        let mut z1 = Stacked::zeros(n_agents, dim);
        for i in 0..n_agents {
            let row = self.mats.rows[i];
            let nb = self.neighbor_rows(x0, i);
            agent_init_half(
                &row,
                &self.cfg,
                self.graph.degree(i),
                x0.row(i),
                &nb,
                grad.row(i),
                p1.row(i),
                half.row_mut(i),
            );
            problem.regularizers[i].prox_into(half.row(i), row.psi, x1.row_mut(i));
            agent_relax(self.cfg.beta, x0.row(i), x1.row(i), z1.row_mut(i));
        }
        ensure_finite(&x1, 1)?;
        Ok(SolverState {
            iteration: 1,
            x: x1,
            x_prev: x0.clone(),
            x_half: half,
            s_prev: x0.clone(),
            z: z1,
            z_prev: x0.clone(),
            grad_prev: grad,
            p: p1,
        })
    }

    fn advance(&mut self, problem: &Problem, st: &SolverState) -> Result<SolverState, SolverError> {
        let k = st.iteration;
        let eta = self.schedule.eta(k);
        let (n_agents, dim) = (st.x.agents(), st.x.dim());
        let mut s = Stacked::zeros(n_agents, dim);
        let mut grad = Stacked::zeros(n_agents, dim);
        let mut half = Stacked::zeros(n_agents, dim);
        let mut x = Stacked::zeros(n_agents, dim);
        let mut z = Stacked::zeros(n_agents, dim);
        let mut p = Stacked::zeros(n_agents, dim);
        for i in 0..n_agents {
            agent_extrapolate(eta, st.x.row(i), st.x_prev.row(i), s.row_mut(i));
            agent_gradient(problem, i, s.row(i), self.cfg.batch, self.cfg.seed, k, grad.row_mut(i))?;
            let nb: Vec<(&[f64], &[f64])> = self
                .graph
                .neighbors(i)
                .iter()
                .map(|&j| (st.x.row(j), st.x_prev.row(j)))
                .collect();
            let view = AgentView {
                half_prev: st.x_half.row(i),
                x: st.x.row(i),
                x_prev: st.x_prev.row(i),
                s: s.row(i),
                s_prev: st.s_prev.row(i),
                z: st.z.row(i),
                z_prev: st.z_prev.row(i),
                grad: grad.row(i),
                grad_prev: st.grad_prev.row(i),
            };
            let row = self.mats.rows[i];
            agent_half_step(&row, view, &nb, half.row_mut(i));
            problem.regularizers[i].prox_into(half.row(i), row.psi, x.row_mut(i));
            agent_relax(self.cfg.beta, st.z.row(i), x.row(i), z.row_mut(i));
            let nbx = self.neighbor_rows(&st.x, i);
            agent_dual_update(self.cfg.alpha, self.graph.degree(i), st.p.row(i), st.x.row(i), &nbx, p.row_mut(i));
        }
        ensure_finite(&x, k + 1)?;
        Ok(SolverState {
            iteration: k + 1,
            x,
            x_prev: st.x.clone(),
            x_half: half,
            s_prev: s,
            z,
            z_prev: st.z.clone(),
            grad_prev: grad,
            p,
        })
    }
}

impl Method for Sppdm {
    fn name(&self) -> &str {
        &self.name
    }

    fn iteration(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.iteration)
    }

    fn iterate(&self) -> &Stacked {
        self.state.as_ref().map_or(&self.x0, |s| &s.x)
    }

    fn gap_dual(&self) -> Option<Stacked> {
        let st = self.state.as_ref()?;
        let mut p = apply_laplacian(&self.graph, &st.x);
        for (o, v) in p.as_mut_slice().iter_mut().zip(st.p.as_slice()) {
            *o = v + self.cfg.alpha * *o;
        }
        Some(p)
    }

    fn step(&mut self, problem: &Problem) -> Result<(), SolverError> {
        let next = match self.state.take() {
            None => self.initialize(problem)?,
            Some(st) => {
                let r = self.advance(problem, &st);
                match r {
                    Ok(n) => n,
                    Err(e) => {
                        self.state = Some(st);
                        return Err(e);
                    }
                }
            }
        };
        self.state = Some(next);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{DiagonalQuadratic, Regularizer, SmoothTerm};
    use crate::solver::Momentum;

    fn quad_problem(n_agents: usize, centers: &[f64]) -> Problem {
        let smooth: Vec<Box<dyn SmoothTerm>> = (0..n_agents)
            .map(|_| Box::new(DiagonalQuadratic::isotropic(1.0, centers.to_vec())) as Box<dyn SmoothTerm>)
            .collect();
        Problem::new(smooth, vec![Regularizer::Zero; n_agents])
    }

    #[test]
    fn single_agent_init() {
        let g = Graph::singleton();
        let cfg = SolverConfig {
            gamma: 3.0,
            kappa: 1.0,
            c: 5.0,
            ..SolverConfig::default()
        };
        let p = quad_problem(1, &[0.0]);
        let mut s = Sppdm::new(&g, cfg, Stacked::from_rows(&[vec![1.0]])).unwrap();
        s.step(&p).unwrap();
        let st = s.state().unwrap();
        assert_eq!(st.x_half.as_slice(), &[0.75]);
        assert_eq!(st.x.as_slice(), &[0.75]);
    }

    #[test]
    fn consensus_stationary_point_is_fixed() {
        let g = Graph::circle(4).unwrap();
        let centers = [0.3, -0.2];
        let p = quad_problem(4, &centers);
        let x0 = Stacked::consensus(4, &centers);
        for momentum in [Momentum::Zero, Momentum::Nesterov] {
            let cfg = SolverConfig {
                momentum,
                ..SolverConfig::default()
            };
            let mut s = Sppdm::new(&g, cfg, x0.clone()).unwrap();
            for _ in 0..20 {
                s.step(&p).unwrap();
                assert!(s.iterate().max_abs_diff(&x0) <= 1e-12);
                assert!(s.state().unwrap().z.max_abs_diff(&x0) <= 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_iterate_is_reported() {
        let g = Graph::path(2).unwrap();
        let p = quad_problem(2, &[0.0]);
        let x0 = Stacked::from_rows(&[vec![f64::NAN], vec![0.0]]);
        let mut s = Sppdm::new(&g, SolverConfig::default(), x0).unwrap();
        assert_eq!(s.step(&p), Err(SolverError::NonFiniteIterate(1)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = Graph::circle(3).unwrap();
        let p = quad_problem(3, &[0.5, 0.1, -0.3]);
        let x0 = crate::solver::uniform_start(3, 3, -0.1, 0.1, 9);
        let mut s = Sppdm::new(&g, SolverConfig::default(), x0).unwrap();
        for _ in 0..5 {
            s.step(&p).unwrap();
        }
        let path = std::env::temp_dir().join(format!("ppdm-ckpt-{}.csv", std::process::id()));
        s.state().unwrap().write_csv(&path).unwrap();
        let back = SolverState::read_csv(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(&back, s.state().unwrap());
        let mut resumed = Sppdm::from_state(&g, SolverConfig::default(), back).unwrap();
        s.step(&p).unwrap();
        resumed.step(&p).unwrap();
        assert_eq!(resumed.iterate(), s.iterate());
    }
}
