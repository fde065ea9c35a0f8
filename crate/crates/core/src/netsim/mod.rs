//! Round-synchronous message passing. Each agent owns its iterate, its dual
//! image and a cache of the last two payloads from each neighbour; the only
//! thing that crosses a link is the sender's current `x`.

mod log;

pub use log::{communication_census, CommunicationCensus, RoundEntry, RoundLog, ROUND_LOG_HEADER};

use crate::graph::{apply_incidence, Graph};
use crate::linalg::Stacked;
use crate::metrics::{optimality_gap, stationarity_and_consensus, RunTrace, TraceMeta, TraceRecord};
use crate::oracles::{OracleError, Problem};
use crate::solver::{
    agent_dual_update, agent_extrapolate, agent_gradient, agent_half_step, agent_init_half, agent_relax, AgentRow,
    AgentView, DualInit, EtaSchedule, SolverConfig, SolverError, SolverState, UpdateMatrices,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetsimError {
    #[error("agent {agent} tried to read from non-neighbour {peer}")]
    LocalityViolation { agent: usize, peer: usize },
    #[error("round {round}: payload from {sender} to {receiver} missing")]
    MissingPayload { round: usize, sender: usize, receiver: usize },
    #[error("round {round}: payload from {sender} to {receiver} delivered more than once")]
    DuplicatePayload { round: usize, sender: usize, receiver: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<OracleError> for NetsimError {
    fn from(e: OracleError) -> Self {
        NetsimError::Solver(e.into())
    }
}

/// One message: the sender's iterate at the start of `round`.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub sender: usize,
    pub round: usize,
    pub x: Vec<f64>,
}

/// Inbound queue of one agent.
#[derive(Debug, Clone, Default)]
pub struct Mailbox {
    queue: Vec<Payload>,
}

impl Mailbox {
    pub fn push(&mut self, p: Payload) {
        self.queue.push(p);
    }

    pub fn drain(&mut self) -> Vec<Payload> {
        std::mem::take(&mut self.queue)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuardMode {
    Off,
    #[default]
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Drop,
    Duplicate,
}

/// A deliberately broken send, for exercising the guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    pub kind: FaultKind,
    pub round: usize,
    pub sender: usize,
    pub receiver: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    #[default]
    Natural,
    Reversed,
    /// A fresh permutation every round.
    Shuffled(u64),
}

#[derive(Debug, Clone, Default)]
pub struct NetsimOptions {
    pub guard: GuardMode,
    pub fault: Option<Fault>,
    pub order: UpdateOrder,
    pub keep_trajectory: bool,
    /// Record metrics every this many rounds; 0 disables the trace.
    pub metric_every: usize,
}

/// Outcome of [`run_distributed`].
#[derive(Debug, Clone)]
pub struct DistributedRun {
    pub state: SolverState,
    pub trace: RunTrace,
    pub log: RoundLog,
    /// `x^1, ..., x^K` when requested.
    pub trajectory: Vec<Stacked>,
}

#[derive(Debug, Clone)]
struct Agent {
    id: usize,
    neighbors: Vec<usize>,
    row: AgentRow,
    schedule: EtaSchedule,
    iteration: usize,
    x: Vec<f64>,
    x_prev: Vec<f64>,
    half: Vec<f64>,
    s_prev: Vec<f64>,
    z: Vec<f64>,
    z_prev: Vec<f64>,
    grad_prev: Vec<f64>,
    p: Vec<f64>,
    /// Neighbour id → (payload of this round, payload of the previous one).
    cache: BTreeMap<usize, (Vec<f64>, Vec<f64>)>,
}

impl Agent {
    fn neighbor(&self, j: usize) -> Result<&(Vec<f64>, Vec<f64>), NetsimError> {
        self.cache
            .get(&j)
            .ok_or(NetsimError::LocalityViolation { agent: self.id, peer: j })
    }

    fn receive(&mut self, p: Payload) -> Result<(), NetsimError> {
        if !self.neighbors.contains(&p.sender) {
            return Err(NetsimError::LocalityViolation {
                agent: self.id,
                peer: p.sender,
            });
        }
        match self.cache.get_mut(&p.sender) {
            Some((cur, prev)) => {
                std::mem::swap(cur, prev);
                *cur = p.x;
            }
            None => {
                self.cache.insert(p.sender, (p.x.clone(), p.x));
            }
        }
        Ok(())
    }

    fn init_round(&mut self, problem: &Problem, cfg: &SolverConfig) -> Result<(), NetsimError> {
        let dim = self.x.len();
        let x0 = self.x.clone();
        let mut nb = Vec::with_capacity(self.neighbors.len());
        for &j in &self.neighbors {
            nb.push(self.neighbor(j)?.0.as_slice());
        }
        let mut grad = vec![0.0; dim];
        agent_gradient(problem, self.id, &x0, cfg.batch, cfg.seed, 0, &mut grad)?;
        let mut p1 = vec![0.0; dim];
        if cfg.dual_init == DualInit::AscentFromZero {
            agent_dual_update(cfg.alpha, nb.len(), &vec![0.0; dim], &x0, &nb, &mut p1);
        }
        let mut half = vec![0.0; dim];
        agent_init_half(&self.row, cfg, nb.len(), &x0, &nb, &grad, &p1, &mut half);
        let mut x1 = vec![0.0; dim];
        problem.regularizers[self.id].prox_into(&half, self.row.psi, &mut x1);
        let mut z1 = vec![0.0; dim];
        agent_relax(cfg.beta, &x0, &x1, &mut z1);
        self.x = x1;
        self.x_prev = x0.clone();
        self.half = half;
        self.s_prev = x0.clone();
        self.z = z1;
        self.z_prev = x0;
        self.grad_prev = grad;
        self.p = p1;
        self.iteration = 1;
        Ok(())
    }

    fn round(&mut self, problem: &Problem, cfg: &SolverConfig) -> Result<(), NetsimError> {
        let k = self.iteration;
        let dim = self.x.len();
        let eta = self.schedule.eta(k);
        let mut s = vec![0.0; dim];
        agent_extrapolate(eta, &self.x, &self.x_prev, &mut s);
        let mut grad = vec![0.0; dim];
        agent_gradient(problem, self.id, &s, cfg.batch, cfg.seed, k, &mut grad)?;
        let mut pairs = Vec::with_capacity(self.neighbors.len());
        for &j in &self.neighbors {
            let (cur, prev) = self.neighbor(j)?;
            pairs.push((cur.as_slice(), prev.as_slice()));
        }
        let view = AgentView {
            half_prev: &self.half,
            x: &self.x,
            x_prev: &self.x_prev,
            s: &s,
            s_prev: &self.s_prev,
            z: &self.z,
            z_prev: &self.z_prev,
            grad: &grad,
            grad_prev: &self.grad_prev,
        };
        let mut half = vec![0.0; dim];
        agent_half_step(&self.row, view, &pairs, &mut half);
        let mut x = vec![0.0; dim];
        problem.regularizers[self.id].prox_into(&half, self.row.psi, &mut x);
        let mut z = vec![0.0; dim];
        agent_relax(cfg.beta, &self.z, &x, &mut z);
        let cur: Vec<&[f64]> = pairs.iter().map(|p| p.0).collect();
        let mut p = vec![0.0; dim];
        agent_dual_update(cfg.alpha, cur.len(), &self.p, &self.x, &cur, &mut p);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFiniteIterate(k + 1).into());
        }
        self.x_prev = std::mem::replace(&mut self.x, x);
        self.half = half;
        self.s_prev = s;
        self.z_prev = std::mem::replace(&mut self.z, z);
        self.grad_prev = grad;
        self.p = p;
        self.iteration = k + 1;
        Ok(())
    }
}

fn stack(agents: &[Agent], f: impl Fn(&Agent) -> &Vec<f64>) -> Stacked {
    let rows: Vec<Vec<f64>> = agents.iter().map(|a| f(a).clone()).collect();
    Stacked::from_rows(&rows)
}

fn snapshot(agents: &[Agent]) -> SolverState {
    SolverState {
        iteration: agents[0].iteration,
        x: stack(agents, |a| &a.x),
        x_prev: stack(agents, |a| &a.x_prev),
        x_half: stack(agents, |a| &a.half),
        s_prev: stack(agents, |a| &a.s_prev),
        z: stack(agents, |a| &a.z),
        z_prev: stack(agents, |a| &a.z_prev),
        grad_prev: stack(agents, |a| &a.grad_prev),
        p: stack(agents, |a| &a.p),
    }
}

/// Checks that every neighbour payload of `round` is present exactly once.
fn guard(graph: &Graph, boxes: &[Mailbox], round: usize) -> Result<(), NetsimError> {
    for (receiver, mb) in boxes.iter().enumerate() {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for p in &mb.queue {
            if p.round == round {
                *seen.entry(p.sender).or_default() += 1;
            }
        }
        for &sender in graph.neighbors(receiver) {
            match seen.get(&sender).copied().unwrap_or(0) {
                0 => return Err(NetsimError::MissingPayload { round, sender, receiver }),
                1 => {}
                _ => return Err(NetsimError::DuplicatePayload { round, sender, receiver }),
            }
        }
    }
    Ok(())
}

/// Runs `rounds` synchronous rounds of the primal-dual momentum method from
/// `x0`. Round `k` sends `x^k` over every link and produces `x^{k+1}`.
pub fn run_distributed(
    problem: &Problem,
    graph: &Graph,
    cfg: &SolverConfig,
    x0: &Stacked,
    rounds: usize,
    opts: &NetsimOptions,
) -> Result<DistributedRun, NetsimError> {
    cfg.validate()?;
    let n_agents = graph.node_count();
    if x0.agents() != n_agents {
        return Err(OracleError::DimensionMismatch {
            expected: n_agents,
            got: x0.agents(),
        }
        .into());
    }
    let mats = UpdateMatrices::new(graph, cfg);
    let dim = x0.dim();
    let mut agents: Vec<Agent> = (0..n_agents)
        .map(|i| Agent {
            id: i,
            neighbors: graph.neighbors(i).to_vec(),
            row: mats.rows[i],
            schedule: EtaSchedule::new(cfg.momentum),
            iteration: 0,
            x: x0.row(i).to_vec(),
            x_prev: x0.row(i).to_vec(),
            half: vec![0.0; dim],
            s_prev: x0.row(i).to_vec(),
            z: x0.row(i).to_vec(),
            z_prev: x0.row(i).to_vec(),
            grad_prev: vec![0.0; dim],
            p: vec![0.0; dim],
            cache: BTreeMap::new(),
        })
        .collect();
    let mut boxes = vec![Mailbox::default(); n_agents];
    let mut log = RoundLog::default();
    let mut trace = RunTrace::new(TraceMeta {
        algorithm: "sppdm_netsim".into(),
        seed: cfg.seed,
        config_hash: 0,
    });
    let mut trajectory = Vec::new();
    let mut order: Vec<usize> = (0..n_agents).collect();
    if opts.order == UpdateOrder::Reversed {
        order.reverse();
    }
    let mut shuffler = match opts.order {
        UpdateOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };

    for round in 0..rounds {
        let mut entry = RoundEntry::new(round, n_agents);
        for a in &agents {
            for &j in &a.neighbors {
                let copies = match opts.fault {
                    Some(f) if f.round == round && f.sender == a.id && f.receiver == j => match f.kind {
                        FaultKind::Drop => 0,
                        FaultKind::Duplicate => 2,
                    },
                    _ => 1,
                };
                for _ in 0..copies {
                    boxes[j].push(Payload {
                        sender: a.id,
                        round,
                        x: a.x.clone(),
                    });
                    entry.record(a.id, j, dim);
                }
            }
        }
        if opts.guard == GuardMode::Strict {
            guard(graph, &boxes, round)?;
        }
        for (a, mb) in agents.iter_mut().zip(boxes.iter_mut()) {
            for p in mb.drain() {
                a.receive(p)?;
            }
        }
        if let Some(rng) = shuffler.as_mut() {
            order.shuffle(rng);
        }
        for &i in &order {
            let a = &mut agents[i];
            if round == 0 {
                a.init_round(problem, cfg)?;
            } else {
                a.round(problem, cfg)?;
            }
        }
        log.push(entry);
        let iter = round + 1;
        if opts.keep_trajectory {
            trajectory.push(stack(&agents, |a| &a.x));
        }
        if opts.metric_every > 0 && (iter % opts.metric_every == 0 || iter == rounds) {
            let x = stack(&agents, |a| &a.x);
            let p = stack(&agents, |a| &a.p);
            let mut p_next = crate::graph::apply_laplacian(graph, &x);
            for (o, v) in p_next.as_mut_slice().iter_mut().zip(p.as_slice()) {
                *o = v + cfg.alpha * *o;
            }
            let (stationarity, consensus) = stationarity_and_consensus(problem, &x);
            trace.push(TraceRecord {
                iter,
                stationarity,
                consensus,
                q_gap: Some(optimality_gap(problem, graph, &x, &p_next)),
                phi: None,
                ax_norm2: apply_incidence(graph, &x).norm_sq(),
                wall_ms: 0.0,
            });
        }
    }
    let state = if rounds == 0 {
        SolverState {
            iteration: 0,
            x: x0.clone(),
            x_prev: x0.clone(),
            x_half: Stacked::zeros(n_agents, dim),
            s_prev: x0.clone(),
            z: x0.clone(),
            z_prev: x0.clone(),
            grad_prev: Stacked::zeros(n_agents, dim),
            p: Stacked::zeros(n_agents, dim),
        }
    } else {
        snapshot(&agents)
    };
    Ok(DistributedRun {
        state,
        trace,
        log,
        trajectory,
    })
}
