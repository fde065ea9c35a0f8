//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written directly against dense `nalgebra` matrices
//! built from the edge list, without going through the crate's update
//! matrices, kernels or proximal maps.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ppdm::oracles::{sample_stream, Batch, Problem, Regularizer, SmoothTerm, TruncatedLoss};
use ppdm::{Graph, SolverConfig, Stacked};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn to_dm(x: &Stacked) -> DMatrix<f64> {
    DMatrix::from_row_slice(x.agents(), x.dim(), x.as_slice())
}

pub fn sup_diff(a: &DMatrix<f64>, b: &Stacked) -> f64 {
    (a - to_dm(b)).abs().max()
}

/// Signed and signless incidence matrices, one row per edge `(i, j)`, `i < j`.
pub fn incidence(g: &Graph) -> (DMatrix<f64>, DMatrix<f64>) {
    let (e, n) = (g.edge_count(), g.node_count());
    let mut a = DMatrix::zeros(e, n);
    let mut b = DMatrix::zeros(e, n);
    for (l, &(i, j)) in g.edges().iter().enumerate() {
        a[(l, i)] = 1.0;
        a[(l, j)] = -1.0;
        b[(l, i)] = 1.0;
        b[(l, j)] = 1.0;
    }
    (a, b)
}

pub fn psi_diag(g: &Graph, cfg: &SolverConfig) -> DVector<f64> {
    DVector::from_iterator(
        g.node_count(),
        (0..g.node_count()).map(|i| cfg.gamma + 2.0 * cfg.c * g.degree(i) as f64 + cfg.kappa),
    )
}

/// `W = Ψ⁻¹(cBᵀB − αAᵀA + (γ+κ)I)` and `W̃ = Ψ⁻¹(cBᵀB + (γ+κ)I)`.
pub fn extra_mixing(g: &Graph, cfg: &SolverConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a, b) = incidence(g);
    let n = g.node_count();
    let psi_inv = DMatrix::from_diagonal(&psi_diag(g, cfg).map(|p| 1.0 / p));
    let base = b.transpose() * &b * cfg.c + DMatrix::identity(n, n) * (cfg.gamma + cfg.kappa);
    let wt = &psi_inv * &base;
    let w = &psi_inv * (base - a.transpose() * &a * cfg.alpha);
    (w, wt)
}

/// `θ_{−1} = θ_0 = 1`, `θ_{k+1} = (1 + √(1 + 4θ_k²))/2`, `η_k = (θ_{k−1} − 1)/θ_k`.
pub fn nesterov_eta(k: usize) -> f64 {
    let (mut before, mut cur) = (1.0f64, 1.0f64);
    for _ in 0..k {
        let next = 0.5 * (1.0 + (1.0 + 4.0 * cur * cur).sqrt());
        before = cur;
        cur = next;
    }
    (before - 1.0) / cur
}

pub fn eta(cfg: &SolverConfig, k: usize) -> f64 {
    match cfg.momentum {
        ppdm::Momentum::Zero => 0.0,
        ppdm::Momentum::Constant(e) => e,
        ppdm::Momentum::Nesterov => nesterov_eta(k),
    }
}

/// `argmin_u r(u) + ψ/2 ‖u − v‖²`, coordinatewise.
pub fn prox_oracle(r: &Regularizer, v: f64, psi: f64) -> f64 {
    match *r {
        Regularizer::Zero => v,
        Regularizer::Ridge { weight } => psi * v / (psi + weight),
        Regularizer::L1Box { weight, lo, hi } => {
            let t = weight / psi;
            let soft = if v > t {
                v - t
            } else if v < -t {
                v + t
            } else {
                0.0
            };
            soft.max(lo).min(hi)
        }
    }
}

/// Stacked gradient estimates from the shared per-(agent, round) streams.
pub fn gradients(problem: &Problem, s: &DMatrix<f64>, batch: Batch, seed: u64, k: usize) -> DMatrix<f64> {
    let (n, d) = s.shape();
    let mut g = DMatrix::zeros(n, d);
    let mut buf = vec![0.0; d];
    for i in 0..n {
        let row: Vec<f64> = s.row(i).iter().copied().collect();
        match batch {
            Batch::Full => problem.smooth[i].gradient(&row, &mut buf),
            _ => problem.smooth[i]
                .stochastic_gradient(&row, &mut sample_stream(seed, i, k), batch, &mut buf)
                .expect("valid batch"),
        }
        for l in 0..d {
            g[(i, l)] = buf[l];
        }
    }
    g
}

fn prox_rows(problem: &Problem, v: &DMatrix<f64>, psi: &DVector<f64>) -> DMatrix<f64> {
    let mut out = v.clone();
    for i in 0..v.nrows() {
        for l in 0..v.ncols() {
            out[(i, l)] = prox_oracle(&problem.regularizers[i], v[(i, l)], psi[i]);
        }
    }
    out
}

/// Explicit-dual form on the augmented Lagrangian with one multiplier per edge.
pub struct ExplicitDual {
    a: DMatrix<f64>,
    btb: DMatrix<f64>,
    psi: DVector<f64>,
    cfg: SolverConfig,
    pub k: usize,
    pub x: DMatrix<f64>,
    x_prev: DMatrix<f64>,
    z: DMatrix<f64>,
    lambda: DMatrix<f64>,
}

impl ExplicitDual {
    pub fn new(g: &Graph, cfg: SolverConfig, x0: &Stacked) -> Self {
        let (a, b) = incidence(g);
        let x = to_dm(x0);
        let lambda = match cfg.dual_init {
            ppdm::DualInit::Zero => DMatrix::zeros(g.edge_count(), x0.dim()),
            ppdm::DualInit::AscentFromZero => &a * &x * cfg.alpha,
        };
        Self {
            btb: b.transpose() * &b,
            psi: psi_diag(g, &cfg),
            cfg,
            k: 0,
            x_prev: x.clone(),
            z: x.clone(),
            x,
            lambda,
            a,
        }
    }

    pub fn step(&mut self, problem: &Problem) {
        let k = self.k;
        if k > 0 {
            self.lambda += &self.a * &self.x * self.cfg.alpha;
        }
        let s = if k == 0 {
            self.x.clone()
        } else {
            &self.x + (&self.x - &self.x_prev) * eta(&self.cfg, k)
        };
        let g = gradients(problem, &s, self.cfg.batch, self.cfg.seed, k);
        let rhs = &s * self.cfg.gamma + &self.btb * &self.x * self.cfg.c + &self.z * self.cfg.kappa
            - g
            - self.a.transpose() * &self.lambda;
        let mut v = rhs;
        for i in 0..v.nrows() {
            v.row_mut(i).scale_mut(1.0 / self.psi[i]);
        }
        let next = prox_rows(problem, &v, &self.psi);
        self.z = &self.z + (&next - &self.z) * self.cfg.beta;
        self.x_prev = std::mem::replace(&mut self.x, next);
        self.k += 1;
    }
}

/// PG-EXTRA with `W`, `W̃`, step `Ψ⁻¹` and prox weight `Ψ`; the first half
/// iterate uses `first` (either `W` or `W̃`).
pub struct DirectExtra {
    w: DMatrix<f64>,
    wt: DMatrix<f64>,
    first: DMatrix<f64>,
    psi: DVector<f64>,
    pub x: DMatrix<f64>,
    x_prev: DMatrix<f64>,
    half: DMatrix<f64>,
    grad_prev: DMatrix<f64>,
    k: usize,
}

impl DirectExtra {
    pub fn new(g: &Graph, cfg: &SolverConfig, x0: &Stacked) -> Self {
        let (w, wt) = extra_mixing(g, cfg);
        let first = match cfg.dual_init {
            ppdm::DualInit::Zero => wt.clone(),
            ppdm::DualInit::AscentFromZero => w.clone(),
        };
        let x = to_dm(x0);
        Self {
            w,
            wt,
            first,
            psi: psi_diag(g, cfg),
            x_prev: x.clone(),
            half: DMatrix::zeros(x.nrows(), x.ncols()),
            grad_prev: DMatrix::zeros(x.nrows(), x.ncols()),
            x,
            k: 0,
        }
    }

    fn scaled(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for i in 0..out.nrows() {
            out.row_mut(i).scale_mut(1.0 / self.psi[i]);
        }
        out
    }

    pub fn step(&mut self, problem: &Problem) {
        let g = gradients(problem, &self.x, Batch::Full, 0, self.k);
        self.half = if self.k == 0 {
            &self.first * &self.x - self.scaled(&g)
        } else {
            &self.half + &self.w * &self.x - &self.wt * &self.x_prev - self.scaled(&(&g - &self.grad_prev))
        };
        let next = prox_rows(problem, &self.half, &self.psi);
        self.grad_prev = g;
        self.x_prev = std::mem::replace(&mut self.x, next);
        self.k += 1;
    }
}

/// Accelerated-gradient form `x^{k+1} = W̃s^k − Ψ⁻¹∇f(s^k) + C^k` with
/// `C^k = Ψ⁻¹(cBᵀB + κI)(x^k − s^k) − Σ_t (I − W̃)x^t`.
pub struct DirectDng {
    wt: DMatrix<f64>,
    corr: DMatrix<f64>,
    psi: DVector<f64>,
    cfg: SolverConfig,
    sum: DMatrix<f64>,
    pub x: DMatrix<f64>,
    x_prev: DMatrix<f64>,
    k: usize,
}

impl DirectDng {
    pub fn new(g: &Graph, cfg: &SolverConfig, x0: &Stacked) -> Self {
        let (_, b) = incidence(g);
        let n = g.node_count();
        let psi = psi_diag(g, cfg);
        let psi_inv = DMatrix::from_diagonal(&psi.map(|p| 1.0 / p));
        let corr = &psi_inv * (b.transpose() * &b * cfg.c + DMatrix::identity(n, n) * cfg.kappa);
        let x = to_dm(x0);
        Self {
            wt: extra_mixing(g, cfg).1,
            corr,
            psi,
            cfg: *cfg,
            sum: DMatrix::zeros(x.nrows(), x.ncols()),
            x_prev: x.clone(),
            x,
            k: 0,
        }
    }

    pub fn step(&mut self, problem: &Problem) {
        let n = self.x.nrows();
        let s = &self.x + (&self.x - &self.x_prev) * eta(&self.cfg, self.k);
        if self.k > 0 || self.cfg.dual_init == ppdm::DualInit::AscentFromZero {
            self.sum += (DMatrix::identity(n, n) - &self.wt) * &self.x;
        }
        let c = &self.corr * (&self.x - &s) - &self.sum;
        let mut g = gradients(problem, &s, Batch::Full, 0, self.k);
        for i in 0..n {
            g.row_mut(i).scale_mut(1.0 / self.psi[i]);
        }
        let next = &self.wt * &s - g + c;
        self.x_prev = std::mem::replace(&mut self.x, next);
        self.k += 1;
    }
}

/// Small truncated-loss problem with Gaussian data and a common regularizer.
pub fn small_problem(agents: usize, samples: usize, dim: usize, reg: Regularizer, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let smooth = (0..agents)
        .map(|_| {
            let h: Vec<f64> = (0..samples * dim).map(|_| rng.sample(StandardNormal)).collect();
            let y: Vec<f64> = (0..samples).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect();
            Box::new(TruncatedLoss::new(h, y, dim, 3.0).expect("consistent sizes")) as Box<dyn SmoothTerm>
        })
        .collect();
    Problem::new(smooth, vec![reg; agents])
}

pub fn random_start(agents: usize, dim: usize, seed: u64) -> Stacked {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57a7);
    let mut x = Stacked::zeros(agents, dim);
    for v in x.as_mut_slice() {
        *v = rng.random_range(-0.5..0.5);
    }
    x
}

/// Connected graph on `n` nodes: random spanning tree plus random chords.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) && !edges.iter().any(|&(a, b)| (a.min(b), a.max(b)) == (i, j)) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("tree plus chords is connected")
}

/// `(1/m) Σ_j ‖∇f_ij(x) − ∇f_i(x)‖²`.
pub fn sample_variance(f: &dyn SmoothTerm, x: &[f64]) -> f64 {
    let m = f.sample_count();
    let mut full = vec![0.0; x.len()];
    f.gradient(x, &mut full);
    let mut gj = vec![0.0; x.len()];
    let mut acc = 0.0;
    for j in 0..m {
        f.sample_gradient(x, j, &mut gj);
        acc += gj.iter().zip(&full).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    acc / m as f64
}
