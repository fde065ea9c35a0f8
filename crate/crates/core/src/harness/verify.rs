use crate::graph::{Graph, IncidencePair};
use crate::metrics::{
    feasible_config, incidence_norm, optimality_gap, plateau, rate_check, stationarity_and_consensus,
    variance_bound_check, PotentialEvaluator,
};
use crate::netsim::{run_distributed, NetsimOptions};
use crate::oracles::{generate_regression, Batch, Problem, Regularizer, RegressionSpec, SmoothTerm, TruncatedLoss};
use crate::solver::{uniform_start, Method, Momentum, ReferenceSolver, SolverConfig, Sppdm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub operation: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}::{} seed={} {}",
            if self.passed { "pass" } else { "FAIL" },
            self.module,
            self.operation,
            self.seed,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn add(&mut self, module: &'static str, operation: &'static str, seed: u64, passed: bool, detail: String) {
        self.checks.push(CheckOutcome {
            module,
            operation,
            seed,
            passed,
            detail,
        });
    }
}

/// Desk-scale regression with rigorous curvature constants.
pub fn desk_problem(seed: u64) -> Problem {
    let (_, ds) = generate_regression(&mut ChaCha8Rng::seed_from_u64(seed), &RegressionSpec::default())
        .expect("default spec is valid");
    ds.problem_with_curvature_bounds().expect("generated data is consistent")
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, nodes: usize, extra_prob: f64) -> Graph {
    let mut edges = Vec::new();
    for v in 1..nodes {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..nodes {
        for j in i + 1..nodes {
            if !edges.contains(&(i, j)) && rng.random_bool(extra_prob) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(nodes, &edges).expect("spanning tree keeps the graph connected")
}

fn incidence_identities(r: &mut VerifyReport, seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=12);
        let g = random_connected_graph(&mut rng, n, 0.3);
        let pair = IncidencePair::new(&g);
        let (a, b) = (pair.signed_gram(), pair.signless_gram());
        let lap = g.laplacian();
        let mut ok = true;
        for i in 0..n {
            for j in 0..n {
                let two_d = if i == j { 2 * g.degree(i) as i64 } else { 0 };
                ok &= a[i * n + j] + b[i * n + j] == two_d;
                ok &= a[i * n + j] as f64 == lap[(i, j)];
            }
        }
        r.add("graph", "incidence_identities", seed, ok, format!("N={n}, |E|={}", g.edge_count()));
    }
}

fn prox_brute_force(r: &mut VerifyReport, seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weight = rng.random_range(0.0..0.5);
        let psi = rng.random_range(0.5..5.0);
        let reg = Regularizer::l1_box(weight, -1.0, 1.0).expect("valid box");
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let u = reg.prox(&v, psi);
        let mut worst = 0.0f64;
        for l in 0..3 {
            let obj = |t: f64| weight * t.abs() + 0.5 * psi * (t - v[l]).powi(2);
            let steps = 20_000;
            let best = (0..=steps)
                .map(|s| -1.0 + 2.0 * s as f64 / steps as f64)
                .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
                .expect("grid is nonempty");
            worst = worst.max((best - u[l]).abs());
        }
        r.add("oracles", "prox_l1_box", seed, worst <= 1e-4, format!("max |grid - prox| = {worst:.2e}"));
    }
}

fn gradient_finite_differences(r: &mut VerifyReport, seeds: u64) {
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (8, 3);
        let h: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let f = TruncatedLoss::new(h, y, n, 3.0).expect("consistent sizes");
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut g = vec![0.0; n];
            f.gradient(&x, &mut g);
            for l in 0..n {
                let eps = 1e-6;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[l] += eps;
                xm[l] -= eps;
                let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * eps);
                worst = worst.max((fd - g[l]).abs() / g[l].abs().max(1.0));
            }
        }
        r.add("oracles", "truncated_loss_gradient", seed, worst <= 1e-5, format!("max rel err = {worst:.2e}"));
    }
}

fn small_problem(agents: usize, seed: u64) -> Problem {
    let spec = RegressionSpec {
        agents,
        samples: 10,
        dim: 6,
        sparsity: 2,
        ..RegressionSpec::default()
    };
    generate_regression(&mut ChaCha8Rng::seed_from_u64(seed), &spec)
        .expect("valid spec")
        .0
}

fn sppdm_vs_reference(r: &mut VerifyReport) {
    for (name, g) in [("circle(3)", Graph::circle(3)), ("path(4)", Graph::path(4))] {
        let g = g.expect("valid topology");
        for seed in 0..3 {
            let p = small_problem(g.node_count(), seed);
            let cfg = SolverConfig {
                batch: Batch::Mini(3),
                seed,
                ..SolverConfig::default()
            };
            let x0 = uniform_start(g.node_count(), 6, -0.1, 0.1, seed);
            let mut a = Sppdm::new(&g, cfg, x0.clone()).expect("valid config");
            let mut b = ReferenceSolver::new(&g, cfg, x0).expect("valid config");
            let mut worst = 0.0f64;
            let mut ok = true;
            for _ in 0..50 {
                ok &= a.step(&p).is_ok() && b.step(&p).is_ok();
                worst = worst.max(a.iterate().max_abs_diff(b.iterate()));
            }
            r.add(
                "solver",
                "sppdm_vs_reference",
                seed,
                ok && worst <= 1e-10,
                format!("{name}: sup deviation {worst:.2e}"),
            );
        }
    }
}

fn netsim_equivalence(r: &mut VerifyReport, rounds: usize) {
    let g = Graph::circle(5).expect("valid topology");
    for (seed, momentum) in [(0, Momentum::Nesterov), (1, Momentum::Zero)] {
        let p = desk_problem(seed);
        let cfg = SolverConfig {
            momentum,
            batch: Batch::Mini(4),
            seed,
            ..SolverConfig::default()
        };
        let x0 = uniform_start(5, 32, -0.1, 0.1, seed);
        let opts = NetsimOptions {
            keep_trajectory: true,
            ..Default::default()
        };
        let detail;
        let passed = match run_distributed(&p, &g, &cfg, &x0, rounds, &opts) {
            Ok(run) => {
                let mut m = Sppdm::new(&g, cfg, x0).expect("valid config");
                let mut identical = true;
                for x in &run.trajectory {
                    identical &= m.step(&p).is_ok() && m.iterate() == x;
                }
                let messages_ok = run.log.rounds.iter().all(|e| e.messages == 2 * g.edge_count());
                detail = format!("{rounds} rounds, bit-identical={identical}, messages=2|E| {messages_ok}");
                identical && messages_ok
            }
            Err(e) => {
                detail = e.to_string();
                false
            }
        };
        r.add("netsim", "bit_equivalence", seed, passed, detail);
    }
}

/// Largest one-step increase of the potential over `iters` iterations
/// with parameters inside the guaranteed-descent region.
pub fn potential_descent(seed: u64, iters: usize) -> Result<(f64, f64), String> {
    let g = Graph::circle(5).map_err(|e| e.to_string())?;
    let p = desk_problem(seed);
    let (cfg, t) = feasible_config(
        &SolverConfig::default(),
        p.lipschitz,
        p.weak_convexity,
        incidence_norm(&g),
        g.max_degree(),
    );
    t.require_feasible().map_err(|e| e.to_string())?;
    let mut m = Sppdm::new(&g, cfg, uniform_start(5, 32, -0.1, 0.1, seed)).map_err(|e| e.to_string())?;
    let mut ev = PotentialEvaluator::new(&g, &cfg, t.tau);
    let (mut prev, mut worst, mut lowest) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..iters {
        m.step(&p).map_err(|e| e.to_string())?;
        let phi = ev.evaluate(&p, m.state().expect("stepped")).map_err(|e| e.to_string())?.phi;
        if k > 0 {
            worst = worst.max(phi - prev);
        }
        prev = phi;
        lowest = lowest.min(phi);
    }
    Ok((worst, lowest))
}

fn potential_check(r: &mut VerifyReport, seeds: u64, iters: usize) {
    for seed in 0..seeds {
        let (passed, detail) = match potential_descent(seed, iters) {
            Ok((worst, lowest)) => (
                worst <= 1e-8 && lowest >= 0.0,
                format!("{iters} iterations, max increase {worst:.2e}, min phi {lowest:.4}"),
            ),
            Err(e) => (false, e),
        };
        r.add("metrics", "potential_descent", seed, passed, detail);
    }
}

fn variance_scaling(r: &mut VerifyReport) {
    let g = Graph::circle(5).expect("valid topology");
    let p = desk_problem(0);
    let mut m = Sppdm::new(&g, SolverConfig::default(), uniform_start(5, 32, -0.1, 0.1, 0)).expect("valid config");
    for _ in 0..20 {
        m.step(&p).expect("finite iterates");
    }
    let st = m.state().expect("stepped").clone();
    let check = |b: usize| {
        let cfg = SolverConfig {
            batch: Batch::Mini(b),
            seed: 11,
            ..SolverConfig::default()
        };
        variance_bound_check(&p, &g, &cfg, &st, 1000)
    };
    match (check(4), check(8)) {
        (Ok(a), Ok(b)) => {
            let ratio = b.empirical / a.empirical;
            let within = a.empirical <= 1.25 * a.bound && b.empirical <= 1.25 * b.bound;
            r.add(
                "metrics",
                "variance_bound_check",
                11,
                within && (0.35..=0.65).contains(&ratio),
                format!(
                    "|I|=4: {:.3e} <= {:.3e}; |I|=8: {:.3e} <= {:.3e}; ratio {ratio:.3}",
                    a.empirical, a.bound, b.empirical, b.bound
                ),
            );
        }
        (Err(e), _) | (_, Err(e)) => r.add("metrics", "variance_bound_check", 11, false, e.to_string()),
    }
}

fn rate_fit(r: &mut VerifyReport) {
    let g = Graph::circle(5).expect("valid topology");
    let seed = 0;
    let p = desk_problem(seed);
    let mut m = Sppdm::new(&g, SolverConfig::default(), uniform_start(5, 32, -0.1, 0.1, seed)).expect("valid config");
    let (mut iters, mut q) = (Vec::new(), Vec::new());
    for _ in 0..5000 {
        m.step(&p).expect("finite iterates");
        iters.push(m.iteration());
        q.push(optimality_gap(&p, &g, m.iterate(), &m.gap_dual().expect("stepped")));
    }
    let (passed, detail) = match rate_check(&iters, &q, 100, 5000) {
        Ok(rep) => (rep.slope <= -0.9, format!("slope {:.3} over K in [100, 5000]", rep.slope)),
        Err(e) => (false, e.to_string()),
    };
    r.add("metrics", "rate_check", seed, passed, detail);
}

fn batch_plateaus(r: &mut VerifyReport) {
    let g = Graph::circle(5).expect("valid topology");
    let mut levels = Vec::new();
    for b in [1usize, 4, 16, 64] {
        let mut acc = 0.0;
        for seed in 0..10 {
            let p = desk_problem(seed);
            let cfg = SolverConfig {
                batch: Batch::Mini(b),
                seed,
                ..SolverConfig::default()
            };
            let mut m = Sppdm::new(&g, cfg, uniform_start(5, 32, -0.1, 0.1, seed)).expect("valid config");
            let mut s = Vec::with_capacity(2000);
            for _ in 0..2000 {
                m.step(&p).expect("finite iterates");
                s.push(stationarity_and_consensus(&p, m.iterate()).0);
            }
            acc += plateau(&s, 0.1).expect("nonempty") / 10.0;
        }
        levels.push(acc);
    }
    let ok = crate::metrics::strictly_decreasing(&levels);
    let shown: Vec<String> = levels.iter().map(|v| format!("{v:.3e}")).collect();
    r.add(
        "metrics",
        "batch_plateaus",
        0,
        ok,
        format!("|I| = 1, 4, 16, 64: {}", shown.join(" > ")),
    );
}

/// Runs the built-in property checks; `Full` adds the statistical ones.
pub fn verify_suite(level: VerifyLevel) -> VerifyReport {
    let mut r = VerifyReport::default();
    incidence_identities(&mut r, 20);
    prox_brute_force(&mut r, 10);
    gradient_finite_differences(&mut r, 5);
    sppdm_vs_reference(&mut r);
    netsim_equivalence(&mut r, 200);
    match level {
        VerifyLevel::Fast => potential_check(&mut r, 1, 100),
        VerifyLevel::Full => {
            potential_check(&mut r, 3, 500);
            variance_scaling(&mut r);
            rate_fit(&mut r);
            batch_plateaus(&mut r);
        }
    }
    r
}
