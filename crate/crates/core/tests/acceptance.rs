//! Acceptance criteria. Each test prints one `AC<n> PASS|FAIL` line with the
//! measured quantity and its pinned tolerance, then asserts.

mod common;

use common::{
    extra_mixing, incidence, nesterov_eta, psi_diag, random_graph, random_start, sample_variance, small_problem,
    sup_diff, DirectDng, DirectExtra, ExplicitDual,
};
use nalgebra::DMatrix;
use ppdm::graph::IncidencePair;
use ppdm::harness::desk_problem;
use ppdm::metrics::{
    feasible_config, incidence_norm, optimality_gap, stationarity_and_consensus, theory_constants, PotentialEvaluator,
    TheoryInputs,
};
use ppdm::netsim::{run_distributed, NetsimOptions};
use ppdm::oracles::{DiagonalQuadratic, LeastSquares, Problem, Regularizer, SmoothTerm, TruncatedLoss};
use ppdm::solver::{uniform_start, DngCheck, Method, Sppdm, UpdateMatrices};
use ppdm::{Batch, DualInit, Graph, Momentum, SolverConfig, Stacked};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::time::Instant;

/// Written straight to the process stdout so the line survives output capture.
fn report(ac: u32, pass: bool, detail: &str) {
    let line = format!("AC{ac} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).expect("stdout");
    out.flush().expect("stdout");
}

fn finish(ac: u32, pass: bool, detail: String) {
    report(ac, pass, &detail);
    assert!(pass, "AC{ac}: {detail}");
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Ordinary least-squares slope of `ln y` against `ln x`.
fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn zero_reg(p: Problem) -> Problem {
    let n = p.agents();
    Problem::new(p.smooth, vec![Regularizer::Zero; n])
}

#[test]
fn ac01_distributed_form_matches_explicit_dual_reference() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (name, g) in [("circle(3)", Graph::circle(3).unwrap()), ("path(4)", Graph::path(4).unwrap())] {
        for seed in 0..3 {
            let reg = Regularizer::l1_box(0.05, -1.0, 1.0).unwrap();
            let p = small_problem(g.node_count(), 20, 4, reg, seed);
            let cfg = SolverConfig {
                batch: Batch::Mini(3),
                seed,
                ..SolverConfig::default()
            };
            let x0 = random_start(g.node_count(), 4, seed);
            let mut m = Sppdm::new(&g, cfg, x0.clone()).unwrap();
            let mut r = ExplicitDual::new(&g, cfg, &x0);
            for _ in 0..50 {
                m.step(&p).unwrap();
                r.step(&p);
                let d = sup_diff(&r.x, m.iterate());
                assert!(d.is_finite(), "{name} seed {seed}");
                worst = worst.max(d);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    finish(
        1,
        worst <= 1e-10 && secs < 5.0,
        format!("sup deviation {worst:.2e} (tol 1e-10), 50 iterations x 3 seeds x {{circle(3), path(4)}}, {secs:.2}s (limit 5s)"),
    );
}

#[test]
fn ac02_momentum_free_method_is_pg_extra() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let graphs = [Graph::circle(4).unwrap(), Graph::path(3).unwrap(), random_graph(&mut rng, 6, 0.4)];
    let mut worst = 0.0f64;
    for (gi, g) in graphs.iter().enumerate() {
        for init in [DualInit::Zero, DualInit::AscentFromZero] {
            let p = small_problem(g.node_count(), 15, 3, Regularizer::Zero, gi as u64);
            let cfg = SolverConfig {
                momentum: Momentum::Zero,
                beta: 1.0,
                dual_init: init,
                ..SolverConfig::default()
            };
            let x0 = random_start(g.node_count(), 3, gi as u64);
            let mut m = Sppdm::new(g, cfg, x0.clone()).unwrap();
            let mut e = DirectExtra::new(g, &cfg, &x0);
            for _ in 0..100 {
                m.step(&p).unwrap();
                e.step(&p);
                let scale = e.x.abs().max().max(1.0);
                worst = worst.max(sup_diff(&e.x, m.iterate()) / scale);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    finish(
        2,
        worst <= 1e-12 && secs < 5.0,
        format!("max deviation from direct PG-EXTRA {worst:.2e} (tol 1e-12), 100 iterations, 3 graphs x 2 dual starts, {secs:.2}s (limit 5s)"),
    );
}

#[test]
fn ac03_accelerated_gradient_form_with_correction() {
    let g = Graph::circle(3).unwrap();
    let cfg = SolverConfig {
        alpha: 2.0,
        c: 2.0,
        beta: 1.0,
        ..SolverConfig::default()
    };
    let quad = {
        let smooth = (0..3)
            .map(|i| {
                let a = vec![1.0 + i as f64, 2.0, 0.5 + 0.25 * i as f64];
                let c = vec![0.3 * i as f64, -0.2, 0.1 - 0.1 * i as f64];
                Box::new(DiagonalQuadratic::new(a, c)) as Box<dyn SmoothTerm>
            })
            .collect();
        Problem::new(smooth, vec![Regularizer::Zero; 3])
    };
    let nonconvex = small_problem(3, 12, 3, Regularizer::Zero, 7);
    let mut worst = 0.0f64;
    for p in [&quad, &nonconvex] {
        for init in [DualInit::AscentFromZero, DualInit::Zero] {
            let cfg = SolverConfig { dual_init: init, ..cfg };
            let x0 = random_start(3, 3, 3);
            let mut m = Sppdm::new(&g, cfg, x0.clone()).unwrap();
            let mut d = DirectDng::new(&g, &cfg, &x0);
            let mut lib = DngCheck::new(p, &g, &cfg).unwrap();
            let mut x = x0.clone();
            for _ in 0..30 {
                let predicted = lib.predict(p, &x);
                m.step(p).unwrap();
                d.step(p);
                x = m.iterate().clone();
                worst = worst.max(sup_diff(&d.x, &x)).max(predicted.max_abs_diff(&x));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut identity = 0.0f64;
    for n in 2..=8 {
        let g = random_graph(&mut rng, n, 0.4);
        let (a, _) = incidence(&g);
        let psi_inv = DMatrix::from_diagonal(&psi_diag(&g, &cfg).map(|p| 1.0 / p));
        let expected = psi_inv * a.transpose() * &a * cfg.alpha;
        let (_, wt_lib) = UpdateMatrices::new(&g, &cfg).extra_mixing(&g, &cfg);
        let lib_i_minus = DngCheck::new(&zero_reg(small_problem(n, 2, 1, Regularizer::Zero, 0)), &g, &cfg)
            .unwrap()
            .i_minus_wt();
        let (_, wt) = extra_mixing(&g, &cfg);
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                identity = identity
                    .max((id - wt_lib[(i, j)] - expected[(i, j)]).abs())
                    .max((lib_i_minus[(i, j)] - expected[(i, j)]).abs())
                    .max((id - wt[(i, j)] - expected[(i, j)]).abs());
            }
        }
    }
    finish(
        3,
        worst <= 1e-9 && identity <= 1e-12,
        format!("D-NG deviation {worst:.2e} (tol 1e-9) over 30 iterations; |I - W~ - a Psi^-1 A'A| {identity:.2e} (tol 1e-12)"),
    );
}

#[test]
fn ac04_incidence_gram_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let chord = rng.random_range(0.0..0.6);
        let g = random_graph(&mut rng, n, chord);
        let pair = IncidencePair::new(&g);
        let (a, b) = incidence(&g);
        let mut ok = true;
        for l in 0..g.edge_count() {
            for i in 0..n {
                ok &= pair.signed[l * n + i] as f64 == a[(l, i)] && pair.signless[l * n + i] as f64 == b[(l, i)];
            }
        }
        let (sa, sb) = (pair.signed_gram(), pair.signless_gram());
        for i in 0..n {
            for j in 0..n {
                let two_d = if i == j { 2 * g.degree(i) as i64 } else { 0 };
                ok &= sa[i * n + j] + sb[i * n + j] == two_d;
            }
        }
        if !ok {
            failures += 1;
        }
    }
    finish(4, failures == 0, format!("A'A + B'B = 2D exactly on {}/50 random connected graphs, N <= 12", 50 - failures));
}

#[test]
fn ac05_potential_is_nonincreasing() {
    let t0 = Instant::now();
    let g = Graph::circle(5).unwrap();
    let (mut worst, mut lowest) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut violations = Vec::new();
    for seed in 0..3 {
        let p = desk_problem(seed);
        let (cfg, t) = feasible_config(&SolverConfig::default(), p.lipschitz, p.weak_convexity, incidence_norm(&g), g.max_degree());
        violations.extend(t.violations());
        let Momentum::Constant(eta) = cfg.momentum else { panic!("constant momentum expected") };
        assert!(eta <= t.eta_bar);
        let mut m = Sppdm::new(&g, cfg, uniform_start(5, 32, -0.1, 0.1, seed)).unwrap();
        let mut ev = PotentialEvaluator::new(&g, &cfg, t.tau);
        let mut prev = f64::INFINITY;
        for k in 0..500 {
            m.step(&p).unwrap();
            let phi = ev.evaluate(&p, m.state().unwrap()).unwrap().phi;
            if k > 0 {
                worst = worst.max(phi - prev);
            }
            prev = phi;
            lowest = lowest.min(phi);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    // Truncated loss and the l1/box term are nonnegative, so 0 is a valid lower bound.
    let f_lower = 0.0;
    finish(
        5,
        violations.is_empty() && worst <= 1e-8 && lowest >= f_lower && secs < 180.0,
        format!(
            "max phi increase {worst:.2e} (tol 1e-8), min phi {lowest:.4} >= {f_lower}, 500 iterations x 3 seeds, violations {violations:?}, {secs:.1}s (limit 180s)"
        ),
    );
}

#[test]
fn ac06_optimality_gap_rate() {
    let g = Graph::circle(5).unwrap();
    let p = desk_problem(0);
    let mut m = Sppdm::new(&g, SolverConfig::default(), uniform_start(5, 32, -0.1, 0.1, 0)).unwrap();
    let mut running = Vec::with_capacity(5000);
    let mut best = f64::INFINITY;
    for _ in 0..5000 {
        m.step(&p).unwrap();
        best = best.min(optimality_gap(&p, &g, m.iterate(), &m.gap_dual().unwrap()));
        running.push(best);
    }
    let pts: Vec<(f64, f64)> = (0..40)
        .map(|i| {
            let k = (100.0 * 50f64.powf(i as f64 / 39.0)).round() as usize;
            (k as f64, running[k - 1])
        })
        .collect();
    let slope = loglog_slope(&pts);
    finish(
        6,
        slope <= -0.9,
        format!("slope of log min Q vs log K over [100, 5000] = {slope:.3} (need <= -0.9); min Q at K=5000 {:.2e}", running[4999]),
    );
}

fn final_plateau(batch: Batch, momentum: Momentum, seed: u64, iters: usize) -> (f64, f64) {
    let g = Graph::circle(5).unwrap();
    let p = desk_problem(seed);
    let cfg = SolverConfig {
        batch,
        momentum,
        seed,
        ..SolverConfig::default()
    };
    let mut m = Sppdm::new(&g, cfg, uniform_start(5, 32, -0.1, 0.1, seed)).unwrap();
    let mut tail = Vec::new();
    for k in 0..iters {
        m.step(&p).unwrap();
        if k >= iters - iters / 10 {
            tail.push(stationarity_and_consensus(&p, m.iterate()).0);
        }
    }
    (mean(&tail), *tail.last().unwrap())
}

#[test]
fn ac07_variance_scaling() {
    let t0 = Instant::now();
    let batches = [1usize, 4, 16, 64];
    let levels: Vec<f64> = batches
        .iter()
        .map(|&b| mean(&(0..10).map(|s| final_plateau(Batch::Mini(b), Momentum::Nesterov, s, 2000).0).collect::<Vec<_>>()))
        .collect();
    let decreasing = levels.windows(2).all(|w| w[1] < w[0]);

    let g = Graph::circle(5).unwrap();
    let p = desk_problem(0);
    let base = SolverConfig::default();
    let mut m = Sppdm::new(&g, base, uniform_start(5, 32, -0.1, 0.1, 0)).unwrap();
    for _ in 0..20 {
        m.step(&p).unwrap();
    }
    let st = m.state().unwrap().clone();
    let k = st.iteration;
    let eta = nesterov_eta(k);
    let mut s = Stacked::zeros(5, 32);
    for ((o, x), xp) in s.as_mut_slice().iter_mut().zip(st.x.as_slice()).zip(st.x_prev.as_slice()) {
        *o = x + eta * (x - xp);
    }
    let sigma2 = (0..5).map(|i| sample_variance(p.smooth[i].as_ref(), s.row(i))).fold(0.0, f64::max);
    let b = 4;
    let bound = 5.0 * sigma2 / ((base.gamma + 2.0 * base.c + base.kappa).powi(2) * b as f64);
    let mut exact = Sppdm::from_state(&g, SolverConfig { batch: Batch::Full, ..base }, st.clone()).unwrap();
    exact.step(&p).unwrap();
    let trials = 1000;
    let mut acc = 0.0;
    for t in 0..trials {
        let cfg = SolverConfig {
            batch: Batch::Mini(b),
            seed: 1000 + t,
            ..base
        };
        let mut m = Sppdm::from_state(&g, cfg, st.clone()).unwrap();
        m.step(&p).unwrap();
        acc += m.iterate().dist_sq(exact.iterate());
    }
    let empirical = acc / trials as f64;
    let within = empirical <= 1.25 * bound;
    let secs = t0.elapsed().as_secs_f64();
    let shown: Vec<String> = levels.iter().map(|v| format!("{v:.3e}")).collect();
    finish(
        7,
        decreasing && within && secs < 300.0,
        format!(
            "plateaus |I|=1,4,16,64: {} (strictly decreasing: {decreasing}); E|x-x^|^2 = {empirical:.3e} vs bound {bound:.3e} x 1.25 at |I|={b}, {trials} trials; {secs:.1}s (limit 300s)",
            shown.join(", ")
        ),
    );
}

#[test]
fn ac08_momentum_benefit() {
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        with.push(final_plateau(Batch::Mini(13), Momentum::Nesterov, seed, 2000).1);
        without.push(final_plateau(Batch::Mini(13), Momentum::Zero, seed, 2000).1);
    }
    let (a, b) = (mean(&with), mean(&without));
    let excess = a / b - 1.0;
    finish(
        8,
        excess <= 0.05,
        format!(
            "stationarity after 2000 iterations, |I|=13, 10 seeds: Nesterov {a:.4e} vs eta=0 {b:.4e}, relative excess {:+.1}% (limit +5%)",
            100.0 * excess
        ),
    );
}

#[test]
fn ac09_distributed_execution() {
    let g = Graph::circle(5).unwrap();
    let mut identical = true;
    let mut counts_ok = true;
    for (seed, momentum) in [(0u64, Momentum::Nesterov), (1, Momentum::Zero)] {
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
        let run = run_distributed(&p, &g, &cfg, &x0, 300, &opts).unwrap();
        let mut m = Sppdm::new(&g, cfg, x0).unwrap();
        for x in &run.trajectory {
            m.step(&p).unwrap();
            identical &= m.iterate().as_slice().iter().zip(x.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        }
        identical &= run.trajectory.len() == 300 && run.state == *m.state().unwrap();
        counts_ok &= run.log.rounds.len() == 300 && run.log.rounds.iter().all(|e| e.messages == 2 * g.edge_count());
    }

    let p = desk_problem(0);
    let opts = NetsimOptions {
        metric_every: 1,
        ..Default::default()
    };
    let run = run_distributed(&p, &g, &SolverConfig::default(), &uniform_start(5, 32, -0.1, 0.1, 0), 3000, &opts).unwrap();
    let mut best = f64::INFINITY;
    let running: Vec<(usize, f64)> = run
        .trace
        .records
        .iter()
        .filter_map(|r| r.q_gap.map(|q| (r.iter, q)))
        .map(|(k, q)| {
            best = best.min(q);
            (k, best)
        })
        .collect();
    let eps = [1e-2, 1e-3, 1e-4];
    let rounds: Vec<Option<usize>> = eps
        .iter()
        .map(|&e| running.iter().find(|(_, q)| *q <= e).map(|(k, _)| *k))
        .collect();
    let reached = rounds.iter().all(Option::is_some);
    let slope = if reached {
        loglog_slope(&rounds.iter().zip(eps).map(|(r, e)| (r.unwrap() as f64, e)).collect::<Vec<_>>())
    } else {
        f64::NAN
    };
    finish(
        9,
        identical && counts_ok && reached && slope <= -0.9,
        format!(
            "bit-identical over 300 rounds: {identical}; 2|E| messages every round: {counts_ok}; rounds to eps=1e-2..1e-4: {rounds:?}, slope of log eps vs log rounds {slope:.2} (need <= -0.9)"
        ),
    );
}

fn grid_argmin(obj: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).ceil() as usize;
    let (mut best, mut arg) = (f64::INFINITY, lo);
    for s in 0..=n {
        let u = lo + s as f64 * step;
        let v = obj(u);
        if v < best {
            best = v;
            arg = u;
        }
    }
    arg
}

fn fd_error(f: &dyn SmoothTerm, rng: &mut ChaCha8Rng, points: usize) -> f64 {
    let n = f.dim();
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let mut g = vec![0.0; n];
        f.gradient(&x, &mut g);
        let h = 1e-6;
        let mut err = 0.0;
        for l in 0..n {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[l] += h;
            xm[l] -= h;
            err += ((f.value(&xp) - f.value(&xm)) / (2.0 * h) - g[l]).powi(2);
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(err.sqrt() / gnorm.max(1.0));
    }
    worst
}

#[test]
fn ac10_prox_and_gradient_oracles() {
    let regs = [
        Regularizer::Zero,
        Regularizer::l1(0.3).unwrap(),
        Regularizer::unit_box(),
        Regularizer::l1_box(0.05, -1.0, 1.0).unwrap(),
        Regularizer::l1_box(0.7, -0.2, 0.5).unwrap(),
        Regularizer::Ridge { weight: 0.8 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut prox_worst = 0.0f64;
    for r in &regs {
        for _ in 0..2 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let psi = rng.random_range(0.5..4.0);
            let u = r.prox(&v, psi);
            for l in 0..3 {
                let obj = |t: f64| r.value(&[t]) + 0.5 * psi * (t - v[l]).powi(2);
                let (lo, hi) = (v[l].min(0.0) - 0.5, v[l].max(0.0) + 0.5);
                prox_worst = prox_worst.max((grid_argmin(obj, lo, hi, 1e-6) - u[l]).abs());
            }
        }
    }
    let mut fd_worst = 0.0f64;
    for seed in 0..3 {
        let (m, n) = (9, 3);
        let h: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let terms: Vec<Box<dyn SmoothTerm>> = vec![
            Box::new(TruncatedLoss::new(h.clone(), y.clone(), n, 1.0 + seed as f64).unwrap()),
            Box::new(LeastSquares::new(h, y, n).unwrap()),
            Box::new(DiagonalQuadratic::new(vec![1.0, -0.5, 3.0], vec![0.2, 0.0, -0.4])),
        ];
        for t in &terms {
            fd_worst = fd_worst.max(fd_error(t.as_ref(), &mut rng, 20));
        }
    }
    finish(
        10,
        prox_worst <= 1e-6 + 1e-12 && fd_worst <= 1e-5,
        format!(
            "prox vs 1e-6 grid max gap {prox_worst:.2e} (tol 1e-6) over {} regularizers; finite-difference rel err {fd_worst:.2e} (tol 1e-5) at 20 points for truncated, least-squares, diagonal quadratic",
            regs.len()
        ),
    );
}

#[test]
fn ac11_theory_constant_arithmetic() {
    let inputs = |kappa: f64, c: f64, gamma: f64, l: f64, mu: f64| TheoryInputs {
        alpha: 1e-6,
        beta: 1e-8,
        gamma,
        c,
        kappa,
        eta: 0.0,
        lipschitz: l,
        weak_convexity: mu,
        sigma_a: 3f64.sqrt(),
        max_degree: 2,
        sigma5: 1.0,
    };
    let a = theory_constants(inputs(1.0, 2.0, 3.0, 0.9, -0.5));
    let b = theory_constants(inputs(1.0, 2.0, 3.0, 0.9, -0.9));
    let sigma4_expected = (1.0 - 0.5) / 1.0;
    let eta_bar_expected = ((1.0f64 + 2.0 * 2.0 + 3.0 - 3.0 * 0.9) / (2.0 * (3.0 + 0.9 + 3.0 * 0.9))).sqrt();
    let e1 = (a.sigma4 - sigma4_expected).abs();
    let e2 = (b.eta_bar - eta_bar_expected).abs();
    let e3 = (b.eta_bar - 0.633_652_232_312_923_8).abs();
    finish(
        11,
        e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12 && a.sigma4 == 0.5,
        format!(
            "sigma4 = {} (expected 0.5, err {e1:.1e}); eta_bar = {:.12} (expected {eta_bar_expected:.12}, err {e2:.1e}); tol 1e-12",
            a.sigma4, b.eta_bar
        ),
    );
}
