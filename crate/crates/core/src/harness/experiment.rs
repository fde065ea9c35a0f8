use super::config::{AlgorithmSpec, ConfigError, ExperimentConfig, MethodKind};
use super::HarnessError;
use crate::graph::{apply_incidence, Graph, MixingMatrix};
use crate::linalg::Stacked;
use crate::metrics::{
    incidence_norm, optimality_gap, plateau, stationarity_and_consensus, theory_constants, PotentialEvaluator,
    RunTrace, TheoryConstants, TheoryInputs, TraceMeta, TraceRecord,
};
use crate::netsim::{run_distributed, NetsimOptions, RoundLog};
use crate::oracles::{generate_regression, Problem, RegressionDataset};
use crate::solver::{uniform_start, ExtraInit, Method, PgExtra, ProxDgd, Psgd, SolverState, Sppdm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub algorithm: String,
    pub trial: usize,
    pub seed: u64,
    pub trace: RunTrace,
    /// FNV-1a over the bit patterns of the final iterate.
    pub checksum: u64,
    pub elapsed_ms: f64,
    pub theory: Option<TheoryConstants>,
    pub final_state: Option<SolverState>,
    /// Traffic of the simulator replay, when `run.netsim` is set.
    pub round_log: Option<RoundLog>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Ordered by trial, then by algorithm as configured.
    pub trials: Vec<TrialResult>,
    pub means: Vec<RunTrace>,
    pub psi: Vec<f64>,
    pub warnings: Vec<String>,
    pub datasets: Vec<RegressionDataset>,
}

pub fn fnv1a(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// SplitMix64 step, used to derive independent seeds from a trial seed.
fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

enum Runner {
    Sppdm(Sppdm),
    Other(Box<dyn Method>),
}

impl Runner {
    fn method(&self) -> &dyn Method {
        match self {
            Runner::Sppdm(m) => m,
            Runner::Other(m) => m.as_ref(),
        }
    }

    fn method_mut(&mut self) -> &mut dyn Method {
        match self {
            Runner::Sppdm(m) => m,
            Runner::Other(m) => m.as_mut(),
        }
    }
}

fn build_runner(
    cfg: &ExperimentConfig,
    alg: &AlgorithmSpec,
    graph: &Graph,
    seed: u64,
    x0: Stacked,
) -> Result<Runner, HarnessError> {
    let mut sc = cfg.solver_for(alg);
    sc.seed = sc.seed.wrapping_add(seed);
    let label = |e: crate::solver::SolverError| HarnessError::Trial {
        algorithm: alg.name.clone(),
        trial: None,
        message: e.to_string(),
    };
    Ok(match alg.method {
        MethodKind::Sppdm => Runner::Sppdm(Sppdm::new(graph, sc, x0).map_err(label)?.with_name(alg.name.clone())),
        MethodKind::PgExtra => Runner::Other(Box::new(match alg.step {
            Some(step) => PgExtra::with_mixing(&MixingMatrix::metropolis(graph), step, x0),
            None => PgExtra::from_update_matrices(graph, &sc, ExtraInit::Standard, x0),
        })),
        MethodKind::ProxDgd => Runner::Other(Box::new(ProxDgd::new(MixingMatrix::metropolis(graph), x0))),
        MethodKind::Psgd => Runner::Other(Box::new(Psgd::new(MixingMatrix::metropolis(graph), sc.batch, sc.seed, x0))),
    })
}

fn record(problem: &Problem, graph: &Graph, m: &dyn Method, phi: Option<f64>, wall_ms: f64) -> TraceRecord {
    let x = m.iterate();
    let (stationarity, consensus) = stationarity_and_consensus(problem, x);
    TraceRecord {
        iter: m.iteration(),
        stationarity,
        consensus,
        q_gap: m.gap_dual().map(|p| optimality_gap(problem, graph, x, &p)),
        phi,
        ax_norm2: apply_incidence(graph, x).norm_sq(),
        wall_ms,
    }
}

struct TrialData {
    problem: Problem,
    dataset: RegressionDataset,
    x0: Stacked,
    seed: u64,
}

fn trial_data(cfg: &ExperimentConfig, trial: usize) -> Result<TrialData, HarnessError> {
    let seed = cfg.run.seed.wrapping_add(trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let (_, dataset) = generate_regression(&mut rng, &cfg.problem).map_err(|e| HarnessError::Trial {
        algorithm: "data".into(),
        trial: Some(trial),
        message: e.to_string(),
    })?;
    let problem = dataset.problem_with_curvature_bounds().map_err(|e| HarnessError::Trial {
        algorithm: "data".into(),
        trial: Some(trial),
        message: e.to_string(),
    })?;
    let x0 = uniform_start(
        cfg.problem.agents,
        cfg.problem.dim,
        cfg.run.init_lo,
        cfg.run.init_hi,
        derive_seed(seed, 2),
    );
    Ok(TrialData {
        problem,
        dataset,
        x0,
        seed,
    })
}

fn theory_for(cfg: &ExperimentConfig, alg: &AlgorithmSpec, graph: &Graph, problem: &Problem) -> TheoryConstants {
    theory_constants(TheoryInputs::new(
        &cfg.solver_for(alg),
        problem.lipschitz,
        problem.weak_convexity,
        incidence_norm(graph),
        graph.max_degree(),
    ))
}

fn run_trial(cfg: &ExperimentConfig, graph: &Graph, trial: usize) -> Result<(Vec<TrialResult>, RegressionDataset), HarnessError> {
    let data = trial_data(cfg, trial)?;
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for alg in &cfg.algorithms {
        let fail = |message: String| HarnessError::Trial {
            algorithm: alg.name.clone(),
            trial: Some(trial),
            message,
        };
        let mut runner = build_runner(cfg, alg, graph, data.seed, data.x0.clone()).map_err(|e| match e {
            HarnessError::Trial { message, .. } => fail(message),
            other => other,
        })?;
        let theory = (alg.method == MethodKind::Sppdm).then(|| theory_for(cfg, alg, graph, &data.problem));
        let mut potential = match (&theory, cfg.run.potential) {
            (Some(t), true) => Some(PotentialEvaluator::new(graph, &cfg.solver_for(alg), t.tau)),
            _ => None,
        };
        let mut trace = RunTrace::new(TraceMeta {
            algorithm: alg.name.clone(),
            seed: data.seed,
            config_hash: config_hash(cfg),
        });
        let start = Instant::now();
        let wall = |s: &Instant| if cfg.run.wall_clock { s.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        trace.push(record(&data.problem, graph, runner.method(), None, wall(&start)));
        for k in 1..=cfg.run.iterations {
            runner.method_mut().step(&data.problem).map_err(|e| fail(e.to_string()))?;
            if k % cfg.run.metric_every == 0 || k == cfg.run.iterations {
                let phi = match (&mut potential, &runner) {
                    (Some(ev), Runner::Sppdm(m)) => Some(
                        ev.evaluate(&data.problem, m.state().expect("stepped"))
                            .map_err(|e| fail(e.to_string()))?
                            .phi,
                    ),
                    _ => None,
                };
                trace.push(record(&data.problem, graph, runner.method(), phi, wall(&start)));
            }
        }
        let final_state = match (&runner, cfg.run.checkpoint) {
            (Runner::Sppdm(m), true) => m.state().cloned(),
            _ => None,
        };
        let round_log = match (&runner, cfg.run.netsim) {
            (Runner::Sppdm(m), true) => {
                let opts = NetsimOptions {
                    metric_every: 0,
                    ..Default::default()
                };
                let run = run_distributed(&data.problem, graph, m.config(), &data.x0, cfg.run.iterations, &opts)
                    .map_err(|e| fail(e.to_string()))?;
                if Some(&run.state) != m.state() {
                    return Err(fail("simulator replay diverged from the matrix-form run".into()));
                }
                Some(run.log)
            }
            _ => None,
        };
        out.push(TrialResult {
            algorithm: alg.name.clone(),
            trial,
            seed: data.seed,
            checksum: fnv1a(runner.method().iterate().as_slice().iter().map(|v| v.to_bits())),
            elapsed_ms: wall(&start),
            trace,
            theory,
            final_state,
            round_log,
        });
    }
    Ok((out, data.dataset))
}

pub fn config_hash(cfg: &ExperimentConfig) -> u64 {
    fnv1a(cfg.to_toml().bytes().map(u64::from))
}

/// Pointwise mean over trials of traces that share an iteration grid.
pub fn mean_trace(traces: &[&RunTrace]) -> RunTrace {
    let first = traces[0];
    let n = traces.len() as f64;
    let mut mean = RunTrace::new(TraceMeta {
        algorithm: first.meta.algorithm.clone(),
        seed: first.meta.seed,
        config_hash: first.meta.config_hash,
    });
    for (pos, r0) in first.records.iter().enumerate() {
        let rows: Vec<&TraceRecord> = traces.iter().map(|t| &t.records[pos]).collect();
        let avg = |f: &dyn Fn(&TraceRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        let avg_opt = |f: &dyn Fn(&TraceRecord) -> Option<f64>| {
            rows.iter()
                .map(|r| f(r))
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / n)
        };
        mean.push(TraceRecord {
            iter: r0.iter,
            stationarity: avg(&|r| r.stationarity),
            consensus: avg(&|r| r.consensus),
            q_gap: avg_opt(&|r| r.q_gap),
            phi: avg_opt(&|r| r.phi),
            ax_norm2: avg(&|r| r.ax_norm2),
            wall_ms: avg(&|r| r.wall_ms),
        });
    }
    mean
}

/// Runs every configured algorithm on every trial. Trials are spread over
/// `run.threads` workers; results come back in a fixed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate()?;
    let graph = cfg.build_graph()?;
    let trials = cfg.run.trials;
    let workers = cfg.run.threads.min(trials).max(1);
    let mut slots: Vec<Option<Result<(Vec<TrialResult>, RegressionDataset), HarnessError>>> =
        (0..trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let graph = &graph;
                scope.spawn(move || {
                    (w..trials)
                        .step_by(workers)
                        .map(|t| (t, run_trial(cfg, graph, t)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (t, r) in h.join().expect("trial worker panicked") {
                slots[t] = Some(r);
            }
        }
    });
    let mut results = Vec::new();
    let mut datasets = Vec::new();
    for slot in slots {
        let (r, d) = slot.expect("every trial ran")?;
        results.extend(r);
        datasets.push(d);
    }
    let means = cfg
        .algorithms
        .iter()
        .map(|a| {
            let traces: Vec<&RunTrace> = results.iter().filter(|r| r.algorithm == a.name).map(|r| &r.trace).collect();
            mean_trace(&traces)
        })
        .collect();
    let mut warnings = Vec::new();
    for r in results.iter().filter(|r| r.trial == 0) {
        if let Some(t) = &r.theory {
            let v = t.violations();
            if !v.is_empty() {
                warnings.push(format!(
                    "{}: parameters outside the guaranteed-convergence range ({})",
                    r.algorithm,
                    v.join(", ")
                ));
            }
        }
    }
    Ok(ExperimentOutput {
        psi: cfg.psi()?,
        config: cfg.clone(),
        trials: results,
        means,
        warnings,
        datasets,
    })
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

impl ExperimentOutput {
    pub fn mean(&self, algorithm: &str) -> Option<&RunTrace> {
        self.means.iter().find(|m| m.meta.algorithm == algorithm)
    }

    /// Writes every artefact under `dir`; returns the files written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        let trials_dir = dir.join("trials");
        std::fs::create_dir_all(&trials_dir).map_err(|e| io_err(&trials_dir, e))?;
        let mut written = Vec::new();
        let put = |written: &mut Vec<PathBuf>, path: PathBuf, text: &str| -> Result<(), HarnessError> {
            write(&path, text)?;
            written.push(path);
            Ok(())
        };
        put(&mut written, dir.join("config.toml"), &self.config.to_toml())?;
        let mut summary = String::new();
        let _ = writeln!(summary, "name={}", self.config.name);
        let _ = writeln!(summary, "config_hash={:016x}", config_hash(&self.config));
        let psi: Vec<String> = self.psi.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(summary, "psi={}", psi.join(";"));
        let _ = writeln!(summary, "warnings={}", self.warnings.join(" | "));
        put(&mut written, dir.join("summary.txt"), &summary)?;
        let mut sums = String::from("algorithm,trial,seed,checksum\n");
        for r in &self.trials {
            put(
                &mut written,
                trials_dir.join(format!("{}_trial{:02}.csv", r.algorithm, r.trial)),
                &r.trace.to_csv(),
            )?;
            let _ = writeln!(sums, "{},{},{},{:016x}", r.algorithm, r.trial, r.seed, r.checksum);
            if r.trial == 0 {
                if let Some(t) = &r.theory {
                    put(&mut written, dir.join(format!("theory_{}.txt", r.algorithm)), &t.report())?;
                }
            }
            if let Some(st) = &r.final_state {
                let path = trials_dir.join(format!("state_{}_trial{:02}.csv", r.algorithm, r.trial));
                st.write_csv(&path).map_err(|e| io_err(&path, e))?;
                written.push(path);
            }
            if let Some(log) = &r.round_log {
                put(
                    &mut written,
                    trials_dir.join(format!("{}_trial{:02}_rounds.csv", r.algorithm, r.trial)),
                    &log.to_csv(),
                )?;
            }
        }
        put(&mut written, dir.join("checksums.csv"), &sums)?;
        for m in &self.means {
            put(&mut written, dir.join(format!("mean_{}.csv", m.meta.algorithm)), &m.to_csv())?;
        }
        if self.config.run.save_data {
            for (t, d) in self.datasets.iter().enumerate() {
                let ddir = dir.join("data").join(format!("trial{t:02}"));
                std::fs::create_dir_all(&ddir).map_err(|e| io_err(&ddir, e))?;
                written.extend(d.write_dir(&ddir).map_err(|e| io_err(&ddir, e))?);
            }
        }
        Ok(written)
    }
}

/// One plateau row per (sweep value, algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub algorithm: String,
    /// Mean stationarity over the last 10% of recorded iterations.
    pub plateau_stationarity: f64,
    pub plateau_consensus: f64,
    pub final_stationarity: f64,
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,algorithm,plateau_stationarity,plateau_consensus,final_stationarity\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{param},{},{},{:e},{:e},{:e}",
            r.value, r.algorithm, r.plateau_stationarity, r.plateau_consensus, r.final_stationarity
        );
    }
    out
}

/// Runs the experiment once per value of `param`. With `dir`, each point
/// is written to `dir/<param>=<value>/` and the rows to `dir/sweep.csv`.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[String],
    dir: Option<&Path>,
) -> Result<Vec<SweepRow>, HarnessError> {
    if values.is_empty() {
        return Err(ConfigError::Validation {
            field: "values".into(),
            message: "no sweep values".into(),
        }
        .into());
    }
    let points = values
        .iter()
        .map(|v| super::config::with_parameter(cfg, param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (v, point) in values.iter().zip(&points) {
        let out = run_experiment(point)?;
        if let Some(d) = dir {
            out.write_to(&d.join(format!("{param}={v}")))?;
        }
        for m in &out.means {
            let s = m.column(|r| r.stationarity);
            let c = m.column(|r| r.consensus);
            rows.push(SweepRow {
                value: v.clone(),
                algorithm: m.meta.algorithm.clone(),
                plateau_stationarity: plateau(&s, 0.1).map_err(|e| HarnessError::MissingData(e.to_string()))?,
                plateau_consensus: plateau(&c, 0.1).map_err(|e| HarnessError::MissingData(e.to_string()))?,
                final_stationarity: *s.last().expect("nonempty trace"),
            });
        }
    }
    if let Some(d) = dir {
        std::fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
        write(&d.join("sweep.csv"), &sweep_csv(param, &rows))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.problem.agents = 3;
        cfg.problem.samples = 6;
        cfg.problem.dim = 4;
        cfg.problem.sparsity = 2;
        cfg.run.iterations = 20;
        cfg.run.trials = 3;
        cfg
    }

    #[test]
    fn threads_do_not_change_results() {
        let a = run_experiment(&small()).unwrap();
        let mut cfg = small();
        cfg.run.threads = 2;
        let b = run_experiment(&cfg).unwrap();
        let ca: Vec<u64> = a.trials.iter().map(|t| t.checksum).collect();
        let cb: Vec<u64> = b.trials.iter().map(|t| t.checksum).collect();
        assert_eq!(ca, cb);
        assert_eq!(a.means[0].to_csv(), b.means[0].to_csv());
    }

    #[test]
    fn mean_curve_averages_raw_values() {
        let out = run_experiment(&small()).unwrap();
        let traces: Vec<&RunTrace> = out.trials.iter().filter(|t| t.algorithm == "sppdm").map(|t| &t.trace).collect();
        let m = out.mean("sppdm").unwrap();
        let expect = traces.iter().map(|t| t.records[5].stationarity).sum::<f64>() / 3.0;
        assert!((m.records[5].stationarity - expect).abs() < 1e-15);
        assert_eq!(m.records.len(), 21);
        assert!(m.records[0].q_gap.is_none() && m.records[1].q_gap.is_some());
        assert!(out.mean("psgd").unwrap().records[3].q_gap.is_none());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 1), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 1), derive_seed(2, 1));
    }
}
