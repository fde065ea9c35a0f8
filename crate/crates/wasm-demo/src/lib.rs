//! Browser bindings for the interactive demo page in `www/`.
//!
//! Each exported function takes plain numbers and strings and returns a JSON
//! document, so the page needs no generated TypeScript types. The same
//! functions are usable natively (and are tested that way).

use ppdm::graph::{Graph, IncidencePair, MixingMatrix, Topology};
use ppdm::linalg::DenseMatrix;
use ppdm::metrics::{incidence_norm, stationarity_and_consensus, theory_constants, TheoryInputs};
use ppdm::oracles::{generate_regression, RegressionSpec};
use ppdm::solver::{uniform_start, Method, Sppdm, UpdateMatrices};
use ppdm::{Batch, Momentum, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Longest run the page may request.
pub const MAX_ITERATIONS: u32 = 5000;
pub const MAX_NODES: u32 = 16;

fn build_graph(topology: &str, nodes: u32) -> Result<Graph, String> {
    if nodes == 0 || nodes > MAX_NODES {
        return Err(format!("nodes must be in 1..={MAX_NODES}"));
    }
    let nodes = nodes as usize;
    if nodes == 1 {
        return Ok(Graph::singleton());
    }
    let spec = match topology {
        "circle" if nodes >= 3 => Topology::Circle { nodes },
        "circle" | "path" => Topology::Path { nodes },
        "complete" => Topology::Complete { nodes },
        other => return Err(format!("unknown topology `{other}`")),
    };
    Graph::build(&spec).map_err(|e| e.to_string())
}

fn rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows).map(|i| (0..m.cols).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct TopologyView {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub degrees: Vec<usize>,
    pub incidence: Vec<Vec<i64>>,
    pub laplacian: Vec<Vec<f64>>,
    pub metropolis: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
    pub w_tilde: Vec<Vec<f64>>,
    pub sigma_a: f64,
    /// `ÃᵀÃ + B̃ᵀB̃ = 2D` holds exactly.
    pub gram_identity: bool,
}

pub fn topology_view(topology: &str, nodes: u32, alpha: f64, c: f64, gamma: f64, kappa: f64) -> Result<TopologyView, String> {
    let g = build_graph(topology, nodes)?;
    let cfg = SolverConfig {
        alpha,
        c,
        gamma,
        kappa,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let n = g.node_count();
    let pair = IncidencePair::new(&g);
    let (sa, sb) = (pair.signed_gram(), pair.signless_gram());
    let gram_identity = (0..n).all(|i| {
        (0..n).all(|j| sa[i * n + j] + sb[i * n + j] == if i == j { 2 * g.degree(i) as i64 } else { 0 })
    });
    let mats = UpdateMatrices::new(&g, &cfg);
    let (_, wt) = mats.extra_mixing(&g, &cfg);
    Ok(TopologyView {
        nodes: n,
        edges: g.edges().to_vec(),
        degrees: g.degrees(),
        incidence: pair.signed.chunks(n.max(1)).map(|r| r.to_vec()).collect(),
        laplacian: rows(&g.laplacian()),
        metropolis: rows(MixingMatrix::metropolis(&g).matrix()),
        psi: mats.psi(),
        w_tilde: rows(&wt),
        sigma_a: incidence_norm(&g),
        gram_identity,
    })
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub iters: Vec<usize>,
    pub stationarity: Vec<f64>,
    pub consensus: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub lipschitz: f64,
    pub weak_convexity: f64,
    pub curves: Vec<Curve>,
}

/// Runs the method with the Nesterov schedule and with `η = 0` on one
/// synthetic regression instance; `batch = 0` means full gradients.
pub fn compare_momentum(topology: &str, nodes: u32, iterations: u32, batch: u32, seed: u32) -> Result<Comparison, String> {
    if iterations == 0 || iterations > MAX_ITERATIONS {
        return Err(format!("iterations must be in 1..={MAX_ITERATIONS}"));
    }
    let g = build_graph(topology, nodes)?;
    let spec = RegressionSpec {
        agents: g.node_count(),
        ..RegressionSpec::default()
    };
    let (_, data) = generate_regression(&mut ChaCha8Rng::seed_from_u64(seed as u64), &spec).map_err(|e| e.to_string())?;
    let problem = data.problem_with_curvature_bounds().map_err(|e| e.to_string())?;
    let x0 = uniform_start(spec.agents, spec.dim, -0.1, 0.1, seed as u64 + 1);
    let batch = if batch == 0 { Batch::Full } else { Batch::Mini(batch as usize) };
    let every = (iterations as usize / 200).max(1);
    let mut curves = Vec::new();
    for (label, momentum) in [("Nesterov", Momentum::Nesterov), ("eta = 0", Momentum::Zero)] {
        let cfg = SolverConfig {
            momentum,
            batch,
            seed: seed as u64,
            ..SolverConfig::default()
        };
        let mut m = Sppdm::new(&g, cfg, x0.clone()).map_err(|e| e.to_string())?;
        let mut curve = Curve {
            label: label.into(),
            iters: Vec::new(),
            stationarity: Vec::new(),
            consensus: Vec::new(),
        };
        for k in 1..=iterations as usize {
            m.step(&problem).map_err(|e| e.to_string())?;
            if k % every == 0 || k == iterations as usize {
                let (s, c) = stationarity_and_consensus(&problem, m.iterate());
                curve.iters.push(k);
                curve.stationarity.push(s);
                curve.consensus.push(c);
            }
        }
        curves.push(curve);
    }
    Ok(Comparison {
        lipschitz: problem.lipschitz,
        weak_convexity: problem.weak_convexity,
        curves,
    })
}

/// Theory constants as ordered `(key, value)` pairs.
#[allow(clippy::too_many_arguments)]
pub fn theory_table(
    topology: &str,
    nodes: u32,
    alpha: f64,
    beta: f64,
    gamma: f64,
    c: f64,
    kappa: f64,
    eta: f64,
    lipschitz: f64,
    weak_convexity: f64,
) -> Result<Vec<(String, String)>, String> {
    let g = build_graph(topology, nodes)?;
    let t = theory_constants(TheoryInputs {
        alpha,
        beta,
        gamma,
        c,
        kappa,
        eta,
        lipschitz,
        weak_convexity,
        sigma_a: incidence_norm(&g),
        max_degree: g.max_degree(),
        sigma5: 1.0,
    });
    Ok(t.report()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = topologyView)]
pub fn topology_view_js(topology: &str, nodes: u32, alpha: f64, c: f64, gamma: f64, kappa: f64) -> Result<String, JsError> {
    to_json(topology_view(topology, nodes, alpha, c, gamma, kappa))
}

#[wasm_bindgen(js_name = compareMomentum)]
pub fn compare_momentum_js(topology: &str, nodes: u32, iterations: u32, batch: u32, seed: u32) -> Result<String, JsError> {
    to_json(compare_momentum(topology, nodes, iterations, batch, seed))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = theoryTable)]
pub fn theory_table_js(
    topology: &str,
    nodes: u32,
    alpha: f64,
    beta: f64,
    gamma: f64,
    c: f64,
    kappa: f64,
    eta: f64,
    lipschitz: f64,
    weak_convexity: f64,
) -> Result<String, JsError> {
    to_json(theory_table(topology, nodes, alpha, beta, gamma, c, kappa, eta, lipschitz, weak_convexity))
}
