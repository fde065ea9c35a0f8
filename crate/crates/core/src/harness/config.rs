use crate::graph::{Graph, Topology};
use crate::oracles::{Batch, RegressionSpec};
use crate::solver::{DualInit, Momentum, SolverConfig, SolverError};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    #[default]
    Circle,
    Path,
    Complete,
    EdgeList,
}

/// `nodes` defaults to the number of agents in the problem block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GraphBlock {
    pub kind: TopologyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Sppdm,
    PgExtra,
    ProxDgd,
    Psgd,
}

/// One algorithm to run; unset fields fall back to the `[solver]` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    pub method: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<Momentum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<Batch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_init: Option<DualInit>,
    /// Uniform step for `pg_extra`; without it the step is `Ψ⁻¹`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl AlgorithmSpec {
    pub fn new(name: &str, method: MethodKind) -> Self {
        Self {
            name: name.into(),
            method,
            alpha: None,
            beta: None,
            gamma: None,
            c: None,
            kappa: None,
            momentum: None,
            batch: None,
            dual_init: None,
            step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub iterations: usize,
    pub trials: usize,
    /// Trial `t` uses seed `seed + t` for data, start point and sampling.
    pub seed: u64,
    pub metric_every: usize,
    /// Evaluate the descent potential for `sppdm` runs.
    pub potential: bool,
    pub init_lo: f64,
    pub init_hi: f64,
    /// Record wall-clock times; off keeps outputs byte-reproducible.
    pub wall_clock: bool,
    pub threads: usize,
    /// Write the final solver state of every `sppdm` trial.
    pub checkpoint: bool,
    /// Write the generated datasets.
    pub save_data: bool,
    /// Replay every `sppdm` trial on the message-passing simulator and write
    /// its per-round traffic.
    pub netsim: bool,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            iterations: 2000,
            trials: 10,
            seed: 1,
            metric_every: 1,
            potential: false,
            init_lo: -0.1,
            init_hi: 0.1,
            wall_clock: false,
            threads: 1,
            checkpoint: false,
            save_data: false,
            netsim: false,
        }
    }
}

/// Mini-batch size of the default desk experiment: the same two-thirds of
/// the local samples as the 100-of-150 batches at full scale.
pub const DESK_BATCH: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: RegressionSpec,
    pub graph: GraphBlock,
    pub solver: SolverConfig,
    pub run: RunBlock,
    pub algorithms: Vec<AlgorithmSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut sppd = AlgorithmSpec::new("sppd", MethodKind::Sppdm);
        sppd.momentum = Some(Momentum::Zero);
        Self {
            name: "experiment".into(),
            problem: RegressionSpec::default(),
            graph: GraphBlock::default(),
            solver: SolverConfig {
                batch: Batch::Mini(DESK_BATCH),
                ..SolverConfig::default()
            },
            run: RunBlock::default(),
            algorithms: vec![
                AlgorithmSpec::new("sppdm", MethodKind::Sppdm),
                sppd,
                AlgorithmSpec::new("psgd", MethodKind::Psgd),
            ],
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn topology(&self) -> Topology {
        let nodes = self.graph.nodes.unwrap_or(self.problem.agents);
        match self.graph.kind {
            TopologyKind::Circle => Topology::Circle { nodes },
            TopologyKind::Path => Topology::Path { nodes },
            TopologyKind::Complete => Topology::Complete { nodes },
            TopologyKind::EdgeList => Topology::EdgeList {
                nodes,
                edges: self.graph.edges.iter().map(|e| (e[0], e[1])).collect(),
            },
        }
    }

    pub fn build_graph(&self) -> Result<Graph, ConfigError> {
        if self.problem.agents == 1 {
            return Ok(Graph::singleton());
        }
        Graph::build(&self.topology()).map_err(|e| ConfigError::invalid("graph", e.to_string()))
    }

    /// Parameters an algorithm actually runs with.
    pub fn solver_for(&self, alg: &AlgorithmSpec) -> SolverConfig {
        let b = self.solver;
        SolverConfig {
            alpha: alg.alpha.unwrap_or(b.alpha),
            beta: alg.beta.unwrap_or(b.beta),
            gamma: alg.gamma.unwrap_or(b.gamma),
            c: alg.c.unwrap_or(b.c),
            kappa: alg.kappa.unwrap_or(b.kappa),
            momentum: alg.momentum.unwrap_or(b.momentum),
            batch: alg.batch.unwrap_or(b.batch),
            dual_init: alg.dual_init.unwrap_or(b.dual_init),
            seed: b.seed,
        }
    }

    /// `ψ_i` of every agent under the `[solver]` block.
    pub fn psi(&self) -> Result<Vec<f64>, ConfigError> {
        let g = self.build_graph()?;
        Ok(g.degrees().into_iter().map(|d| self.solver.psi(d)).collect())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ConfigError::invalid("name", "use letters, digits, '_' or '-'"));
        }
        self.problem
            .validate()
            .map_err(|e| ConfigError::invalid("problem", e.to_string()))?;
        if let Some(n) = self.graph.nodes {
            if n != self.problem.agents {
                return Err(ConfigError::invalid(
                    "graph.nodes",
                    format!("{n} nodes but {} agents", self.problem.agents),
                ));
            }
        }
        if self.graph.kind != TopologyKind::EdgeList && !self.graph.edges.is_empty() {
            return Err(ConfigError::invalid("graph.edges", "edges are only read for kind = \"edge_list\""));
        }
        self.build_graph()?;
        self.solver.validate().map_err(|e| match e {
            SolverError::InvalidParameter(f) => ConfigError::invalid(format!("solver.{f}"), "out of range"),
            other => ConfigError::invalid("solver", other.to_string()),
        })?;
        let r = &self.run;
        for (field, ok) in [
            ("run.iterations", r.iterations > 0),
            ("run.trials", r.trials > 0),
            ("run.metric_every", r.metric_every > 0),
            ("run.threads", r.threads > 0),
            ("run.init_hi", r.init_lo.is_finite() && r.init_hi.is_finite() && r.init_lo <= r.init_hi),
        ] {
            if !ok {
                return Err(ConfigError::invalid(field, "out of range"));
            }
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::invalid("algorithms", "at least one algorithm is required"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            let valid_name = !a.name.is_empty() && a.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !valid_name {
                return Err(ConfigError::invalid(
                    format!("algorithms[{i}].name"),
                    "use letters, digits, '_' or '-'",
                ));
            }
            if self.algorithms[..i].iter().any(|b| b.name == a.name) {
                return Err(ConfigError::invalid(
                    format!("algorithms[{i}].name"),
                    format!("duplicate name {:?}", a.name),
                ));
            }
            self.solver_for(a).validate().map_err(|e| match e {
                SolverError::InvalidParameter(f) => {
                    ConfigError::invalid(format!("algorithms[{i}].{f}"), "out of range")
                }
                other => ConfigError::invalid(format!("algorithms[{i}]"), other.to_string()),
            })?;
            if let Some(s) = a.step {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(ConfigError::invalid(format!("algorithms[{i}].step"), "must be positive"));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ExperimentConfig::from_toml(&text)
}

/// Sets `param` (a dotted path such as `solver.gamma` or `run.iterations`,
/// or one of the shorthands `batch`, `eta`, `alpha`, `beta`, `gamma`, `c`,
/// `kappa`) to `value` and re-validates.
pub fn with_parameter(cfg: &ExperimentConfig, param: &str, value: &str) -> Result<ExperimentConfig, ConfigError> {
    let bad = |m: String| ConfigError::invalid(param, m);
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let (path, parsed) = match param {
        "batch" | "solver.batch" => {
            let v = match &parsed {
                toml::Value::Integer(n) => {
                    let mut t = toml::Table::new();
                    t.insert("mini".into(), toml::Value::Integer(*n));
                    toml::Value::Table(t)
                }
                other => other.clone(),
            };
            ("solver.batch".to_string(), v)
        }
        "eta" => {
            let mut t = toml::Table::new();
            t.insert("constant".into(), parsed);
            ("solver.momentum".to_string(), toml::Value::Table(t))
        }
        "alpha" | "beta" | "gamma" | "c" | "kappa" | "momentum" | "dual_init" => (format!("solver.{param}"), parsed),
        _ => (param.to_string(), parsed),
    };
    let mut root = toml::Value::try_from(cfg).map_err(|e| bad(e.to_string()))?;
    let mut slot = &mut root;
    let parts: Vec<&str> = path.split('.').collect();
    for (depth, key) in parts.iter().enumerate() {
        let table = slot
            .as_table_mut()
            .ok_or_else(|| bad(format!("`{}` is not a table", parts[..depth].join("."))))?;
        if depth + 1 == parts.len() {
            table.insert((*key).to_string(), parsed);
            break;
        }
        slot = table.get_mut(*key).ok_or_else(|| bad(format!("unknown key `{key}`")))?;
    }
    let text = toml::to_string(&root).map_err(|e| bad(e.to_string()))?;
    ExperimentConfig::from_toml(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => bad(message),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("[problem]\nagents = 4\nsamples = 10\ndim = 8\n").unwrap();
        let s = cfg.solver;
        assert_eq!((s.alpha, s.kappa, s.c, s.gamma, s.beta), (2.0, 1.0, 2.0, 3.0, 0.9));
        assert_eq!(cfg.problem.agents, 4);
        assert_eq!(cfg.algorithms.len(), 3);
    }

    #[test]
    fn circle_psi_is_twelve() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.psi().unwrap(), vec![12.0; 5]);
    }

    #[test]
    fn negative_gamma_names_the_field() {
        let err = ExperimentConfig::from_toml("[solver]\ngamma = -1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "solver.gamma"), "{err}");
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let err = ExperimentConfig::from_toml("name = \"a\"\n\n[run]\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 4, .. }), "{err}");
        let err = ExperimentConfig::from_toml("[run]\niterations = \n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.graph = GraphBlock {
            kind: TopologyKind::EdgeList,
            nodes: Some(5),
            edges: vec![[0, 1], [1, 2], [2, 3], [3, 4]],
        };
        cfg.algorithms[0].step = Some(0.05);
        cfg.algorithms[1].batch = Some(Batch::Full);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn parameter_overrides() {
        let cfg = ExperimentConfig::default();
        assert_eq!(with_parameter(&cfg, "batch", "4").unwrap().solver.batch, Batch::Mini(4));
        assert_eq!(with_parameter(&cfg, "batch", "full").unwrap().solver.batch, Batch::Full);
        assert_eq!(with_parameter(&cfg, "gamma", "5").unwrap().solver.gamma, 5.0);
        assert_eq!(
            with_parameter(&cfg, "eta", "0.25").unwrap().solver.momentum,
            Momentum::Constant(0.25)
        );
        assert_eq!(with_parameter(&cfg, "run.iterations", "7").unwrap().run.iterations, 7);
        assert!(with_parameter(&cfg, "solver.gamma", "-2").is_err());
        assert!(with_parameter(&cfg, "nope.x", "1").is_err());
    }
}
