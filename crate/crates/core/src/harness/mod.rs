//! Experiment configuration, orchestration, export and the built-in
//! verification suite.

mod config;
mod experiment;
mod plots;
mod verify;

pub use config::{
    parse_config, with_parameter, AlgorithmSpec, ConfigError, ExperimentConfig, GraphBlock, MethodKind, RunBlock,
    TopologyKind, DESK_BATCH,
};
pub use experiment::{
    config_hash, fnv1a, mean_trace, run_experiment, run_sweep, sweep_csv, ExperimentOutput, SweepRow, TrialResult,
};
pub use plots::emit_plots;
pub use verify::{
    desk_problem, potential_descent, random_connected_graph, verify_suite, CheckOutcome, VerifyLevel, VerifyReport,
};

/// Environment variable naming the directory that run and sweep outputs go under.
pub const OUTPUT_ROOT_ENV: &str = "PPDM_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{algorithm}{}: {message}", trial.map(|t| format!(" (trial {t})")).unwrap_or_default())]
    Trial {
        algorithm: String,
        trial: Option<usize>,
        message: String,
    },
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("i/o: {0}")]
    Io(String),
}

/// `$PPDM_OUTPUT_ROOT`, or `ppdm-out` in the working directory.
pub fn output_root() -> std::path::PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(Into::into)
        .unwrap_or_else(|| "ppdm-out".into())
}
