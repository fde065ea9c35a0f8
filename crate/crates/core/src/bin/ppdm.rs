use clap::{Parser, Subcommand};
use ppdm::harness::{
    emit_plots, output_root, parse_config, run_experiment, run_sweep, verify_suite, ConfigError, HarnessError,
    VerifyLevel,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Decentralized proximal primal-dual experiments.
#[derive(Parser)]
#[command(name = "ppdm", version, after_help = "Outputs go under $PPDM_OUTPUT_ROOT (default ./ppdm-out).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm on every trial and write the CSVs.
    Run { config: PathBuf },
    /// Run the built-in property checks.
    Verify {
        /// Include the statistical checks (slower).
        #[arg(long)]
        full: bool,
    },
    /// Repeat an experiment for several values of one parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path (`solver.gamma`, `run.iterations`) or a shorthand
        /// (`batch`, `eta`, `alpha`, `beta`, `gamma`, `c`, `kappa`).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Write plotting scripts for a results directory.
    Plot { dir: PathBuf },
}

const CONFIG_ERROR: u8 = 2;
const FAILURE: u8 = 1;

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        HarnessError::Config(_) => ExitCode::from(CONFIG_ERROR),
        _ => ExitCode::from(FAILURE),
    }
}

fn config_fail(e: ConfigError) -> ExitCode {
    fail(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => return config_fail(e),
            };
            let out = match run_experiment(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            let dir = output_root().join(&cfg.name);
            match out.write_to(&dir) {
                Ok(files) => {
                    let psi: Vec<String> = out.psi.iter().map(|p| p.to_string()).collect();
                    println!("psi = [{}]", psi.join(", "));
                    for m in &out.means {
                        let last = m.records.last().expect("trace has the initial record");
                        println!(
                            "{:>12}: iter {} stationarity {:.3e} consensus {:.3e}",
                            m.meta.algorithm, last.iter, last.stationarity, last.consensus
                        );
                    }
                    println!("wrote {} files to {}", files.len(), dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { full } => {
            let level = if full { VerifyLevel::Full } else { VerifyLevel::Fast };
            let report = verify_suite(level);
            for c in &report.checks {
                println!("{c}");
            }
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", report.checks.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAILURE)
            }
        }
        Command::Sweep { config, param, values } => {
            let cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => return config_fail(e),
            };
            let dir = output_root().join(format!("{}-sweep-{}", cfg.name, param.replace('.', "_")));
            match run_sweep(&cfg, &param, &values, Some(&dir)) {
                Ok(rows) => {
                    for r in &rows {
                        println!(
                            "{param}={:<8} {:>12}: plateau stationarity {:.3e}",
                            r.value, r.algorithm, r.plateau_stationarity
                        );
                    }
                    println!("wrote {}", dir.join("sweep.csv").display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Plot { dir } => match emit_plots(&dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use ppdm::harness::OUTPUT_ROOT_ENV;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
        assert_eq!(OUTPUT_ROOT_ENV, "PPDM_OUTPUT_ROOT");
    }
}
