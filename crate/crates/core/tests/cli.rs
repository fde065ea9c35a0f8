use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"name = "tiny"

[problem]
agents = 4
samples = 8
dim = 5
sparsity = 2

[graph]
kind = "circle"

[run]
iterations = 40
trials = 2
metric_every = 5
checkpoint = true
save_data = true
netsim = true
"#;

fn ppdm(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppdm"))
        .args(args)
        .env("PPDM_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "tiny.toml", TINY);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for root in [&a, &b] {
        let out = ppdm(root, &["run", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (da, db) = (a.join("tiny"), b.join("tiny"));
    let files = files_under(&da);
    assert_eq!(files, files_under(&db));
    for f in &files {
        assert_eq!(std::fs::read(da.join(f)).unwrap(), std::fs::read(db.join(f)).unwrap(), "{}", f.display());
    }

    let mean = std::fs::read_to_string(da.join("mean_sppdm.csv")).unwrap();
    assert!(mean.starts_with("iter,stationarity,consensus,q_gap,phi,ax_norm2,wall_ms\n"));
    assert_eq!(mean.lines().count(), 1 + 1 + 40 / 5);
    let rounds = std::fs::read_to_string(da.join("trials/sppdm_trial00_rounds.csv")).unwrap();
    let mut lines = rounds.lines();
    assert_eq!(lines.next(), Some("round,messages,scalars"));
    assert!(lines.all(|l| l.ends_with(",8,40")));
    let theory = std::fs::read_to_string(da.join("theory_sppdm.txt")).unwrap();
    assert!(theory.lines().all(|l| l.split_once('=').is_some()));
    assert!(theory.lines().any(|l| l.starts_with("eta_bar=")));
    assert!(da.join("data/trial01/agent_3.csv").is_file());
    assert!(da.join("trials/state_sppdm_trial01.csv").is_file());
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_value = write_config(tmp.path(), "bad.toml", "[solver]\ngamma = -1.0\n");
    let bad_syntax = write_config(tmp.path(), "syntax.toml", "[run]\niterations = = 3\n");
    let unknown = write_config(tmp.path(), "unknown.toml", "[run]\nfrobnicate = 1\n");
    for cfg in [&bad_value, &bad_syntax, &unknown, &tmp.path().join("missing.toml")] {
        let out = ppdm(tmp.path(), &["run", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{}", cfg.display());
    }
    let sweep = write_config(tmp.path(), "tiny.toml", TINY);
    let out = ppdm(tmp.path(), &["sweep", sweep.to_str().unwrap(), "--param", "no.such", "--values", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_then_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "tiny.toml", TINY);
    let out = ppdm(tmp.path(), &["sweep", cfg.to_str().unwrap(), "--param", "batch", "--values", "1,4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("tiny-sweep-batch");
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let out = ppdm(tmp.path(), &["plot", dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.join("plot_curves.py").is_file() && dir.join("plot_sweep.py").is_file());
}

#[test]
fn plot_without_results_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ppdm(tmp.path(), &["plot", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fast_verify_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ppdm(tmp.path(), &["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().any(|l| l.starts_with("[pass] netsim::bit_equivalence")));
}
