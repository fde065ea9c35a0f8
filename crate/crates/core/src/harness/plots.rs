use super::HarnessError;
use std::path::{Path, PathBuf};

const CURVES_SCRIPT: &str = r#"import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = [
__SERIES__
]


def load(path):
    it, st, cons = [], [], []
    with open(os.path.join(HERE, path)) as f:
        for row in csv.DictReader(f):
            it.append(int(row["iter"]))
            st.append(float(row["stationarity"]))
            cons.append(float(row["consensus"]))
    return it, st, cons


fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4))
for label, path in SERIES:
    it, st, cons = load(path)
    a.semilogy(it, st, label=label)
    b.semilogy(it, cons, label=label)
a.set_xlabel("iteration")
a.set_ylabel("stationarity error")
b.set_xlabel("iteration")
b.set_ylabel("consensus error")
a.legend()
b.legend()
fig.tight_layout()
out = os.path.join(HERE, "curves.png")
fig.savefig(out, dpi=150)
print(out, file=sys.stderr)
"#;

const SWEEP_SCRIPT: &str = r#"import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
rows = defaultdict(list)
with open(os.path.join(HERE, "sweep.csv")) as f:
    for row in csv.DictReader(f):
        rows[row["algorithm"]].append((row["param"], row["value"], float(row["plateau_stationarity"])))

fig, ax = plt.subplots(figsize=(6, 4))
for alg, pts in sorted(rows.items()):
    ax.semilogy([p[1] for p in pts], [p[2] for p in pts], marker="o", label=alg)
    ax.set_xlabel(pts[0][0])
ax.set_ylabel("plateau stationarity error")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "sweep.png"), dpi=150)
"#;

fn mean_csvs(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    for e in entries.flatten() {
        let p = e.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if p.is_file() && name.starts_with("mean_") && name.ends_with(".csv") {
            found.push(p);
        }
    }
    found.sort();
    Ok(found)
}

/// Writes plotting scripts for an experiment or sweep directory.
///
/// Every `mean_<algorithm>.csv` in `dir`, and in its immediate
/// subdirectories for a sweep, becomes one series of a two-panel
/// stationarity and consensus plot. A `sweep.csv` adds a plateau plot.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::MissingData(format!("{} is not a directory", dir.display())));
    }
    let mut series = Vec::new();
    for p in mean_csvs(dir)? {
        series.push(p);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::Io(e.to_string()))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        series.extend(mean_csvs(&d)?);
    }
    if series.is_empty() {
        return Err(HarnessError::MissingData(format!(
            "no mean_*.csv files under {}",
            dir.display()
        )));
    }
    let lines: Vec<String> = series
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(dir).expect("found under dir");
            let alg = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("")
                .trim_start_matches("mean_");
            let label = match rel.parent().and_then(|d| d.to_str()).filter(|d| !d.is_empty()) {
                Some(point) => format!("{alg} {point}"),
                None => alg.to_string(),
            };
            format!("    ({label:?}, {:?}),", rel.to_string_lossy())
        })
        .collect();
    let mut written = Vec::new();
    let curves = dir.join("plot_curves.py");
    std::fs::write(&curves, CURVES_SCRIPT.replace("__SERIES__", &lines.join("\n")))
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    written.push(curves);
    if dir.join("sweep.csv").is_file() {
        let sweep = dir.join("plot_sweep.py");
        std::fs::write(&sweep, SWEEP_SCRIPT).map_err(|e| HarnessError::Io(e.to_string()))?;
        written.push(sweep);
    }
    Ok(written)
}
