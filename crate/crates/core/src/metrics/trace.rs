use super::MetricsError;
use std::io::Write;
use std::path::Path;

pub const TRACE_HEADER: &str = "iter,stationarity,consensus,q_gap,phi,ax_norm2,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub stationarity: f64,
    pub consensus: f64,
    pub q_gap: Option<f64>,
    pub phi: Option<f64>,
    pub ax_norm2: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceMeta {
    pub algorithm: String,
    pub seed: u64,
    pub config_hash: u64,
}

/// Per-round metrics of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn parse(s: &str, line: usize) -> Result<Option<f64>, MetricsError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| MetricsError::Io(format!("line {line}: bad number {s:?}")))
}

impl RunTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self { meta, records: Vec::new() }
    }

    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn iters(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.iter).collect()
    }

    pub fn column(&self, f: impl Fn(&TraceRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{:e},{:e},{},{},{:e},{}\n",
                r.iter,
                r.stationarity,
                r.consensus,
                cell(r.q_gap),
                cell(r.phi),
                r.ax_norm2,
                r.wall_ms
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MetricsError> {
        let mut f = std::fs::File::create(path).map_err(|e| MetricsError::Io(format!("{}: {e}", path.display())))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| MetricsError::Io(format!("{}: {e}", path.display())))
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let mut lines = text.lines();
        if lines.next() != Some(TRACE_HEADER) {
            return Err(MetricsError::Io("missing trace header".into()));
        }
        let mut trace = RunTrace::default();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 7 {
                return Err(MetricsError::Io(format!("line {line_no}: expected 7 cells")));
            }
            let need = |s: &str| parse(s, line_no)?.ok_or_else(|| MetricsError::Io(format!("line {line_no}: empty cell")));
            trace.push(TraceRecord {
                iter: cells[0]
                    .parse()
                    .map_err(|_| MetricsError::Io(format!("line {line_no}: bad iteration")))?,
                stationarity: need(cells[1])?,
                consensus: need(cells[2])?,
                q_gap: parse(cells[3], line_no)?,
                phi: parse(cells[4], line_no)?,
                ax_norm2: need(cells[5])?,
                wall_ms: need(cells[6])?,
            });
        }
        Ok(trace)
    }

    pub fn read_csv(path: &Path) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path).map_err(|e| MetricsError::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text)
    }
}
