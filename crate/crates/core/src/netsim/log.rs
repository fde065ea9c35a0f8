use std::fmt::Write as _;

pub const ROUND_LOG_HEADER: &str = "round,messages,scalars";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundEntry {
    pub round: usize,
    pub messages: usize,
    pub scalars: usize,
    pub sent: Vec<usize>,
    pub received: Vec<usize>,
}

impl RoundEntry {
    pub fn new(round: usize, agents: usize) -> Self {
        Self {
            round,
            messages: 0,
            scalars: 0,
            sent: vec![0; agents],
            received: vec![0; agents],
        }
    }

    pub fn record(&mut self, sender: usize, receiver: usize, len: usize) {
        self.messages += 1;
        self.scalars += len;
        self.sent[sender] += 1;
        self.received[receiver] += 1;
    }
}

/// Per-round traffic of a simulated run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoundLog {
    pub rounds: Vec<RoundEntry>,
}

impl RoundLog {
    pub fn push(&mut self, e: RoundEntry) {
        self.rounds.push(e);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(ROUND_LOG_HEADER);
        out.push('\n');
        for r in &self.rounds {
            let _ = writeln!(out, "{},{},{}", r.round, r.messages, r.scalars);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommunicationCensus {
    pub rounds: usize,
    pub messages: usize,
    pub scalars: usize,
}

/// Totals over the first `rounds` rounds of `log` (all of them if `None`).
pub fn communication_census(log: &RoundLog, rounds: Option<usize>) -> CommunicationCensus {
    let k = rounds.unwrap_or(log.rounds.len()).min(log.rounds.len());
    let head = &log.rounds[..k];
    CommunicationCensus {
        rounds: k,
        messages: head.iter().map(|r| r.messages).sum(),
        scalars: head.iter().map(|r| r.scalars).sum(),
    }
}
