//! Line-oriented workload files.
//!
//! ```text
//! n 8
//! mode msf-approx
//! W 100
//! epsilon 0.1
//! BATCH
//! + 0 1 4.5
//! - 2 3
//! Q
//! ```
//!
//! Header lines come first. Each `BATCH` line opens a batch; `Q` asks for an
//! oracle check after the batch. Lines starting with `#` are ignored.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use mpcstream_core::graph::StreamError;
use mpcstream_core::{Edge, EdgeLedger, Update, UpdateBatch, UpdateKind};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Connectivity,
    MsfExact,
    MsfApprox,
    Bipartite,
    MatchGreedy,
    MatchAkly,
    MatchSize,
}

impl Mode {
    pub const ALL: [Mode; 7] =
        [Mode::Connectivity, Mode::MsfExact, Mode::MsfApprox, Mode::Bipartite, Mode::MatchGreedy, Mode::MatchAkly, Mode::MatchSize];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Connectivity => "connectivity",
            Mode::MsfExact => "msf-exact",
            Mode::MsfApprox => "msf-approx",
            Mode::Bipartite => "bipartite",
            Mode::MatchGreedy => "match-greedy",
            Mode::MatchAkly => "match-akly",
            Mode::MatchSize => "match-size",
        }
    }

    /// Modes whose algorithms reject deletions.
    pub fn insertion_only(self) -> bool {
        matches!(self, Mode::MsfExact | Mode::MatchGreedy)
    }

    pub fn weighted(self) -> bool {
        matches!(self, Mode::MsfExact | Mode::MsfApprox)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub n: usize,
    pub mode: Mode,
    pub max_weight: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
}

impl Header {
    pub fn new(n: usize, mode: Mode) -> Self {
        Header { n, mode, max_weight: None, epsilon: None, alpha: None, kappa: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub updates: Vec<Update>,
    pub query: bool,
}

impl Batch {
    pub fn to_update_batch(&self) -> UpdateBatch {
        UpdateBatch::new(self.updates.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub header: Header,
    pub batches: Vec<Batch>,
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header key `{0}`")]
    MissingHeader(&'static str),
    #[error("batch {batch}: {source}")]
    Stream { batch: usize, source: StreamError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> WorkloadError {
    WorkloadError::Parse { line, message: message.into() }
}

fn field<T: FromStr>(line: usize, token: Option<&str>, what: &str) -> Result<T, WorkloadError> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    token.parse().map_err(|_| parse_err(line, format!("bad {what} `{token}`")))
}

impl Workload {
    pub fn new(header: Header) -> Self {
        Workload { header, batches: Vec::new() }
    }

    pub fn parse(text: &str) -> Result<Self, WorkloadError> {
        let mut n = None;
        let mut mode = None;
        let mut header = Header::new(0, Mode::Connectivity);
        let mut batches: Vec<Batch> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut tokens = raw.split_whitespace();
            let head = tokens.next().expect("nonempty line");
            match head {
                "BATCH" => batches.push(Batch::default()),
                "Q" => batches.last_mut().ok_or_else(|| parse_err(line, "query before any BATCH"))?.query = true,
                "+" | "-" => {
                    let a: u32 = field(line, tokens.next(), "vertex")?;
                    let b: u32 = field(line, tokens.next(), "vertex")?;
                    let edge = Edge::try_new(a, b).ok_or_else(|| parse_err(line, "self-loop"))?;
                    let weight = match tokens.next() {
                        Some(t) => Some(field::<f64>(line, Some(t), "weight")?),
                        None => None,
                    };
                    let kind = if head == "+" { UpdateKind::Insert } else { UpdateKind::Delete };
                    let batch = batches.last_mut().ok_or_else(|| parse_err(line, "update before any BATCH"))?;
                    batch.updates.push(Update { kind, edge, weight });
                }
                _ if !batches.is_empty() => return Err(parse_err(line, format!("unexpected `{head}` inside batches"))),
                "n" => n = Some(field(line, tokens.next(), "n")?),
                "mode" => mode = Some(field::<String>(line, tokens.next(), "mode")?.parse::<Mode>().map_err(|m| parse_err(line, m))?),
                "W" => header.max_weight = Some(field(line, tokens.next(), "W")?),
                "epsilon" => header.epsilon = Some(field(line, tokens.next(), "epsilon")?),
                "alpha" => header.alpha = Some(field(line, tokens.next(), "alpha")?),
                "kappa" => header.kappa = Some(field(line, tokens.next(), "kappa")?),
                other => return Err(parse_err(line, format!("unknown header key `{other}`"))),
            }
            if tokens.next().is_some() {
                return Err(parse_err(line, "trailing tokens"));
            }
        }
        header.n = n.ok_or(WorkloadError::MissingHeader("n"))?;
        header.mode = mode.ok_or(WorkloadError::MissingHeader("mode"))?;
        Ok(Workload { header, batches })
    }

    /// Replays the stream on an edge ledger; fails on the first invalid batch.
    pub fn validate(&self) -> Result<EdgeLedger, WorkloadError> {
        let mut ledger = EdgeLedger::new(self.header.n);
        for (i, b) in self.batches.iter().enumerate() {
            ledger.apply(&b.to_update_batch()).map_err(|source| WorkloadError::Stream { batch: i, source })?;
        }
        Ok(ledger)
    }

    pub fn load(path: &Path) -> Result<Self, WorkloadError> {
        let w = Self::parse(&std::fs::read_to_string(path)?)?;
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: &Path) -> Result<(), WorkloadError> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn update_count(&self) -> usize {
        self.batches.iter().map(|b| b.updates.len()).sum()
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.header;
        let mut out = String::new();
        writeln!(out, "n {}", h.n)?;
        writeln!(out, "mode {}", h.mode)?;
        for (key, value) in [("W", h.max_weight), ("epsilon", h.epsilon), ("alpha", h.alpha), ("kappa", h.kappa)] {
            if let Some(v) = value {
                writeln!(out, "{key} {v}")?;
            }
        }
        for b in &self.batches {
            out.push_str("BATCH\n");
            for u in &b.updates {
                let sign = if u.kind == UpdateKind::Insert { '+' } else { '-' };
                match u.weight {
                    Some(w) => writeln!(out, "{sign} {} {} {w}", u.edge.u, u.edge.v)?,
                    None => writeln!(out, "{sign} {} {}", u.edge.u, u.edge.v)?,
                }
            }
            if b.query {
                out.push_str("Q\n");
            }
        }
        f.write_str(&out)
    }
}
