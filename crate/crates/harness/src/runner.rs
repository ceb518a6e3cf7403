//! Runs a workload through the matching algorithm and checks answers.

use mpcstream_core::connectivity::{Connectivity, ConnectivityConfig, ConnectivityError};
use mpcstream_core::euler_tour::EulerError;
use mpcstream_core::matching::{Akly, GreedyMatching, MatchingError, SizeEstimator};
use mpcstream_core::mpc_engine::{AccountingError, AccountingMode, RoundStats};
use mpcstream_core::msf_apps::{Bipartiteness, MsfApprox, MsfError, MsfExact};
use mpcstream_core::{oracle, Edge, EdgeLedger, Vertex};
use thiserror::Error;

use crate::report::{BatchRecord, CheckRecord, RunReport};
use crate::workload::{Mode, Workload, WorkloadError};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_KAPPA: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub phi: f64,
    pub accounting: AccountingMode,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub oracle: bool,
    pub local_memory: Option<u64>,
    pub k_max: Option<usize>,
    /// Largest tolerated fraction of failed checks.
    pub failure_budget: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phi: 0.5,
            accounting: AccountingMode::Idealized,
            seed: 0,
            epsilon: None,
            alpha: None,
            kappa: None,
            oracle: true,
            local_memory: None,
            k_max: None,
            failure_budget: 0.01,
        }
    }
}

impl RunConfig {
    pub fn connectivity(&self, n: usize) -> ConnectivityConfig {
        let mut c = ConnectivityConfig::new(n, self.phi, self.accounting, self.seed);
        if let Some(k) = self.k_max {
            c = c.with_k_max(k);
        }
        if let Some(s) = self.local_memory {
            c = c.with_local_memory(s);
        }
        c
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("batch {batch}: accounting violation: {source}")]
    Accounting { batch: usize, source: AccountingError },
    #[error("batch {batch}: {message}")]
    Algorithm { batch: usize, message: String },
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("mode {0} needs W in the workload header")]
    MissingWeightRange(Mode),
}

fn accounting_of_connectivity(e: &ConnectivityError) -> Option<AccountingError> {
    match e {
        ConnectivityError::Accounting(a) | ConnectivityError::Euler(EulerError::Accounting(a)) => Some(a.clone()),
        _ => None,
    }
}

/// Splits an algorithm error into an accounting violation or anything else.
pub trait Classify {
    fn accounting(&self) -> Option<AccountingError>;
}

impl Classify for ConnectivityError {
    fn accounting(&self) -> Option<AccountingError> {
        accounting_of_connectivity(self)
    }
}

impl Classify for MsfError {
    fn accounting(&self) -> Option<AccountingError> {
        match self {
            MsfError::Accounting(a) | MsfError::Euler(EulerError::Accounting(a)) => Some(a.clone()),
            MsfError::Connectivity(c) => accounting_of_connectivity(c),
            _ => None,
        }
    }
}

impl Classify for MatchingError {
    fn accounting(&self) -> Option<AccountingError> {
        match self {
            MatchingError::Accounting(a) => Some(a.clone()),
            _ => None,
        }
    }
}

fn classify<E: Classify + std::fmt::Display>(batch: usize, e: E) -> RunError {
    match e.accounting() {
        Some(source) => RunError::Accounting { batch, source },
        None => RunError::Algorithm { batch, message: e.to_string() },
    }
}

/// The algorithm behind one workload mode.
#[derive(Debug)]
pub enum Algorithm {
    Connectivity(Box<Connectivity>),
    MsfExact(Box<MsfExact>),
    MsfApprox(Box<MsfApprox>),
    Bipartite(Box<Bipartiteness>),
    Greedy(Box<GreedyMatching>),
    Akly(Box<Akly>),
    Size(Box<SizeEstimator>),
}

impl Algorithm {
    pub fn new(w: &Workload, cfg: &RunConfig) -> Result<Self, RunError> {
        let h = &w.header;
        let c = cfg.connectivity(h.n);
        let eps = cfg.epsilon.or(h.epsilon).unwrap_or(DEFAULT_EPSILON);
        let alpha = cfg.alpha.or(h.alpha).unwrap_or(DEFAULT_ALPHA);
        let kappa = cfg.kappa.or(h.kappa).unwrap_or(DEFAULT_KAPPA);
        Ok(match h.mode {
            Mode::Connectivity => Algorithm::Connectivity(Box::new(Connectivity::new(c))),
            Mode::MsfExact => Algorithm::MsfExact(Box::new(MsfExact::new(c))),
            Mode::MsfApprox => {
                let max_w = h.max_weight.ok_or(RunError::MissingWeightRange(h.mode))?;
                Algorithm::MsfApprox(Box::new(MsfApprox::new(c, eps, max_w)))
            }
            Mode::Bipartite => Algorithm::Bipartite(Box::new(Bipartiteness::new(c))),
            Mode::MatchGreedy => Algorithm::Greedy(Box::new(GreedyMatching::new(c, alpha))),
            Mode::MatchAkly => Algorithm::Akly(Box::new(Akly::new(c, alpha, kappa))),
            Mode::MatchSize => Algorithm::Size(Box::new(SizeEstimator::new(c, alpha, true))),
        })
    }

    pub fn apply(&mut self, batch_index: usize, batch: &mpcstream_core::UpdateBatch) -> Result<RoundStats, RunError> {
        match self {
            Algorithm::Connectivity(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
            Algorithm::MsfExact(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
            Algorithm::MsfApprox(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
            Algorithm::Bipartite(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
            Algorithm::Greedy(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
            Algorithm::Akly(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
            Algorithm::Size(a) => a.apply_batch(batch).map_err(|e| classify(batch_index, e)),
        }
    }

    /// Words held across all engines at their peak.
    pub fn peak_total_memory(&self) -> u64 {
        match self {
            Algorithm::Connectivity(a) => a.engine().peak_total_memory(),
            Algorithm::MsfExact(a) => a.engine().peak_total_memory(),
            Algorithm::MsfApprox(a) => a.peak_total_memory(),
            Algorithm::Bipartite(a) => a.base().engine().peak_total_memory() + a.cover().engine().peak_total_memory(),
            Algorithm::Greedy(a) => a.engine().peak_total_memory(),
            Algorithm::Akly(a) => a.engine().peak_total_memory(),
            Algorithm::Size(_) => 0,
        }
    }

    pub fn answer(&self) -> Answer {
        match self {
            Algorithm::Connectivity(a) => Answer::Components { forest: a.spanning_forest(), labels: a.components().to_vec() },
            Algorithm::MsfExact(a) => Answer::ExactForest(a.edges()),
            Algorithm::MsfApprox(a) => Answer::ApproxForest { estimate: a.weight_estimate(), forest: a.forest(), epsilon: a.eps() },
            Algorithm::Bipartite(a) => Answer::Bipartite(a.is_bipartite()),
            Algorithm::Greedy(a) => Answer::Matching { edges: a.edges().to_vec(), cap: Some(a.cap()) },
            Algorithm::Akly(a) => Answer::Matching { edges: a.matching(), cap: None },
            Algorithm::Size(a) => Answer::SizeEstimate(a.estimate()),
        }
    }
}

/// What an algorithm claims about the current graph.
#[derive(Clone, Debug, PartialEq)]
pub enum Answer {
    Components { forest: Vec<Edge>, labels: Vec<Vertex> },
    ExactForest(Vec<Edge>),
    ApproxForest { estimate: f64, forest: Vec<Edge>, epsilon: f64 },
    Bipartite(bool),
    /// `cap` is set for greedy matchings, which promise `min(cap, nu/2)`.
    Matching { edges: Vec<Edge>, cap: Option<usize> },
    SizeEstimate(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub check: &'static str,
    pub pass: bool,
    /// Optimum over answer, or answer over optimum for weights.
    pub ratio: Option<f64>,
    pub detail: String,
}

impl Verdict {
    fn new(check: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Verdict { check, pass, ratio: None, detail: detail.into() }
    }
}

/// Compares an answer with oracles computed from the explicit graph alone.
pub fn oracle_check(n: usize, graph: &[(f64, Edge)], answer: &Answer) -> Verdict {
    let edges: Vec<Edge> = graph.iter().map(|&(_, e)| e).collect();
    match answer {
        Answer::Components { forest, labels } => {
            let spanning = oracle::is_spanning_forest(n, &edges, forest);
            let same = labels.as_slice() == oracle::component_labels(n, &edges).as_slice();
            Verdict::new("components", spanning && same, format!("spanning {spanning} labels {same}"))
        }
        Answer::ExactForest(forest) => {
            let mut sorted = forest.clone();
            sorted.sort_unstable();
            let want = oracle::kruskal(n, graph);
            let pass = sorted == want;
            Verdict::new("exact_msf", pass, format!("{} edges, oracle {}", sorted.len(), want.len()))
        }
        Answer::ApproxForest { estimate, forest, epsilon } => {
            let exact = oracle::kruskal_weight(n, graph);
            let spanning = oracle::is_spanning_forest(n, &edges, forest);
            let forest_w = if spanning { oracle::forest_weight(graph, forest) } else { f64::INFINITY };
            let ratio = if exact > 0.0 { estimate / exact } else { 1.0 };
            let slack = 1e-9 * exact.max(1.0);
            let pass = *estimate >= exact - slack && *estimate <= (1.0 + epsilon) * exact + slack && forest_w <= (1.0 + epsilon) * exact + slack;
            Verdict { ratio: Some(ratio), ..Verdict::new("approx_msf", pass, format!("estimate {estimate} forest {forest_w} kruskal {exact}")) }
        }
        Answer::Bipartite(claim) => {
            let truth = oracle::is_bipartite(n, &edges);
            Verdict::new("bipartite", *claim == truth, format!("claimed {claim} oracle {truth}"))
        }
        Answer::Matching { edges: m, cap } => {
            let mut live = edges.clone();
            live.sort_unstable();
            let valid = oracle::is_matching(m) && m.iter().all(|e| live.binary_search(e).is_ok());
            let nu = oracle::matching_number(n, &edges);
            let ratio = if m.is_empty() { (nu.size > 0).then_some(f64::INFINITY) } else { Some(nu.size as f64 / m.len() as f64) };
            let bound_ok = match cap {
                Some(cap) if nu.exact => 2 * m.len() >= (2 * cap).min(nu.size),
                _ => true,
            };
            let ratio = ratio.or(Some(1.0));
            Verdict { ratio, ..Verdict::new("matching", valid && bound_ok, format!("size {} nu {} exact {}", m.len(), nu.size, nu.exact)) }
        }
        Answer::SizeEstimate(est) => {
            let nu = oracle::matching_number(n, &edges);
            let ratio = if *est == 0 { (nu.size == 0).then_some(1.0) } else { Some(nu.size as f64 / *est as f64) };
            Verdict { ratio, ..Verdict::new("size_estimate", true, format!("estimate {est} nu {}", nu.size)) }
        }
    }
}

/// Runs every batch and checks each queried state.
pub fn run(w: &Workload, cfg: &RunConfig) -> Result<RunReport, RunError> {
    let mut alg = Algorithm::new(w, cfg)?;
    let mut ledger = EdgeLedger::new(w.header.n);
    let mut report = RunReport::default();
    for (i, b) in w.batches.iter().enumerate() {
        let batch = ledger.with_delete_weights(&b.to_update_batch());
        ledger.apply(&batch).map_err(|source| RunError::Workload(WorkloadError::Stream { batch: i, source }))?;
        let stats = alg.apply(i, &batch)?;
        report.batches.push(BatchRecord::new(i, &stats));
        if b.query && cfg.oracle {
            let graph: Vec<(f64, Edge)> = ledger.weighted_edges().map(|(e, w)| (w, e)).collect();
            let v = oracle_check(w.header.n, &graph, &alg.answer());
            report.checks.push(CheckRecord::new(i, &v));
        }
    }
    report.finish(alg.peak_total_memory(), cfg.failure_budget);
    Ok(report)
}
