//! Seeded workload generators.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use mpcstream_core::oracle::UnionFind;
use mpcstream_core::{Edge, EdgeLedger, Update, UpdateBatch, Vertex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::workload::{Batch, Header, Mode, Workload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    ErdosRenyiMixed,
    PathSplitter,
    ComponentChurn,
    MatchingPlanted,
    WeightLaddered,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::ErdosRenyiMixed, Kind::PathSplitter, Kind::ComponentChurn, Kind::MatchingPlanted, Kind::WeightLaddered];

    pub fn name(self) -> &'static str {
        match self {
            Kind::ErdosRenyiMixed => "erdos-renyi-mixed",
            Kind::PathSplitter => "path-splitter",
            Kind::ComponentChurn => "component-churn",
            Kind::MatchingPlanted => "matching-planted",
            Kind::WeightLaddered => "weight-laddered",
        }
    }

    fn default_mode(self) -> Mode {
        match self {
            Kind::MatchingPlanted => Mode::MatchAkly,
            Kind::WeightLaddered => Mode::MsfApprox,
            _ => Mode::Connectivity,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown kind `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub kind: Kind,
    pub n: usize,
    pub batches: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Overrides the kind's default mode; insertion-only modes get no deletions.
    pub mode: Option<Mode>,
    pub max_weight: f64,
    pub epsilon: f64,
    pub alpha: f64,
    /// Planted matching size; defaults to `n/4`.
    pub planted: Option<usize>,
    /// Percentage of updates that delete, where the kind allows a choice.
    pub delete_share: u32,
}

impl GenParams {
    pub fn new(kind: Kind, n: usize, batches: usize, batch_size: usize, seed: u64) -> Self {
        GenParams {
            kind,
            n,
            batches,
            batch_size,
            seed,
            mode: None,
            max_weight: 100.0,
            epsilon: 0.1,
            alpha: 4.0,
            planted: None,
            delete_share: 30,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(self.kind.default_mode())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("n must be at least {min}, got {n}")]
    TooFewVertices { n: usize, min: usize },
    #[error("batch size must be positive")]
    EmptyBatches,
    #[error("planted matching of {planted} does not fit {n} vertices")]
    PlantedTooLarge { planted: usize, n: usize },
    #[error("weights need W >= 1 and epsilon > 0")]
    BadWeights,
}

/// Builds batches one at a time while tracking the live edge set.
struct Stream {
    rng: ChaCha8Rng,
    ledger: EdgeLedger,
    batches: Vec<Batch>,
    current: Vec<Update>,
    touched: BTreeSet<Edge>,
    weighted: bool,
    max_weight: f64,
    epsilon: f64,
}

impl Stream {
    fn new(n: usize, seed: u64, weighted: bool, max_weight: f64, epsilon: f64) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ledger: EdgeLedger::new(n),
            batches: Vec::new(),
            current: Vec::new(),
            touched: BTreeSet::new(),
            weighted,
            max_weight,
            epsilon,
        }
    }

    fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound as u64) as usize
    }

    fn chance(&mut self, percent: u32) -> bool {
        self.rng.random_range(0..100u32) < percent
    }

    fn weight(&mut self) -> Option<f64> {
        if !self.weighted {
            return None;
        }
        // a weight on the (1+eps)^j ladder, perturbed within its rung
        let top = (self.max_weight.ln() / (1.0 + self.epsilon).ln()).floor() as i32;
        let j = self.rng.random_range(0..=top.max(0));
        let base = (1.0 + self.epsilon).powi(j);
        let w = base * (1.0 + self.epsilon * self.rng.random_range(0..4u32) as f64 / 4.0);
        Some(((w * 100.0).round() / 100.0).clamp(1.0, self.max_weight))
    }

    fn is_live(&self, e: Edge) -> bool {
        self.ledger.contains(&e)
    }

    /// Queues an insert of an absent, untouched edge.
    fn insert(&mut self, e: Edge) -> bool {
        if self.is_live(e) || !self.touched.insert(e) {
            return false;
        }
        let weight = self.weight();
        self.current.push(Update { kind: mpcstream_core::UpdateKind::Insert, edge: e, weight });
        true
    }

    /// Queues a delete of a live, untouched edge.
    fn delete(&mut self, e: Edge) -> bool {
        if !self.is_live(e) || !self.touched.insert(e) {
            return false;
        }
        self.current.push(Update::delete(e.u, e.v));
        true
    }

    fn live(&self) -> Vec<Edge> {
        self.ledger.edges().collect()
    }

    fn random_pair(&mut self, n: usize) -> Edge {
        loop {
            let a = self.below(n) as Vertex;
            let b = self.below(n) as Vertex;
            if let Some(e) = Edge::try_new(a, b) {
                return e;
            }
        }
    }

    fn close(&mut self, query: bool) {
        let updates = std::mem::take(&mut self.current);
        self.touched.clear();
        self.ledger.apply(&UpdateBatch::new(updates.clone())).expect("generator keeps the stream valid");
        self.batches.push(Batch { updates, query });
    }
}

pub fn generate(p: &GenParams) -> Result<Workload, GenError> {
    let min = if p.kind == Kind::MatchingPlanted { 4 } else { 2 };
    if p.n < min {
        return Err(GenError::TooFewVertices { n: p.n, min });
    }
    if p.batch_size == 0 {
        return Err(GenError::EmptyBatches);
    }
    if p.max_weight < 1.0 || p.epsilon <= 0.0 {
        return Err(GenError::BadWeights);
    }
    let mode = p.mode();
    let planted = p.planted.unwrap_or(p.n / 4).max(1);
    if p.kind == Kind::MatchingPlanted && planted > p.n / 2 {
        return Err(GenError::PlantedTooLarge { planted, n: p.n });
    }
    let weighted = mode.weighted() || p.kind == Kind::WeightLaddered;
    let mut s = Stream::new(p.n, p.seed, weighted, p.max_weight, p.epsilon);
    let deletes = if mode.insertion_only() { 0 } else { p.delete_share };
    match p.kind {
        Kind::ErdosRenyiMixed | Kind::WeightLaddered => mixed(&mut s, p, deletes),
        Kind::PathSplitter => path_splitter(&mut s, p, deletes),
        Kind::ComponentChurn => churn(&mut s, p, deletes),
        Kind::MatchingPlanted => planted_matching(&mut s, p, planted, deletes),
    }
    let mut header = Header::new(p.n, mode);
    if weighted {
        header.max_weight = Some(p.max_weight);
        header.epsilon = Some(p.epsilon);
    }
    if matches!(mode, Mode::MatchGreedy | Mode::MatchAkly | Mode::MatchSize) {
        header.alpha = Some(p.alpha);
    }
    Ok(Workload { header, batches: s.batches })
}

fn mixed(s: &mut Stream, p: &GenParams, deletes: u32) {
    for _ in 0..p.batches {
        let live = s.live();
        let mut attempts = 0;
        while s.current.len() < p.batch_size && attempts < 50 * p.batch_size {
            attempts += 1;
            if !live.is_empty() && s.chance(deletes) {
                let e = live[s.below(live.len())];
                s.delete(e);
            } else {
                let e = s.random_pair(p.n);
                s.insert(e);
            }
        }
        s.close(true);
    }
}

/// Starts from the path `0-1-...-(n-1)` and keeps the graph a forest: deletions
/// cut tree edges, insertions reconnect different trees.
fn path_splitter(s: &mut Stream, p: &GenParams, deletes: u32) {
    let path: Vec<Edge> = (1..p.n as Vertex).map(|v| Edge::new(v - 1, v)).collect();
    let mut next = 0;
    for _ in 0..p.batches {
        if next < path.len() {
            while s.current.len() < p.batch_size && next < path.len() {
                s.insert(path[next]);
                next += 1;
            }
            s.close(true);
            continue;
        }
        // inserts see the forest as it was before the batch
        let mut uf = UnionFind::new(p.n);
        for e in s.live() {
            uf.union(e.u as usize, e.v as usize);
        }
        let want_deletes = if deletes == 0 { 0 } else { p.batch_size.div_ceil(2) };
        let live = s.live();
        let mut attempts = 0;
        while s.current.len() < want_deletes && attempts < 50 * p.batch_size && !live.is_empty() {
            attempts += 1;
            let e = live[s.below(live.len())];
            s.delete(e);
        }
        attempts = 0;
        while s.current.len() < p.batch_size && attempts < 50 * p.batch_size {
            attempts += 1;
            let e = s.random_pair(p.n);
            if uf.find(e.u as usize) != uf.find(e.v as usize) && s.insert(e) {
                uf.union(e.u as usize, e.v as usize);
            }
        }
        s.close(true);
    }
}

/// Dense clusters of eight joined by bridges. Batches alternate between cutting
/// bridges and cluster edges and laying new bridges.
fn churn(s: &mut Stream, p: &GenParams, deletes: u32) {
    let size = 8.min(p.n);
    let clusters = p.n.div_ceil(size);
    let cluster_of = |v: Vertex| v as usize / size;
    let mut setup: Vec<Edge> = Vec::new();
    for c in 0..clusters {
        let members: Vec<Vertex> = ((c * size)..((c + 1) * size).min(p.n)).map(|v| v as Vertex).collect();
        for w in members.windows(2) {
            setup.push(Edge::new(w[0], w[1]));
        }
        if members.len() > 2 {
            setup.push(Edge::new(members[0], *members.last().expect("nonempty")));
            setup.push(Edge::new(members[0], members[members.len() / 2]));
        }
        if c + 1 < clusters {
            setup.push(Edge::new(members[0], ((c + 1) * size) as Vertex));
        }
    }
    setup.shuffle(&mut s.rng);
    let mut next = 0;
    let mut phase = 0;
    for _ in 0..p.batches {
        if next < setup.len() {
            while s.current.len() < p.batch_size && next < setup.len() {
                s.insert(setup[next]);
                next += 1;
            }
            s.close(true);
            continue;
        }
        phase += 1;
        let live = s.live();
        let bridges: Vec<Edge> = live.iter().copied().filter(|e| cluster_of(e.u) != cluster_of(e.v)).collect();
        let inner: Vec<Edge> = live.iter().copied().filter(|e| cluster_of(e.u) == cluster_of(e.v)).collect();
        let mut attempts = 0;
        while s.current.len() < p.batch_size && attempts < 50 * p.batch_size {
            attempts += 1;
            let cutting = phase % 2 == 1 && deletes > 0;
            if cutting && !bridges.is_empty() && s.chance(70) {
                let e = bridges[s.below(bridges.len())];
                s.delete(e);
            } else if cutting && !inner.is_empty() && s.chance(50) {
                let e = inner[s.below(inner.len())];
                s.delete(e);
            } else if cutting {
                // reinsert a missing cluster edge
                let c = s.below(clusters);
                let lo = c * size;
                let hi = ((c + 1) * size).min(p.n);
                if hi - lo >= 2 {
                    let a = (lo + s.below(hi - lo)) as Vertex;
                    let b = (lo + s.below(hi - lo)) as Vertex;
                    if let Some(e) = Edge::try_new(a, b) {
                        s.insert(e);
                    }
                }
            } else {
                let e = s.random_pair(p.n);
                if cluster_of(e.u) != cluster_of(e.v) {
                    s.insert(e);
                }
            }
        }
        s.close(true);
    }
}

/// Bipartite sides `[0, n/2)` and `[n/2, n)`. The first `planted` left vertices
/// are matched to their right twins; noise stays inside the planted block, so
/// the matching number is `planted` whenever every planted edge is present.
fn planted_matching(s: &mut Stream, p: &GenParams, planted: usize, deletes: u32) {
    let half = (p.n / 2) as Vertex;
    let twin = |i: usize| Edge::new(i as Vertex, half + i as Vertex);
    let mut setup: Vec<Edge> = (0..planted).map(twin).collect();
    for _ in 0..planted {
        let a = s.below(planted) as Vertex;
        let b = half + s.below(planted) as Vertex;
        setup.push(Edge::new(a, b));
    }
    setup.shuffle(&mut s.rng);
    setup.dedup();
    let mut next = 0;
    for _ in 0..p.batches {
        if next < setup.len() {
            while s.current.len() < p.batch_size && next < setup.len() {
                s.insert(setup[next]);
                next += 1;
            }
            s.close(true);
            continue;
        }
        let live = s.live();
        let mut attempts = 0;
        while s.current.len() < p.batch_size && attempts < 50 * p.batch_size {
            attempts += 1;
            if !live.is_empty() && s.chance(deletes) {
                let e = live[s.below(live.len())];
                s.delete(e);
            } else if s.chance(50) {
                let e = twin(s.below(planted));
                s.insert(e);
            } else {
                let a = s.below(planted) as Vertex;
                let b = half + s.below(planted) as Vertex;
                s.insert(Edge::new(a, b));
            }
        }
        s.close(true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mpcstream_core::oracle;

    #[test]
    fn same_seed_same_bytes() {
        let p = GenParams::new(Kind::ErdosRenyiMixed, 8, 6, 4, 1);
        assert_eq!(generate(&p).unwrap().to_string(), generate(&p).unwrap().to_string());
        let q = GenParams { seed: 2, ..p.clone() };
        assert_ne!(generate(&p).unwrap().to_string(), generate(&q).unwrap().to_string());
    }

    #[test]
    fn every_kind_is_valid() {
        for kind in Kind::ALL {
            let w = generate(&GenParams::new(kind, 32, 20, 6, 3)).unwrap();
            assert!(w.validate().is_ok(), "{kind}");
            assert_eq!(w.batches.len(), 20);
            assert!(w.batches.iter().all(|b| b.updates.len() <= 6));
        }
    }

    #[test]
    fn path_splitter_deletes_only_bridges() {
        let w = generate(&GenParams::new(Kind::PathSplitter, 16, 30, 4, 7)).unwrap();
        let mut ledger = EdgeLedger::new(16);
        let mut deletions = 0;
        for b in &w.batches {
            let batch = b.to_update_batch();
            let mut after_inserts = ledger.clone();
            after_inserts.apply(&UpdateBatch::new(batch.inserts().copied().collect())).unwrap();
            let graph: Vec<Edge> = after_inserts.edges().collect();
            assert_eq!(oracle::count_components(16, &graph), 16 - graph.len(), "graph stays a forest");
            for d in batch.deletes() {
                let rest: Vec<Edge> = graph.iter().copied().filter(|e| *e != d.edge).collect();
                assert_ne!(oracle::component_labels(16, &rest)[d.edge.u as usize], oracle::component_labels(16, &rest)[d.edge.v as usize]);
                deletions += 1;
            }
            ledger.apply(&batch).unwrap();
        }
        assert!(deletions > 10);
    }

    #[test]
    fn planted_matching_number() {
        let mut p = GenParams::new(Kind::MatchingPlanted, 128, 12, 16, 5);
        p.planted = Some(32);
        p.mode = Some(Mode::MatchGreedy);
        let w = generate(&p).unwrap();
        let ledger = w.validate().unwrap();
        let graph: Vec<Edge> = ledger.edges().collect();
        assert!(w.batches.iter().all(|b| b.to_update_batch().deletes().next().is_none()));
        assert_eq!(oracle::matching_number(128, &graph).size, 32);
    }

    #[test]
    fn weighted_kinds_stay_in_range() {
        let w = generate(&GenParams::new(Kind::WeightLaddered, 20, 10, 5, 9)).unwrap();
        assert_eq!(w.header.max_weight, Some(100.0));
        for b in &w.batches {
            for u in b.updates.iter().filter(|u| u.kind == mpcstream_core::UpdateKind::Insert) {
                let x = u.weight.unwrap();
                assert!((1.0..=100.0).contains(&x));
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert_eq!(generate(&GenParams::new(Kind::ErdosRenyiMixed, 1, 1, 1, 0)), Err(GenError::TooFewVertices { n: 1, min: 2 }));
        assert_eq!(generate(&GenParams::new(Kind::ErdosRenyiMixed, 5, 1, 0, 0)), Err(GenError::EmptyBatches));
        let mut p = GenParams::new(Kind::MatchingPlanted, 8, 1, 1, 0);
        p.planted = Some(5);
        assert_eq!(generate(&p), Err(GenError::PlantedTooLarge { planted: 5, n: 8 }));
    }
}
