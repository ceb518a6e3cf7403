//! Approximate maximum matching: capped greedy for insertion-only streams,
//! pair-sketch sparsifiers for dynamic ones, and a size estimator built from a
//! ladder of testers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use thiserror::Error;

use crate::connectivity::ConnectivityConfig;
use crate::field::{below, mix_seed, stream_rng, PairwiseHash};
use crate::graph::{Edge, UpdateBatch, UpdateKind, Vertex};
use crate::l0_sketch::{EdgeCoordinates, PairSketch, SketchFamily, SketchParams};
use crate::mpc_engine::{AccountingError, Engine, RoundStats};

/// Failure probability of a pair sketch, as a fraction.
pub const PAIR_DELTA: (u64, u64) = (1, 20);

/// Constant `c` in the greedy cap `c * n / alpha`.
pub const GREEDY_CAP_FACTOR: f64 = 2.0;

/// Groups per unit of `k` in the dynamic tester.
pub const TESTER_GROUP_FACTOR: usize = 4;

const UPDATE_WORDS: u64 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("deletions need the dynamic algorithm")]
    InsertionOnly,
    #[error("batch of {len} updates exceeds the cap of {cap}")]
    BatchTooLarge { len: usize, cap: usize },
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
}

fn check_batch(batch: &UpdateBatch, n: usize, cap: usize) -> Result<(), MatchingError> {
    if batch.len() > cap {
        return Err(MatchingError::BatchTooLarge { len: batch.len(), cap });
    }
    match batch.max_vertex() {
        Some(v) if v as usize >= n => Err(MatchingError::VertexOutOfRange(v)),
        _ => Ok(()),
    }
}

/// Greedy matching that stops growing at `cap` edges.
#[derive(Clone, Debug)]
pub struct GreedyMatching {
    n: usize,
    cap: usize,
    k_max: usize,
    matched: BTreeSet<Vertex>,
    edges: Vec<Edge>,
    engine: Engine,
}

impl GreedyMatching {
    /// Cap `ceil(2n / alpha)`.
    pub fn new(config: ConnectivityConfig, alpha: f64) -> Self {
        let cap = libm::ceil(GREEDY_CAP_FACTOR * config.n as f64 / alpha) as usize;
        Self::with_cap(config, cap)
    }

    pub fn with_cap(config: ConnectivityConfig, cap: usize) -> Self {
        GreedyMatching {
            n: config.n,
            cap,
            k_max: config.batch_cap(),
            matched: BTreeSet::new(),
            edges: Vec::new(),
            engine: Engine::new(config.engine_config()),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn is_matched(&self, v: Vertex) -> bool {
        self.matched.contains(&v)
    }

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MatchingError> {
        if batch.deletes().next().is_some() {
            return Err(MatchingError::InsertionOnly);
        }
        check_batch(batch, self.n, self.k_max)?;
        self.engine.begin_batch();
        if self.edges.len() < self.cap {
            self.engine.batch_intake(batch.len(), UPDATE_WORDS)?;
            self.engine.broadcast(2 * batch.len() as u64)?;
            // each endpoint's machine reports whether it is matched
            self.engine.map_over_partition(batch.inserts().map(|_| (0, 2)))?;
            self.engine.local("greedy", 2 * batch.len() as u64 + 2 * self.cap as u64)?;
            for u in batch.inserts() {
                if self.edges.len() >= self.cap {
                    break;
                }
                let e = u.edge;
                if !self.matched.contains(&e.u) && !self.matched.contains(&e.v) {
                    self.matched.insert(e.u);
                    self.matched.insert(e.v);
                    self.edges.push(e);
                }
            }
        }
        self.engine.set_resident([2 * self.edges.len() as u64 + 1])?;
        Ok(self.engine.end_batch())
    }
}

type PairKey = (u32, u32);

/// Pair sketches over vertex groups, the sampled graph `H` with one edge per
/// nonempty pair, and a maximal matching of `H`.
#[derive(Clone, Debug)]
struct Sparsifier {
    family: Arc<SketchFamily>,
    coords: EdgeCoordinates,
    sketches: BTreeMap<PairKey, PairSketch>,
    sampled: BTreeMap<PairKey, Edge>,
    adjacent: BTreeMap<Vertex, BTreeSet<Vertex>>,
    mate: BTreeMap<Vertex, Vertex>,
    peak_live: usize,
}

impl Sparsifier {
    fn new(n: usize, seed: u64) -> Self {
        let coords = EdgeCoordinates::new(n);
        let params = SketchParams::new(coords.dimension(), PAIR_DELTA.0, PAIR_DELTA.1, seed).expect("valid parameters");
        Sparsifier {
            family: SketchFamily::new(params),
            coords,
            sketches: BTreeMap::new(),
            sampled: BTreeMap::new(),
            adjacent: BTreeMap::new(),
            mate: BTreeMap::new(),
            peak_live: 0,
        }
    }

    fn sketch_words(&self) -> u64 {
        self.family.params().words()
    }

    fn unlink(&mut self, e: Edge) {
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            if let Some(set) = self.adjacent.get_mut(&a) {
                set.remove(&b);
                if set.is_empty() {
                    self.adjacent.remove(&a);
                }
            }
        }
        if self.mate.get(&e.u) == Some(&e.v) {
            self.mate.remove(&e.u);
            self.mate.remove(&e.v);
        }
    }

    /// Applies keyed updates; returns the number of touched pairs.
    fn apply(&mut self, updates: &[(PairKey, Edge, i64)]) -> usize {
        let touched: BTreeSet<PairKey> = updates.iter().map(|u| u.0).collect();
        let mut candidates = BTreeSet::new();
        for key in &touched {
            if let Some(e) = self.sampled.remove(key) {
                self.unlink(e);
                candidates.insert(e.u);
                candidates.insert(e.v);
            }
        }
        for &(key, e, delta) in updates {
            let prepared = self.family.prepare(self.coords.index(e)).expect("edge index below C(n,2)");
            self.sketches.entry(key).or_insert_with(|| PairSketch::new(&self.family, self.coords)).apply(&prepared, delta);
        }
        self.peak_live = self.peak_live.max(self.sketches.len());
        for key in &touched {
            let Some(sketch) = self.sketches.get(key) else { continue };
            if sketch.is_zero() {
                self.sketches.remove(key);
                continue;
            }
            if let Some(e) = sketch.sample() {
                self.sampled.insert(*key, e);
                self.adjacent.entry(e.u).or_default().insert(e.v);
                self.adjacent.entry(e.v).or_default().insert(e.u);
                candidates.insert(e.u);
                candidates.insert(e.v);
            }
        }
        // re-maximalize around every vertex whose H-neighbourhood changed
        for v in candidates {
            if self.mate.contains_key(&v) {
                continue;
            }
            let free = self.adjacent.get(&v).and_then(|ns| ns.iter().copied().find(|w| !self.mate.contains_key(w)));
            if let Some(w) = free {
                self.mate.insert(v, w);
                self.mate.insert(w, v);
            }
        }
        touched.len()
    }

    fn matching(&self) -> Vec<Edge> {
        self.mate.iter().filter(|(a, b)| a < b).map(|(&a, &b)| Edge::new(a, b)).collect()
    }

    fn size(&self) -> usize {
        self.mate.len() / 2
    }

    fn sampled_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.sampled.values().copied()
    }

    fn live_words(&self) -> u64 {
        self.sketches.len() as u64 * self.sketch_words()
    }
}

/// One guess `OPT'` of the matching size with its active group pairs.
#[derive(Clone, Debug)]
struct GuessInstance {
    guess: usize,
    beta: u32,
    gamma: u32,
    side: PairwiseHash,
    left: PairwiseHash,
    right: PairwiseHash,
    active: Vec<Vec<u32>>,
    sparsifier: Sparsifier,
}

impl GuessInstance {
    fn new(n: usize, guess: usize, alpha: f64, seed: u64) -> Self {
        let beta = (libm::ceil(guess as f64 / alpha) as u32).max(1);
        let gamma = (libm::ceil(guess as f64 / (alpha * alpha)) as u32).clamp(1, beta);
        let mut rng = stream_rng(seed, 0);
        let side = PairwiseHash::draw(&mut rng);
        let left = PairwiseHash::draw(&mut rng);
        let right = PairwiseHash::draw(&mut rng);
        let mut active = Vec::with_capacity(beta as usize);
        let mut pool: Vec<u32> = (0..beta).collect();
        for _ in 0..beta {
            // partial shuffle picks gamma distinct right groups
            for j in 0..gamma as usize {
                let r = j + below(&mut rng, (beta as usize - j) as u64) as usize;
                pool.swap(j, r);
            }
            let mut chosen = pool[..gamma as usize].to_vec();
            chosen.sort_unstable();
            active.push(chosen);
        }
        GuessInstance { guess, beta, gamma, side, left, right, active, sparsifier: Sparsifier::new(n, mix_seed(&[seed, 1])) }
    }

    fn is_left(&self, v: Vertex) -> bool {
        self.side.bucket(v as u64, 2) == 0
    }

    fn key(&self, e: Edge) -> Option<PairKey> {
        let (l, r) = match (self.is_left(e.u), self.is_left(e.v)) {
            (true, false) => (e.u, e.v),
            (false, true) => (e.v, e.u),
            _ => return None,
        };
        let i = self.left.bucket(l as u64, self.beta as u64) as u32;
        let j = self.right.bucket(r as u64, self.beta as u64) as u32;
        self.active[i as usize].binary_search(&j).ok().map(|_| (i, j))
    }

    fn declared_words(&self) -> u64 {
        self.beta as u64 * self.gamma as u64 * self.sparsifier.sketch_words()
    }
}

/// Per-instance report for the dynamic matcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuessReport {
    pub guess: usize,
    pub active_pairs: u64,
    pub live_sketches: usize,
    pub matching: usize,
}

/// Dynamic `O(alpha)`-approximate matching through active-pair sparsifiers,
/// one instance per guess `n, n/2, ..., 1`.
#[derive(Clone, Debug)]
pub struct Akly {
    n: usize,
    cap: usize,
    instances: Vec<GuessInstance>,
    engine: Engine,
}

impl Akly {
    pub fn new(config: ConnectivityConfig, alpha: f64, kappa: f64) -> Self {
        let n = config.n;
        let k = config.batch_cap() as f64;
        let cap = (libm::floor(libm::pow(k, 1.0 - kappa)) as usize).max(1);
        let mut instances = Vec::new();
        let mut guess = n.max(1);
        loop {
            instances.push(GuessInstance::new(n, guess, alpha, mix_seed(&[config.seed, 0x616b_6c79, guess as u64])));
            if guess == 1 {
                break;
            }
            guess /= 2;
        }
        Akly { n, cap, instances, engine: Engine::new(config.engine_config()) }
    }

    pub fn batch_cap(&self) -> usize {
        self.cap
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MatchingError> {
        check_batch(batch, self.n, self.cap)?;
        self.engine.begin_batch();
        self.engine.batch_intake(batch.len(), UPDATE_WORDS)?;
        self.engine.broadcast(UPDATE_WORDS * batch.len() as u64)?;
        let mut touched_total = 0;
        let mut h_delta = 0;
        for inst in &mut self.instances {
            let ups: Vec<(PairKey, Edge, i64)> = batch
                .updates
                .iter()
                .filter_map(|u| {
                    let delta = if u.kind == UpdateKind::Insert { 1 } else { -1 };
                    inst.key(u.edge).map(|k| (k, u.edge, delta))
                })
                .collect();
            let touched = inst.sparsifier.apply(&ups);
            touched_total += touched;
            h_delta = h_delta.max(4 * touched as u64);
        }
        // sketch holders report old and new samples
        let machines = self.engine.machines();
        self.engine.map_over_partition((0..touched_total as u64).map(|i| (i % machines, 4)))?;
        self.engine.local("sparsifier_repair", h_delta)?;
        let words = self.sketch_records();
        self.engine.set_resident(words)?;
        Ok(self.engine.end_batch())
    }

    fn sketch_records(&self) -> Vec<u64> {
        self.instances
            .iter()
            .flat_map(|i| core::iter::repeat_n(i.sparsifier.sketch_words(), i.sparsifier.sketches.len()))
            .collect()
    }

    /// Largest maintained matching over all guesses.
    pub fn matching(&self) -> Vec<Edge> {
        self.instances.iter().max_by_key(|i| (i.sparsifier.size(), i.guess)).map(|i| i.sparsifier.matching()).unwrap_or_default()
    }

    pub fn size(&self) -> usize {
        self.instances.iter().map(|i| i.sparsifier.size()).max().unwrap_or(0)
    }

    pub fn reports(&self) -> Vec<GuessReport> {
        self.instances
            .iter()
            .map(|i| GuessReport {
                guess: i.guess,
                active_pairs: i.beta as u64 * i.gamma as u64,
                live_sketches: i.sparsifier.sketches.len(),
                matching: i.sparsifier.size(),
            })
            .collect()
    }

    /// Words all active pairs would take if every sketch were allocated.
    pub fn declared_words(&self) -> u64 {
        self.instances.iter().map(|i| i.declared_words()).sum()
    }

    pub fn live_words(&self) -> u64 {
        self.instances.iter().map(|i| i.sparsifier.live_words()).sum()
    }

    /// Sampled edges of every instance, for checks against the true graph.
    pub fn sampled_edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self.instances.iter().flat_map(|i| i.sparsifier.sampled_edges()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Clone, Debug)]
enum TesterState {
    Greedy(GreedyMatching),
    Sketched { groups: u32, hash: PairwiseHash, sparsifier: Sparsifier, engine: Engine, k_max: usize },
}

/// Distinguishes matching number at least `k` from at most `k/2`.
#[derive(Clone, Debug)]
pub struct Tester {
    n: usize,
    k: usize,
    state: TesterState,
}

impl Tester {
    /// Greedy matching capped at `k`; deletions are rejected.
    pub fn insertion_only(config: ConnectivityConfig, k: usize) -> Self {
        Tester { n: config.n, k, state: TesterState::Greedy(GreedyMatching::with_cap(config, k)) }
    }

    /// Pair sketches over `4k` hashed vertex groups.
    pub fn dynamic(config: ConnectivityConfig, k: usize) -> Self {
        let groups = (TESTER_GROUP_FACTOR * k.max(1)) as u32;
        let mut rng = stream_rng(mix_seed(&[config.seed, 0x7465_7374, k as u64]), 0);
        let hash = PairwiseHash::draw(&mut rng);
        let sparsifier = Sparsifier::new(config.n, mix_seed(&[config.seed, 0x7465_7374, k as u64, 1]));
        Tester {
            n: config.n,
            k,
            state: TesterState::Sketched { groups, hash, sparsifier, engine: Engine::new(config.engine_config()), k_max: config.batch_cap() },
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MatchingError> {
        match &mut self.state {
            TesterState::Greedy(g) => g.apply_batch(batch),
            TesterState::Sketched { groups, hash, sparsifier, engine, k_max } => {
                check_batch(batch, self.n, *k_max)?;
                engine.begin_batch();
                engine.batch_intake(batch.len(), UPDATE_WORDS)?;
                engine.broadcast(UPDATE_WORDS * batch.len() as u64)?;
                let ups: Vec<(PairKey, Edge, i64)> = batch
                    .updates
                    .iter()
                    .map(|u| {
                        let a = hash.bucket(u.edge.u as u64, *groups as u64) as u32;
                        let b = hash.bucket(u.edge.v as u64, *groups as u64) as u32;
                        let delta = if u.kind == UpdateKind::Insert { 1 } else { -1 };
                        ((a.min(b), a.max(b)), u.edge, delta)
                    })
                    .collect();
                let touched = sparsifier.apply(&ups) as u64;
                let machines = engine.machines();
                engine.map_over_partition((0..touched).map(|i| (i % machines, 4)))?;
                engine.local("sparsifier_repair", 4 * touched)?;
                let words = sparsifier.sketch_words();
                engine.set_resident(core::iter::repeat_n(words, sparsifier.sketches.len()))?;
                Ok(engine.end_batch())
            }
        }
    }

    pub fn matching_size(&self) -> usize {
        match &self.state {
            TesterState::Greedy(g) => g.size(),
            TesterState::Sketched { sparsifier, .. } => sparsifier.size(),
        }
    }

    /// True when the maintained matching exceeds `k/2`.
    pub fn verdict(&self) -> bool {
        2 * self.matching_size() > self.k
    }
}

/// Matching-size estimate from testers on vertex-sampled subgraphs.
///
/// Rung `j` targets `tau = 2^j`. It keeps each vertex with probability `p` where
/// `p^2 = min(1, k_cap / tau)` and tests for `p^2 * tau` on what survives.
#[derive(Clone, Debug)]
pub struct SizeEstimator {
    rungs: Vec<Rung>,
}

#[derive(Clone, Debug)]
struct Rung {
    tau: usize,
    keep_below: u64,
    hash: PairwiseHash,
    tester: Tester,
}

impl SizeEstimator {
    pub fn new(config: ConnectivityConfig, alpha: f64, dynamic: bool) -> Self {
        let n = config.n.max(2);
        let k_cap = libm::ceil(n as f64 / (alpha * alpha)).max(1.0);
        let mut rungs = Vec::new();
        let mut tau = 1usize;
        let mut j = 0u64;
        while tau <= n / 2 {
            let p2 = (k_cap / tau as f64).min(1.0);
            let k = (libm::round(p2 * tau as f64) as usize).max(1);
            let mut rng = stream_rng(mix_seed(&[config.seed, 0x7369_7a65, j]), 0);
            let hash = PairwiseHash::draw(&mut rng);
            let keep_below = (libm::sqrt(p2) * crate::field::MODULUS as f64) as u64;
            let mut cfg = config;
            cfg.seed = mix_seed(&[config.seed, 0x7369_7a65, j, 1]);
            let tester = if dynamic { Tester::dynamic(cfg, k) } else { Tester::insertion_only(cfg, k) };
            rungs.push(Rung { tau, keep_below, hash, tester });
            tau *= 2;
            j += 1;
        }
        SizeEstimator { rungs }
    }

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MatchingError> {
        let mut stats = RoundStats::default();
        for r in &mut self.rungs {
            let kept = |v: Vertex| r.keep_below >= crate::field::MODULUS || r.hash.hash(v as u64) < r.keep_below;
            let sub = UpdateBatch::new(batch.updates.iter().copied().filter(|u| kept(u.edge.u) && kept(u.edge.v)).collect());
            let s = r.tester.apply_batch(&sub)?;
            stats.rounds = stats.rounds.max(s.rounds);
            stats.peak_machine_memory = stats.peak_machine_memory.max(s.peak_machine_memory);
            stats.total_communication += s.total_communication;
            stats.broadcasts += s.broadcasts;
        }
        Ok(stats)
    }

    /// Largest `tau` whose tester says yes, or 0.
    pub fn estimate(&self) -> usize {
        self.rungs.iter().filter(|r| r.tester.verdict()).map(|r| r.tau).max().unwrap_or(0)
    }

    /// `(tau, k, verdict)` for every rung.
    pub fn rungs(&self) -> Vec<(usize, usize, bool)> {
        self.rungs.iter().map(|r| (r.tau, r.tester.k(), r.tester.verdict())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Update;
    use crate::mpc_engine::AccountingMode;
    use crate::oracle;
    use alloc::vec;

    fn config(n: usize) -> ConnectivityConfig {
        ConnectivityConfig::new(n, 0.5, AccountingMode::Idealized, 11).with_k_max(64).with_local_memory(1 << 22)
    }

    fn inserts(list: &[(u32, u32)]) -> UpdateBatch {
        UpdateBatch::new(list.iter().map(|&(a, b)| Update::insert(a, b)).collect())
    }

    #[test]
    fn greedy_adds_fresh_edge() {
        let mut g = GreedyMatching::new(config(8), 1.0);
        g.apply_batch(&inserts(&[(0, 1)])).unwrap();
        assert_eq!(g.size(), 1);
        g.apply_batch(&inserts(&[(1, 2), (1, 3), (1, 4)])).unwrap();
        assert_eq!(g.size(), 1);
        g.apply_batch(&inserts(&[(2, 3), (2, 4)])).unwrap();
        assert_eq!(g.size(), 2);
    }

    #[test]
    fn greedy_respects_cap() {
        let mut g = GreedyMatching::with_cap(config(16), 2);
        g.apply_batch(&inserts(&[(0, 1), (2, 3), (4, 5)])).unwrap();
        assert_eq!(g.size(), 2);
        assert!(oracle::is_matching(g.edges()));
        assert_eq!(g.apply_batch(&UpdateBatch::new(vec![Update::delete(0, 1)])), Err(MatchingError::InsertionOnly));
    }

    #[test]
    fn akly_tracks_pair_deletion() {
        let mut a = Akly::new(config(64), 2.0, 0.0);
        assert!(a.matching().is_empty());
        let pm: Vec<(u32, u32)> = (0..32).map(|i| (i, i + 32)).collect();
        for chunk in pm.chunks(8) {
            a.apply_batch(&inserts(chunk)).unwrap();
        }
        assert!(a.size() > 0);
        assert!(oracle::is_matching(&a.matching()));
        let all: BTreeSet<Edge> = pm.iter().map(|&(x, y)| Edge::new(x, y)).collect();
        assert!(a.sampled_edges().iter().all(|e| all.contains(e)));
        for chunk in pm.chunks(8) {
            a.apply_batch(&UpdateBatch::new(chunk.iter().map(|&(x, y)| Update::delete(x, y)).collect())).unwrap();
        }
        assert_eq!(a.size(), 0);
        assert!(a.sampled_edges().is_empty());
        assert_eq!(a.live_words(), 0);
    }

    #[test]
    fn tester_modes_on_planted_matching() {
        let k = 8;
        let pm: Vec<(u32, u32)> = (0..k as u32).map(|i| (2 * i, 2 * i + 1)).collect();
        for dynamic in [false, true] {
            let mut t = if dynamic { Tester::dynamic(config(32), k) } else { Tester::insertion_only(config(32), k) };
            assert!(!t.verdict());
            t.apply_batch(&inserts(&pm)).unwrap();
            assert!(t.verdict(), "dynamic = {dynamic}");
        }
    }

    #[test]
    fn tester_rejects_small_stars() {
        // two stars: matching number 2 = k/2
        let mut t = Tester::insertion_only(config(32), 4);
        t.apply_batch(&inserts(&[(0, 1), (0, 2), (0, 3), (10, 11), (10, 12)])).unwrap();
        assert!(!t.verdict());
    }

    #[test]
    fn estimator_empty_and_planted() {
        let est = SizeEstimator::new(config(64), 2.0, false);
        assert_eq!(est.estimate(), 0);
        let mut est = SizeEstimator::new(config(64), 2.0, false);
        let pm: Vec<(u32, u32)> = (0..32).map(|i| (2 * i, 2 * i + 1)).collect();
        for chunk in pm.chunks(16) {
            est.apply_batch(&inserts(chunk)).unwrap();
        }
        let e = est.estimate();
        assert!((4..=32).contains(&e), "{e}");
    }
}
