//! Minimum spanning forests and bipartiteness on top of the forest machinery.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use thiserror::Error;

use crate::connectivity::{Connectivity, ConnectivityConfig, ConnectivityError};
use crate::euler_tour::{EulerError, EulerForest, TourId};
use crate::field::mix_seed;
use crate::graph::{weighted_cmp, Edge, Update, UpdateBatch, Vertex};
use crate::mpc_engine::{AccountingError, Engine, RoundStats};
use crate::oracle::UnionFind;

/// Words of one weighted edge record.
const WEIGHTED_EDGE_WORDS: u64 = 3;

/// Upper bound on cross/intra passes in one batch; each pass strictly lowers the
/// forest weight, so this is never reached on valid input.
const MAX_PASSES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MsfError {
    #[error("deletions are not supported by the exact forest")]
    InsertionOnly,
    #[error("weight {0} outside [1, W]")]
    WeightOutOfRange(f64),
    #[error("update on ({0}, {1}) carries no weight")]
    MissingWeight(Vertex, Vertex),
    #[error("edge ({0}, {1}) is already in the forest")]
    DuplicateEdge(Vertex, Vertex),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error("batch of {len} updates exceeds the cap of {cap}")]
    BatchTooLarge { len: usize, cap: usize },
    #[error(transparent)]
    Connectivity(#[from] ConnectivityError),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
}

fn weight_of(u: &Update) -> Result<f64, MsfError> {
    u.weight.ok_or(MsfError::MissingWeight(u.edge.u, u.edge.v))
}

/// Exact minimum spanning forest under insertions.
///
/// Only the forest and its weights are stored. An inserted edge either joins two
/// trees or closes a cycle, in which case the heaviest edge on that cycle leaves.
/// Ties follow the `(weight, u, v)` order.
#[derive(Clone, Debug)]
pub struct MsfExact {
    forest: EulerForest,
    weights: BTreeMap<Edge, f64>,
    engine: Engine,
    k_max: usize,
}

impl MsfExact {
    pub fn new(config: ConnectivityConfig) -> Self {
        MsfExact {
            forest: EulerForest::new(config.n),
            weights: BTreeMap::new(),
            engine: Engine::new(config.engine_config()),
            k_max: config.batch_cap(),
        }
    }

    pub fn n(&self) -> usize {
        self.forest.n()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn forest(&self) -> &EulerForest {
        &self.forest
    }

    /// Forest edges, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        self.weights.keys().copied().collect()
    }

    pub fn weighted_edges(&self) -> Vec<(f64, Edge)> {
        self.weights.iter().map(|(&e, &w)| (w, e)).collect()
    }

    pub fn weight(&self) -> f64 {
        self.weights.values().sum()
    }

    fn check(&self, e: Edge) -> Result<(), MsfError> {
        if e.v as usize >= self.n() {
            return Err(MsfError::VertexOutOfRange(e.v));
        }
        if self.weights.contains_key(&e) {
            return Err(MsfError::DuplicateEdge(e.u, e.v));
        }
        Ok(())
    }

    fn refresh_resident(&mut self) -> Result<(), AccountingError> {
        let words: Vec<u64> = (0..self.n() as Vertex).map(|v| self.forest.vertex_words(v) + self.forest.degree(v) as u64).collect();
        self.engine.set_resident(words)
    }

    fn tour_lookups(&mut self, edges: &[(f64, Edge)]) -> Result<(), AccountingError> {
        let sends: Vec<(u64, u64)> = edges.iter().flat_map(|(_, e)| [(self.machine_of(e.u), 1), (self.machine_of(e.v), 1)]).collect();
        self.engine.map_over_partition(sends)
    }

    fn machine_of(&self, v: Vertex) -> u64 {
        let p = self.engine.partition();
        if p.machines_used() == 0 {
            0
        } else {
            p.machine_of(v as usize)
        }
    }

    /// Heaviest edge on the tree path between `u` and `v`.
    fn heaviest(&self, path: &[Edge]) -> (f64, Edge) {
        path.iter()
            .map(|e| (self.weights[e], *e))
            .max_by(|a, b| weighted_cmp(*a, *b))
            .expect("nonempty path")
    }

    /// Inserts a single weighted edge.
    pub fn insert(&mut self, e: Edge, w: f64) -> Result<RoundStats, MsfError> {
        self.check(e)?;
        self.engine.begin_batch();
        self.engine.broadcast(WEIGHTED_EDGE_WORDS)?;
        self.tour_lookups(&[(w, e)])?;
        if self.forest.tour_of(e.u) != self.forest.tour_of(e.v) {
            self.link(e, w)?;
        } else {
            let path = self.forest.identify_path(&mut self.engine, e.u, e.v)?;
            self.engine.charge_aggregates(&[path.len() as u64], WEIGHTED_EDGE_WORDS)?;
            let (hw, he) = self.heaviest(&path);
            if weighted_cmp((hw, he), (w, e)).is_gt() {
                self.forest.split(&mut self.engine, he.u, he.v)?;
                self.weights.remove(&he);
                self.link(e, w)?;
            }
        }
        self.refresh_resident()?;
        Ok(self.engine.end_batch())
    }

    fn link(&mut self, e: Edge, w: f64) -> Result<(), MsfError> {
        self.forest.reroot(&mut self.engine, self.forest.tour_of(e.u), e.u)?;
        self.forest.reroot(&mut self.engine, self.forest.tour_of(e.v), e.v)?;
        self.forest.join(&mut self.engine, e.u, e.v)?;
        self.weights.insert(e, w);
        Ok(())
    }

    /// Inserts a batch of weighted edges; deletions are rejected.
    ///
    /// Each pass first links trees with a minimum spanning forest of the
    /// contracted graph, then lets every remaining edge evict the heaviest edge
    /// on its tree path when lighter. Winners and evicted edges go to the next
    /// pass until nothing moves.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MsfError> {
        if batch.deletes().next().is_some() {
            return Err(MsfError::InsertionOnly);
        }
        if batch.len() > self.k_max {
            return Err(MsfError::BatchTooLarge { len: batch.len(), cap: self.k_max });
        }
        let mut pending = Vec::with_capacity(batch.len());
        let mut seen = BTreeSet::new();
        for u in batch.inserts() {
            self.check(u.edge)?;
            if !seen.insert(u.edge) {
                return Err(MsfError::DuplicateEdge(u.edge.u, u.edge.v));
            }
            pending.push((weight_of(u)?, u.edge));
        }
        self.engine.begin_batch();
        self.engine.batch_intake(batch.len(), WEIGHTED_EDGE_WORDS)?;
        let mut passes = 0;
        while !pending.is_empty() {
            passes += 1;
            assert!(passes <= MAX_PASSES, "forest weight failed to decrease");
            pending = self.pass(pending)?;
        }
        self.refresh_resident()?;
        Ok(self.engine.end_batch())
    }

    fn pass(&mut self, mut pending: Vec<(f64, Edge)>) -> Result<Vec<(f64, Edge)>, MsfError> {
        // linking phase: Kruskal over the graph contracted by current trees
        self.engine.broadcast(WEIGHTED_EDGE_WORDS * pending.len() as u64)?;
        self.tour_lookups(&pending)?;
        self.engine.local("contracted_graph", 4 * pending.len() as u64)?;
        pending.sort_by(|a, b| weighted_cmp(*a, *b));
        let mut tours: Vec<TourId> = pending.iter().flat_map(|(_, e)| [self.forest.tour_of(e.u), self.forest.tour_of(e.v)]).collect();
        tours.sort_unstable();
        tours.dedup();
        let slot = |t: TourId| tours.binary_search(&t).expect("listed");
        let mut uf = UnionFind::new(tours.len());
        let mut linked = Vec::new();
        let mut closing = Vec::new();
        for &(w, e) in &pending {
            let (a, b) = (slot(self.forest.tour_of(e.u)), slot(self.forest.tour_of(e.v)));
            if uf.union(a, b) {
                linked.push(e);
                self.weights.insert(e, w);
            } else {
                closing.push((w, e));
            }
        }
        self.forest.batch_join(&mut self.engine, &linked)?;

        // eviction phase: every cycle-closing edge against its tree path
        let pairs: Vec<(Vertex, Vertex)> = closing.iter().map(|(_, e)| (e.u, e.v)).collect();
        let paths = if pairs.is_empty() { Vec::new() } else { self.forest.identify_paths(&mut self.engine, &pairs)? };
        let lengths: Vec<u64> = paths.iter().map(|p| p.len() as u64).collect();
        self.engine.charge_aggregates(&lengths, WEIGHTED_EDGE_WORDS)?;
        let mut winners = Vec::new();
        let mut evicted = BTreeSet::new();
        for (&(w, e), path) in closing.iter().zip(&paths) {
            let (hw, he) = self.heaviest(path);
            if weighted_cmp((hw, he), (w, e)).is_gt() {
                winners.push((w, e));
                evicted.insert(he);
            }
        }
        let evicted: Vec<Edge> = evicted.into_iter().collect();
        self.forest.batch_split(&mut self.engine, &evicted)?;
        let mut next = winners;
        for e in evicted {
            let w = self.weights.remove(&e).expect("tree edge");
            next.push((w, e));
        }
        Ok(next)
    }
}

/// Smallest level `i` with `w <= (1+eps)^i`, within floating tolerance.
pub fn weight_level(w: f64, eps: f64) -> usize {
    let mut i = 0;
    let mut threshold = 1.0;
    while w > threshold * (1.0 + 1e-12) {
        threshold *= 1.0 + eps;
        i += 1;
    }
    i
}

/// Number of the top level: `ceil(log_{1+eps} W)`.
pub fn level_count(max_weight: f64, eps: f64) -> usize {
    weight_level(max_weight, eps)
}

/// One connectivity instance per weight threshold `(1+eps)^i`, `i = 0..=t`.
#[derive(Clone, Debug)]
pub struct MsfApprox {
    levels: Vec<Connectivity>,
    eps: f64,
    max_weight: f64,
}

impl MsfApprox {
    pub fn new(config: ConnectivityConfig, eps: f64, max_weight: f64) -> Self {
        assert!(eps > 0.0 && max_weight >= 1.0, "eps > 0 and W >= 1");
        let t = level_count(max_weight, eps);
        let levels = (0..=t)
            .map(|i| {
                let mut c = config;
                c.seed = mix_seed(&[config.seed, 0x6c65_7665_6c00 + i as u64]);
                Connectivity::new(c)
            })
            .collect();
        MsfApprox { levels, eps, max_weight }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Index of the top level.
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, i: usize) -> &Connectivity {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[Connectivity] {
        &self.levels
    }

    pub fn threshold(&self, i: usize) -> f64 {
        libm::pow(1.0 + self.eps, i as f64)
    }

    /// Component count of every level.
    pub fn level_components(&self) -> Vec<usize> {
        self.levels.iter().map(|c| c.count_components()).collect()
    }

    /// Words held by all levels together.
    pub fn peak_total_memory(&self) -> u64 {
        self.levels.iter().map(|c| c.engine().peak_total_memory()).sum()
    }

    /// Routes each update to every level whose threshold admits its weight.
    /// Levels run side by side: rounds are the maximum over levels.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MsfError> {
        let mut per_level: Vec<Vec<Update>> = alloc::vec![Vec::new(); self.levels.len()];
        for u in &batch.updates {
            let w = weight_of(u)?;
            if !(1.0..=self.max_weight).contains(&w) {
                return Err(MsfError::WeightOutOfRange(w));
            }
            for level in per_level.iter_mut().skip(weight_level(w, self.eps)) {
                level.push(*u);
            }
        }
        let mut stats = RoundStats::default();
        for (c, ups) in self.levels.iter_mut().zip(per_level) {
            let s = c.apply_batch(&UpdateBatch::new(ups))?;
            stats.rounds = stats.rounds.max(s.rounds);
            stats.peak_machine_memory = stats.peak_machine_memory.max(s.peak_machine_memory);
            stats.total_communication += s.total_communication;
            stats.broadcasts += s.broadcasts;
        }
        Ok(stats)
    }

    /// Weight estimate from per-level component counts:
    /// `n - (1+eps)^t cc(G_t) + sum_{i<t} lambda_i cc(G_i)`.
    pub fn weight_estimate(&self) -> f64 {
        estimate_from_counts(self.levels[0].n(), self.eps, &self.level_components())
    }

    /// Spanning forest assembled from the level forests, lowest level first.
    pub fn forest(&self) -> Vec<Edge> {
        let mut uf = UnionFind::new(self.levels[0].n());
        let mut out = Vec::new();
        for c in &self.levels {
            for e in c.spanning_forest() {
                if uf.union(e.u as usize, e.v as usize) {
                    out.push(e);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// The level estimate as a function of the component counts `cc[0..=t]`.
pub fn estimate_from_counts(n: usize, eps: f64, cc: &[usize]) -> f64 {
    let t = cc.len() - 1;
    let grow = |i: usize| libm::pow(1.0 + eps, i as f64);
    let mut total = n as f64 - grow(t) * cc[t] as f64;
    for (i, &c) in cc.iter().enumerate().take(t) {
        total += (grow(i + 1) - grow(i)) * c as f64;
    }
    total
}

/// Bipartiteness through the double cover: `G` is bipartite iff its cover has
/// twice as many components.
#[derive(Clone, Debug)]
pub struct Bipartiteness {
    base: Connectivity,
    cover: Connectivity,
}

impl Bipartiteness {
    pub fn new(config: ConnectivityConfig) -> Self {
        let mut cover = config;
        cover.n = 2 * config.n;
        cover.seed = mix_seed(&[config.seed, 0x63_6f76_6572]);
        cover.k_max = Some(config.k_max.unwrap_or_else(|| config.batch_cap()) * 2);
        Bipartiteness { base: Connectivity::new(config), cover: Connectivity::new(cover) }
    }

    pub fn base(&self) -> &Connectivity {
        &self.base
    }

    pub fn cover(&self) -> &Connectivity {
        &self.cover
    }

    /// The two cover updates for one input update.
    pub fn lift(n: usize, u: &Update) -> [Update; 2] {
        let (a, b) = (u.edge.u, u.edge.v);
        let n = n as Vertex;
        let make = |x, y| Update { kind: u.kind, edge: Edge::new(x, y), weight: u.weight };
        [make(a, b + n), make(a + n, b)]
    }

    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, MsfError> {
        let n = self.base.n();
        let lifted = UpdateBatch::new(batch.updates.iter().flat_map(|u| Self::lift(n, u)).collect());
        let mut stats = self.base.apply_batch(batch)?;
        let s = self.cover.apply_batch(&lifted)?;
        stats.rounds = stats.rounds.max(s.rounds);
        stats.peak_machine_memory = stats.peak_machine_memory.max(s.peak_machine_memory);
        stats.total_communication += s.total_communication;
        stats.broadcasts += s.broadcasts;
        Ok(stats)
    }

    pub fn is_bipartite(&self) -> bool {
        self.cover.count_components() == 2 * self.base.count_components()
    }
}
