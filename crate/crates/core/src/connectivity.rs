//! Dynamic spanning forest and connectivity from vertex incidence sketches.
//!
//! Every vertex keeps sketches of its signed incidence vector. A tree edge
//! deletion splits the Euler tour of its tree, and a replacement edge is drawn
//! from the merged sketch of a fragment, whose internal edges cancel.
//!
//! Batches run insertions first, then deletions, through a fixed sequence of
//! engine primitives, so the round count of a batch does not depend on its
//! contents in idealized accounting.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use thiserror::Error;

use crate::euler_tour::{EulerError, EulerForest, TourId};
use crate::field::mix_seed;
use crate::graph::{Edge, UpdateBatch, UpdateKind, Vertex};
use crate::l0_sketch::{EdgeCoordinates, L0Sketch, SketchError, SketchFamily, SketchParams};
use crate::mpc_engine::{AccountingError, AccountingMode, Engine, EngineConfig, RoundStats};

/// Words per update record during intake: two endpoints and a tag.
pub const UPDATE_WORDS: u64 = 3;

/// Number of independent sketches per vertex in batch mode.
pub fn batch_sketch_count(n: usize) -> usize {
    (libm::ceil(2.0 * libm::log2(n.max(2) as f64)) as usize).max(1)
}

fn batch_params(n: usize, seed: u64) -> SketchParams {
    SketchParams::new(EdgeCoordinates::new(n).dimension(), 1, 4, seed).expect("valid parameters")
}

fn single_params(n: usize, seed: u64) -> SketchParams {
    let n = n.max(2) as u64;
    SketchParams::new(EdgeCoordinates::new(n as usize).dimension(), 1, n * n * n, seed).expect("valid parameters")
}

/// Words of one vertex's batch-mode sketch bank.
pub fn batch_bank_words(n: usize) -> u64 {
    batch_sketch_count(n) as u64 * batch_params(n, 0).words()
}

/// Average words resident per vertex in batch mode: the sketch bank, two tree
/// edge records, the tour id and the component id.
pub fn vertex_slot_words(n: usize) -> u64 {
    batch_bank_words(n) + 2 * crate::euler_tour::RECORD_WORDS + 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SketchMode {
    /// One sketch per vertex with failure probability n^-3.
    Single,
    /// `ceil(2 log2 n)` sketches per vertex with failure probability 1/4 each.
    Batch,
}

/// Per-vertex sketches of the signed incidence vectors.
#[derive(Clone, Debug)]
pub struct SketchBank {
    coords: EdgeCoordinates,
    families: Vec<Arc<SketchFamily>>,
    sketches: Vec<L0Sketch>,
}

impl PartialEq for SketchBank {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.sketches == other.sketches
    }
}

impl SketchBank {
    pub fn new(n: usize, mode: SketchMode, seed: u64) -> Self {
        let coords = EdgeCoordinates::new(n);
        let families: Vec<Arc<SketchFamily>> = match mode {
            SketchMode::Single => alloc::vec![SketchFamily::new(single_params(n, mix_seed(&[seed, 0])))],
            SketchMode::Batch => (0..batch_sketch_count(n))
                .map(|i| SketchFamily::new(batch_params(n, mix_seed(&[seed, i as u64 + 1]))))
                .collect(),
        };
        let mut sketches = Vec::with_capacity(n * families.len());
        for _ in 0..n {
            for fam in &families {
                sketches.push(fam.zero());
            }
        }
        SketchBank { coords, families, sketches }
    }

    /// Bank built directly from an edge set.
    pub fn from_edges(n: usize, mode: SketchMode, seed: u64, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut bank = Self::new(n, mode, seed);
        for e in edges {
            bank.update(e, 1);
        }
        bank
    }

    pub fn coords(&self) -> &EdgeCoordinates {
        &self.coords
    }

    /// Independent sketches per vertex.
    pub fn depth(&self) -> usize {
        self.families.len()
    }

    pub fn sketch(&self, v: Vertex, level: usize) -> &L0Sketch {
        &self.sketches[v as usize * self.depth() + level]
    }

    pub fn vertex_words(&self) -> u64 {
        self.families.iter().map(|f| f.params().words()).sum()
    }

    /// Adds `delta` times edge `e` to both endpoint vectors.
    pub fn update(&mut self, e: Edge, delta: i64) {
        let idx = self.coords.index(e);
        let depth = self.depth();
        for (i, fam) in self.families.iter().enumerate() {
            let prepared = fam.prepare(idx).expect("edge index below C(n,2)");
            self.sketches[e.u as usize * depth + i].apply(&prepared, -delta);
            self.sketches[e.v as usize * depth + i].apply(&prepared, delta);
        }
    }

    /// Sum of one level's sketches over `vertices`.
    pub fn aggregate(&self, vertices: &[Vertex], level: usize) -> L0Sketch {
        let mut acc = self.families[level].zero();
        for &v in vertices {
            acc.add_assign(self.sketch(v, level)).expect("same family");
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConnectivityError {
    #[error("batch of {len} updates exceeds the cap of {cap}")]
    BatchTooLarge { len: usize, cap: usize },
    #[error("edge ({0}, {1}) is already in the forest")]
    DuplicateEdge(Vertex, Vertex),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(Vertex),
    #[error(transparent)]
    Euler(#[from] EulerError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

impl From<ConnectivityError> for Option<AccountingError> {
    fn from(e: ConnectivityError) -> Self {
        match e {
            ConnectivityError::Accounting(a) => Some(a),
            ConnectivityError::Euler(EulerError::Accounting(a)) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectivityConfig {
    pub n: usize,
    pub phi: f64,
    pub accounting: AccountingMode,
    pub seed: u64,
    pub sketch_mode: SketchMode,
    pub k_max: Option<usize>,
    pub local_memory: Option<u64>,
}

impl ConnectivityConfig {
    pub fn new(n: usize, phi: f64, accounting: AccountingMode, seed: u64) -> Self {
        ConnectivityConfig { n, phi, accounting, seed, sketch_mode: SketchMode::Batch, k_max: None, local_memory: None }
    }

    pub fn with_sketch_mode(mut self, mode: SketchMode) -> Self {
        self.sketch_mode = mode;
        self
    }

    pub fn with_k_max(mut self, k: usize) -> Self {
        self.k_max = Some(k);
        self
    }

    pub fn with_local_memory(mut self, words: u64) -> Self {
        self.local_memory = Some(words);
        self
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = EngineConfig::new(self.n, self.phi, self.accounting, self.seed);
        if let Some(s) = self.local_memory {
            cfg = cfg.with_local_memory(s);
        }
        cfg
    }

    /// Default batch cap: an eighth of local memory measured in vertex banks.
    pub fn batch_cap(&self) -> usize {
        self.k_max.unwrap_or_else(|| {
            let cfg = self.engine_config();
            (cfg.local_memory() / (8 * cfg.slot_words.max(1))).max(1) as usize
        })
    }
}

/// Spanning forest, component ids and sketches for one graph.
#[derive(Clone, Debug)]
pub struct Connectivity {
    config: ConnectivityConfig,
    forest: EulerForest,
    component: Vec<Vertex>,
    bank: SketchBank,
    engine: Engine,
    k_max: usize,
}

impl Connectivity {
    pub fn new(config: ConnectivityConfig) -> Self {
        let n = config.n;
        Connectivity {
            forest: EulerForest::new(n),
            component: (0..n as Vertex).collect(),
            bank: SketchBank::new(n, config.sketch_mode, config.seed),
            engine: Engine::new(config.engine_config()),
            k_max: config.batch_cap(),
            config,
        }
    }

    /// Starts from an existing graph. Setup work is not charged to the engine.
    pub fn with_graph(config: ConnectivityConfig, edges: &[Edge]) -> Self {
        let n = config.n;
        let mut parent: Vec<usize> = (0..n).collect();
        let mut tree = Vec::new();
        for e in edges {
            let (a, b) = (find(&mut parent, e.u as usize), find(&mut parent, e.v as usize));
            if a != b {
                parent[a.max(b)] = a.min(b);
                tree.push(*e);
            }
        }
        let component = (0..n).map(|v| find(&mut parent, v) as Vertex).collect();
        let mut out = Connectivity {
            forest: EulerForest::from_edges(n, &tree).expect("forest by construction"),
            component,
            bank: SketchBank::from_edges(n, config.sketch_mode, config.seed, edges.iter().copied()),
            engine: Engine::new(config.engine_config()),
            k_max: config.batch_cap(),
            config,
        };
        out.refresh_resident().expect("initial state fits the budget");
        out
    }

    pub fn config(&self) -> &ConnectivityConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
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

    pub fn bank(&self) -> &SketchBank {
        &self.bank
    }

    pub fn spanning_forest(&self) -> Vec<Edge> {
        self.forest.edges().collect()
    }

    pub fn component(&self, v: Vertex) -> Vertex {
        self.component[v as usize]
    }

    pub fn components(&self) -> &[Vertex] {
        &self.component
    }

    pub fn same_component(&self, u: Vertex, v: Vertex) -> bool {
        self.component[u as usize] == self.component[v as usize]
    }

    /// Number of distinct component ids.
    pub fn count_components(&self) -> usize {
        self.component.iter().enumerate().filter(|&(v, &c)| v as Vertex == c).count()
    }

    /// Words resident on behalf of vertex `v`.
    fn vertex_words(&self, v: Vertex) -> u64 {
        self.bank.vertex_words() + self.forest.vertex_words(v) + 1
    }

    fn refresh_resident(&mut self) -> Result<(), AccountingError> {
        let words: Vec<u64> = (0..self.n() as Vertex).map(|v| self.vertex_words(v)).collect();
        self.engine.set_resident(words)
    }

    fn machine_of(&self, v: Vertex) -> u64 {
        let p = self.engine.partition();
        if p.machines_used() == 0 {
            0
        } else {
            p.machine_of(v as usize)
        }
    }

    fn check_edge(&self, e: Edge) -> Result<(), ConnectivityError> {
        if e.v as usize >= self.n() {
            return Err(ConnectivityError::VertexOutOfRange(e.v));
        }
        Ok(())
    }

    /// Inserts one edge.
    pub fn insert(&mut self, e: Edge) -> Result<RoundStats, ConnectivityError> {
        self.apply_batch(&UpdateBatch::new(alloc::vec![crate::graph::Update { kind: UpdateKind::Insert, edge: e, weight: None }]))
    }

    /// Deletes one edge.
    pub fn delete(&mut self, e: Edge) -> Result<RoundStats, ConnectivityError> {
        self.apply_batch(&UpdateBatch::new(alloc::vec![crate::graph::Update { kind: UpdateKind::Delete, edge: e, weight: None }]))
    }

    /// Processes a batch: insertions, then deletions. Returns the batch's cost.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<RoundStats, ConnectivityError> {
        let inserts: Vec<Edge> = batch.inserts().map(|u| u.edge).collect();
        let deletes: Vec<Edge> = batch.deletes().map(|u| u.edge).collect();
        for &e in inserts.iter().chain(&deletes) {
            self.check_edge(e)?;
        }
        self.engine.begin_batch();
        match self.config.sketch_mode {
            SketchMode::Batch => {
                if batch.len() > self.k_max {
                    return Err(ConnectivityError::BatchTooLarge { len: batch.len(), cap: self.k_max });
                }
                self.engine.batch_intake(batch.len(), UPDATE_WORDS)?;
                self.insert_phase(&inserts)?;
                self.delete_phase(&deletes)?;
            }
            SketchMode::Single => {
                for &e in &inserts {
                    self.insert_single(e)?;
                }
                for &e in &deletes {
                    self.delete_single(e)?;
                }
            }
        }
        self.refresh_resident()?;
        Ok(self.engine.end_batch())
    }

    fn insert_single(&mut self, e: Edge) -> Result<(), ConnectivityError> {
        if self.forest.has_edge(e) {
            return Err(ConnectivityError::DuplicateEdge(e.u, e.v));
        }
        self.engine.broadcast(2)?;
        self.bank.update(e, 1);
        let (mu, mv) = (self.machine_of(e.u), self.machine_of(e.v));
        self.engine.map_over_partition([(mu, 1), (mv, 1)])?;
        let (cu, cv) = (self.component(e.u), self.component(e.v));
        if cu != cv {
            self.forest.reroot(&mut self.engine, self.forest.tour_of(e.u), e.u)?;
            self.forest.reroot(&mut self.engine, self.forest.tour_of(e.v), e.v)?;
            self.forest.join(&mut self.engine, e.u, e.v)?;
            self.engine.broadcast(2)?;
            let (keep, drop) = (cu.min(cv), cu.max(cv));
            for c in self.component.iter_mut() {
                if *c == drop {
                    *c = keep;
                }
            }
        }
        Ok(())
    }

    fn delete_single(&mut self, e: Edge) -> Result<(), ConnectivityError> {
        self.engine.broadcast(2)?;
        self.bank.update(e, -1);
        self.engine.map_over_partition([(self.machine_of(e.u), 1)])?;
        if !self.forest.has_edge(e) {
            return Ok(());
        }
        let (tu, tv) = self.forest.split(&mut self.engine, e.u, e.v)?;
        let zu = self.forest.members(tu);
        let zv = self.forest.members(tv);
        let words = self.bank.vertex_words() + 1;
        self.engine.charge_aggregates(&[zu.len() as u64, zv.len() as u64], words)?;
        let cut = self.bank.aggregate(&zu, 0);
        let replacement = cut
            .query()
            .map(|i| self.bank.coords().edge(i))
            .filter(|r| {
                let (a, b) = (self.forest.tour_of(r.u), self.forest.tour_of(r.v));
                (a == tu && b == tv) || (a == tv && b == tu)
            });
        self.engine.broadcast(2)?;
        match replacement {
            Some(r) => {
                let (a, b) = if self.forest.tour_of(r.u) == tu { (r.u, r.v) } else { (r.v, r.u) };
                self.forest.reroot(&mut self.engine, tu, a)?;
                self.forest.reroot(&mut self.engine, tv, b)?;
                self.forest.join(&mut self.engine, a, b)?;
            }
            None => {
                for z in [zu, zv] {
                    let id = z[0];
                    for v in z {
                        self.component[v as usize] = id;
                    }
                }
            }
        }
        Ok(())
    }

    fn insert_phase(&mut self, inserts: &[Edge]) -> Result<(), ConnectivityError> {
        let mut seen = alloc::collections::BTreeSet::new();
        for &e in inserts {
            if self.forest.has_edge(e) || !seen.insert(e) {
                return Err(ConnectivityError::DuplicateEdge(e.u, e.v));
            }
        }
        self.engine.broadcast(2 * inserts.len() as u64)?;
        for &e in inserts {
            self.bank.update(e, 1);
        }
        let lookups: Vec<(u64, u64)> = inserts.iter().flat_map(|e| [(self.machine_of(e.u), 1), (self.machine_of(e.v), 1)]).collect();
        self.engine.map_over_partition(lookups)?;

        // auxiliary graph over component ids; a spanning forest of it is kept
        self.engine.local("auxiliary_graph", 4 * inserts.len() as u64)?;
        let mut ids: Vec<Vertex> = inserts.iter().flat_map(|e| [self.component(e.u), self.component(e.v)]).collect();
        ids.sort_unstable();
        ids.dedup();
        let slot = |c: Vertex| ids.binary_search(&c).expect("listed");
        let mut uf: Vec<usize> = (0..ids.len()).collect();
        let mut chosen = Vec::new();
        for &e in inserts {
            let (a, b) = (find(&mut uf, slot(self.component(e.u))), find(&mut uf, slot(self.component(e.v))));
            if a != b {
                uf[a.max(b)] = a.min(b);
                chosen.push(e);
            }
        }
        self.forest.batch_join(&mut self.engine, &chosen)?;
        let relabel: BTreeMap<Vertex, Vertex> = (0..ids.len())
            .filter_map(|i| {
                let root = find(&mut uf, i);
                (root != i).then(|| (ids[i], ids[root]))
            })
            .collect();
        self.relabel(&relabel)
    }

    /// Broadcasts an old-id to new-id map; every machine rewrites its vertices locally.
    fn relabel(&mut self, map: &BTreeMap<Vertex, Vertex>) -> Result<(), ConnectivityError> {
        self.engine.broadcast(2 * map.len() as u64)?;
        if !map.is_empty() {
            for c in self.component.iter_mut() {
                if let Some(&to) = map.get(c) {
                    *c = to;
                }
            }
        }
        Ok(())
    }

    fn delete_phase(&mut self, deletes: &[Edge]) -> Result<(), ConnectivityError> {
        self.engine.broadcast(2 * deletes.len() as u64)?;
        for &e in deletes {
            self.bank.update(e, -1);
        }
        let reports: Vec<(u64, u64)> = deletes.iter().map(|e| (self.machine_of(e.u), 1)).collect();
        self.engine.map_over_partition(reports)?;
        let tree: Vec<Edge> = deletes.iter().copied().filter(|&e| self.forest.has_edge(e)).collect();
        let fragments = self.forest.batch_split(&mut self.engine, &tree)?;

        // members of every fragment, in one pass over the vertices
        let slot: BTreeMap<TourId, usize> = fragments.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut members: Vec<Vec<Vertex>> = alloc::vec![Vec::new(); fragments.len()];
        if !fragments.is_empty() {
            for v in 0..self.n() as Vertex {
                if let Some(&i) = slot.get(&self.forest.tour_of(v)) {
                    members[i].push(v);
                }
            }
        }
        let bank_words = self.bank.vertex_words() + 1;
        let sizes: Vec<u64> = members.iter().map(|m| m.len() as u64).collect();
        self.engine.charge_aggregates(&sizes, bank_words)?;
        let depth = self.bank.depth();
        let sketches: Vec<Vec<L0Sketch>> = members
            .iter()
            .map(|m| (0..depth).map(|i| self.bank.aggregate(m, i)).collect())
            .collect();

        // all fragment banks meet on one machine
        let gather: Vec<(u64, u64)> = members.iter().map(|m| (self.machine_of(m[0]), bank_words)).collect();
        self.engine.map_over_partition(gather)?;
        self.engine.local("fragment_graph", fragments.len() as u64 * bank_words)?;

        // Borůvka over fragments; round i reads only the i-th sketches
        let p = fragments.len();
        let mut uf: Vec<usize> = (0..p).collect();
        let mut chosen = Vec::new();
        for level in 0..depth {
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for f in 0..p {
                groups.entry(find(&mut uf, f)).or_default().push(f);
            }
            let mut found = Vec::new();
            for fs in groups.values() {
                let mut acc = sketches[fs[0]][level].clone();
                for &f in &fs[1..] {
                    acc.add_assign(&sketches[f][level])?;
                }
                if let Some(i) = acc.query() {
                    found.push(self.bank.coords().edge(i));
                }
            }
            if self.engine.mode() == AccountingMode::Strict && !found.is_empty() {
                // far endpoints report which fragment they belong to
                let lookups: Vec<(u64, u64)> = found.iter().map(|e| (self.machine_of(e.v), 1)).collect();
                self.engine.map_over_partition(lookups)?;
            }
            for e in found {
                let (Some(&a), Some(&b)) = (slot.get(&self.forest.tour_of(e.u)), slot.get(&self.forest.tour_of(e.v))) else {
                    continue;
                };
                let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
                if ra != rb {
                    uf[ra.max(rb)] = ra.min(rb);
                    chosen.push(e);
                }
            }
        }
        self.forest.batch_join(&mut self.engine, &chosen)?;

        // each merged group takes the smallest vertex among its fragments
        let mut best: BTreeMap<usize, Vertex> = BTreeMap::new();
        for (f, m) in members.iter().enumerate() {
            let root = find(&mut uf, f);
            let entry = best.entry(root).or_insert(Vertex::MAX);
            *entry = (*entry).min(m[0]);
        }
        self.engine.broadcast(2 * p as u64)?;
        for (f, m) in members.iter().enumerate() {
            let id = best[&find(&mut uf, f)];
            for &v in m {
                self.component[v as usize] = id;
            }
        }
        Ok(())
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Update;
    use alloc::vec;

    fn config(n: usize) -> ConnectivityConfig {
        ConnectivityConfig::new(n, 0.5, AccountingMode::Idealized, 5).with_k_max(16).with_local_memory(1 << 20)
    }

    fn batch(ups: Vec<Update>) -> UpdateBatch {
        UpdateBatch::new(ups)
    }

    #[test]
    fn single_insert_joins() {
        let mut c = Connectivity::new(config(8).with_sketch_mode(SketchMode::Single));
        c.insert(Edge::new(1, 2)).unwrap();
        assert_eq!(c.spanning_forest(), vec![Edge::new(1, 2)]);
        assert_eq!(c.component(2), 1);
        c.insert(Edge::new(2, 3)).unwrap();
        c.insert(Edge::new(1, 3)).unwrap();
        assert_eq!(c.spanning_forest().len(), 2);
        assert_eq!(c.component(3), 1);
        assert_eq!(c.count_components(), 6);
    }

    #[test]
    fn single_delete_finds_replacement() {
        let mut c = Connectivity::new(config(4).with_sketch_mode(SketchMode::Single));
        for e in [Edge::new(1, 2), Edge::new(2, 3), Edge::new(1, 3)] {
            c.insert(e).unwrap();
        }
        c.delete(Edge::new(1, 2)).unwrap();
        assert_eq!(c.spanning_forest(), vec![Edge::new(1, 3), Edge::new(2, 3)]);
        assert!(c.same_component(1, 2));
    }

    #[test]
    fn single_delete_without_replacement() {
        let mut c = Connectivity::new(config(4).with_sketch_mode(SketchMode::Single));
        c.insert(Edge::new(1, 2)).unwrap();
        c.insert(Edge::new(2, 3)).unwrap();
        c.delete(Edge::new(2, 3)).unwrap();
        assert_eq!(c.component(3), 3);
        assert_eq!(c.component(2), 1);
    }

    #[test]
    fn batch_insert_path() {
        let mut c = Connectivity::new(config(6));
        let ups = (0..4).map(|i| Update::insert(i, i + 1)).collect();
        c.apply_batch(&batch(ups)).unwrap();
        assert_eq!(c.spanning_forest().len(), 4);
        assert_eq!(c.count_components(), 2);
        assert!((0..5).all(|v| c.component(v) == 0));
    }

    #[test]
    fn batch_delete_triangle() {
        let mut c = Connectivity::new(config(3));
        let tri = [(0, 1), (1, 2), (0, 2)];
        c.apply_batch(&batch(tri.iter().map(|&(a, b)| Update::insert(a, b)).collect())).unwrap();
        assert_eq!(c.count_components(), 1);
        c.apply_batch(&batch(tri.iter().map(|&(a, b)| Update::delete(a, b)).collect())).unwrap();
        assert_eq!(c.count_components(), 3);
        assert!(c.spanning_forest().is_empty());
    }

    #[test]
    fn batch_rejects_oversize_and_duplicates() {
        let mut c = Connectivity::new(config(40).with_k_max(2));
        let ups = (0..3).map(|i| Update::insert(i, i + 1)).collect();
        assert_eq!(c.apply_batch(&batch(ups)), Err(ConnectivityError::BatchTooLarge { len: 3, cap: 2 }));
        c.apply_batch(&batch(vec![Update::insert(0, 1)])).unwrap();
        assert_eq!(c.apply_batch(&batch(vec![Update::insert(0, 1)])), Err(ConnectivityError::DuplicateEdge(0, 1)));
    }

    #[test]
    fn idealized_rounds_do_not_depend_on_content() {
        let mut c = Connectivity::new(config(10));
        let a = c.apply_batch(&batch(vec![Update::insert(0, 1)])).unwrap();
        let b = c.apply_batch(&batch(vec![Update::insert(2, 3), Update::delete(0, 1)])).unwrap();
        let d = c.apply_batch(&batch(vec![])).unwrap();
        assert_eq!(a.rounds, b.rounds);
        assert_eq!(a.rounds, d.rounds);
    }

    #[test]
    fn bank_is_linear() {
        let mut c = Connectivity::new(config(12));
        c.apply_batch(&batch(vec![Update::insert(0, 1), Update::insert(1, 5), Update::insert(3, 4)])).unwrap();
        c.apply_batch(&batch(vec![Update::delete(1, 5), Update::insert(2, 9)])).unwrap();
        let rebuilt = SketchBank::from_edges(12, SketchMode::Batch, 5, [Edge::new(0, 1), Edge::new(3, 4), Edge::new(2, 9)]);
        assert!(rebuilt == *c.bank());
    }

    #[test]
    fn default_cap_scales_with_local_memory() {
        let cfg = ConnectivityConfig::new(4096, 0.5, AccountingMode::Idealized, 0);
        assert_eq!(cfg.batch_cap(), 8);
        let cfg = ConnectivityConfig::new(64, 0.5, AccountingMode::Idealized, 0);
        assert_eq!(cfg.batch_cap(), 1);
    }
}
