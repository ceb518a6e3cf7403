//! Distributed Euler-tour forest.
//!
//! Each tree edge owns a record with the four sequence positions its two
//! traversals contribute (every traversal `x -> y` writes `x` at an odd index and
//! `y` right after it). Vertices only know their tour id; `f(v)` and `ℓ(v)` are
//! the extreme indices over the records incident on `v`. Tours change through
//! broadcast [`ShiftMessage`]s which every record applies locally.
//!
//! Index conventions are 1-based. Tours follow the traversal order documented in
//! [`reference`], so every operation's result can be compared byte for byte with
//! [`oracle_rebuild`].

mod batch;
pub mod reference;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use thiserror::Error;

use crate::graph::{Edge, Vertex};
use crate::mpc_engine::{AccountingError, Engine};

pub use reference::{oracle_rebuild, oracle_rebuild_min_roots, OracleForest, OracleTour};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TourId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TourSummary {
    pub id: TourId,
    pub root: Vertex,
    pub len: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub vertex: Vertex,
    pub index: u32,
}

/// Positions contributed by one tree edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TourRecord {
    pub tour: TourId,
    pub occ: [Occurrence; 4],
}

/// Words one record occupies: tour id plus four (vertex, index) pairs.
pub const RECORD_WORDS: u64 = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftMessage {
    /// Every index in `[lo, hi]` of `tour` moves by `offset` into `target`.
    ShiftIndex { tour: TourId, lo: u32, hi: u32, offset: i64, target: TourId },
    /// Adds one occurrence of `vertex` to the record of `edge`.
    AddIndex { edge: Edge, vertex: Vertex, index: u32, tour: TourId },
    /// Drops the record of `edge` with its four occurrences.
    RemoveEdge { edge: Edge },
}

/// Words one message occupies in a broadcast.
pub const MESSAGE_WORDS: u64 = 5;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EulerError {
    #[error("vertex {vertex} is not in tour {tour:?}")]
    VertexNotInTour { vertex: Vertex, tour: TourId },
    #[error("unknown tour {0:?}")]
    UnknownTour(TourId),
    #[error("tour {tour:?} is rooted at {root}, expected {expected}")]
    WrongRoot { tour: TourId, root: Vertex, expected: Vertex },
    #[error("vertices {0} and {1} already share a tour")]
    SameTour(Vertex, Vertex),
    #[error("vertices {0} and {1} are in different tours")]
    DifferentTours(Vertex, Vertex),
    #[error("{0:?} is not a tree edge")]
    NotTreeEdge(Edge),
    #[error("{0:?} closes a cycle over the batch")]
    CycleInBatch(Edge),
    #[error("{0:?} listed twice")]
    DuplicateEdge(Edge),
    #[error("input is not a forest")]
    NotAForest,
    #[error("root {0} missing, repeated, or sharing a tree with another root")]
    RootMismatch(Vertex),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
}

#[derive(Clone, Debug)]
pub struct EulerForest {
    n: usize,
    vertex_tour: Vec<TourId>,
    tours: BTreeMap<TourId, TourSummary>,
    records: BTreeMap<Edge, TourRecord>,
    adj: Vec<BTreeSet<Vertex>>,
    next_id: u32,
}

/// Maps old interval `[lo, hi]` to consecutive positions starting at `base + 1`.
fn place(out: &mut Vec<ShiftMessage>, tour: TourId, target: TourId, lo: u32, hi: u32, base: u32) {
    if lo <= hi {
        out.push(ShiftMessage::ShiftIndex { tour, lo, hi, offset: base as i64 + 1 - lo as i64, target });
    }
}

/// Like [`place`] but rotated so that old index `start` lands first.
fn place_rotated(out: &mut Vec<ShiftMessage>, tour: TourId, target: TourId, lo: u32, hi: u32, start: u32, base: u32) {
    if lo > hi {
        return;
    }
    debug_assert!(lo <= start && start <= hi);
    place(out, tour, target, start, hi, base);
    place(out, tour, target, lo, start - 1, base + (hi - start + 1));
}

impl EulerForest {
    /// Every vertex a singleton tour whose id is the vertex id.
    pub fn new(n: usize) -> Self {
        EulerForest {
            n,
            vertex_tour: (0..n as u32).map(TourId).collect(),
            tours: (0..n as u32).map(|v| (TourId(v), TourSummary { id: TourId(v), root: v, len: 0 })).collect(),
            records: BTreeMap::new(),
            adj: alloc::vec![BTreeSet::new(); n],
            next_id: n as u32,
        }
    }

    /// State equal to the given reference forest.
    pub fn from_oracle(oracle: &OracleForest) -> Self {
        let n = oracle.n;
        let mut f = EulerForest {
            n,
            vertex_tour: alloc::vec![TourId(u32::MAX); n],
            tours: BTreeMap::new(),
            records: BTreeMap::new(),
            adj: alloc::vec![BTreeSet::new(); n],
            next_id: n as u32,
        };
        for t in &oracle.tours {
            f.tours.insert(t.id, TourSummary { id: t.id, root: t.root, len: t.sequence.len() as u32 });
            f.next_id = f.next_id.max(t.id.0 + 1);
            f.vertex_tour[t.root as usize] = t.id;
            let mut partial: BTreeMap<Edge, Vec<Occurrence>> = BTreeMap::new();
            for pair in t.sequence.chunks_exact(2).enumerate() {
                let (i, xy) = pair;
                let e = Edge::new(xy[0], xy[1]);
                let idx = 2 * i as u32 + 1;
                let slot = partial.entry(e).or_default();
                slot.push(Occurrence { vertex: xy[0], index: idx });
                slot.push(Occurrence { vertex: xy[1], index: idx + 1 });
            }
            for (e, occ) in partial {
                f.adj[e.u as usize].insert(e.v);
                f.adj[e.v as usize].insert(e.u);
                f.vertex_tour[e.u as usize] = t.id;
                f.vertex_tour[e.v as usize] = t.id;
                f.records.insert(e, TourRecord { tour: t.id, occ: [occ[0], occ[1], occ[2], occ[3]] });
            }
        }
        f
    }

    /// Forest of `edges` with each tree rooted at its minimum vertex.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self, EulerError> {
        Ok(Self::from_oracle(&oracle_rebuild_min_roots(n, edges)?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tour_of(&self, v: Vertex) -> TourId {
        self.vertex_tour[v as usize]
    }

    pub fn summary(&self, tour: TourId) -> Option<TourSummary> {
        self.tours.get(&tour).copied()
    }

    pub fn tours(&self) -> impl Iterator<Item = &TourSummary> {
        self.tours.values()
    }

    pub fn tour_count(&self) -> usize {
        self.tours.len()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.records.contains_key(&e)
    }

    pub fn record(&self, e: Edge) -> Option<&TourRecord> {
        self.records.get(&e)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.records.keys().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.records.len()
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[v as usize].iter().copied()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v as usize].len()
    }

    /// Vertices of a tour in ascending order.
    pub fn members(&self, tour: TourId) -> Vec<Vertex> {
        (0..self.n as Vertex).filter(|&v| self.vertex_tour[v as usize] == tour).collect()
    }

    /// All occurrence indices of `v`, ascending.
    pub fn indices(&self, v: Vertex) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .adj[v as usize]
            .iter()
            .flat_map(|&w| self.records[&Edge::new(v, w)].occ)
            .filter(|o| o.vertex == v)
            .map(|o| o.index)
            .collect();
        out.sort_unstable();
        out
    }

    /// `(f(v), ℓ(v))`, or `None` for a singleton.
    pub fn bounds(&self, v: Vertex) -> Option<(u32, u32)> {
        let mut lo = u32::MAX;
        let mut hi = 0;
        for &w in &self.adj[v as usize] {
            for o in self.records[&Edge::new(v, w)].occ {
                if o.vertex == v {
                    lo = lo.min(o.index);
                    hi = hi.max(o.index);
                }
            }
        }
        (hi > 0).then_some((lo, hi))
    }

    pub fn first(&self, v: Vertex) -> Option<u32> {
        self.bounds(v).map(|b| b.0)
    }

    pub fn last(&self, v: Vertex) -> Option<u32> {
        self.bounds(v).map(|b| b.1)
    }

    /// Bounds of every vertex, computed in one pass over the records.
    pub fn all_bounds(&self) -> Vec<Option<(u32, u32)>> {
        let mut out: Vec<Option<(u32, u32)>> = alloc::vec![None; self.n];
        for rec in self.records.values() {
            for o in rec.occ {
                let slot = &mut out[o.vertex as usize];
                *slot = Some(match *slot {
                    None => (o.index, o.index),
                    Some((lo, hi)) => (lo.min(o.index), hi.max(o.index)),
                });
            }
        }
        out
    }

    /// `(departure of x towards w, arrival of x back from w)`.
    fn ends(&self, x: Vertex, w: Vertex) -> (u32, u32) {
        let rec = &self.records[&Edge::new(x, w)];
        let mut dep = 0;
        let mut arr = 0;
        for o in rec.occ {
            if o.vertex == x {
                if o.index % 2 == 1 {
                    dep = o.index;
                } else {
                    arr = o.index;
                }
            }
        }
        debug_assert!(dep > 0 && arr > 0);
        (dep, arr)
    }

    /// Smallest neighbour of `x` greater than `after`, wrapping to the smallest overall.
    fn successor(&self, x: Vertex, after: Vertex) -> Option<Vertex> {
        let adj = &self.adj[x as usize];
        adj.range(after + 1..).next().or_else(|| adj.iter().next()).copied()
    }

    fn fresh_id(&mut self) -> TourId {
        let id = TourId(self.next_id);
        self.next_id += 1;
        id
    }

    fn check_member(&self, tour: TourId, v: Vertex) -> Result<TourSummary, EulerError> {
        let summary = self.summary(tour).ok_or(EulerError::UnknownTour(tour))?;
        if (v as usize) >= self.n || self.vertex_tour[v as usize] != tour {
            return Err(EulerError::VertexNotInTour { vertex: v, tour });
        }
        Ok(summary)
    }

    /// Applies a broadcast batch. Shift scopes of one tour must be disjoint.
    pub fn apply(&mut self, messages: &[ShiftMessage]) {
        let mut shifts: BTreeMap<TourId, Vec<(u32, u32, i64, TourId)>> = BTreeMap::new();
        let mut adds: BTreeMap<Edge, Vec<(Occurrence, TourId)>> = BTreeMap::new();
        for m in messages {
            match *m {
                ShiftMessage::ShiftIndex { tour, lo, hi, offset, target } => {
                    shifts.entry(tour).or_default().push((lo, hi, offset, target));
                }
                ShiftMessage::AddIndex { edge, vertex, index, tour } => {
                    adds.entry(edge).or_default().push((Occurrence { vertex, index }, tour));
                }
                ShiftMessage::RemoveEdge { edge } => {
                    let rec = self.records.remove(&edge).expect("removed edge has a record");
                    let _ = rec;
                    self.adj[edge.u as usize].remove(&edge.v);
                    self.adj[edge.v as usize].remove(&edge.u);
                }
            }
        }
        for list in shifts.values_mut() {
            list.sort_unstable_by_key(|s| s.0);
            for w in list.windows(2) {
                assert!(w[0].1 < w[1].0, "overlapping shift scopes");
            }
        }
        if !shifts.is_empty() {
            for rec in self.records.values_mut() {
                let Some(list) = shifts.get(&rec.tour) else { continue };
                let mut target = None;
                for o in rec.occ.iter_mut() {
                    let pos = list.partition_point(|s| s.0 <= o.index);
                    let s = list[pos.checked_sub(1).expect("index covered by a shift")];
                    assert!(o.index <= s.1, "index {} of {:?} not covered", o.index, rec.tour);
                    o.index = (o.index as i64 + s.2) as u32;
                    debug_assert!(target.is_none() || target == Some(s.3));
                    target = Some(s.3);
                }
                rec.tour = target.expect("record has occurrences");
                for o in rec.occ {
                    self.vertex_tour[o.vertex as usize] = rec.tour;
                }
            }
        }
        for (edge, occ) in adds {
            assert_eq!(occ.len(), 4, "new record {edge:?} needs four occurrences");
            let tour = occ[0].1;
            let rec = TourRecord { tour, occ: [occ[0].0, occ[1].0, occ[2].0, occ[3].0] };
            self.records.insert(edge, rec);
            self.adj[edge.u as usize].insert(edge.v);
            self.adj[edge.v as usize].insert(edge.u);
            self.vertex_tour[edge.u as usize] = tour;
            self.vertex_tour[edge.v as usize] = tour;
        }
    }

    /// Rotates `tour` so that it is rooted at `u`.
    pub fn reroot(&mut self, engine: &mut Engine, tour: TourId, u: Vertex) -> Result<(), EulerError> {
        let summary = self.check_member(tour, u)?;
        engine.broadcast(3)?;
        let mut msgs = Vec::new();
        if summary.len > 0 {
            let first = *self.adj[u as usize].iter().next().expect("non-singleton tour");
            let (start, _) = self.ends(u, first);
            if start > 1 {
                place_rotated(&mut msgs, tour, tour, 1, summary.len, start, 0);
            }
        }
        self.apply(&msgs);
        self.tours.get_mut(&tour).expect("checked").root = u;
        Ok(())
    }

    /// Links the tour rooted at `u` with the tour rooted at `v` by edge `{u, v}`.
    /// The result keeps `u`'s tour id and root.
    pub fn join(&mut self, engine: &mut Engine, u: Vertex, v: Vertex) -> Result<TourId, EulerError> {
        let (tu, tv) = (self.tour_of(u), self.tour_of(v));
        if tu == tv {
            return Err(EulerError::SameTour(u, v));
        }
        let su = self.summary(tu).ok_or(EulerError::UnknownTour(tu))?;
        let sv = self.summary(tv).ok_or(EulerError::UnknownTour(tv))?;
        if su.root != u {
            return Err(EulerError::WrongRoot { tour: tu, root: su.root, expected: u });
        }
        if sv.root != v {
            return Err(EulerError::WrongRoot { tour: tv, root: sv.root, expected: v });
        }
        engine.broadcast(6)?;
        // v goes right after the last child of u smaller than v
        let p = match self.adj[u as usize].range(..v).next_back() {
            Some(&c) => self.ends(u, c).1,
            None => 0,
        };
        let mut msgs = Vec::new();
        place(&mut msgs, tu, tu, 1, p, 0);
        place(&mut msgs, tu, tu, p + 1, su.len, p + sv.len + 4);
        if sv.len > 0 {
            let next = self.successor(v, u).expect("non-singleton tour");
            let start = self.ends(v, next).0;
            place_rotated(&mut msgs, tv, tu, 1, sv.len, start, p + 2);
        }
        let e = Edge::new(u, v);
        for (vertex, index) in [(u, p + 1), (v, p + 2), (v, p + sv.len + 3), (u, p + sv.len + 4)] {
            msgs.push(ShiftMessage::AddIndex { edge: e, vertex, index, tour: tu });
        }
        self.apply(&msgs);
        self.tours.remove(&tv);
        self.tours.get_mut(&tu).expect("present").len = su.len + sv.len + 4;
        Ok(tu)
    }

    /// Ancestor and child endpoint of a tree edge, by the first/last index test.
    pub fn orient(&self, e: Edge) -> Result<(Vertex, Vertex), EulerError> {
        if !self.has_edge(e) {
            return Err(EulerError::NotTreeEdge(e));
        }
        let (fu, lu) = self.bounds(e.u).expect("endpoint of a tree edge");
        let (fv, lv) = self.bounds(e.v).expect("endpoint of a tree edge");
        if fu < fv && lu > lv {
            Ok((e.u, e.v))
        } else {
            debug_assert!(fv < fu && lv > lu);
            Ok((e.v, e.u))
        }
    }

    /// Cuts tree edge `{u, v}`. Returns the tours of `u` and `v`. The side without the
    /// old root gets a fresh id and is rooted at its endpoint of the edge.
    pub fn split(&mut self, engine: &mut Engine, u: Vertex, v: Vertex) -> Result<(TourId, TourId), EulerError> {
        let e = Edge::new(u, v);
        let (a, c) = self.orient(e)?;
        let tour = self.tour_of(u);
        let summary = self.summary(tour).expect("tour of a tree edge");
        engine.broadcast(7)?;
        let (fc, lc) = self.bounds(c).expect("endpoint");
        let child = self.fresh_id();
        let child_len = lc - fc - 1;
        let mut msgs = alloc::vec![ShiftMessage::RemoveEdge { edge: e }];
        place(&mut msgs, tour, tour, 1, fc - 2, 0);
        place(&mut msgs, tour, tour, lc + 2, summary.len, fc - 2);
        if child_len > 0 {
            let first = *self.adj[c as usize].iter().find(|&&w| w != a).expect("child has another neighbour");
            let start = self.ends(c, first).0;
            place_rotated(&mut msgs, tour, child, fc + 1, lc - 1, start, 0);
        }
        self.apply(&msgs);
        self.vertex_tour[c as usize] = child;
        self.tours.get_mut(&tour).expect("present").len = summary.len - (child_len + 4);
        self.tours.insert(child, TourSummary { id: child, root: c, len: child_len });
        Ok((self.tour_of(u), self.tour_of(v)))
    }

    /// Tree edges on the path between `u` and `v`, sorted.
    pub fn identify_path(&self, engine: &mut Engine, u: Vertex, v: Vertex) -> Result<Vec<Edge>, EulerError> {
        let mut paths = self.identify_paths(engine, &[(u, v)])?;
        Ok(paths.pop().expect("one path"))
    }

    /// Several path queries answered with one broadcast of the endpoint bounds.
    ///
    /// An edge lies on the path iff exactly one endpoint of the query sits in the
    /// subtree below the edge, i.e. inside `[f(c), ℓ(c)]` of its lower endpoint `c`.
    pub fn identify_paths(&self, engine: &mut Engine, pairs: &[(Vertex, Vertex)]) -> Result<Vec<Vec<Edge>>, EulerError> {
        for &(u, v) in pairs {
            if self.tour_of(u) != self.tour_of(v) || u == v {
                return Err(EulerError::DifferentTours(u, v));
            }
        }
        engine.broadcast(4 * pairs.len() as u64)?;
        let bounds = self.all_bounds();
        let mut out = alloc::vec![Vec::new(); pairs.len()];
        let mut by_tour: BTreeMap<TourId, Vec<usize>> = BTreeMap::new();
        for (i, &(u, _)) in pairs.iter().enumerate() {
            by_tour.entry(self.tour_of(u)).or_default().push(i);
        }
        for (e, rec) in &self.records {
            let Some(queries) = by_tour.get(&rec.tour) else { continue };
            let (bu, bv) = (bounds[e.u as usize].expect("endpoint"), bounds[e.v as usize].expect("endpoint"));
            let (lo, hi) = if bu.0 > bv.0 { bu } else { bv };
            for &i in queries {
                let (x, y) = pairs[i];
                let fx = bounds[x as usize].expect("member").0;
                let fy = bounds[y as usize].expect("member").0;
                let inside_x = lo <= fx && fx <= hi;
                let inside_y = lo <= fy && fy <= hi;
                if inside_x != inside_y {
                    out[i].push(*e);
                }
            }
        }
        Ok(out)
    }

    /// Text dump: `tour <id> root <r> L <len>` then `occ <vertex> <index>` by index.
    pub fn dump(&self) -> String {
        let mut per_tour: BTreeMap<TourId, Vec<Occurrence>> = BTreeMap::new();
        for rec in self.records.values() {
            per_tour.entry(rec.tour).or_default().extend_from_slice(&rec.occ);
        }
        let mut out = String::new();
        for t in self.tours.values() {
            let _ = writeln!(out, "tour {} root {} L {}", t.id.0, t.root, t.len);
            if let Some(occ) = per_tour.get_mut(&t.id) {
                occ.sort_unstable_by_key(|o| o.index);
                for o in occ.iter() {
                    let _ = writeln!(out, "occ {} {}", o.vertex, o.index);
                }
            }
        }
        out
    }

    /// Reference forest for the current edges and roots.
    pub fn oracle(&self) -> Result<OracleForest, EulerError> {
        let edges: Vec<Edge> = self.edges().collect();
        let roots: Vec<(TourId, Vertex)> = self.tours.values().map(|t| (t.id, t.root)).collect();
        oracle_rebuild(self.n, &edges, &roots)
    }

    /// Words held per vertex: its tour id plus the records of its incident tree edges.
    pub fn vertex_words(&self, v: Vertex) -> u64 {
        1 + self.adj[v as usize].len() as u64 * RECORD_WORDS
    }
}
