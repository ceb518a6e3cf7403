//! Edges, update batches and the reference edge ledger used to validate streams.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use thiserror::Error;

pub type Vertex = u32;

/// Undirected edge stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
}

impl Edge {
    /// Normalizes endpoint order. Panics on a self-loop.
    pub fn new(a: Vertex, b: Vertex) -> Self {
        assert!(a != b, "self-loop {a}");
        if a < b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn try_new(a: Vertex, b: Vertex) -> Option<Self> {
        (a != b).then(|| Edge::new(a, b))
    }

    pub fn other(&self, x: Vertex) -> Vertex {
        if x == self.u {
            self.v
        } else {
            debug_assert_eq!(x, self.v);
            self.u
        }
    }

    pub fn touches(&self, x: Vertex) -> bool {
        self.u == x || self.v == x
    }
}

/// Total order on weighted edges: weight, then endpoints.
pub fn weighted_cmp(a: (f64, Edge), b: (f64, Edge)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateKind {
    Insert,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Update {
    pub kind: UpdateKind,
    pub edge: Edge,
    pub weight: Option<f64>,
}

impl Update {
    pub fn insert(a: Vertex, b: Vertex) -> Self {
        Update { kind: UpdateKind::Insert, edge: Edge::new(a, b), weight: None }
    }

    pub fn insert_weighted(a: Vertex, b: Vertex, w: f64) -> Self {
        Update { kind: UpdateKind::Insert, edge: Edge::new(a, b), weight: Some(w) }
    }

    pub fn delete(a: Vertex, b: Vertex) -> Self {
        Update { kind: UpdateKind::Delete, edge: Edge::new(a, b), weight: None }
    }
}

/// Ordered updates processed together. Insertions are applied before deletions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateBatch {
    pub updates: Vec<Update>,
}

impl UpdateBatch {
    pub fn new(updates: Vec<Update>) -> Self {
        UpdateBatch { updates }
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn inserts(&self) -> impl Iterator<Item = &Update> {
        self.updates.iter().filter(|u| u.kind == UpdateKind::Insert)
    }

    pub fn deletes(&self) -> impl Iterator<Item = &Update> {
        self.updates.iter().filter(|u| u.kind == UpdateKind::Delete)
    }

    pub fn max_vertex(&self) -> Option<Vertex> {
        self.updates.iter().map(|u| u.edge.v).max()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StreamError {
    #[error("edge ({0}, {1}) inserted while present")]
    DuplicateInsert(Vertex, Vertex),
    #[error("edge ({0}, {1}) deleted while absent")]
    AbsentDelete(Vertex, Vertex),
    #[error("vertex {vertex} outside [0, {n})")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("weight {weight} of edge ({u}, {v}) outside [1, {max}]")]
    WeightOutOfRange { u: Vertex, v: Vertex, weight: f64, max: f64 },
    #[error("edge ({0}, {1}) has no weight")]
    MissingWeight(Vertex, Vertex),
}

/// Explicit edge set with weights; the single source of truth for oracles.
#[derive(Clone, Debug, Default)]
pub struct EdgeLedger {
    n: usize,
    edges: BTreeMap<Edge, f64>,
}

impl EdgeLedger {
    pub fn new(n: usize) -> Self {
        EdgeLedger { n, edges: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains_key(e)
    }

    pub fn weight(&self, e: &Edge) -> Option<f64> {
        self.edges.get(e).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.keys().copied()
    }

    pub fn weighted_edges(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.edges.iter().map(|(e, w)| (*e, *w))
    }

    /// Checks a batch (inserts first, then deletes) without changing the ledger.
    pub fn check(&self, batch: &UpdateBatch) -> Result<(), StreamError> {
        let mut scratch = BTreeMap::new();
        self.walk(batch, &mut scratch)
    }

    fn walk(&self, batch: &UpdateBatch, pending: &mut BTreeMap<Edge, Option<f64>>) -> Result<(), StreamError> {
        for up in batch.inserts() {
            let e = up.edge;
            self.check_vertex(e.v)?;
            let present = match pending.get(&e) {
                Some(state) => state.is_some(),
                None => self.edges.contains_key(&e),
            };
            if present {
                return Err(StreamError::DuplicateInsert(e.u, e.v));
            }
            pending.insert(e, Some(up.weight.unwrap_or(1.0)));
        }
        for up in batch.deletes() {
            let e = up.edge;
            self.check_vertex(e.v)?;
            let present = match pending.get(&e) {
                Some(state) => state.is_some(),
                None => self.edges.contains_key(&e),
            };
            if !present {
                return Err(StreamError::AbsentDelete(e.u, e.v));
            }
            pending.insert(e, None);
        }
        Ok(())
    }

    fn check_vertex(&self, v: Vertex) -> Result<(), StreamError> {
        if (v as usize) < self.n {
            Ok(())
        } else {
            Err(StreamError::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// Validates and applies a batch. Unweighted inserts get weight 1.
    pub fn apply(&mut self, batch: &UpdateBatch) -> Result<(), StreamError> {
        let mut pending = BTreeMap::new();
        self.walk(batch, &mut pending)?;
        for (e, state) in pending {
            match state {
                Some(w) => {
                    self.edges.insert(e, w);
                }
                None => {
                    self.edges.remove(&e);
                }
            }
        }
        Ok(())
    }

    /// Copies the batch, attaching each deleted edge's weight as known before the batch
    /// (or from an insert earlier in the same batch).
    pub fn with_delete_weights(&self, batch: &UpdateBatch) -> UpdateBatch {
        let mut fresh = BTreeMap::new();
        for up in batch.inserts() {
            fresh.insert(up.edge, up.weight.unwrap_or(1.0));
        }
        let updates = batch
            .updates
            .iter()
            .map(|up| {
                let mut up = *up;
                if up.kind == UpdateKind::Delete && up.weight.is_none() {
                    up.weight = fresh.get(&up.edge).copied().or_else(|| self.edges.get(&up.edge).copied());
                }
                up
            })
            .collect();
        UpdateBatch { updates }
    }
}
