//! Explicit Euler sequences built by direct traversal. Used as ground truth.
//!
//! Traversal order: the root visits its neighbours in ascending id order; any
//! other vertex, entered from its parent `p`, visits the neighbours greater than
//! `p` in ascending order, then those smaller than `p`. This is the one ordering
//! whose tours stay valid under every rotation, so a reroot is a rotation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{EulerError, TourId};
use crate::graph::{Edge, Vertex};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleTour {
    pub id: TourId,
    pub root: Vertex,
    /// `sequence[i - 1]` is the vertex at index `i`.
    pub sequence: Vec<Vertex>,
}

impl OracleTour {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// All 1-based indices of `v`.
    pub fn indices(&self, v: Vertex) -> Vec<u32> {
        self.sequence
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == v)
            .map(|(i, _)| i as u32 + 1)
            .collect()
    }

    pub fn first(&self, v: Vertex) -> Option<u32> {
        self.indices(v).first().copied()
    }

    pub fn last(&self, v: Vertex) -> Option<u32> {
        self.indices(v).last().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleForest {
    pub n: usize,
    pub tours: Vec<OracleTour>,
}

impl OracleForest {
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.tours {
            let _ = writeln!(out, "tour {} root {} L {}", t.id.0, t.root, t.sequence.len());
            for (i, v) in t.sequence.iter().enumerate() {
                let _ = writeln!(out, "occ {} {}", v, i + 1);
            }
        }
        out
    }
}

fn visit_order(adj: &[Vec<Vertex>], x: Vertex, parent: Option<Vertex>) -> Vec<Vertex> {
    let nbrs = &adj[x as usize];
    match parent {
        None => nbrs.clone(),
        Some(p) => {
            let mut out: Vec<Vertex> = nbrs.iter().copied().filter(|&w| w > p).collect();
            out.extend(nbrs.iter().copied().filter(|&w| w < p));
            out
        }
    }
}

fn traverse(adj: &[Vec<Vertex>], root: Vertex, seen: &mut [bool]) -> Vec<Vertex> {
    let mut seq = Vec::new();
    seen[root as usize] = true;
    let mut stack: Vec<(Vertex, Vec<Vertex>, usize)> = alloc::vec![(root, visit_order(adj, root, None), 0)];
    while let Some(frame) = stack.last_mut() {
        let x = frame.0;
        if frame.2 < frame.1.len() {
            let y = frame.1[frame.2];
            frame.2 += 1;
            seen[y as usize] = true;
            seq.push(x);
            seq.push(y);
            let order = visit_order(adj, y, Some(x));
            stack.push((y, order, 0));
        } else {
            stack.pop();
            if let Some(parent) = stack.last() {
                seq.push(x);
                seq.push(parent.0);
            }
        }
    }
    seq
}

/// Builds the tours of forest `edges` on `n` vertices, one per listed `(id, root)`.
/// Every tree must contain exactly one listed root.
pub fn oracle_rebuild(n: usize, edges: &[Edge], roots: &[(TourId, Vertex)]) -> Result<OracleForest, EulerError> {
    let mut adj: Vec<Vec<Vertex>> = alloc::vec![Vec::new(); n];
    let mut distinct = BTreeSet::new();
    for e in edges {
        if e.v as usize >= n || !distinct.insert(*e) {
            return Err(EulerError::NotAForest);
        }
        adj[e.u as usize].push(e.v);
        adj[e.v as usize].push(e.u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    if has_cycle(n, edges) {
        return Err(EulerError::NotAForest);
    }
    let mut seen = alloc::vec![false; n];
    let mut tours = Vec::new();
    let mut sorted_roots = roots.to_vec();
    sorted_roots.sort();
    for &(id, root) in &sorted_roots {
        if root as usize >= n || seen[root as usize] {
            return Err(EulerError::RootMismatch(root));
        }
        let sequence = traverse(&adj, root, &mut seen);
        tours.push(OracleTour { id, root, sequence });
    }
    if seen.iter().any(|s| !s) {
        let v = seen.iter().position(|s| !s).unwrap_or(0);
        return Err(EulerError::RootMismatch(v as Vertex));
    }
    Ok(OracleForest { n, tours })
}

/// Tours rooted at each tree's minimum vertex, with that vertex as tour id.
pub fn oracle_rebuild_min_roots(n: usize, edges: &[Edge]) -> Result<OracleForest, EulerError> {
    let roots = min_roots(n, edges);
    oracle_rebuild(n, edges, &roots)
}

fn has_cycle(n: usize, edges: &[Edge]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    for e in edges {
        let (a, b) = (find(&mut parent, e.u as usize), find(&mut parent, e.v as usize));
        if a == b {
            return true;
        }
        parent[a] = b;
    }
    false
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

pub(crate) fn min_roots(n: usize, edges: &[Edge]) -> Vec<(TourId, Vertex)> {
    let mut parent: Vec<usize> = (0..n).collect();
    for e in edges {
        let (a, b) = (find(&mut parent, e.u as usize), find(&mut parent, e.v as usize));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }
    (0..n)
        .filter(|&v| find(&mut parent, v) == v)
        .map(|v| (TourId(v as u32), v as Vertex))
        .collect()
}

/// Human-readable rendering of a sequence, for diagnostics.
pub fn render(sequence: &[Vertex]) -> String {
    let parts: Vec<String> = sequence.iter().map(|v| format!("{v}")).collect();
    parts.join(" ")
}
