//! Reference computations over an explicit edge list.
//!
//! Nothing here reads algorithm state. Tests and the harness feed these the
//! materialized graph and compare answers.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{weighted_cmp, Edge, Vertex};

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n], sets: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            core::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn sets(&self) -> usize {
        self.sets
    }
}

/// Component label of every vertex: the smallest vertex in its component.
pub fn component_labels(n: usize, edges: &[Edge]) -> Vec<Vertex> {
    let mut uf = UnionFind::new(n);
    for e in edges {
        uf.union(e.u as usize, e.v as usize);
    }
    let mut label = vec![Vertex::MAX; n];
    for v in 0..n {
        let r = uf.find(v);
        if label[r] == Vertex::MAX {
            label[r] = v as Vertex;
        }
    }
    (0..n).map(|v| label[uf.find(v)]).collect()
}

pub fn count_components(n: usize, edges: &[Edge]) -> usize {
    let mut uf = UnionFind::new(n);
    for e in edges {
        uf.union(e.u as usize, e.v as usize);
    }
    uf.sets()
}

/// True if `forest` is acyclic, uses only edges of `graph`, and spans every
/// component of `graph`.
pub fn is_spanning_forest(n: usize, graph: &[Edge], forest: &[Edge]) -> bool {
    let mut present: Vec<Edge> = graph.to_vec();
    present.sort_unstable();
    let mut uf = UnionFind::new(n);
    for e in forest {
        if present.binary_search(e).is_err() || !uf.union(e.u as usize, e.v as usize) {
            return false;
        }
    }
    uf.sets() == count_components(n, graph)
}

/// Minimum spanning forest with ties broken by `(weight, u, v)`, sorted by edge.
pub fn kruskal(n: usize, edges: &[(f64, Edge)]) -> Vec<Edge> {
    let mut order = edges.to_vec();
    order.sort_by(|a, b| weighted_cmp(*a, *b));
    let mut uf = UnionFind::new(n);
    let mut out: Vec<Edge> = order.into_iter().filter(|(_, e)| uf.union(e.u as usize, e.v as usize)).map(|(_, e)| e).collect();
    out.sort_unstable();
    out
}

pub fn forest_weight(edges: &[(f64, Edge)], forest: &[Edge]) -> f64 {
    let mut sorted: Vec<(Edge, f64)> = edges.iter().map(|&(w, e)| (e, w)).collect();
    sorted.sort_by_key(|p| p.0);
    forest
        .iter()
        .map(|e| sorted[sorted.binary_search_by(|p| p.0.cmp(e)).expect("forest edge in graph")].1)
        .sum()
}

pub fn kruskal_weight(n: usize, edges: &[(f64, Edge)]) -> f64 {
    forest_weight(edges, &kruskal(n, edges))
}

fn adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<Vertex>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.u as usize].push(e.v);
        adj[e.v as usize].push(e.u);
    }
    adj
}

/// BFS 2-coloring; `None` if some component has an odd cycle.
pub fn two_coloring(n: usize, edges: &[Edge]) -> Option<Vec<bool>> {
    let adj = adjacency(n, edges);
    let mut color: Vec<Option<bool>> = vec![None; n];
    let mut queue = alloc::collections::VecDeque::new();
    for s in 0..n {
        if color[s].is_some() {
            continue;
        }
        color[s] = Some(false);
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            let c = color[x].expect("colored");
            for &y in &adj[x] {
                match color[y as usize] {
                    None => {
                        color[y as usize] = Some(!c);
                        queue.push_back(y as usize);
                    }
                    Some(d) if d == c => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(color.into_iter().map(|c| c.expect("colored")).collect())
}

pub fn is_bipartite(n: usize, edges: &[Edge]) -> bool {
    two_coloring(n, edges).is_some()
}

pub fn is_matching(edges: &[Edge]) -> bool {
    let mut ends: Vec<Vertex> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
    ends.sort_unstable();
    ends.windows(2).all(|w| w[0] != w[1])
}

/// Greedy maximal matching in the given edge order.
pub fn maximal_matching(n: usize, edges: &[Edge]) -> Vec<Edge> {
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for e in edges {
        if !used[e.u as usize] && !used[e.v as usize] {
            used[e.u as usize] = true;
            used[e.v as usize] = true;
            out.push(*e);
        }
    }
    out
}

/// Maximum matching size of a bipartite graph by augmenting paths.
pub fn bipartite_matching_size(n: usize, edges: &[Edge], side: &[bool]) -> usize {
    let adj = adjacency(n, edges);
    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut size = 0;
    for s in (0..n).filter(|&v| !side[v]) {
        let mut seen = vec![false; n];
        if augment(s, &adj, &mut mate, &mut seen) {
            size += 1;
        }
    }
    size
}

fn augment(x: usize, adj: &[Vec<Vertex>], mate: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    // iterative DFS over alternating paths: stack of (left vertex, next neighbor)
    let mut stack = vec![(x, 0usize)];
    let mut via: Vec<usize> = Vec::new();
    while let Some(&mut (l, ref mut i)) = stack.last_mut() {
        if *i == adj[l].len() {
            stack.pop();
            via.pop();
            continue;
        }
        let r = adj[l][*i] as usize;
        *i += 1;
        if seen[r] {
            continue;
        }
        seen[r] = true;
        match mate[r] {
            None => {
                via.push(r);
                // flip the path
                for (k, &(left, _)) in stack.iter().enumerate() {
                    let right = via[k];
                    mate[right] = Some(left);
                    mate[left] = Some(right);
                }
                return true;
            }
            Some(next) => {
                via.push(r);
                stack.push((next, 0));
            }
        }
    }
    false
}

/// Exact maximum matching size by memoized search; `n` at most 24.
pub fn small_matching_size(n: usize, edges: &[Edge]) -> usize {
    assert!(n <= 24, "exhaustive matching limited to 24 vertices");
    let mut nbr = vec![0u32; n];
    for e in edges {
        nbr[e.u as usize] |= 1 << e.v;
        nbr[e.v as usize] |= 1 << e.u;
    }
    let mut memo = vec![u8::MAX; 1usize << n];
    best_on(((1u64 << n) - 1) as u32, &nbr, &mut memo) as usize
}

fn best_on(mask: u32, nbr: &[u32], memo: &mut [u8]) -> u8 {
    if mask == 0 {
        return 0;
    }
    if memo[mask as usize] != u8::MAX {
        return memo[mask as usize];
    }
    let v = mask.trailing_zeros();
    let rest = mask & !(1 << v);
    let mut best = best_on(rest, nbr, memo);
    let mut cand = nbr[v as usize] & rest;
    while cand != 0 {
        let w = cand.trailing_zeros();
        cand &= cand - 1;
        best = best.max(1 + best_on(rest & !(1 << w), nbr, memo));
    }
    memo[mask as usize] = best;
    best
}

/// Maximum matching size, or an upper bound when no exact method applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchingBound {
    pub size: usize,
    pub exact: bool,
}

/// Exact for bipartite graphs and for n ≤ 24; otherwise twice a maximal matching.
pub fn matching_number(n: usize, edges: &[Edge]) -> MatchingBound {
    if let Some(side) = two_coloring(n, edges) {
        MatchingBound { size: bipartite_matching_size(n, edges, &side), exact: true }
    } else if n <= 24 {
        MatchingBound { size: small_matching_size(n, edges), exact: true }
    } else {
        MatchingBound { size: 2 * maximal_matching(n, edges).len(), exact: false }
    }
}
