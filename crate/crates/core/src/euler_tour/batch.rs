//! Batched link and cut driven by one broadcast of shift messages.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::{place, EulerError, EulerForest, ShiftMessage, TourId, TourSummary, MESSAGE_WORDS};
use crate::graph::{Edge, Vertex};
use crate::mpc_engine::Engine;

/// One tree of the auxiliary forest over tours.
struct Node {
    tour: TourId,
    len: u32,
    /// Old index that becomes index 1 once the tour is rerooted at `terminal`.
    start: u32,
    terminal: Vertex,
    /// Endpoint of the edge to the parent node, outside this tour.
    outside_parent: Option<Vertex>,
    children: Vec<usize>,
}

impl Node {
    fn rot(&self, i: u32) -> u32 {
        (i + self.len - self.start) % self.len + 1
    }
}

/// Inter-tour edge `x -> y` from a parent node into a child node.
struct Link {
    x: Vertex,
    y: Vertex,
    parent: usize,
    child: usize,
    gap: u32,
    key: (bool, Vertex),
}

#[derive(Clone, Copy)]
enum Symbol {
    Forward(usize),
    Backward(usize),
}

/// Sequence symbol of the virtual edge above the root node.
const VIRTUAL: usize = usize::MAX;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl EulerForest {
    /// Emits rotated positions `[rlo, rhi]` of `node`, landing at `base + 1` onwards.
    fn emit_rotated(&self, out: &mut Vec<ShiftMessage>, node: &Node, target: TourId, rlo: u32, rhi: u32, base: u32) {
        if rlo > rhi {
            return;
        }
        let wrap = node.len - node.start + 1;
        if rlo <= wrap {
            let hi = rhi.min(wrap);
            place(out, node.tour, target, rlo + node.start - 1, hi + node.start - 1, base);
        }
        if rhi > wrap {
            let lo = rlo.max(wrap + 1);
            place(out, node.tour, target, lo - wrap, rhi - wrap, base + (lo - rlo));
        }
    }

    /// Position in `node`'s rerooted tour after which a new child `y` of `x` goes.
    fn gap(&self, node: &Node, x: Vertex, y: Vertex) -> u32 {
        if node.len == 0 {
            return 0;
        }
        let rotated = |i: u32| node.rot(i);
        let adj = &self.adj[x as usize];
        let (parent, first) = if x == node.terminal {
            (None, 0)
        } else {
            // the neighbour we arrive from comes first among x's positions
            let mut best = (u32::MAX, 0);
            for &w in adj {
                let arr = rotated(self.ends(x, w).1);
                if arr < best.0 {
                    best = (arr, w);
                }
            }
            (Some(best.1), best.0)
        };
        let pivot = if x == node.terminal { node.outside_parent } else { parent };
        let key = |w: Vertex| match pivot {
            Some(p) => (w < p, w),
            None => (false, w),
        };
        let target = key(y);
        let before = adj
            .iter()
            .copied()
            .filter(|&c| Some(c) != parent && key(c) < target)
            .max_by_key(|&c| key(c));
        match before {
            Some(c) => rotated(self.ends(x, c).1),
            None => first,
        }
    }

    /// Links tours along `edges`, which must form a forest over the current tours.
    /// Each merged tour keeps the id and root of its smallest-id constituent.
    pub fn batch_join(&mut self, engine: &mut Engine, edges: &[Edge]) -> Result<Vec<TourId>, EulerError> {
        let mut ids: Vec<TourId> = Vec::new();
        let mut seen = BTreeSet::new();
        for e in edges {
            if !seen.insert(*e) {
                return Err(EulerError::DuplicateEdge(*e));
            }
            ids.push(self.tour_of(e.u));
            ids.push(self.tour_of(e.v));
        }
        ids.sort_unstable();
        ids.dedup();
        let slot = |t: TourId| ids.binary_search(&t).expect("tour listed");
        let mut uf: Vec<usize> = (0..ids.len()).collect();
        for e in edges {
            let (a, b) = (find(&mut uf, slot(self.tour_of(e.u))), find(&mut uf, slot(self.tour_of(e.v))));
            if a == b {
                return Err(EulerError::CycleInBatch(*e));
            }
            uf[a.max(b)] = a.min(b);
        }
        engine.broadcast(3 * ids.len() as u64)?;

        // auxiliary forest: nodes are tours, rooted at the smallest id of each group
        let mut incident: Vec<Vec<usize>> = alloc::vec![Vec::new(); ids.len()];
        for (i, e) in edges.iter().enumerate() {
            incident[slot(self.tour_of(e.u))].push(i);
            incident[slot(self.tour_of(e.v))].push(i);
        }
        let mut nodes: Vec<Node> = ids
            .iter()
            .map(|&t| {
                let s = self.tours[&t];
                Node { tour: t, len: s.len, start: 1, terminal: s.root, outside_parent: None, children: Vec::new() }
            })
            .collect();
        let mut links: Vec<Link> = Vec::new();
        let mut placed = alloc::vec![false; ids.len()];
        let mut roots = Vec::new();
        for r in 0..ids.len() {
            if find(&mut uf, r) != r {
                continue;
            }
            roots.push(r);
            placed[r] = true;
            let mut queue = alloc::collections::VecDeque::from([r]);
            while let Some(a) = queue.pop_front() {
                for &ei in &incident[a] {
                    let e = edges[ei];
                    let (x, y) = if slot(self.tour_of(e.u)) == a { (e.u, e.v) } else { (e.v, e.u) };
                    let b = slot(self.tour_of(y));
                    if placed[b] {
                        continue;
                    }
                    placed[b] = true;
                    let node = &mut nodes[b];
                    node.terminal = y;
                    node.outside_parent = Some(x);
                    if node.len > 0 {
                        let next = self.successor(y, x).expect("non-singleton tour");
                        node.start = self.ends(y, next).0;
                    }
                    links.push(Link { x, y, parent: a, child: b, gap: 0, key: (false, 0) });
                    queue.push_back(b);
                }
            }
        }
        for li in 0..links.len() {
            let (x, y, p) = (links[li].x, links[li].y, links[li].parent);
            let gap = self.gap(&nodes[p], x, y);
            let pivot = if x == nodes[p].terminal { nodes[p].outside_parent } else { None };
            let key = match pivot {
                Some(q) => (y < q, y),
                None => {
                    // key relative to x's parent inside its own tour
                    let parent = self.inner_parent(&nodes[p], x);
                    match parent {
                        Some(q) => (y < q, y),
                        None => (false, y),
                    }
                }
            };
            links[li].gap = gap;
            links[li].key = key;
            nodes[p].children.push(li);
        }
        for node in nodes.iter_mut() {
            node.children.sort_by_key(|&li| (links[li].gap, links[li].key));
        }

        let mut msgs = Vec::new();
        let mut merged = Vec::new();
        for &r in &roots {
            let target = nodes[r].tour;
            let mut seq = alloc::vec![Symbol::Forward(VIRTUAL)];
            self.sequence_of(&nodes, &links, r, &mut seq);
            seq.push(Symbol::Backward(VIRTUAL));
            let child_of = |s: usize| if s == VIRTUAL { r } else { links[s].child };
            let mut pos = 0u32;
            for w in seq.windows(2) {
                let (node, lo, hi) = match (w[0], w[1]) {
                    (Symbol::Forward(a), Symbol::Forward(b)) => (child_of(a), 0, links[b].gap),
                    (Symbol::Forward(a), Symbol::Backward(_)) => {
                        let c = child_of(a);
                        (c, 0, nodes[c].len)
                    }
                    (Symbol::Backward(a), Symbol::Forward(b)) => (links[a].parent, links[a].gap, links[b].gap),
                    (Symbol::Backward(a), Symbol::Backward(_)) => {
                        let p = links[a].parent;
                        (p, links[a].gap, nodes[p].len)
                    }
                };
                self.emit_rotated(&mut msgs, &nodes[node], target, lo + 1, hi, pos);
                pos += hi - lo;
                match w[1] {
                    Symbol::Forward(b) if b != VIRTUAL => {
                        let l = &links[b];
                        let e = Edge::new(l.x, l.y);
                        msgs.push(ShiftMessage::AddIndex { edge: e, vertex: l.x, index: pos + 1, tour: target });
                        msgs.push(ShiftMessage::AddIndex { edge: e, vertex: l.y, index: pos + 2, tour: target });
                        pos += 2;
                    }
                    Symbol::Backward(b) if b != VIRTUAL => {
                        let l = &links[b];
                        let e = Edge::new(l.x, l.y);
                        msgs.push(ShiftMessage::AddIndex { edge: e, vertex: l.y, index: pos + 1, tour: target });
                        msgs.push(ShiftMessage::AddIndex { edge: e, vertex: l.x, index: pos + 2, tour: target });
                        pos += 2;
                    }
                    _ => {}
                }
            }
            merged.push((target, nodes[r].terminal, pos));
        }
        engine.broadcast(MESSAGE_WORDS * msgs.len() as u64)?;
        self.apply(&msgs);
        for node in &nodes {
            self.tours.remove(&node.tour);
        }
        for &(id, root, len) in &merged {
            self.tours.insert(id, TourSummary { id, root, len });
        }
        Ok(merged.into_iter().map(|m| m.0).collect())
    }

    /// Parent of `x` in `node`'s tour after rerooting at its terminal.
    fn inner_parent(&self, node: &Node, x: Vertex) -> Option<Vertex> {
        if x == node.terminal || node.len == 0 {
            return None;
        }
        self.adj[x as usize].iter().copied().min_by_key(|&w| node.rot(self.ends(x, w).1))
    }

    fn sequence_of(&self, nodes: &[Node], links: &[Link], at: usize, out: &mut Vec<Symbol>) {
        for &li in &nodes[at].children {
            out.push(Symbol::Forward(li));
            self.sequence_of(nodes, links, links[li].child, out);
            out.push(Symbol::Backward(li));
        }
    }

    /// Cuts all `edges` (tree edges). Returns the ids of every resulting fragment of
    /// the affected tours; the fragment holding an old root keeps that tour's id and
    /// root, every other fragment gets a fresh id and is rooted at the lower endpoint
    /// of its removed edge.
    pub fn batch_split(&mut self, engine: &mut Engine, edges: &[Edge]) -> Result<Vec<TourId>, EulerError> {
        let mut removed = BTreeSet::new();
        for e in edges {
            if !self.has_edge(*e) {
                return Err(EulerError::NotTreeEdge(*e));
            }
            if !removed.insert(*e) {
                return Err(EulerError::DuplicateEdge(*e));
            }
        }
        engine.broadcast(4 * edges.len() as u64)?;
        let bounds = self.all_bounds();
        // (block start, block end, child, parent) per removed edge, grouped by tour
        let mut blocks: BTreeMap<TourId, Vec<(u32, u32, Vertex, Vertex)>> = BTreeMap::new();
        for e in &removed {
            let (bu, bv) = (bounds[e.u as usize].expect("endpoint"), bounds[e.v as usize].expect("endpoint"));
            let (a, c, (fc, lc)) = if bu.0 < bv.0 && bu.1 > bv.1 { (e.u, e.v, bv) } else { (e.v, e.u, bu) };
            blocks.entry(self.tour_of(c)).or_default().push((fc - 1, lc + 1, c, a));
        }
        let mut msgs: Vec<ShiftMessage> = removed.iter().map(|&edge| ShiftMessage::RemoveEdge { edge }).collect();
        let mut fragments = Vec::new();
        let mut singles = Vec::new();
        let mut summaries = Vec::new();
        for (tour, mut list) in blocks {
            let summary = self.tours[&tour];
            list.sort_unstable();
            // children of each block in the nesting order; index list.len() is the outer tour
            let outer = list.len();
            let mut kids: Vec<Vec<usize>> = alloc::vec![Vec::new(); outer + 1];
            let mut stack: Vec<usize> = Vec::new();
            for (i, b) in list.iter().enumerate() {
                while let Some(&top) = stack.last() {
                    if list[top].1 < b.0 {
                        stack.pop();
                    } else {
                        break;
                    }
                }
                kids[stack.last().copied().unwrap_or(outer)].push(i);
                stack.push(i);
            }
            for f in 0..=outer {
                let (lo, hi) = if f == outer { (1, summary.len) } else { (list[f].0 + 2, list[f].1 - 2) };
                let mut pieces = Vec::new();
                let mut cur = lo;
                for &k in &kids[f] {
                    if list[k].0 > cur {
                        pieces.push((cur, list[k].0 - 1));
                    }
                    cur = list[k].1 + 1;
                }
                if cur <= hi {
                    pieces.push((cur, hi));
                }
                let len: u32 = pieces.iter().map(|p| p.1 - p.0 + 1).sum();
                if f == outer {
                    let mut base = 0;
                    for &(a, b) in &pieces {
                        place(&mut msgs, tour, tour, a, b, base);
                        base += b - a + 1;
                    }
                    summaries.push(TourSummary { id: tour, root: summary.root, len });
                    fragments.push(tour);
                    continue;
                }
                let (c, a) = (list[f].2, list[f].3);
                let id = self.fresh_id();
                fragments.push(id);
                summaries.push(TourSummary { id, root: c, len });
                if len == 0 {
                    singles.push((c, id));
                    continue;
                }
                let first = self.adj[c as usize]
                    .iter()
                    .copied()
                    .find(|&w| w != a && !removed.contains(&Edge::new(c, w)))
                    .expect("fragment with edges has a child of its root");
                let start = self.ends(c, first).0;
                let mut cat = 0;
                let mut start_cat = 0;
                for &(p, q) in &pieces {
                    if p <= start && start <= q {
                        start_cat = cat + (start - p) + 1;
                    }
                    cat += q - p + 1;
                }
                debug_assert!(start_cat > 0);
                let mut cat = 0;
                for &(p, q) in &pieces {
                    // concatenated positions cat+1..=cat+(q-p+1); those before start_cat wrap
                    let first_cat = cat + 1;
                    let last_cat = cat + (q - p + 1);
                    if last_cat < start_cat {
                        place(&mut msgs, tour, id, p, q, first_cat + len - start_cat);
                    } else if first_cat >= start_cat {
                        place(&mut msgs, tour, id, p, q, first_cat - start_cat);
                    } else {
                        let split = p + (start_cat - first_cat);
                        place(&mut msgs, tour, id, p, split - 1, first_cat + len - start_cat);
                        place(&mut msgs, tour, id, split, q, 0);
                    }
                    cat = last_cat;
                }
            }
        }
        engine.broadcast(MESSAGE_WORDS * msgs.len() as u64)?;
        self.apply(&msgs);
        for (v, id) in singles {
            self.vertex_tour[v as usize] = id;
        }
        for s in summaries {
            self.tours.insert(s.id, s);
        }
        Ok(fragments)
    }
}
