#![allow(dead_code)]

use mpcstream_core::field::{below, stream_rng};
use mpcstream_core::{Edge, EdgeLedger, Update, UpdateBatch};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0x7465_7374)
}

pub fn random_edge(rng: &mut ChaCha8Rng, n: usize) -> Edge {
    loop {
        let a = below(rng, n as u64) as u32;
        let b = below(rng, n as u64) as u32;
        if let Some(e) = Edge::try_new(a, b) {
            return e;
        }
    }
}

/// A valid mixed batch against `ledger`: distinct edges, deletes of live edges
/// only, never touching the same edge twice.
pub fn mixed_batch(rng: &mut ChaCha8Rng, ledger: &EdgeLedger, k: usize, delete_share: u64, max_weight: Option<u64>) -> UpdateBatch {
    let live: Vec<Edge> = ledger.edges().collect();
    let mut used = std::collections::BTreeSet::new();
    let mut ups = Vec::new();
    let mut attempts = 0;
    while ups.len() < k && attempts < 20 * k {
        attempts += 1;
        let delete = !live.is_empty() && below(rng, 100) < delete_share;
        let e = if delete { live[below(rng, live.len() as u64) as usize] } else { random_edge(rng, ledger.n()) };
        if !used.insert(e) || (!delete && ledger.contains(&e)) {
            continue;
        }
        ups.push(match (delete, max_weight) {
            (true, _) => Update::delete(e.u, e.v),
            (false, Some(w)) => Update::insert_weighted(e.u, e.v, 1.0 + below(rng, w) as f64),
            (false, None) => Update::insert(e.u, e.v),
        });
    }
    ledger.with_delete_weights(&UpdateBatch::new(ups))
}
