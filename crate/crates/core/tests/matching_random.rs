mod common;

use mpcstream_core::connectivity::ConnectivityConfig;
use mpcstream_core::matching::{Akly, GreedyMatching, SizeEstimator, Tester};
use mpcstream_core::mpc_engine::AccountingMode;
use mpcstream_core::oracle;
use mpcstream_core::{Edge, EdgeLedger, Update, UpdateBatch};
use proptest::prelude::*;

fn config(n: usize, seed: u64, k: usize) -> ConnectivityConfig {
    ConnectivityConfig::new(n, 0.5, AccountingMode::Idealized, seed).with_k_max(k).with_local_memory(1 << 24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_stays_a_matching_and_maximal_below_cap(seed in any::<u64>(), cap in 1usize..20) {
        let n = 30;
        let mut g = GreedyMatching::with_cap(config(n, seed, 8), cap);
        let mut ledger = EdgeLedger::new(n);
        let mut rng = common::rng(seed);
        let mut offered = Vec::new();
        for _ in 0..10 {
            let batch = common::mixed_batch(&mut rng, &ledger, 8, 0, None);
            ledger.apply(&batch).unwrap();
            g.apply_batch(&batch).unwrap();
            offered.extend(batch.updates.iter().map(|u| u.edge));
            prop_assert!(oracle::is_matching(g.edges()));
            prop_assert!(g.size() <= cap);
            if g.size() < cap {
                prop_assert!(offered.iter().all(|e| g.is_matched(e.u) || g.is_matched(e.v)));
            }
        }
    }

    #[test]
    fn akly_samples_only_live_edges(seed in any::<u64>()) {
        let n = 40;
        let mut a = Akly::new(config(n, seed, 8), 2.0, 0.0);
        let mut ledger = EdgeLedger::new(n);
        let mut rng = common::rng(seed);
        for _ in 0..15 {
            let batch = common::mixed_batch(&mut rng, &ledger, 8, 35, None);
            ledger.apply(&batch).unwrap();
            a.apply_batch(&batch).unwrap();
            prop_assert!(oracle::is_matching(&a.matching()));
            prop_assert!(a.sampled_edges().iter().all(|e| ledger.contains(e)));
            prop_assert!(a.matching().iter().all(|e| ledger.contains(e)));
        }
    }
}

#[test]
fn insertion_tester_is_monotone_in_k() {
    let n = 40;
    let mut rng = common::rng(3);
    let ledger = EdgeLedger::new(n);
    let batch = common::mixed_batch(&mut rng, &ledger, 30, 0, None);
    let verdicts: Vec<bool> = (1..=20)
        .map(|k| {
            let mut t = Tester::insertion_only(config(n, 5, 64), k);
            t.apply_batch(&batch).unwrap();
            t.verdict()
        })
        .collect();
    // true for small k, then false from some point on
    let first_false = verdicts.iter().position(|v| !v).unwrap_or(verdicts.len());
    assert!(verdicts[first_false..].iter().all(|v| !v), "{verdicts:?}");
}

#[test]
fn estimator_follows_a_shrinking_matching() {
    let n = 256;
    let mut est = SizeEstimator::new(config(n, 8, 64), 2.0, true);
    let pm: Vec<Edge> = (0..128).map(|i| Edge::new(i, i + 128)).collect();
    for chunk in pm.chunks(64) {
        est.apply_batch(&UpdateBatch::new(chunk.iter().map(|e| Update::insert(e.u, e.v)).collect())).unwrap();
    }
    let full = est.estimate();
    for chunk in pm[..96].chunks(64) {
        est.apply_batch(&UpdateBatch::new(chunk.iter().map(|e| Update::delete(e.u, e.v)).collect())).unwrap();
    }
    let shrunk = est.estimate();
    assert!((32..=128).contains(&full), "full {full}");
    assert!(shrunk < full, "shrunk {shrunk} full {full}");
}
