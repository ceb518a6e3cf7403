mod common;

use mpcstream_core::connectivity::ConnectivityConfig;
use mpcstream_core::field::below;
use mpcstream_core::mpc_engine::AccountingMode;
use mpcstream_core::msf_apps::{Bipartiteness, MsfApprox, MsfExact};
use mpcstream_core::oracle;
use mpcstream_core::{Edge, EdgeLedger};

fn config(n: usize, seed: u64, k: usize) -> ConnectivityConfig {
    ConnectivityConfig::new(n, 0.5, AccountingMode::Idealized, seed).with_k_max(k).with_local_memory(1 << 24)
}

fn weighted(ledger: &EdgeLedger) -> Vec<(f64, Edge)> {
    ledger.weighted_edges().map(|(e, w)| (w, e)).collect()
}

#[test]
fn exact_batches_match_kruskal_edge_for_edge() {
    for seed in 0..40 {
        let n = 40;
        let mut msf = MsfExact::new(config(n, seed, 12));
        let mut ledger = EdgeLedger::new(n);
        let mut rng = common::rng(seed);
        for _ in 0..25 {
            let batch = common::mixed_batch(&mut rng, &ledger, 12, 0, Some(6));
            ledger.apply(&batch).unwrap();
            msf.apply_batch(&batch).unwrap();
            assert_eq!(msf.edges(), oracle::kruskal(n, &weighted(&ledger)), "seed {seed}");
        }
    }
}

#[test]
fn exact_single_inserts_match_kruskal() {
    let n = 128;
    let mut msf = MsfExact::new(config(n, 1, 1));
    let mut ledger = EdgeLedger::new(n);
    let mut rng = common::rng(77);
    for step in 0..1000 {
        let batch = common::mixed_batch(&mut rng, &ledger, 1, 0, Some(1000));
        ledger.apply(&batch).unwrap();
        let u = batch.updates[0];
        msf.insert(u.edge, u.weight.unwrap()).unwrap();
        let want = oracle::kruskal_weight(n, &weighted(&ledger));
        assert_eq!(msf.weight(), want, "step {step}");
    }
}

#[test]
fn approx_estimate_within_bounds_when_levels_are_right() {
    let eps = 0.1;
    let mut checked = 0;
    for seed in 0..10 {
        let n = 32;
        let max_w = 50;
        let mut msf = MsfApprox::new(config(n, seed, 10), eps, max_w as f64);
        let mut ledger = EdgeLedger::new(n);
        let mut rng = common::rng(seed + 500);
        for _ in 0..15 {
            let batch = common::mixed_batch(&mut rng, &ledger, 10, 30, Some(max_w));
            ledger.apply(&batch).unwrap();
            msf.apply_batch(&batch).unwrap();
            let levels_ok = (0..=msf.top()).all(|i| {
                let level: Vec<Edge> = ledger.weighted_edges().filter(|&(_, w)| w <= msf.threshold(i) * (1.0 + 1e-12)).map(|(e, _)| e).collect();
                oracle::count_components(n, &level) == msf.level(i).count_components()
            });
            if !levels_ok {
                continue;
            }
            checked += 1;
            let exact = oracle::kruskal_weight(n, &weighted(&ledger));
            let est = msf.weight_estimate();
            assert!(est >= exact * (1.0 - 1e-9) && est <= exact * (1.0 + eps) + 1e-9, "estimate {est} exact {exact}");
            let forest = msf.forest();
            let graph: Vec<Edge> = ledger.edges().collect();
            assert!(oracle::is_spanning_forest(n, &graph, &forest));
            assert!(oracle::forest_weight(&weighted(&ledger), &forest) <= exact * (1.0 + eps) + 1e-9);
        }
    }
    assert!(checked >= 140, "{checked}");
}

#[test]
fn double_cover_matches_two_coloring() {
    let mut agree = 0;
    let mut total = 0;
    for seed in 0..10 {
        let n = 16;
        let mut bip = Bipartiteness::new(config(n, seed, 6));
        let mut ledger = EdgeLedger::new(n);
        let mut rng = common::rng(seed + 900);
        for _ in 0..30 {
            let share = if below(&mut rng, 2) == 0 { 20 } else { 70 };
            let batch = common::mixed_batch(&mut rng, &ledger, 3, share, None);
            ledger.apply(&batch).unwrap();
            bip.apply_batch(&batch).unwrap();
            let graph: Vec<Edge> = ledger.edges().collect();
            total += 1;
            agree += usize::from(bip.is_bipartite() == oracle::is_bipartite(n, &graph));
        }
    }
    assert!(agree * 100 >= total * 99, "{agree}/{total}");
}
