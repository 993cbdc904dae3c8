//! NDCG, MRR and lenient gain against direct re-implementations on random
//! toy hierarchies.

mod common;

use answer_type::eval::{mrr, ndcg_at_k, reciprocal_rank};
use answer_type::typehier::{lenient_gain, TypeHierarchy, ROOT_TOKEN};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::oracle::{brute_mrr, brute_ndcg, RandomForest};

#[test]
fn ndcg_matches_direct_summation_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut capped_seen = 0;
    for _ in 0..1000 {
        let forest = RandomForest::generate(&mut rng, 15);
        let hier = forest.hierarchy();
        let n_pred = rng.gen_range(0..=10.min(forest.len()));
        let n_gold = rng.gen_range(1..=5.min(forest.len()));
        let pred: Vec<String> = forest.names.choose_multiple(&mut rng, n_pred).cloned().collect();
        let gold: Vec<String> = forest.names.choose_multiple(&mut rng, n_gold).cloned().collect();
        let k = rng.gen_range(1..=12);

        let got = ndcg_at_k(&pred, &gold, &hier, k);
        let want = brute_ndcg(&forest, &pred, &gold, k);
        assert!((got.raw - want).abs() <= 1e-9, "raw {} vs {want}", got.raw);
        assert!((got.value - want.min(1.0)).abs() <= 1e-9);
        assert!((0.0..=1.0).contains(&got.value));
        if want > 1.0 {
            capped_seen += 1;
        }
    }
    assert!(capped_seen > 0, "random instances never exercised the cap");
}

#[test]
fn mrr_matches_first_hit_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let universe: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
    for _ in 0..1000 {
        let n_q = rng.gen_range(1..6);
        let runs: Vec<(Vec<String>, Vec<String>)> = (0..n_q)
            .map(|_| {
                let np = rng.gen_range(0..=10);
                let ng = rng.gen_range(1..=5);
                (
                    universe.choose_multiple(&mut rng, np).cloned().collect(),
                    universe.choose_multiple(&mut rng, ng).cloned().collect(),
                )
            })
            .collect();
        let got = mrr(&runs);
        assert!((got - brute_mrr(&runs)).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn lenient_gain_hand_values() {
    let mut pairs = vec![("L1".to_string(), ROOT_TOKEN.to_string())];
    for i in 2..=7 {
        pairs.push((format!("L{i}"), format!("L{}", i - 1)));
    }
    pairs.push(("Other".into(), ROOT_TOKEN.into()));
    let h = TypeHierarchy::from_pairs(pairs).unwrap();
    assert_eq!(h.max_depth(), 7);

    assert_eq!(lenient_gain("L7", &["L7"], &h), 1.0);
    assert!((lenient_gain("L6", &["L7"], &h) - (1.0 - 1.0 / 7.0)).abs() < 1e-12);
    assert!((lenient_gain("L6", &["L7"], &h) - 0.8571).abs() < 1e-4);
    assert!((lenient_gain("L7", &["L6"], &h) - (1.0 - 1.0 / 7.0)).abs() < 1e-12);
    assert!((lenient_gain("L1", &["L7"], &h) - (1.0 - 6.0 / 7.0)).abs() < 1e-12);
    // closest gold type wins
    assert!((lenient_gain("L3", &["L7", "L4"], &h) - (1.0 - 1.0 / 7.0)).abs() < 1e-12);
    assert_eq!(lenient_gain("Other", &["L7"], &h), 0.0);
    assert_eq!(lenient_gain("Unknown", &["L7"], &h), 0.0);
}

#[test]
fn reciprocal_rank_examples() {
    assert_eq!(reciprocal_rank(&["a", "b"], &["b"]), 0.5);
    assert_eq!(reciprocal_rank::<&str, &str>(&[], &["b"]), 0.0);
}
