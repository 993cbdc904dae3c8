//! Invariant checks and their input strategies, shared by the property
//! tests and the acceptance runner.

use std::collections::{BTreeMap, HashSet};

use answer_type::dataset::{dataset_stats, flatten_category, split_folds, Question, QuestionSet, RawCategory, Source, Split};
use answer_type::eval::ndcg_at_k;
use answer_type::fusion::{bm25_rank, build_entity_index, rank_types_ec, Aggregation, Bm25Params, EntityRecord};
use answer_type::ranking::RankedTypeList;
use answer_type::textproc::{tokenize, SparseVector};
use answer_type::typehier::lenient_gain;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::oracle::RandomForest;

pub type Check = std::result::Result<(), TestCaseError>;

pub fn answer(kind: u8) -> (RawCategory, Vec<String>) {
    match kind % 5 {
        0 => (RawCategory::Boolean, vec!["boolean".into()]),
        1 => (RawCategory::Literal, vec!["date".into()]),
        2 => (RawCategory::Literal, vec!["number".into()]),
        3 => (RawCategory::Literal, vec!["string".into()]),
        _ => (RawCategory::Resource, vec!["dbo:Thing".into()]),
    }
}

pub fn question_set(kinds: &[u8]) -> QuestionSet {
    let questions = kinds
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (category, types) = answer(k);
            Question {
                id: format!("q{i}"),
                text: format!("question number {i}"),
                category: Some(category),
                types,
            }
        })
        .collect();
    QuestionSet::new(Source::Dbpedia, Split::Train, questions).unwrap()
}

pub fn fold_case() -> impl Strategy<Value = (Vec<u8>, usize, u64)> {
    (prop::collection::vec(0u8..5, 2..80), 2usize..8, any::<u64>()).prop_filter("n <= |qs|", |(k, n, _)| *n <= k.len())
}

pub fn check_fold_partition(kinds: &[u8], n: usize, seed: u64) -> Check {
    let qs = question_set(kinds);
    let folds = split_folds(&qs, n, seed).unwrap();
    prop_assert_eq!(folds.assignment.len(), qs.len());
    for q in &qs.questions {
        prop_assert!(folds.fold_of(&q.id).unwrap() < n);
    }
    let sizes = folds.fold_sizes();
    prop_assert_eq!(sizes.iter().sum::<usize>(), qs.len());
    prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    prop_assert_eq!(folds, split_folds(&qs, n, seed).unwrap());
    Ok(())
}

pub fn check_flatten_round_trip(kind: u8) -> Check {
    let (category, types) = answer(kind);
    let flat = flatten_category(category, &types).unwrap();
    let (raw, literal) = flat.unflatten();
    prop_assert_eq!(raw, category);
    if raw == RawCategory::Literal {
        prop_assert_eq!(literal.unwrap().as_str(), types[0].as_str());
    }
    Ok(())
}

pub fn check_stats_sum(kinds: &[u8]) -> Check {
    let stats = dataset_stats(&question_set(kinds));
    prop_assert_eq!(stats.by_category.values().sum::<usize>(), stats.total);
    prop_assert_eq!(stats.by_flat_category.values().sum::<usize>(), stats.total);
    Ok(())
}

pub fn vector_case() -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::vec((0u32..50, -5.0f64..5.0), 0..30)
}

pub fn check_normalized(pairs: Vec<(u32, f64)>) -> Check {
    let v = SparseVector::from_pairs(pairs).normalized();
    let ids: Vec<u32> = v.iter().map(|(i, _)| i).collect();
    prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
    prop_assert!(v.iter().all(|(_, x)| x != 0.0));
    if !v.is_empty() {
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
    }
    Ok(())
}

pub fn ranked_case() -> impl Strategy<Value = (Vec<(String, i32)>, usize)> {
    (prop::collection::vec(("[a-h]{1,2}", -100i32..100), 0..50), 1usize..20)
}

pub fn check_ranked_list(items: Vec<(String, i32)>, k: usize) -> Check {
    let list = RankedTypeList::from_scores(items.into_iter().map(|(l, s)| (l, s as f64 / 7.0)));
    prop_assert!(list.is_well_formed());
    let entries = list.entries();
    prop_assert!(entries.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
    let labels: HashSet<&str> = list.labels().into_iter().collect();
    prop_assert_eq!(labels.len(), list.len());
    let short = list.clone().truncated(k);
    prop_assert_eq!(short.entries(), &list.entries()[..k.min(list.len())]);
    Ok(())
}

pub fn gain_case() -> impl Strategy<Value = (u64, usize, Vec<usize>)> {
    (any::<u64>(), 0usize..15, prop::collection::vec(0usize..15, 1..5))
}

pub fn check_full_gain_iff_exact(seed: u64, t: usize, gold: Vec<usize>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forest = RandomForest::generate(&mut rng, 15);
    let hier = forest.hierarchy();
    let t = forest.names[t % forest.len()].clone();
    let gold: Vec<String> = gold.into_iter().map(|g| forest.names[g % forest.len()].clone()).collect();
    let g = lenient_gain(&t, &gold, &hier);
    prop_assert!((0.0..=1.0).contains(&g));
    prop_assert_eq!(g == 1.0, gold.contains(&t));
    Ok(())
}

pub fn prefix_case() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..8)
}

pub fn check_ndcg_prefix(seed: u64, k: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forest = RandomForest::generate(&mut rng, 15);
    let hier = forest.hierarchy();
    let mut names = forest.names.clone();
    names.shuffle(&mut rng);
    let gold: Vec<String> = names[..2.min(names.len())].to_vec();
    let mut pred = names.clone();
    pred.shuffle(&mut rng);
    let head = ndcg_at_k(&pred[..k.min(pred.len())], &gold, &hier, k);
    let mut other_tail = pred.clone();
    if other_tail.len() > k {
        other_tail[k..].reverse();
        other_tail.truncate(k + 1);
    }
    let full = ndcg_at_k(&pred, &gold, &hier, k);
    prop_assert_eq!(head, full);
    prop_assert_eq!(head, ndcg_at_k(&other_tail, &gold, &hier, k));
    prop_assert!((0.0..=1.0).contains(&full.value));
    Ok(())
}

const WORDS: &[&str] = &[
    "river", "city", "film", "band", "album", "player", "coach", "mountain", "lake", "club",
];
const TYPES: &[&str] = &["dbo:A", "dbo:B", "dbo:C", "dbo:D", "dbo:E", "dbo:F"];

pub fn ec_case() -> impl Strategy<Value = (Vec<EntityRecord>, Vec<usize>, usize, bool)> {
    let entities = prop::collection::vec(
        (
            prop::collection::vec(0..WORDS.len(), 1..8),
            prop::collection::btree_set(0..TYPES.len(), 0..3),
        ),
        1..15,
    )
    .prop_map(|ents| {
        ents.into_iter()
            .enumerate()
            .map(|(i, (words, types))| EntityRecord {
                id: format!("e{i}"),
                abstract_text: words.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" "),
                types: types.into_iter().map(|t| TYPES[t].to_string()).collect(),
            })
            .collect()
    });
    (entities, prop::collection::vec(0..WORDS.len(), 1..5), 1usize..6, any::<bool>())
}

pub fn check_ec_subset(entities: Vec<EntityRecord>, query: Vec<usize>, k: usize, max: bool) -> Check {
    let q = query.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ");
    // every entity untyped: nothing to index
    let Ok(index) = build_entity_index(entities, Bm25Params::default()) else {
        return Ok(());
    };
    let agg = if max { Aggregation::Max } else { Aggregation::Sum };
    let ranked = rank_types_ec(&q, &index, k, agg).unwrap();
    prop_assert!(ranked.is_well_formed());
    let top = bm25_rank(&index, &tokenize(&q), k);
    prop_assert!(top.len() <= k);
    prop_assert!(top.iter().all(|(_, s)| *s >= 0.0));
    let allowed: HashSet<&str> = top
        .iter()
        .flat_map(|(e, _)| index.entity_types(e).iter().map(String::as_str))
        .collect();
    for t in ranked.labels() {
        prop_assert!(allowed.contains(t), "{} not borne by a top-{} entity", t, k);
    }
    if agg == Aggregation::Sum {
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        for (e, s) in &top {
            for t in index.entity_types(e) {
                *sums.entry(t.as_str()).or_default() += s;
            }
        }
        for (t, s) in ranked.entries() {
            prop_assert!((sums[t.as_str()] - s).abs() < 1e-9);
        }
    }
    Ok(())
}
