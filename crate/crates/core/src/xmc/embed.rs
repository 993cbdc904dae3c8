use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::SparseVector;

/// A vectorized training question with its gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub id: String,
    pub x: SparseVector,
    pub labels: Vec<String>,
}

/// Label representations built by positive-instance feature aggregation:
/// the normalized sum of the feature vectors of every question the label is
/// gold for. Labels are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEmbedding {
    pub labels: Vec<String>,
    pub vectors: Vec<SparseVector>,
    pub positives: Vec<usize>,
}

impl LabelEmbedding {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn dim(&self) -> usize {
        self.vectors.iter().filter_map(|v| v.max_id()).max().map_or(0, |m| m as usize + 1)
    }
}

/// `extra_labels` may name labels with no training positives (for example
/// every type of an ontology); they get an empty embedding.
pub fn build_label_embeddings(examples: &[TrainExample], extra_labels: &[String]) -> Result<LabelEmbedding> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("label embeddings need at least one question".into()));
    }
    let labels: Vec<String> = examples
        .iter()
        .flat_map(|e| e.labels.iter())
        .chain(extra_labels)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut pairs: Vec<Vec<(u32, f64)>> = vec![Vec::new(); labels.len()];
    let mut positives = vec![0; labels.len()];
    for e in examples {
        let unique: BTreeSet<&String> = e.labels.iter().collect();
        for l in unique {
            let i = labels.binary_search(l).unwrap();
            positives[i] += 1;
            pairs[i].extend(e.x.iter());
        }
    }
    let vectors = pairs.into_iter().map(|p| SparseVector::from_pairs(p).normalized()).collect();
    Ok(LabelEmbedding {
        labels,
        vectors,
        positives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, pairs: Vec<(u32, f64)>, labels: &[&str]) -> TrainExample {
        TrainExample {
            id: id.into(),
            x: SparseVector::from_pairs(pairs).normalized(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn single_positive_is_the_question_vector() {
        let e = vec![ex("a", vec![(0, 3.0), (2, 4.0)], &["L"])];
        let emb = build_label_embeddings(&e, &[]).unwrap();
        assert_eq!(emb.vectors[0], e[0].x);
    }

    #[test]
    fn duplicates_collapse_under_normalization() {
        let one = build_label_embeddings(&[ex("a", vec![(1, 1.0), (4, 2.0)], &["L"])], &[]).unwrap();
        let two = build_label_embeddings(
            &[ex("a", vec![(1, 1.0), (4, 2.0)], &["L"]), ex("b", vec![(1, 1.0), (4, 2.0)], &["L"])],
            &[],
        )
        .unwrap();
        for (a, b) in one.vectors[0].iter().zip(two.vectors[0].iter()) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_summed_embedding() {
        let e = vec![
            ex("a", vec![(0, 1.0)], &["L", "M"]),
            ex("b", vec![(0, 1.0), (1, 1.0)], &["L"]),
            ex("c", vec![(2, 1.0)], &["M"]),
        ];
        let emb = build_label_embeddings(&e, &["Z".to_string()]).unwrap();
        assert_eq!(emb.labels, ["L", "M", "Z"]);
        // L = (1, 0, 0) + (1/√2, 1/√2, 0), then normalized
        let s = 1.0 / 2f64.sqrt();
        let raw = [1.0 + s, s];
        let n = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt();
        let l = emb.vectors[0].entries();
        assert!((l[0].1 - raw[0] / n).abs() < 1e-9);
        assert!((l[1].1 - raw[1] / n).abs() < 1e-9);
        assert_eq!(emb.positives, [2, 2, 0]);
        assert!(emb.vectors[2].is_empty());
        assert!((emb.vectors[1].norm() - 1.0).abs() < 1e-9);
    }
}
