//! Direct, unoptimized re-implementations used as test oracles.

use std::collections::HashMap;

use answer_type::typehier::{TypeHierarchy, ROOT_TOKEN};
use rand::Rng;

/// A random forest of types: node `i` hangs below a random earlier node or
/// is a root.
pub struct RandomForest {
    pub names: Vec<String>,
    pub parent: Vec<Option<usize>>,
}

impl RandomForest {
    pub fn generate<R: Rng>(rng: &mut R, max_nodes: usize) -> Self {
        let n = rng.gen_range(2..=max_nodes);
        let mut parent = Vec::with_capacity(n);
        for i in 0..n {
            parent.push(if i == 0 || rng.gen_bool(0.2) {
                None
            } else {
                Some(rng.gen_range(0..i))
            });
        }
        RandomForest {
            names: (0..n).map(|i| format!("T{i}")).collect(),
            parent,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn hierarchy(&self) -> TypeHierarchy {
        let pairs: Vec<(String, String)> = (0..self.len())
            .map(|i| {
                let p = self.parent[i].map_or(ROOT_TOKEN.to_string(), |p| self.names[p].clone());
                (self.names[i].clone(), p)
            })
            .collect();
        TypeHierarchy::from_pairs(pairs).unwrap()
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn depth(&self, i: usize) -> usize {
        let mut d = 1;
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            d += 1;
            cur = p;
        }
        d
    }

    fn is_ancestor_or_self(&self, a: usize, b: usize) -> bool {
        let mut cur = Some(b);
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.parent[c];
        }
        false
    }

    pub fn gain(&self, t: &str, gold: &[String]) -> f64 {
        let h = (0..self.len()).map(|i| self.depth(i)).max().unwrap() as f64;
        let Some(ti) = self.index(t) else { return 0.0 };
        let mut best: f64 = 0.0;
        for g in gold {
            let Some(gi) = self.index(g) else { continue };
            if self.is_ancestor_or_self(ti, gi) || self.is_ancestor_or_self(gi, ti) {
                let d = (self.depth(ti) as f64 - self.depth(gi) as f64).abs();
                best = best.max(1.0 - d / h);
            }
        }
        best
    }
}

/// Uncapped NDCG@k by direct summation.
pub fn brute_ndcg(forest: &RandomForest, pred: &[String], gold: &[String], k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, t) in pred.iter().enumerate() {
        if i >= k {
            break;
        }
        dcg += forest.gain(t, gold) / ((i + 2) as f64).log2();
    }
    let mut idcg = 0.0;
    for i in 0..gold.len().min(k) {
        idcg += 1.0 / ((i + 2) as f64).log2();
    }
    dcg / idcg
}

pub fn brute_mrr(runs: &[(Vec<String>, Vec<String>)]) -> f64 {
    let mut total = 0.0;
    for (pred, gold) in runs {
        for (i, p) in pred.iter().enumerate() {
            if gold.contains(p) {
                total += 1.0 / (i + 1) as f64;
                break;
            }
        }
    }
    total / runs.len() as f64
}

/// Score every label of a trained matcher directly from its weights:
/// `w · (cluster score, label score, prior)`, best first, ties by label.
pub fn exhaustive_xmc_ranking(
    model: &answer_type::xmc::MatcherModel,
    weights: [f64; 3],
    x: &answer_type::textproc::SparseVector,
) -> Vec<(String, f64)> {
    let dot = |(w, b): (Vec<(u32, f64)>, f64)| {
        let w: HashMap<u32, f64> = w.into_iter().collect();
        let mut s = b;
        for (f, v) in x.iter() {
            if let Some(wf) = w.get(&f) {
                s += v * wf;
            }
        }
        s
    };
    let mut scored: Vec<(String, f64)> = (0..model.labels.len())
        .map(|l| {
            let c = dot(model.cluster_weights(model.label_cluster[l]));
            let s = dot(model.label_weights(l));
            let p = model.priors[l];
            (model.labels[l].clone(), weights[0] * c + weights[1] * s + weights[2] * p)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}
