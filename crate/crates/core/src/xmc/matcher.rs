//! Cluster-level and per-cluster label matchers, both sparse linear
//! one-vs-rest models.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cluster::LabelIndex;
use super::embed::TrainExample;
use crate::error::{Error, Result};
use crate::linear::{train_binary, BinaryModel, SgdParams};
use crate::textproc::SparseVector;

/// A bank of linear scorers stored feature-major, so scoring a sparse
/// question touches only the rows of its nonzero features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseBank {
    pub n_outputs: usize,
    pub biases: Vec<f64>,
    features: Vec<u32>,
    offsets: Vec<u32>,
    entries: Vec<(u32, f64)>,
}

impl SparseBank {
    /// `models[j]` is `Some` for outputs with a trained model; missing
    /// outputs score 0.
    pub fn from_models(models: &[Option<BinaryModel>]) -> Self {
        let mut rows: std::collections::BTreeMap<u32, Vec<(u32, f64)>> = Default::default();
        let mut biases = vec![0.0; models.len()];
        for (j, m) in models.iter().enumerate() {
            let Some(m) = m else { continue };
            biases[j] = m.bias;
            for (f, &w) in m.weights.iter().enumerate() {
                if w != 0.0 {
                    rows.entry(f as u32).or_default().push((j as u32, w));
                }
            }
        }
        let mut features = Vec::with_capacity(rows.len());
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for (f, row) in rows {
            features.push(f);
            entries.extend(row);
            offsets.push(entries.len() as u32);
        }
        SparseBank {
            n_outputs: models.len(),
            biases,
            features,
            offsets,
            entries,
        }
    }

    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        let mut out = self.biases.clone();
        for (f, v) in x.iter() {
            if let Ok(r) = self.features.binary_search(&f) {
                for &(j, w) in &self.entries[self.offsets[r] as usize..self.offsets[r + 1] as usize] {
                    out[j as usize] += v * w;
                }
            }
        }
        out
    }

    /// The nonzero weights of one output, in feature order.
    pub fn output_weights(&self, output: usize) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        for (r, &f) in self.features.iter().enumerate() {
            for &(j, w) in &self.entries[self.offsets[r] as usize..self.offsets[r + 1] as usize] {
                if j as usize == output {
                    out.push((f, w));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMatcher {
    /// Global label ids in this cluster.
    pub labels: Vec<usize>,
    /// False when no training question was routed here.
    pub active: bool,
    pub bank: SparseBank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherModel {
    pub labels: Vec<String>,
    pub label_cluster: Vec<usize>,
    /// `None` for a single-cluster index: every question goes to cluster 0.
    pub cluster_model: Option<SparseBank>,
    pub cluster_active: Vec<bool>,
    pub clusters: Vec<ClusterMatcher>,
    /// Fraction of training questions carrying each label.
    pub priors: Vec<f64>,
    pub dim: usize,
}

/// Features of one candidate label for the ensemble ranker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub label: usize,
    pub cluster: usize,
    pub features: [f64; 3],
}

pub fn train_matchers(index: &LabelIndex, examples: &[TrainExample], dim: usize, params: &SgdParams) -> Result<MatcherModel> {
    params.validate()?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument("no training questions for matchers".into()));
    }
    if let Some(max) = examples.iter().filter_map(|e| e.x.max_id()).max() {
        if max as usize >= dim {
            return Err(Error::Dimension {
                expected: dim,
                found: max as usize + 1,
            });
        }
    }

    let mut labels = Vec::with_capacity(index.label_count());
    let mut label_cluster = Vec::with_capacity(index.label_count());
    for (c, members) in index.clusters.iter().enumerate() {
        for l in members {
            labels.push(l.clone());
            label_cluster.push(c);
        }
    }
    let label_id: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if label_id.len() != labels.len() {
        return Err(Error::Validation("label index assigns a label to more than one cluster".into()));
    }
    let n_clusters = index.cluster_count();

    let gold: Vec<BTreeSet<usize>> = examples
        .iter()
        .map(|e| e.labels.iter().filter_map(|l| label_id.get(l.as_str()).copied()).collect())
        .collect();
    let targets: Vec<BTreeSet<usize>> = gold.iter().map(|g| g.iter().map(|&l| label_cluster[l]).collect()).collect();

    let xs: Vec<&SparseVector> = examples.iter().map(|e| &e.x).collect();
    let cluster_active: Vec<bool> = (0..n_clusters).map(|c| targets.iter().any(|t| t.contains(&c))).collect();
    for (c, active) in cluster_active.iter().enumerate() {
        if !active {
            log::warn!("cluster {c} has no positive questions; its labels are scored by prior only");
        }
    }

    let cluster_model = if n_clusters > 1 {
        let models = (0..n_clusters)
            .into_par_iter()
            .map(|c| {
                if !cluster_active[c] {
                    return Ok(None);
                }
                let ys: Vec<bool> = targets.iter().map(|t| t.contains(&c)).collect();
                let p = SgdParams {
                    seed: mix(params.seed, 0, c),
                    ..*params
                };
                train_binary(&xs, &ys, dim, &p).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(SparseBank::from_models(&models))
    } else {
        None
    };

    let clusters = (0..n_clusters)
        .into_par_iter()
        .map(|c| {
            let members: Vec<usize> = (0..labels.len()).filter(|&l| label_cluster[l] == c).collect();
            let routed: Vec<usize> = (0..examples.len()).filter(|&i| targets[i].contains(&c)).collect();
            let rx: Vec<&SparseVector> = routed.iter().map(|&i| xs[i]).collect();
            let models = members
                .iter()
                .map(|&l| {
                    let ys: Vec<bool> = routed.iter().map(|&i| gold[i].contains(&l)).collect();
                    if !ys.iter().any(|&y| y) {
                        return Ok(None);
                    }
                    let p = SgdParams {
                        seed: mix(params.seed, 1, l),
                        ..*params
                    };
                    train_binary(&rx, &ys, dim, &p).map(Some)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ClusterMatcher {
                labels: members,
                active: cluster_active[c],
                bank: SparseBank::from_models(&models),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![0usize; labels.len()];
    for g in &gold {
        for &l in g {
            counts[l] += 1;
        }
    }
    let priors = counts.iter().map(|&c| c as f64 / examples.len() as f64).collect();

    Ok(MatcherModel {
        labels,
        label_cluster,
        cluster_model,
        cluster_active,
        clusters,
        priors,
        dim,
    })
}

fn mix(seed: u64, stream: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream << 32)
        .wrapping_add(i as u64)
}

impl MatcherModel {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_scores(&self, x: &SparseVector) -> Vec<f64> {
        match &self.cluster_model {
            None => vec![0.0; self.clusters.len()],
            Some(bank) => {
                let mut s = bank.scores(x);
                for (c, score) in s.iter_mut().enumerate() {
                    if !self.cluster_active[c] {
                        *score = 0.0;
                    }
                }
                s
            }
        }
    }

    /// Indices of the `beam` best clusters, best first, ties by index.
    pub fn top_clusters(&self, x: &SparseVector, beam: usize) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> = self.cluster_scores(x).into_iter().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(beam);
        ranked
    }

    /// `(cluster score, label score, prior)` for every label in the top
    /// `beam` clusters.
    pub fn candidates(&self, x: &SparseVector, beam: usize) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (c, cluster_score) in self.top_clusters(x, beam) {
            let cm = &self.clusters[c];
            let label_scores = if cm.active { cm.bank.scores(x) } else { vec![0.0; cm.labels.len()] };
            for (j, &l) in cm.labels.iter().enumerate() {
                out.push(Candidate {
                    label: l,
                    cluster: c,
                    features: [cluster_score, label_scores[j], self.priors[l]],
                });
            }
        }
        out
    }

    /// Weights of the cluster scorer for cluster `c` (empty for a
    /// single-cluster model).
    pub fn cluster_weights(&self, c: usize) -> (Vec<(u32, f64)>, f64) {
        match &self.cluster_model {
            Some(bank) if self.cluster_active[c] => (bank.output_weights(c), bank.biases[c]),
            _ => (Vec::new(), 0.0),
        }
    }

    /// Weights of the scorer for global label id `l`.
    pub fn label_weights(&self, l: usize) -> (Vec<(u32, f64)>, f64) {
        let cm = &self.clusters[self.label_cluster[l]];
        let j = cm.labels.iter().position(|&x| x == l).unwrap();
        if !cm.active {
            return (Vec::new(), 0.0);
        }
        (cm.bank.output_weights(j), cm.bank.biases[j])
    }
}
