//! Semantic label indexing: recursive balanced spherical k-means over label
//! embeddings.
//!
//! A node with more than `max_leaf` labels is split into
//! `min(branching, ceil(n / max_leaf))` children. Each split first runs
//! k-means under a hard balance constraint (child sizes `floor(n/k)` or
//! `ceil(n/k)`), then relaxes with unconstrained nearest-centroid passes as
//! long as sibling sizes stay within a factor of two and no child drops below
//! half the balanced size. Labels without positives skip clustering and go
//! to a separate overflow leaf.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embed::LabelEmbedding;
use crate::error::{Error, Result};
use crate::textproc::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub branching: usize,
    pub max_leaf: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            branching: 8,
            max_leaf: 64,
            seed: 0,
            max_iter: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelIndex {
    /// Leaf clusters in depth-first order; each holds label names.
    pub clusters: Vec<Vec<String>>,
    /// Position of the overflow leaf for zero-positive labels, if any.
    pub overflow: Option<usize>,
    pub branching: usize,
    pub max_leaf: usize,
    /// Depth of the deepest leaf (a single leaf has depth 1).
    pub depth: usize,
    pub seed: u64,
}

impl LabelIndex {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn label_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn cluster_of(&self) -> HashMap<&str, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, ls)| ls.iter().map(move |l| (l.as_str(), c)))
            .collect()
    }

    /// Upper bound on the number of leaves: every leaf produced by a split
    /// holds more than `max_leaf / 4` labels, plus the overflow leaf.
    pub fn cluster_count_bound(&self) -> usize {
        let clustered = self.label_count() - self.overflow.map_or(0, |o| self.clusters[o].len());
        let min_target = (self.max_leaf / 4).max(1);
        clustered.div_ceil(min_target).max(1) + usize::from(self.overflow.is_some())
    }
}

fn validate(params: &ClusterParams) -> Result<()> {
    if params.max_leaf < 1 {
        return Err(Error::InvalidArgument("max_leaf must be at least 1".into()));
    }
    if params.branching < 2 {
        return Err(Error::InvalidArgument("branching must be at least 2".into()));
    }
    Ok(())
}

pub fn cluster_labels(emb: &LabelEmbedding, params: &ClusterParams) -> Result<LabelIndex> {
    validate(params)?;
    let (active, empty): (Vec<usize>, Vec<usize>) = (0..emb.len()).partition(|&i| !emb.vectors[i].is_empty());
    let dim = emb.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut leaves: Vec<Vec<usize>> = Vec::new();
    let mut depth = 0;
    if !active.is_empty() {
        split(emb, dim, active, 1, params, &mut rng, &mut leaves, &mut depth);
    }
    let overflow = if empty.is_empty() {
        None
    } else {
        log::warn!("{} labels have no training positives; placed in an overflow cluster", empty.len());
        leaves.push(empty);
        depth = depth.max(1);
        Some(leaves.len() - 1)
    };
    let clusters = leaves
        .into_iter()
        .map(|ls| ls.into_iter().map(|i| emb.labels[i].clone()).collect())
        .collect();
    Ok(LabelIndex {
        clusters,
        overflow,
        branching: params.branching,
        max_leaf: params.max_leaf,
        depth,
        seed: params.seed,
    })
}

#[allow(clippy::too_many_arguments)]
fn split(
    emb: &LabelEmbedding,
    dim: usize,
    items: Vec<usize>,
    level: usize,
    params: &ClusterParams,
    rng: &mut ChaCha8Rng,
    leaves: &mut Vec<Vec<usize>>,
    depth: &mut usize,
) {
    if items.len() <= params.max_leaf {
        *depth = (*depth).max(level);
        leaves.push(items);
        return;
    }
    let k = params.branching.min(items.len().div_ceil(params.max_leaf));
    let vectors: Vec<&SparseVector> = items.iter().map(|&i| &emb.vectors[i]).collect();
    let assignment = balanced_kmeans(&vectors, dim, k, params.max_iter, rng);
    let mut children = vec![Vec::new(); k];
    for (pos, &c) in assignment.iter().enumerate() {
        children[c].push(items[pos]);
    }
    for child in children {
        split(emb, dim, child, level + 1, params, rng, leaves, depth);
    }
}

fn centroids(vectors: &[&SparseVector], assignment: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut cs = vec![vec![0.0; dim]; k];
    for (v, &c) in vectors.iter().zip(assignment) {
        v.add_to_dense(&mut cs[c], 1.0);
    }
    for c in &mut cs {
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            c.iter_mut().for_each(|x| *x /= n);
        }
    }
    cs
}

fn similarities(vectors: &[&SparseVector], cs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors.iter().map(|v| cs.iter().map(|c| v.dot_dense(c)).collect()).collect()
}

/// k-means++ seeding under cosine distance.
fn seed_centroids(vectors: &[&SparseVector], k: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut dist: Vec<f64> = vec![f64::INFINITY; n];
    while chosen.len() < k {
        let last = vectors[*chosen.last().unwrap()];
        for (i, v) in vectors.iter().enumerate() {
            dist[i] = dist[i].min((1.0 - v.dot(last)).max(0.0));
        }
        for &c in &chosen {
            dist[c] = 0.0;
        }
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if chosen.contains(&pick) {
                (0..n).find(|i| !chosen.contains(i)).unwrap()
            } else {
                pick
            }
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
    }
    chosen
        .into_iter()
        .map(|i| {
            let mut c = vec![0.0; dim];
            vectors[i].add_to_dense(&mut c, 1.0);
            c
        })
        .collect()
}

/// Greedy capacity-constrained assignment: pairs are taken in order of
/// decreasing similarity; sizes end up `floor(n/k)` or `ceil(n/k)`.
fn balanced_assign(sims: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = sims.len();
    let base = n / k;
    let mut extra = n % k;
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..k).map(move |c| (i, c))).collect();
    pairs.sort_by(|a, b| sims[b.0][b.1].total_cmp(&sims[a.0][a.1]).then(a.cmp(b)));
    let mut assign = vec![usize::MAX; n];
    let mut size = vec![0usize; k];
    let mut left = n;
    for (i, c) in pairs {
        if left == 0 {
            break;
        }
        if assign[i] != usize::MAX {
            continue;
        }
        let room = size[c] < base || (size[c] == base && extra > 0);
        if room {
            if size[c] == base {
                extra -= 1;
            }
            assign[i] = c;
            size[c] += 1;
            left -= 1;
        }
    }
    assign
}

fn nearest_assign(sims: &[Vec<f64>]) -> Vec<usize> {
    sims.iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn acceptable(assignment: &[usize], k: usize, floor_size: usize) -> bool {
    let mut size = vec![0usize; k];
    for &c in assignment {
        size[c] += 1;
    }
    let (min, max) = (*size.iter().min().unwrap(), *size.iter().max().unwrap());
    min > 0 && max <= 2 * min && min >= floor_size.div_ceil(2)
}

fn balanced_kmeans(vectors: &[&SparseVector], dim: usize, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = vectors.len();
    let mut cs = seed_centroids(vectors, k, dim, rng);
    let mut assignment = balanced_assign(&similarities(vectors, &cs), k);
    for _ in 0..max_iter {
        cs = centroids(vectors, &assignment, k, dim);
        let next = balanced_assign(&similarities(vectors, &cs), k);
        if next == assignment {
            break;
        }
        assignment = next;
    }

    for _ in 0..max_iter {
        cs = centroids(vectors, &assignment, k, dim);
        let next = nearest_assign(&similarities(vectors, &cs));
        if next == assignment || !acceptable(&next, k, n / k) {
            break;
        }
        assignment = next;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb_from(vectors: Vec<SparseVector>) -> LabelEmbedding {
        let n = vectors.len();
        LabelEmbedding {
            labels: (0..n).map(|i| format!("L{i:02}")).collect(),
            positives: vectors.iter().map(|v| usize::from(!v.is_empty())).collect(),
            vectors,
        }
    }

    fn group_vec(group: u32, i: u32) -> SparseVector {
        let base = group * 10;
        SparseVector::from_pairs(vec![(base, 1.0), (base + 1 + i % 3, 0.6)]).normalized()
    }

    #[test]
    fn small_label_set_is_one_cluster() {
        let emb = emb_from((0..5).map(|i| group_vec(0, i)).collect());
        let idx = cluster_labels(
            &emb,
            &ClusterParams {
                max_leaf: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(idx.cluster_count(), 1);
        assert_eq!(idx.clusters[0].len(), 5);
        assert_eq!(idx.depth, 1);
    }

    #[test]
    fn rejects_bad_params() {
        let emb = emb_from(vec![group_vec(0, 0)]);
        assert!(cluster_labels(
            &emb,
            &ClusterParams {
                max_leaf: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(cluster_labels(
            &emb,
            &ClusterParams {
                branching: 1,
                ..Default::default()
            }
        )
        .is_err());
    }

    /// Brute force: best 2-partition under the spherical k-means objective
    /// sum over parts of the norm of the summed member vectors.
    fn best_two_partition(vectors: &[SparseVector]) -> Vec<Vec<usize>> {
        let n = vectors.len();
        let norm_of = |members: &[usize]| {
            let mut acc: HashMap<u32, f64> = HashMap::new();
            for &m in members {
                for (id, w) in vectors[m].iter() {
                    *acc.entry(id).or_insert(0.0) += w;
                }
            }
            acc.values().map(|x| x * x).sum::<f64>().sqrt()
        };
        let mut best = (f64::NEG_INFINITY, 0u32);
        // label 0 fixed in part A to skip mirrored partitions
        for mask in 0..(1u32 << (n - 1)) {
            let full = mask << 1;
            let a: Vec<usize> = (0..n).filter(|&i| full & (1 << i) == 0).collect();
            let b: Vec<usize> = (0..n).filter(|&i| full & (1 << i) != 0).collect();
            if b.is_empty() {
                continue;
            }
            let obj = norm_of(&a) + norm_of(&b);
            if obj > best.0 + 1e-12 {
                best = (obj, full);
            }
        }
        let a = (0..n).filter(|&i| best.1 & (1 << i) == 0).collect();
        let b = (0..n).filter(|&i| best.1 & (1 << i) != 0).collect();
        vec![a, b]
    }

    fn as_sets(clusters: &[Vec<String>]) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = clusters
            .iter()
            .map(|c| {
                let mut ids: Vec<usize> = c.iter().map(|l| l[1..].parse().unwrap()).collect();
                ids.sort();
                ids
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn orthogonal_groups_match_brute_force() {
        for (na, nb) in [(4u32, 4u32), (3, 5), (5, 5), (4, 6)] {
            let vectors: Vec<SparseVector> = (0..na).map(|i| group_vec(0, i)).chain((0..nb).map(|i| group_vec(1, i))).collect();
            let mut oracle = best_two_partition(&vectors);
            oracle.sort();
            let emb = emb_from(vectors);
            let max_leaf = na.max(nb) as usize;
            for seed in 0..5 {
                let idx = cluster_labels(
                    &emb,
                    &ClusterParams {
                        branching: 2,
                        max_leaf,
                        seed,
                        max_iter: 25,
                    },
                )
                .unwrap();
                assert_eq!(as_sets(&idx.clusters), oracle, "groups {na}+{nb}, seed {seed}");
            }
        }
    }

    #[test]
    fn deterministic_and_partitioning() {
        let vectors: Vec<SparseVector> = (0..60)
            .map(|i| SparseVector::from_pairs(vec![(i % 7, 1.0), (7 + (i * 5) % 11, 0.8), (20 + i % 3, 0.3)]).normalized())
            .collect();
        let emb = emb_from(vectors);
        let p = ClusterParams {
            branching: 3,
            max_leaf: 8,
            seed: 17,
            max_iter: 25,
        };
        let a = cluster_labels(&emb, &p).unwrap();
        let b = cluster_labels(&emb, &p).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<&String> = a.clusters.iter().flatten().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 60);
        assert_eq!(a.label_count(), 60);
        assert!(a.clusters.iter().all(|c| !c.is_empty() && c.len() <= 8));
        assert!(a.cluster_count() <= a.cluster_count_bound());
    }

    #[test]
    fn zero_positive_labels_go_to_overflow() {
        let mut vectors: Vec<SparseVector> = (0..6).map(|i| group_vec(0, i)).collect();
        vectors.push(SparseVector::default());
        let emb = emb_from(vectors);
        let idx = cluster_labels(
            &emb,
            &ClusterParams {
                max_leaf: 4,
                branching: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let o = idx.overflow.unwrap();
        assert_eq!(idx.clusters[o], ["L06"]);
        assert_eq!(idx.label_count(), 7);
    }

    #[test]
    fn balanced_assign_sizes() {
        let sims: Vec<Vec<f64>> = (0..11).map(|i| vec![1.0, 0.0, (i as f64) * 0.01]).collect();
        let a = balanced_assign(&sims, 3);
        let mut size = [0; 3];
        for c in a {
            size[c] += 1;
        }
        let (mn, mx) = (*size.iter().min().unwrap(), *size.iter().max().unwrap());
        assert!(mx - mn <= 1, "{size:?}");
    }
}
