//! Extreme multi-label type prediction.
//!
//! Three stages, each usable on its own:
//!
//! 1. [`build_label_embeddings`] + [`cluster_labels`]: semantic label
//!    indexing, a balanced hierarchical clustering of the label space.
//! 2. [`train_matchers`]: a linear model scoring clusters for a question,
//!    and per-cluster one-vs-rest label models trained on the questions
//!    routed to that cluster.
//! 3. [`train_ensemble_ranker`]: a linear ranker over
//!    `(cluster score, label score, label prior)` fitted on a held-out fold.
//!
//! [`XmcModel::fit`] runs the whole recipe; [`predict_types_xmc`] beams over
//! the best clusters and ranks their labels.

mod cluster;
mod embed;
mod matcher;
mod ranker;

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cluster::{cluster_labels, ClusterParams, LabelIndex};
pub use embed::{build_label_embeddings, LabelEmbedding, TrainExample};
pub use matcher::{train_matchers, Candidate, ClusterMatcher, MatcherModel, SparseBank};
pub use ranker::{fit_pairwise, train_ensemble_ranker, EnsembleRanker, RankerParams, FALLBACK_WEIGHTS};

use crate::container;
use crate::error::{Error, Result};
use crate::linear::SgdParams;
use crate::ranking::RankedTypeList;
use crate::textproc::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XmcParams {
    pub cluster: ClusterParams,
    pub matcher: SgdParams,
    pub ranker: RankerParams,
    pub beam: usize,
    /// One fold out of this many is held out to fit the ranker.
    pub ranker_holdout_folds: usize,
    /// Retrain matchers on all questions once the ranker is fitted.
    pub refit_full: bool,
}

impl Default for XmcParams {
    fn default() -> Self {
        XmcParams {
            cluster: ClusterParams::default(),
            matcher: SgdParams {
                c: 1.0,
                epochs: 10,
                seed: 0,
            },
            ranker: RankerParams::default(),
            beam: 4,
            ranker_holdout_folds: 5,
            refit_full: true,
        }
    }
}

impl XmcParams {
    /// Preset for Wikidata-scale label sets.
    pub fn wikidata() -> Self {
        XmcParams {
            cluster: ClusterParams {
                max_leaf: 256,
                ..ClusterParams::default()
            },
            ..XmcParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XmcModel {
    pub params: XmcParams,
    pub index: LabelIndex,
    pub matcher: MatcherModel,
    pub ranker: EnsembleRanker,
}

/// Rank types for one question: score the top `beam` clusters, score their
/// labels, combine with the ensemble ranker and keep the best `k`.
pub fn predict_types_xmc(model: &MatcherModel, ranker: &EnsembleRanker, x: &SparseVector, beam: usize, k: usize) -> Result<RankedTypeList> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if beam < 1 {
        return Err(Error::InvalidArgument("beam must be at least 1".into()));
    }
    let scored = model
        .candidates(x, beam)
        .into_iter()
        .map(|c| (model.labels[c.label].clone(), ranker.score(&c.features)));
    Ok(RankedTypeList::from_scores(scored).truncated(k))
}

impl XmcModel {
    /// `extra_labels` are added to the label space even without positives.
    pub fn fit(examples: &[TrainExample], extra_labels: &[String], dim: usize, params: &XmcParams) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::InvalidArgument("no resource questions to train on".into()));
        }
        let emb = build_label_embeddings(examples, extra_labels)?;
        let index = cluster_labels(&emb, &params.cluster)?;
        log::info!(
            "label index: {} labels in {} clusters (depth {})",
            index.label_count(),
            index.cluster_count(),
            index.depth
        );

        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.cluster.seed ^ 0x5eed));
        let folds = params.ranker_holdout_folds.max(2);
        let (held, rest): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&i| i % folds == 0);
        let held_out: Vec<TrainExample> = held.iter().map(|&i| examples[i].clone()).collect();

        let ranker = if held_out.len() < params.ranker.min_questions || rest.is_empty() {
            log::warn!("held-out fold has {} questions; using fallback ensemble weights", held_out.len());
            EnsembleRanker::fallback()
        } else {
            let fit_part: Vec<TrainExample> = rest.iter().map(|&i| examples[i].clone()).collect();
            let partial = train_matchers(&index, &fit_part, dim, &params.matcher)?;
            train_ensemble_ranker(&partial, &held_out, params.beam, &params.ranker)
        };
        log::info!("ensemble weights {:?} (fitted: {})", ranker.weights, ranker.fitted);

        let matcher = if params.refit_full || !ranker.fitted {
            train_matchers(&index, examples, dim, &params.matcher)?
        } else {
            let fit_part: Vec<TrainExample> = rest.iter().map(|&i| examples[i].clone()).collect();
            train_matchers(&index, &fit_part, dim, &params.matcher)?
        };
        Ok(XmcModel {
            params: *params,
            index,
            matcher,
            ranker,
        })
    }

    pub fn predict(&self, x: &SparseVector, k: usize) -> Result<RankedTypeList> {
        predict_types_xmc(&self.matcher, &self.ranker, x, self.params.beam, k)
    }

    /// Write `label_index.json`, `matchers.bin`, `ranker.json` and
    /// `xmc_params.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("label_index.json"), &self.index)?;
        write_json(&dir.join("ranker.json"), &self.ranker)?;
        write_json(&dir.join("xmc_params.json"), &self.params)?;
        let header = serde_json::json!({
            "labels": self.matcher.labels.len(),
            "clusters": self.matcher.cluster_count(),
            "dim": self.matcher.dim,
        });
        container::write(&dir.join("matchers.bin"), "xmc-matchers", 1, &header, &self.matcher)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index: LabelIndex = read_json(&dir.join("label_index.json"))?;
        let ranker: EnsembleRanker = read_json(&dir.join("ranker.json"))?;
        let params: XmcParams = read_json(&dir.join("xmc_params.json"))?;
        let (_, matcher): (serde_json::Value, MatcherModel) = container::read(&dir.join("matchers.bin"), "xmc-matchers", 1)?;
        if matcher.cluster_count() != index.cluster_count() {
            return Err(Error::Format("matcher and label index disagree on cluster count".into()));
        }
        Ok(XmcModel {
            params,
            index,
            matcher,
            ranker,
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Encoding(e.to_string()))?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::json(path, e))
}

/// Matcher scores computed elsewhere: JSON `question id → label → score`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportedMatcherScores(pub HashMap<String, HashMap<String, f64>>);

impl ImportedMatcherScores {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Ranked labels for a question; empty when the question is unknown.
    pub fn rank(&self, question_id: &str, k: usize) -> RankedTypeList {
        self.0
            .get(question_id)
            .map(|scores| RankedTypeList::from_scores(scores.iter().map(|(l, &s)| (l.clone(), s))).truncated(k))
            .unwrap_or_default()
    }
}
