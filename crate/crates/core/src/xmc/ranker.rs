//! Ensemble ranking: a linear combination of cluster score, label score and
//! label prior, fitted with a pairwise hinge loss on a held-out fold.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::embed::TrainExample;
use super::matcher::{Candidate, MatcherModel};

pub const FALLBACK_WEIGHTS: [f64; 3] = [1.0, 1.0, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerParams {
    pub lambda: f64,
    pub epochs: usize,
    /// Hardest irrelevant candidates paired with each relevant one.
    pub negatives_per_question: usize,
    /// Below this many held-out questions the fallback weights are used.
    pub min_questions: usize,
}

impl Default for RankerParams {
    fn default() -> Self {
        RankerParams {
            lambda: 1e-4,
            epochs: 100,
            negatives_per_question: 20,
            min_questions: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRanker {
    pub weights: [f64; 3],
    pub fitted: bool,
    /// Pairwise objective after each epoch (empty for the fallback).
    pub loss_trace: Vec<f64>,
    pub pairs: usize,
}

impl Default for EnsembleRanker {
    fn default() -> Self {
        EnsembleRanker::fallback()
    }
}

impl EnsembleRanker {
    pub fn fallback() -> Self {
        EnsembleRanker {
            weights: FALLBACK_WEIGHTS,
            fitted: false,
            loss_trace: Vec::new(),
            pairs: 0,
        }
    }

    pub fn score(&self, f: &[f64; 3]) -> f64 {
        self.weights[0] * f[0] + self.weights[1] * f[1] + self.weights[2] * f[2]
    }
}

fn dot(w: &[f64; 3], d: &[f64; 3]) -> f64 {
    w[0] * d[0] + w[1] * d[1] + w[2] * d[2]
}

fn objective(w: &[f64; 3], diffs: &[[f64; 3]], lambda: f64) -> f64 {
    let loss: f64 = diffs.iter().map(|d| (1.0 - dot(w, d)).max(0.0)).sum();
    0.5 * lambda * dot(w, w) + loss / diffs.len() as f64
}

/// Fit weights on feature differences `relevant − irrelevant`.
///
/// Full-batch subgradient descent started from the fallback weights, with a
/// backtracking step: a step is taken only if it does not increase the
/// objective, so the recorded loss is non-increasing.
pub fn fit_pairwise(diffs: &[[f64; 3]], params: &RankerParams) -> EnsembleRanker {
    if diffs.is_empty() {
        log::warn!("no ranking pairs; using fallback ensemble weights");
        return EnsembleRanker::fallback();
    }
    let mut w = FALLBACK_WEIGHTS;
    let mut current = objective(&w, diffs, params.lambda);
    let mut step = 1.0;
    let mut trace = Vec::with_capacity(params.epochs);
    let n = diffs.len() as f64;
    for _ in 0..params.epochs {
        let mut g = [params.lambda * w[0], params.lambda * w[1], params.lambda * w[2]];
        for d in diffs {
            if dot(&w, d) < 1.0 {
                for j in 0..3 {
                    g[j] -= d[j] / n;
                }
            }
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [w[0] - step * g[0], w[1] - step * g[1], w[2] - step * g[2]];
            let value = objective(&cand, diffs, params.lambda);
            if value <= current {
                w = cand;
                current = value;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(current);
        if !accepted {
            break;
        }
    }
    EnsembleRanker {
        weights: w,
        fitted: true,
        loss_trace: trace,
        pairs: diffs.len(),
    }
}

/// Build ranking pairs from the matcher's candidates on `fold` and fit.
pub fn train_ensemble_ranker(model: &MatcherModel, fold: &[TrainExample], beam: usize, params: &RankerParams) -> EnsembleRanker {
    if fold.is_empty() {
        log::warn!("empty held-out fold; using fallback ensemble weights");
        return EnsembleRanker::fallback();
    }
    if fold.len() < params.min_questions {
        log::warn!(
            "held-out fold has {} questions (< {}); using fallback ensemble weights",
            fold.len(),
            params.min_questions
        );
        return EnsembleRanker::fallback();
    }
    let fallback = EnsembleRanker::fallback();
    let mut diffs = Vec::new();
    for ex in fold {
        let gold: HashSet<&str> = ex.labels.iter().map(String::as_str).collect();
        let cands = model.candidates(&ex.x, beam);
        let (rel, mut irr): (Vec<Candidate>, Vec<Candidate>) =
            cands.into_iter().partition(|c| gold.contains(model.labels[c.label].as_str()));
        irr.sort_by(|a, b| {
            fallback
                .score(&b.features)
                .total_cmp(&fallback.score(&a.features))
                .then(a.label.cmp(&b.label))
        });
        irr.truncate(params.negatives_per_question);
        for r in &rel {
            for i in &irr {
                diffs.push([
                    r.features[0] - i.features[0],
                    r.features[1] - i.features[1],
                    r.features[2] - i.features[2],
                ]);
            }
        }
    }
    fit_pairwise(&diffs, params)
}
