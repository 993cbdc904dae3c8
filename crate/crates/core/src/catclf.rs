//! Stage-1 category classification: five one-vs-rest linear max-margin
//! models over TF-IDF vectors.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_folds, FlatCategory, Question, QuestionSet};
use crate::error::{Error, Result};
use crate::linear::{train_binary, SgdParams};
use crate::textproc::{SparseVector, Vocabulary};

const MODEL_FORMAT: &str = "answer-type/category-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format: String,
    pub version: u32,
    /// Always the five flat categories in tie-break order.
    pub classes: Vec<FlatCategory>,
    pub vocabulary_fingerprint: String,
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub params: SgdParams,
    /// Per class, the objective after each epoch.
    pub objective_traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryPrediction {
    pub category: FlatCategory,
    /// Decision values in [`FlatCategory::ALL`] order.
    pub scores: [f64; 5],
}

fn argmax(scores: &[f64; 5]) -> FlatCategory {
    let mut best = 0;
    for i in 1..5 {
        // strict: equal scores keep the earlier class
        if scores[i] > scores[best] {
            best = i;
        }
    }
    FlatCategory::ALL[best]
}

/// Train the one-vs-rest classifier. Classes absent from `y` get a model
/// trained with no positives, which never wins against a present class.
pub fn train_category_classifier(
    xs: &[SparseVector],
    y: &[FlatCategory],
    dim: usize,
    vocabulary_fingerprint: &str,
    params: &SgdParams,
) -> Result<LinearModel> {
    if xs.len() != y.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            found: y.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    let mut present = y.to_vec();
    present.sort();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two categories to train, found {present:?}"
        )));
    }

    let refs: Vec<&SparseVector> = xs.iter().collect();
    let models = FlatCategory::ALL
        .par_iter()
        .enumerate()
        .map(|(k, &class)| {
            let ys: Vec<bool> = y.iter().map(|&c| c == class).collect();
            let p = SgdParams {
                seed: params.seed.wrapping_add(k as u64),
                ..*params
            };
            train_binary(&refs, &ys, dim, &p)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut weights = Vec::with_capacity(5);
    let mut biases = Vec::with_capacity(5);
    let mut traces = Vec::with_capacity(5);
    for m in models {
        weights.push(m.weights);
        biases.push(m.bias);
        traces.push(m.objective_trace);
    }
    Ok(LinearModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        classes: FlatCategory::ALL.to_vec(),
        vocabulary_fingerprint: vocabulary_fingerprint.to_string(),
        dim,
        weights,
        biases,
        params: *params,
        objective_traces: traces,
    })
}

impl LinearModel {
    pub fn predict(&self, x: &SparseVector) -> Result<CategoryPrediction> {
        if let Some(max) = x.max_id() {
            if max as usize >= self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    found: max as usize + 1,
                });
            }
        }
        let mut scores = [0.0; 5];
        for (k, s) in scores.iter_mut().enumerate() {
            *s = x.dot_dense(&self.weights[k]) + self.biases[k];
        }
        Ok(CategoryPrediction {
            category: argmax(&scores),
            scores,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Encoding(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: LinearModel = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "{}: not a {MODEL_FORMAT} v{MODEL_VERSION} file",
                path.display()
            )));
        }
        if model.classes != FlatCategory::ALL
            || model.weights.len() != 5
            || model.biases.len() != 5
            || model.weights.iter().any(|w| w.len() != model.dim)
        {
            return Err(Error::Validation(format!("{}: malformed category model", path.display())));
        }
        Ok(model)
    }
}

pub fn predict_category(model: &LinearModel, x: &SparseVector) -> Result<CategoryPrediction> {
    model.predict(x)
}

/// Anything that can assign a flat category to a question: the built-in
/// linear model, or predictions produced elsewhere and imported from file.
pub trait CategoryPredictor: Send + Sync {
    fn predict_question(&self, question: &Question) -> Result<FlatCategory>;
}

/// The linear model together with the vocabulary it was trained against.
pub struct LinearCategoryPredictor {
    pub vocabulary: Vocabulary,
    pub model: LinearModel,
}

impl LinearCategoryPredictor {
    pub fn new(vocabulary: Vocabulary, model: LinearModel) -> Result<Self> {
        let found = vocabulary.fingerprint();
        if found != model.vocabulary_fingerprint || vocabulary.len() != model.dim {
            return Err(Error::VocabularyMismatch {
                expected: model.vocabulary_fingerprint.clone(),
                found,
            });
        }
        Ok(LinearCategoryPredictor { vocabulary, model })
    }
}

impl CategoryPredictor for LinearCategoryPredictor {
    fn predict_question(&self, question: &Question) -> Result<FlatCategory> {
        let x = self.vocabulary.vectorize(&question.text);
        Ok(self.model.predict(&x)?.category)
    }
}

/// Externally produced stage-1 predictions, a JSON map `id → flat category`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportedCategories(pub HashMap<String, FlatCategory>);

impl ImportedCategories {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

impl CategoryPredictor for ImportedCategories {
    fn predict_question(&self, question: &Question) -> Result<FlatCategory> {
        self.0
            .get(&question.id)
            .copied()
            .ok_or_else(|| Error::Validation(format!("no imported category for question {}", question.id)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    /// Exact match on the five flat categories.
    pub flat: f64,
    /// Match after collapsing to boolean / literal / resource.
    pub raw: f64,
}

pub fn accuracy(pred: &[FlatCategory], gold: &[FlatCategory]) -> Result<Accuracy> {
    if pred.len() != gold.len() {
        return Err(Error::Dimension {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty list".into()));
    }
    let n = gold.len() as f64;
    let flat = pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / n;
    let raw = pred.iter().zip(gold).filter(|(p, g)| p.raw() == g.raw()).count() as f64 / n;
    Ok(Accuracy { flat, raw })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub n_folds: usize,
    pub seed: u64,
    pub folds: Vec<Accuracy>,
    pub mean: Accuracy,
    /// Held-out questions without text, counted as errors.
    pub unusable: usize,
}

/// Stratified k-fold cross-validation of the linear category classifier.
/// The vocabulary and idf statistics are refitted on each training portion.
pub fn cross_validate(qs: &QuestionSet, n_folds: usize, fold_seed: u64, params: &SgdParams) -> Result<CrossValidation> {
    let labelled: Vec<Question> = qs.questions.iter().filter(|q| q.flat_category().is_some()).cloned().collect();
    let labelled = QuestionSet {
        questions: labelled,
        ..qs.clone()
    };
    let folds = split_folds(&labelled, n_folds, fold_seed)?;
    let mut results = Vec::with_capacity(n_folds);
    let mut unusable = 0;
    for fold in 0..n_folds {
        let (train, test) = folds.split(&labelled, fold);
        let train: Vec<&Question> = train.into_iter().filter(|q| q.is_usable()).collect();
        let texts: Vec<&str> = train.iter().map(|q| q.text.as_str()).collect();
        let vocab = Vocabulary::fit(&texts)?;
        let xs: Vec<SparseVector> = texts.iter().map(|t| vocab.vectorize(t)).collect();
        let ys: Vec<FlatCategory> = train.iter().map(|q| q.flat_category().unwrap()).collect();
        let model = train_category_classifier(&xs, &ys, vocab.len(), &vocab.fingerprint(), params)?;

        let mut pred = Vec::with_capacity(test.len());
        let mut gold = Vec::with_capacity(test.len());
        for q in test {
            let g = q.flat_category().unwrap();
            gold.push(g);
            if q.is_usable() {
                pred.push(model.predict(&vocab.vectorize(&q.text))?.category);
            } else {
                unusable += 1;
                // any category other than gold: scored as an error
                pred.push(if g == FlatCategory::Resource {
                    FlatCategory::Boolean
                } else {
                    FlatCategory::Resource
                });
            }
        }
        let acc = accuracy(&pred, &gold)?;
        log::info!("fold {fold}: accuracy {:.4} (3-way {:.4})", acc.flat, acc.raw);
        results.push(acc);
    }
    let k = results.len() as f64;
    let mean = Accuracy {
        flat: results.iter().map(|a| a.flat).sum::<f64>() / k,
        raw: results.iter().map(|a| a.raw).sum::<f64>() / k,
    };
    Ok(CrossValidation {
        n_folds,
        seed: fold_seed,
        folds: results,
        mean,
        unusable,
    })
}
