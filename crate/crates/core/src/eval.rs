//! Evaluation: category accuracy, lenient NDCG@k over an ontology, MRR, and
//! per-type error analysis.
//!
//! Type metrics only cover questions whose gold category is literal or
//! resource. A literal question scores 1 when the run predicts the literal
//! category with the gold subtype, else 0. A resource question scores 0
//! unless the run predicts the resource category; otherwise it is scored by
//! lenient NDCG (DBpedia mode) or reciprocal rank (Wikidata mode).
//!
//! NDCG uses gain 1 per gold type for the ideal ranking, truncated at `k`.
//! Ancestor credit can push DCG above that ideal, so reported NDCG is capped
//! at 1; the uncapped value is kept alongside.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{flatten_category, FlatCategory, LiteralKind, Question, QuestionSet, RawCategory};
use crate::error::{Error, Result};
use crate::typehier::{lenient_gain, TypeHierarchy};

pub const CAP_NOTE: &str =
    "NDCG is capped at 1.0 when ancestor credit makes DCG exceed the ideal DCG (gain 1 per gold type, truncated at k)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Dbpedia,
    Wikidata,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Dbpedia => "dbpedia",
            EvalMode::Wikidata => "wikidata",
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dbpedia" => Ok(EvalMode::Dbpedia),
            "wikidata" => Ok(EvalMode::Wikidata),
            other => Err(Error::InvalidArgument(format!("unknown evaluation mode {other:?}"))),
        }
    }
}

/// One line of a SMART submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub category: Option<RawCategory>,
    #[serde(rename = "type", default)]
    pub types: Vec<String>,
}

impl Prediction {
    pub fn flat_category(&self) -> Option<FlatCategory> {
        self.category.and_then(|c| flatten_category(c, &self.types).ok())
    }

    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::Validation(format!("prediction {}: {why}", self.id)));
        match self.category {
            Some(RawCategory::Resource) if self.types.is_empty() => bad("resource prediction without types"),
            Some(RawCategory::Literal) if self.types.len() != 1 || LiteralKind::parse(&self.types[0]).is_none() => {
                bad("literal prediction must carry exactly one of number, date, string")
            }
            Some(RawCategory::Boolean) if self.types != ["boolean"] => bad("boolean prediction must be [\"boolean\"]"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub method: String,
    pub stage1: String,
    pub seeds: BTreeMap<String, u64>,
    pub config_hash: Option<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionRun {
    pub predictions: Vec<Prediction>,
    pub metadata: RunMetadata,
}

impl PredictionRun {
    pub fn new(predictions: Vec<Prediction>, metadata: RunMetadata) -> Result<Self> {
        let run = PredictionRun { predictions, metadata };
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.predictions {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Validation(format!("duplicate prediction id {}", p.id)));
            }
            p.validate()?;
        }
        Ok(())
    }

    /// A run that answers every labelled gold question with its gold answer.
    pub fn from_gold(gold: &QuestionSet) -> Self {
        let predictions = gold
            .questions
            .iter()
            .filter(|q| q.category.is_some())
            .map(|q| Prediction {
                id: q.id.clone(),
                category: q.category,
                types: q.types.clone(),
            })
            .collect();
        PredictionRun {
            predictions,
            metadata: RunMetadata {
                method: "gold".into(),
                ..Default::default()
            },
        }
    }

    fn by_id(&self) -> HashMap<&str, &Prediction> {
        self.predictions.iter().map(|p| (p.id.as_str(), p)).collect()
    }

    /// SMART submission JSON (a bare array).
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.predictions).map_err(|e| Error::Encoding(e.to_string()))
    }

    pub fn from_json(origin: &Path, json: &str) -> Result<Self> {
        let predictions: Vec<Prediction> = serde_json::from_str(json).map_err(|e| Error::json(origin, e))?;
        PredictionRun::new(predictions, RunMetadata::default())
    }

    /// Writes the submission to `path` and the metadata next to it as
    /// `<path>.meta.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))?;
        let meta_path = meta_path(path);
        let meta = serde_json::to_string_pretty(&self.metadata).map_err(|e| Error::Encoding(e.to_string()))?;
        std::fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))
    }

    /// Reads a submission; metadata is picked up if the sidecar exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut run = Self::from_json(path, &text)?;
        let meta_path = meta_path(path);
        if let Ok(meta) = std::fs::read_to_string(&meta_path) {
            run.metadata = serde_json::from_str(&meta).map_err(|e| Error::json(&meta_path, e))?;
        }
        Ok(run)
    }
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdcgScore {
    /// `min(1, raw)`.
    pub value: f64,
    pub raw: f64,
}

/// Lenient NDCG@k of a ranked type list against a gold type set.
pub fn ndcg_at_k<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G], hier: &TypeHierarchy, k: usize) -> NdcgScore {
    if gold.is_empty() || k == 0 {
        return NdcgScore { value: 0.0, raw: 0.0 };
    }
    let dcg: f64 = predicted
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, t)| lenient_gain(t.as_ref(), gold, hier) / ((i + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..k.min(gold.len())).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    let raw = dcg / idcg;
    if raw > 1.0 {
        log::debug!("uncapped NDCG@{k} = {raw:.4}");
    }
    NdcgScore { value: raw.min(1.0), raw }
}

/// Reciprocal rank of the first predicted type that exactly matches gold.
pub fn reciprocal_rank<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G]) -> f64 {
    predicted
        .iter()
        .position(|p| gold.iter().any(|g| g.as_ref() == p.as_ref()))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean reciprocal rank over `(predicted, gold)` pairs; 0 for no pairs.
pub fn mrr<P: AsRef<str>, G: AsRef<str>>(runs: &[(Vec<P>, Vec<G>)]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    runs.iter().map(|(p, g)| reciprocal_rank(p, g)).sum::<f64>() / runs.len() as f64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryBreakdown {
    pub count: usize,
    pub accuracy: f64,
    /// Mean type score for literal/resource categories: NDCG@5 in DBpedia
    /// mode, reciprocal rank in Wikidata mode.
    pub type_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub method: String,
    pub config_hash: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    /// Questions with a gold category.
    pub question_count: usize,
    /// Gold questions without text, scored as errors.
    pub excluded_count: usize,
    /// Gold questions with no prediction in the run, scored as errors.
    pub missing_count: usize,
    /// Literal and resource questions entering the type metrics.
    pub type_question_count: usize,
    /// Resource questions with an empty gold type list, left out of type metrics.
    pub unscorable_count: usize,
    pub accuracy: f64,
    pub accuracy_flat: f64,
    pub ndcg_at_5: Option<f64>,
    pub ndcg_at_10: Option<f64>,
    pub ndcg_at_5_uncapped: Option<f64>,
    pub ndcg_at_10_uncapped: Option<f64>,
    pub mrr: Option<f64>,
    pub per_category: BTreeMap<String, CategoryBreakdown>,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Encoding(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for note in &self.notes {
            let _ = writeln!(s, "# {note}");
        }
        let _ = writeln!(s, "# method: {}  mode: {}", self.method, self.mode);
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "# config: {h}");
        }
        if !self.seeds.is_empty() {
            let seeds: Vec<String> = self.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "# seeds: {}", seeds.join(" "));
        }
        let _ = writeln!(
            s,
            "# questions: {}  excluded (no text): {}  missing: {}  type-scored: {}",
            self.question_count, self.excluded_count, self.missing_count, self.type_question_count
        );
        let row = |s: &mut String, name: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = writeln!(s, "{name:<24}{v:>8.4}");
            }
        };
        row(&mut s, "accuracy", Some(self.accuracy));
        row(&mut s, "accuracy (5-way)", Some(self.accuracy_flat));
        row(&mut s, "NDCG@5", self.ndcg_at_5);
        row(&mut s, "NDCG@10", self.ndcg_at_10);
        row(&mut s, "MRR", self.mrr);
        let _ = writeln!(s, "\n{:<18}{:>7}{:>10}{:>10}", "category", "count", "accuracy", "type");
        for (cat, b) in &self.per_category {
            let t = b.type_score.map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(s, "{cat:<18}{:>7}{:>10.4}{t:>10}", b.count, b.accuracy);
        }
        s
    }
}

#[derive(Default)]
struct Acc {
    count: usize,
    correct: usize,
    type_sum: f64,
    type_n: usize,
}

pub fn evaluate_run(run: &PredictionRun, gold: &QuestionSet, hier: Option<&TypeHierarchy>, mode: EvalMode) -> Result<EvalReport> {
    if mode == EvalMode::Dbpedia && hier.is_none() {
        return Err(Error::Config("DBpedia evaluation needs a type hierarchy".into()));
    }
    let preds = run.by_id();
    let mut n = 0usize;
    let (mut excluded, mut missing, mut unscorable) = (0usize, 0usize, 0usize);
    let (mut correct_raw, mut correct_flat) = (0usize, 0usize);
    let (mut ndcg5, mut ndcg10, mut ndcg5_raw, mut ndcg10_raw, mut rr) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut typed = 0usize;
    let mut per: BTreeMap<FlatCategory, Acc> = BTreeMap::new();

    for q in &gold.questions {
        let Some(gold_flat) = q.flat_category() else { continue };
        n += 1;
        let pred = preds.get(q.id.as_str()).copied();
        let usable = q.is_usable();
        if !usable {
            excluded += 1;
        }
        if pred.is_none() {
            missing += 1;
        }
        let pred = pred.filter(|_| usable);

        let pred_flat = pred.and_then(Prediction::flat_category);
        let raw_ok = pred.and_then(|p| p.category) == q.category;
        let flat_ok = pred_flat == Some(gold_flat);
        correct_raw += usize::from(raw_ok);
        correct_flat += usize::from(flat_ok);
        let acc = per.entry(gold_flat).or_default();
        acc.count += 1;
        acc.correct += usize::from(flat_ok);

        let scores = match q.category {
            Some(RawCategory::Literal) => {
                let hit = pred.is_some_and(|p| p.category == Some(RawCategory::Literal) && p.types.first() == q.types.first());
                let v = if hit { 1.0 } else { 0.0 };
                Some((v, v, v, v, v))
            }
            Some(RawCategory::Resource) if q.types.is_empty() => {
                unscorable += 1;
                None
            }
            Some(RawCategory::Resource) => match pred {
                Some(p) if p.category == Some(RawCategory::Resource) => Some(score_resource(p, q, hier, mode)),
                _ => Some((0.0, 0.0, 0.0, 0.0, 0.0)),
            },
            _ => None,
        };
        if let Some((a5, a10, r5, r10, r)) = scores {
            typed += 1;
            ndcg5 += a5;
            ndcg10 += a10;
            ndcg5_raw += r5;
            ndcg10_raw += r10;
            rr += r;
            acc.type_sum += if mode == EvalMode::Dbpedia { a5 } else { r };
            acc.type_n += 1;
        }
    }

    let mean = |x: f64, d: usize| if d == 0 { 0.0 } else { x / d as f64 };
    let (ndcg_at_5, ndcg_at_10, ndcg_at_5_uncapped, ndcg_at_10_uncapped, mrr_value) = match mode {
        EvalMode::Dbpedia => (
            Some(mean(ndcg5, typed)),
            Some(mean(ndcg10, typed)),
            Some(mean(ndcg5_raw, typed)),
            Some(mean(ndcg10_raw, typed)),
            None,
        ),
        EvalMode::Wikidata => (None, None, None, None, Some(mean(rr, typed))),
    };
    let per_category = per
        .into_iter()
        .map(|(c, a)| {
            (
                c.as_str().to_string(),
                CategoryBreakdown {
                    count: a.count,
                    accuracy: mean(a.correct as f64, a.count),
                    type_score: (a.type_n > 0).then(|| mean(a.type_sum, a.type_n)),
                },
            )
        })
        .collect();

    let mut notes = Vec::new();
    if mode == EvalMode::Dbpedia {
        notes.push(CAP_NOTE.to_string());
    }
    notes.extend(run.metadata.notes.iter().cloned());
    Ok(EvalReport {
        mode,
        method: run.metadata.method.clone(),
        config_hash: run.metadata.config_hash.clone(),
        seeds: run.metadata.seeds.clone(),
        question_count: n,
        excluded_count: excluded,
        missing_count: missing,
        type_question_count: typed,
        unscorable_count: unscorable,
        accuracy: mean(correct_raw as f64, n),
        accuracy_flat: mean(correct_flat as f64, n),
        ndcg_at_5,
        ndcg_at_10,
        ndcg_at_5_uncapped,
        ndcg_at_10_uncapped,
        mrr: mrr_value,
        per_category,
        notes,
    })
}

fn score_resource(p: &Prediction, q: &Question, hier: Option<&TypeHierarchy>, mode: EvalMode) -> (f64, f64, f64, f64, f64) {
    match (mode, hier) {
        (EvalMode::Dbpedia, Some(h)) => {
            let a = ndcg_at_k(&p.types, &q.types, h, 5);
            let b = ndcg_at_k(&p.types, &q.types, h, 10);
            (a.value, b.value, a.raw, b.raw, reciprocal_rank(&p.types, &q.types))
        }
        _ => {
            let r = reciprocal_rank(&p.types, &q.types);
            (0.0, 0.0, 0.0, 0.0, r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissRow {
    #[serde(rename = "type")]
    pub type_label: String,
    pub total: usize,
    pub errors: usize,
}

/// Gold resource types ranked by how often they are missing from the
/// predicted type list of their question.
pub fn error_analysis(run: &PredictionRun, gold: &QuestionSet, n: usize) -> Vec<MissRow> {
    let preds = run.by_id();
    let mut rows: HashMap<&str, (usize, usize)> = HashMap::new();
    for q in &gold.questions {
        if q.category != Some(RawCategory::Resource) {
            continue;
        }
        let predicted: HashSet<&str> = preds
            .get(q.id.as_str())
            .filter(|_| q.is_usable())
            .map(|p| p.types.iter().map(String::as_str).collect())
            .unwrap_or_default();
        let unique: HashSet<&str> = q.types.iter().map(String::as_str).collect();
        for t in unique {
            let row = rows.entry(t).or_default();
            row.0 += 1;
            row.1 += usize::from(!predicted.contains(t));
        }
    }
    let mut out: Vec<MissRow> = rows
        .into_iter()
        .map(|(t, (total, errors))| MissRow {
            type_label: t.to_string(),
            total,
            errors,
        })
        .collect();
    out.sort_by(|a, b| {
        b.errors
            .cmp(&a.errors)
            .then(b.total.cmp(&a.total))
            .then_with(|| a.type_label.cmp(&b.type_label))
    });
    out.truncate(n);
    out
}

pub fn miss_table_tsv(rows: &[MissRow]) -> String {
    let mut s = String::from("Type\t#Total\t#Errors\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}", r.type_label, r.total, r.errors);
    }
    s
}
