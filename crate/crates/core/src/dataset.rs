//! SMART dataset ingestion.
//!
//! A dataset file is a JSON array of records
//! `{"id": .., "question": ..|null, "category": .., "type": [..]}`. Test
//! splits omit `category` and `type`. Loading validates the record-level
//! invariants (closed category set, literal subtypes, boolean type list) and
//! id uniqueness, and keeps records with missing question text so they can be
//! counted and scored as failures downstream.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse answer category as it appears in the raw data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawCategory {
    Boolean,
    Literal,
    Resource,
}

impl RawCategory {
    pub const ALL: [RawCategory; 3] = [RawCategory::Boolean, RawCategory::Literal, RawCategory::Resource];

    pub fn as_str(self) -> &'static str {
        match self {
            RawCategory::Boolean => "boolean",
            RawCategory::Literal => "literal",
            RawCategory::Resource => "resource",
        }
    }
}

impl FromStr for RawCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boolean" => Ok(RawCategory::Boolean),
            "literal" => Ok(RawCategory::Literal),
            "resource" => Ok(RawCategory::Resource),
            other => Err(Error::Validation(format!("unknown category {other:?}"))),
        }
    }
}

impl fmt::Display for RawCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Subtype of a literal answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralKind {
    Date,
    Number,
    String,
}

impl LiteralKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LiteralKind::Date => "date",
            LiteralKind::Number => "number",
            LiteralKind::String => "string",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "date" => Some(LiteralKind::Date),
            "number" => Some(LiteralKind::Number),
            "string" => Some(LiteralKind::String),
            _ => None,
        }
    }
}

/// The five-way category used by the stage-1 classifier.
///
/// Declaration order is the tie-break order used when decision values are
/// equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlatCategory {
    #[serde(rename = "boolean")]
    Boolean,
    #[serde(rename = "literal-date")]
    LiteralDate,
    #[serde(rename = "literal-number")]
    LiteralNumber,
    #[serde(rename = "literal-string")]
    LiteralString,
    #[serde(rename = "resource")]
    Resource,
}

impl FlatCategory {
    pub const ALL: [FlatCategory; 5] = [
        FlatCategory::Boolean,
        FlatCategory::LiteralDate,
        FlatCategory::LiteralNumber,
        FlatCategory::LiteralString,
        FlatCategory::Resource,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FlatCategory::Boolean => "boolean",
            FlatCategory::LiteralDate => "literal-date",
            FlatCategory::LiteralNumber => "literal-number",
            FlatCategory::LiteralString => "literal-string",
            FlatCategory::Resource => "resource",
        }
    }

    pub fn raw(self) -> RawCategory {
        self.unflatten().0
    }

    /// Inverse of [`flatten_category`].
    pub fn unflatten(self) -> (RawCategory, Option<LiteralKind>) {
        match self {
            FlatCategory::Boolean => (RawCategory::Boolean, None),
            FlatCategory::LiteralDate => (RawCategory::Literal, Some(LiteralKind::Date)),
            FlatCategory::LiteralNumber => (RawCategory::Literal, Some(LiteralKind::Number)),
            FlatCategory::LiteralString => (RawCategory::Literal, Some(LiteralKind::String)),
            FlatCategory::Resource => (RawCategory::Resource, None),
        }
    }

    pub fn from_parts(category: RawCategory, literal: Option<LiteralKind>) -> Result<Self> {
        match (category, literal) {
            (RawCategory::Boolean, _) => Ok(FlatCategory::Boolean),
            (RawCategory::Resource, _) => Ok(FlatCategory::Resource),
            (RawCategory::Literal, Some(LiteralKind::Date)) => Ok(FlatCategory::LiteralDate),
            (RawCategory::Literal, Some(LiteralKind::Number)) => Ok(FlatCategory::LiteralNumber),
            (RawCategory::Literal, Some(LiteralKind::String)) => Ok(FlatCategory::LiteralString),
            (RawCategory::Literal, None) => Err(Error::Validation("literal category without a subtype".into())),
        }
    }
}

impl FromStr for FlatCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FlatCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown flat category {s:?}")))
    }
}

impl fmt::Display for FlatCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Map a raw `(category, types)` pair onto the five-way category.
pub fn flatten_category(category: RawCategory, types: &[String]) -> Result<FlatCategory> {
    match category {
        RawCategory::Literal => {
            let subtype = match types {
                [single] => single.as_str(),
                _ => {
                    return Err(Error::Validation(format!(
                        "literal answer must carry exactly one subtype, got {types:?}"
                    )))
                }
            };
            let kind = LiteralKind::parse(subtype)
                .ok_or_else(|| Error::Validation(format!("literal subtype {subtype:?} is not one of number, date, string")))?;
            FlatCategory::from_parts(category, Some(kind))
        }
        other => FlatCategory::from_parts(other, None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Dbpedia,
    Wikidata,
    /// Result of [`combine_sets`] over more than one source.
    Combined,
}

impl Source {
    pub fn id_prefix(self) -> &'static str {
        match self {
            Source::Dbpedia => "dbp:",
            Source::Wikidata => "wd:",
            Source::Combined => "",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dbpedia" => Ok(Source::Dbpedia),
            "wikidata" => Ok(Source::Wikidata),
            other => Err(Error::InvalidArgument(format!("unknown source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    /// Empty when the raw record had `null` or blank text.
    pub text: String,
    pub category: Option<RawCategory>,
    pub types: Vec<String>,
}

impl Question {
    /// Records without text cannot be vectorized; they are left out of
    /// training and count as wrong at evaluation time.
    pub fn is_usable(&self) -> bool {
        !self.text.trim().is_empty()
    }

    pub fn flat_category(&self) -> Option<FlatCategory> {
        self.category.and_then(|c| flatten_category(c, &self.types).ok())
    }

    fn validate(&self) -> Result<()> {
        match self.category {
            Some(RawCategory::Boolean) => {
                if self.types.len() != 1 || self.types[0] != "boolean" {
                    return Err(Error::Validation(format!(
                        "question {}: boolean answer must have types [\"boolean\"], got {:?}",
                        self.id, self.types
                    )));
                }
            }
            Some(RawCategory::Literal) => {
                flatten_category(RawCategory::Literal, &self.types).map_err(|e| Error::Validation(format!("question {}: {e}", self.id)))?;
            }
            Some(RawCategory::Resource) => {
                if let Some(bad) = self.types.iter().find(|t| t.trim().is_empty()) {
                    return Err(Error::Validation(format!(
                        "question {}: empty resource type label {bad:?}",
                        self.id
                    )));
                }
            }
            None => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub source: Source,
    pub split: Split,
    pub questions: Vec<Question>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: serde_json::Value,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    category: Option<String>,
    #[serde(default, rename = "type")]
    types: Option<Vec<String>>,
}

impl QuestionSet {
    pub fn new(source: Source, split: Split, questions: Vec<Question>) -> Result<Self> {
        let set = QuestionSet { source, split, questions };
        set.check_unique_ids()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    /// Questions that have text and a known category.
    pub fn trainable(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(|q| q.is_usable() && q.flat_category().is_some())
    }

    pub fn unusable_count(&self) -> usize {
        self.questions.iter().filter(|q| !q.is_usable()).count()
    }

    /// Parse SMART JSON from a string. `origin` is only used for messages.
    pub fn from_json_str(origin: &Path, json: &str, source: Source, split: Split) -> Result<Self> {
        let records: Vec<RawRecord> = serde_json::from_str(json).map_err(|e| Error::json(origin, e))?;
        let mut questions = Vec::with_capacity(records.len());
        for rec in records {
            let id = match rec.id {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(Error::Validation(format!("record id must be a string, got {other}"))),
            };
            let category = rec
                .category
                .as_deref()
                .map(|c| {
                    c.parse::<RawCategory>()
                        .map_err(|e| Error::Validation(format!("question {id}: {e}")))
                })
                .transpose()?;
            let q = Question {
                id,
                text: rec.question.unwrap_or_default(),
                category,
                types: rec.types.unwrap_or_default(),
            };
            q.validate()?;
            questions.push(q);
        }
        QuestionSet::new(source, split, questions)
    }

    /// Serialize back to SMART JSON.
    pub fn to_json(&self) -> Result<String> {
        let records: Vec<serde_json::Value> = self
            .questions
            .iter()
            .map(|q| {
                serde_json::json!({
                    "id": q.id,
                    "question": if q.text.is_empty() { serde_json::Value::Null } else { q.text.clone().into() },
                    "category": q.category,
                    "type": q.types,
                })
            })
            .collect();
        serde_json::to_string_pretty(&records).map_err(|e| Error::Encoding(e.to_string()))
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.questions.len());
        for q in &self.questions {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::Validation(format!("duplicate question id {}", q.id)));
            }
        }
        Ok(())
    }
}

pub fn load_dataset(path: impl AsRef<Path>, source: Source, split: Split) -> Result<QuestionSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let set = QuestionSet::from_json_str(path, &text, source, split)?;
    log::info!(
        "loaded {} questions from {} ({} without text)",
        set.len(),
        path.display(),
        set.unusable_count()
    );
    Ok(set)
}

/// Concatenate two sets of the same split, prefixing ids with their source
/// tag (`dbp:`, `wd:`) so ids stay unique.
pub fn combine_sets(a: &QuestionSet, b: &QuestionSet) -> Result<QuestionSet> {
    if a.split != b.split {
        return Err(Error::InvalidArgument("cannot combine sets from different splits".into()));
    }
    let questions = [a, b]
        .iter()
        .flat_map(|set| {
            let prefix = set.source.id_prefix();
            set.questions.iter().map(move |q| Question {
                id: format!("{prefix}{}", q.id),
                ..q.clone()
            })
        })
        .collect();
    QuestionSet::new(Source::Combined, a.split, questions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub seed: u64,
    pub n_folds: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, held_out)` question lists for one fold, in set order.
    pub fn split<'a>(&self, qs: &'a QuestionSet, fold: usize) -> (Vec<&'a Question>, Vec<&'a Question>) {
        qs.questions.iter().partition(|q| self.fold_of(&q.id) != Some(fold))
    }
}

/// Stratified, seeded k-fold assignment.
///
/// Each stratum (flat category, plus one stratum for uncategorized records)
/// is shuffled independently, strata are laid end to end in a fixed order,
/// and folds are dealt round-robin along that sequence. That keeps overall
/// fold sizes within one of each other and every stratum's per-fold count
/// within one of `stratum size / n`.
pub fn split_folds(qs: &QuestionSet, n: usize, seed: u64) -> Result<FoldAssignment> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {n}")));
    }
    if qs.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty question set".into()));
    }
    if n > qs.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} folds requested for only {} questions",
            qs.len()
        )));
    }

    let mut strata: BTreeMap<Option<FlatCategory>, Vec<&str>> = BTreeMap::new();
    for q in &qs.questions {
        strata.entry(q.flat_category()).or_default().push(q.id.as_str());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut cursor = 0usize;
    for ids in strata.values_mut() {
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            assignment.insert((*id).to_string(), cursor % n);
            cursor += 1;
        }
    }
    Ok(FoldAssignment {
        seed,
        n_folds: n,
        assignment,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub unusable: usize,
    /// Keys are raw category names plus `"none"` for uncategorized records.
    pub by_category: BTreeMap<String, usize>,
    pub by_flat_category: BTreeMap<String, usize>,
}

impl DatasetStats {
    pub fn category(&self, c: RawCategory) -> usize {
        self.by_category.get(c.as_str()).copied().unwrap_or(0)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key\tcount\n");
        out.push_str(&format!("total\t{}\n", self.total));
        out.push_str(&format!("unusable\t{}\n", self.unusable));
        for (k, v) in &self.by_category {
            out.push_str(&format!("category:{k}\t{v}\n"));
        }
        for (k, v) in &self.by_flat_category {
            out.push_str(&format!("flat:{k}\t{v}\n"));
        }
        out
    }
}

pub fn dataset_stats(qs: &QuestionSet) -> DatasetStats {
    let mut by_category: BTreeMap<String, usize> = RawCategory::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
    by_category.insert("none".into(), 0);
    let mut by_flat_category: BTreeMap<String, usize> = FlatCategory::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
    by_flat_category.insert("none".into(), 0);

    for q in &qs.questions {
        let raw = q.category.map_or("none", RawCategory::as_str);
        *by_category.get_mut(raw).unwrap() += 1;
        let flat = q.flat_category().map_or("none", FlatCategory::as_str);
        *by_flat_category.get_mut(flat).unwrap() += 1;
    }
    DatasetStats {
        total: qs.len(),
        unusable: qs.unusable_count(),
        by_category,
        by_flat_category,
    }
}
