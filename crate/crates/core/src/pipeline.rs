//! End-to-end orchestration: train a model bundle, predict a run, evaluate
//! and analyze it.
//!
//! A bundle directory holds:
//!
//! | file | content |
//! |------|---------|
//! | `manifest.json` | config, config hash, seeds, input and artifact checksums |
//! | `vocabulary.json` | TF-IDF vocabulary shared by both stages |
//! | `category_model.json` | stage-1 linear model (linear stage 1 only) |
//! | `type_index.bin` / `entity_index.bin` | BM25 index (tc / ec) |
//! | `xmc/` | label index, matchers, ensemble ranker (xmc) |

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catclf::{train_category_classifier, CategoryPredictor, ImportedCategories, LinearCategoryPredictor, LinearModel};
use crate::dataset::{dataset_stats, load_dataset, DatasetStats, FlatCategory, Question, QuestionSet, RawCategory, Source, Split};
use crate::error::{Error, Result};
use crate::eval::{error_analysis, evaluate_run, miss_table_tsv, EvalMode, EvalReport, MissRow, Prediction, PredictionRun, RunMetadata};
use crate::fusion::{
    build_entity_index, build_type_index, load_entities, rank_types_ec, rank_types_tc, Aggregation, Bm25Params, InvertedIndex, DEFAULT_EC_K,
};
use crate::linear::SgdParams;
use crate::ranking::RankedTypeList;
use crate::textproc::{SparseVector, Vocabulary};
use crate::typehier::TypeHierarchy;
use crate::xmc::{ImportedMatcherScores, TrainExample, XmcModel, XmcParams};

const BUNDLE_FORMAT: &str = "answer-type/bundle";
const BUNDLE_VERSION: u32 = 1;

pub const XMC_NOTE: &str = "XMC matchers are sparse linear models; absolute scores are not comparable with transformer-matcher results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage1Method {
    Linear,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage2Method {
    Tc,
    Ec,
    Xmc,
    Imported,
}

impl Stage1Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage1Method::Linear => "linear",
            Stage1Method::Imported => "imported",
        }
    }
}

impl Stage2Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage2Method::Tc => "tc",
            Stage2Method::Ec => "ec",
            Stage2Method::Xmc => "xmc",
            Stage2Method::Imported => "imported",
        }
    }

    fn display_name(self) -> &'static str {
        match self {
            Stage2Method::Tc => "IR/TC",
            Stage2Method::Ec => "IR/EC",
            Stage2Method::Xmc => "XMC",
            Stage2Method::Imported => "imported",
        }
    }
}

impl fmt::Display for Stage1Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Stage2Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage1Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Stage1Method::Linear),
            "imported" => Ok(Stage1Method::Imported),
            other => Err(Error::Config(format!(
                "unknown stage-1 method {other:?} (expected linear or imported)"
            ))),
        }
    }
}

impl FromStr for Stage2Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tc" => Ok(Stage2Method::Tc),
            "ec" => Ok(Stage2Method::Ec),
            "xmc" => Ok(Stage2Method::Xmc),
            "imported" => Ok(Stage2Method::Imported),
            other => Err(Error::Config(format!(
                "unknown stage-2 method {other:?} (expected tc, ec, xmc or imported)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub source: Source,
    pub path: PathBuf,
}

impl FromStr for DatasetRef {
    type Err = Error;

    /// `source=path`, e.g. `dbpedia=data/dbpedia_train.json`.
    fn from_str(s: &str) -> Result<Self> {
        let (source, path) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected SOURCE=PATH, got {s:?}")))?;
        let source = source.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        Ok(DatasetRef { source, path: path.into() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub mode: EvalMode,
    pub train: Vec<DatasetRef>,
    pub hierarchy: Option<PathBuf>,
    /// Entity abstracts TSV for the BM25 back-ends.
    pub entities: Option<PathBuf>,
    pub stage1: Stage1Method,
    /// JSON `id → flat category`, for the imported stage 1.
    pub stage1_predictions: Option<PathBuf>,
    pub stage2: Stage2Method,
    /// JSON `id → label → score`, for the imported stage 2.
    pub stage2_scores: Option<PathBuf>,
    pub top_k: usize,
    pub ec_k: usize,
    pub ec_aggregation: Aggregation,
    pub bm25: Bm25Params,
    pub svm: SgdParams,
    /// Defaults to the preset for `mode` when absent.
    pub xmc: Option<XmcParams>,
    pub seed: u64,
    /// Not part of the config hash.
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: EvalMode::Dbpedia,
            train: Vec::new(),
            hierarchy: None,
            entities: None,
            stage1: Stage1Method::Linear,
            stage1_predictions: None,
            stage2: Stage2Method::Xmc,
            stage2_scores: None,
            top_k: 10,
            ec_k: DEFAULT_EC_K,
            ec_aggregation: Aggregation::Sum,
            bm25: Bm25Params::default(),
            svm: SgdParams::default(),
            xmc: None,
            seed: 0,
            output_dir: None,
        }
    }
}

fn check_file(what: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

impl PipelineConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        check_file("config file", path)?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn mode_source(&self) -> Source {
        match self.mode {
            EvalMode::Dbpedia => Source::Dbpedia,
            EvalMode::Wikidata => Source::Wikidata,
        }
    }

    /// Stage-1 parameters with the pipeline seed applied.
    pub fn effective_svm(&self) -> SgdParams {
        SgdParams {
            seed: self.seed,
            ..self.svm
        }
    }

    /// XMC parameters with the mode preset and pipeline seed applied.
    pub fn effective_xmc(&self) -> XmcParams {
        let mut p = self.xmc.unwrap_or_else(|| match self.mode {
            EvalMode::Dbpedia => XmcParams::default(),
            EvalMode::Wikidata => XmcParams::wikidata(),
        });
        p.cluster.seed = self.seed;
        p.matcher.seed = self.seed;
        p
    }

    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let mut seeds = BTreeMap::from([("pipeline".to_string(), self.seed), ("stage1".to_string(), self.seed)]);
        if self.stage2 == Stage2Method::Xmc {
            let x = self.effective_xmc();
            seeds.insert("xmc_cluster".into(), x.cluster.seed);
            seeds.insert("xmc_matcher".into(), x.matcher.seed);
        }
        seeds
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn config_hash(&self) -> String {
        let canonical = PipelineConfig {
            output_dir: None,
            ..self.clone()
        };
        sha256_hex(serde_json::to_string(&canonical).expect("config serializes").as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.ec_k == 0 {
            return Err(Error::Config("ec_k must be at least 1".into()));
        }
        self.svm.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(h) = &self.hierarchy {
            check_file("hierarchy", h)?;
        }
        match (self.stage1, &self.stage1_predictions) {
            (Stage1Method::Imported, None) => return Err(Error::Config("imported stage 1 needs stage1_predictions".into())),
            (Stage1Method::Imported, Some(p)) => check_file("stage-1 predictions", p)?,
            _ => {}
        }
        match (self.stage2, &self.entities, &self.stage2_scores) {
            (Stage2Method::Tc | Stage2Method::Ec, None, _) => {
                return Err(Error::Config(format!("stage 2 {} needs an entities file", self.stage2)))
            }
            (Stage2Method::Tc | Stage2Method::Ec, Some(p), _) => check_file("entities file", p)?,
            (Stage2Method::Imported, _, None) => return Err(Error::Config("imported stage 2 needs stage2_scores".into())),
            (Stage2Method::Imported, _, Some(p)) => check_file("stage-2 scores", p)?,
            _ => {}
        }
        Ok(())
    }

    fn validate_for_train(&self) -> Result<()> {
        self.validate()?;
        if self.train.is_empty() {
            return Err(Error::Config("no training datasets given".into()));
        }
        for d in &self.train {
            check_file("training set", &d.path)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub seeds: BTreeMap<String, u64>,
    pub vocabulary_fingerprint: String,
    pub vocabulary_size: usize,
    pub stage1_questions: usize,
    pub stage2_questions: usize,
    /// Returned for resource questions when stage 2 finds nothing.
    pub fallback_type: Option<String>,
    /// Input path → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Bundle-relative artifact path → SHA-256.
    pub artifacts: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn load(bundle: &Path) -> Result<Self> {
        let path = bundle.join("manifest.json");
        check_file("bundle manifest", &path)?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        if m.format != BUNDLE_FORMAT || m.version != BUNDLE_VERSION {
            return Err(Error::Format(format!("{}: not a version {BUNDLE_VERSION} bundle", path.display())));
        }
        Ok(m)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn most_frequent_type(questions: &[&Question]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for q in questions {
        for t in &q.types {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    // BTreeMap order makes the lexicographically smallest label win ties
    counts
        .into_iter()
        .fold(None, |best: Option<(&str, usize)>, (t, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((t, c)),
        })
        .map(|(t, _)| t.to_string())
}

fn collect_artifacts(bundle: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![bundle.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                let rel = path
                    .strip_prefix(bundle)
                    .expect("inside bundle")
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, file_sha256(&path)?);
            }
        }
    }
    Ok(out)
}

/// Train stage 1 on all training sets and stage 2 on the resource questions
/// of the sets matching `mode`, writing a bundle to `out`.
pub fn cmd_train(config: &PipelineConfig, out: &Path) -> Result<Manifest> {
    config.validate_for_train()?;
    let sets: Vec<QuestionSet> = config
        .train
        .iter()
        .map(|d| load_dataset(&d.path, d.source, Split::Train))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let stage1_questions: Vec<&Question> = sets
        .iter()
        .flat_map(|s| s.trainable())
        .filter(|q| q.flat_category().is_some())
        .collect();
    let texts: Vec<&str> = stage1_questions.iter().map(|q| q.text.as_str()).collect();
    let vocab = Vocabulary::fit(&texts)?;
    vocab.save(&out.join("vocabulary.json"))?;
    log::info!("vocabulary: {} terms from {} questions", vocab.len(), texts.len());

    if config.stage1 == Stage1Method::Linear {
        let xs: Vec<SparseVector> = texts.iter().map(|t| vocab.vectorize(t)).collect();
        let ys: Vec<FlatCategory> = stage1_questions.iter().map(|q| q.flat_category().unwrap()).collect();
        let model = train_category_classifier(&xs, &ys, vocab.len(), &vocab.fingerprint(), &config.effective_svm())?;
        model.save(&out.join("category_model.json"))?;
    }

    let source = config.mode_source();
    let stage2_questions: Vec<&Question> = sets
        .iter()
        .filter(|s| s.source == source)
        .flat_map(|s| s.trainable())
        .filter(|q| q.category == Some(RawCategory::Resource) && !q.types.is_empty())
        .collect();
    let hierarchy = config.hierarchy.as_deref().map(TypeHierarchy::load).transpose()?;
    let mut notes = Vec::new();

    match config.stage2 {
        Stage2Method::Tc | Stage2Method::Ec => {
            let entities = load_entities(config.entities.as_deref().unwrap())?;
            let index = if config.stage2 == Stage2Method::Tc {
                build_type_index(entities, config.bm25)?
            } else {
                build_entity_index(entities, config.bm25)?
            };
            if index.skipped_untyped > 0 {
                notes.push(format!("{} untyped entities skipped", index.skipped_untyped));
            }
            let name = if config.stage2 == Stage2Method::Tc {
                "type_index.bin"
            } else {
                "entity_index.bin"
            };
            index.save(&out.join(name))?;
        }
        Stage2Method::Xmc => {
            let examples: Vec<TrainExample> = stage2_questions
                .iter()
                .map(|q| TrainExample {
                    id: q.id.clone(),
                    x: vocab.vectorize(&q.text),
                    labels: q.types.clone(),
                })
                .collect();
            let extra: Vec<String> = hierarchy
                .as_ref()
                .map(|h| h.depths().keys().map(|t| t.to_string()).collect())
                .unwrap_or_default();
            let model = XmcModel::fit(&examples, &extra, vocab.len(), &config.effective_xmc())?;
            if !model.ranker.fitted {
                notes.push("ensemble ranker uses fallback weights".into());
            }
            model.save(&out.join("xmc"))?;
            notes.push(XMC_NOTE.into());
        }
        Stage2Method::Imported => {}
    }

    let mut inputs = BTreeMap::new();
    let mut record = |p: &Path| -> Result<()> {
        inputs.insert(p.display().to_string(), file_sha256(p)?);
        Ok(())
    };
    for d in &config.train {
        record(&d.path)?;
    }
    for p in [&config.hierarchy, &config.entities].into_iter().flatten() {
        record(p)?;
    }

    let manifest = Manifest {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        config_hash: config.config_hash(),
        config: PipelineConfig {
            output_dir: None,
            ..config.clone()
        },
        seeds: config.seeds(),
        vocabulary_fingerprint: vocab.fingerprint(),
        vocabulary_size: vocab.len(),
        stage1_questions: stage1_questions.len(),
        stage2_questions: stage2_questions.len(),
        fallback_type: most_frequent_type(&stage2_questions),
        inputs,
        artifacts: collect_artifacts(out)?,
        notes,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Encoding(e.to_string()))?;
    write_text(&out.join("manifest.json"), &json)?;
    Ok(manifest)
}

/// Settings that may differ between training and prediction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictOptions {
    pub top_k: Option<usize>,
    pub stage1_predictions: Option<PathBuf>,
    pub stage2_scores: Option<PathBuf>,
}

enum Stage2 {
    Tc(InvertedIndex),
    Ec(InvertedIndex, usize, Aggregation),
    Xmc(Box<XmcModel>),
    Imported(ImportedMatcherScores),
}

/// A loaded bundle, ready to answer questions.
pub struct Predictor {
    pub manifest: Manifest,
    vocab: Vocabulary,
    stage1: Box<dyn CategoryPredictor>,
    stage2: Stage2,
    top_k: usize,
}

impl Predictor {
    pub fn load(bundle: &Path, options: &PredictOptions) -> Result<Self> {
        let manifest = Manifest::load(bundle)?;
        let cfg = &manifest.config;
        let vocab = Vocabulary::load(&bundle.join("vocabulary.json"))?;
        if vocab.fingerprint() != manifest.vocabulary_fingerprint {
            return Err(Error::VocabularyMismatch {
                expected: manifest.vocabulary_fingerprint.clone(),
                found: vocab.fingerprint(),
            });
        }
        let stage1: Box<dyn CategoryPredictor> = match cfg.stage1 {
            Stage1Method::Linear => {
                let model = LinearModel::load(&bundle.join("category_model.json"))?;
                Box::new(LinearCategoryPredictor::new(vocab.clone(), model)?)
            }
            Stage1Method::Imported => {
                let path = options
                    .stage1_predictions
                    .as_ref()
                    .or(cfg.stage1_predictions.as_ref())
                    .ok_or_else(|| Error::Config("imported stage 1 needs stage-1 predictions".into()))?;
                check_file("stage-1 predictions", path)?;
                Box::new(ImportedCategories::load(path)?)
            }
        };
        let stage2 = match cfg.stage2 {
            Stage2Method::Tc => Stage2::Tc(InvertedIndex::load(&bundle.join("type_index.bin"))?),
            Stage2Method::Ec => Stage2::Ec(InvertedIndex::load(&bundle.join("entity_index.bin"))?, cfg.ec_k, cfg.ec_aggregation),
            Stage2Method::Xmc => {
                let model = XmcModel::load(&bundle.join("xmc"))?;
                if model.matcher.dim != vocab.len() {
                    return Err(Error::VocabularyMismatch {
                        expected: format!("{} features", model.matcher.dim),
                        found: format!("{} features", vocab.len()),
                    });
                }
                Stage2::Xmc(Box::new(model))
            }
            Stage2Method::Imported => {
                let path = options
                    .stage2_scores
                    .as_ref()
                    .or(cfg.stage2_scores.as_ref())
                    .ok_or_else(|| Error::Config("imported stage 2 needs stage-2 scores".into()))?;
                check_file("stage-2 scores", path)?;
                Stage2::Imported(ImportedMatcherScores::load(path)?)
            }
        };
        let top_k = options.top_k.unwrap_or(cfg.top_k);
        if top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(Predictor {
            manifest,
            vocab,
            stage1,
            stage2,
            top_k,
        })
    }

    pub fn rank_types(&self, q: &Question) -> Result<RankedTypeList> {
        let k = self.top_k;
        Ok(match &self.stage2 {
            Stage2::Tc(idx) => rank_types_tc(&q.text, idx, k),
            Stage2::Ec(idx, ec_k, agg) => rank_types_ec(&q.text, idx, *ec_k, *agg)?.truncated(k),
            Stage2::Xmc(model) => model.predict(&self.vocab.vectorize(&q.text), k)?,
            Stage2::Imported(scores) => scores.rank(&q.id, k),
        })
    }

    pub fn predict_question(&self, q: &Question) -> Result<Prediction> {
        let flat = self.stage1.predict_question(q)?;
        let (category, literal) = flat.unflatten();
        let types = match (category, literal) {
            (RawCategory::Boolean, _) => vec!["boolean".to_string()],
            (RawCategory::Literal, Some(kind)) => vec![kind.as_str().to_string()],
            _ => {
                let ranked = self.rank_types(q)?;
                let mut types: Vec<String> = ranked.labels().into_iter().map(str::to_string).collect();
                if types.is_empty() {
                    types.push(self.manifest.fallback_type.clone().unwrap_or_else(|| "owl:Thing".to_string()));
                }
                types
            }
        };
        Ok(Prediction {
            id: q.id.clone(),
            category: Some(category),
            types,
        })
    }

    pub fn metadata(&self) -> RunMetadata {
        let cfg = &self.manifest.config;
        let prefix = match cfg.stage1 {
            Stage1Method::Linear => "SVM",
            Stage1Method::Imported => "imported",
        };
        let mut notes = Vec::new();
        if cfg.stage2 == Stage2Method::Xmc {
            notes.push(XMC_NOTE.to_string());
        }
        RunMetadata {
            method: format!("{prefix}-{}", cfg.stage2.display_name()),
            stage1: cfg.stage1.to_string(),
            seeds: self.manifest.seeds.clone(),
            config_hash: Some(self.manifest.config_hash.clone()),
            notes,
        }
    }

    /// Predictions for every question, in input order.
    pub fn predict_set(&self, questions: &QuestionSet) -> Result<PredictionRun> {
        let predictions = questions
            .questions
            .par_iter()
            .map(|q| self.predict_question(q))
            .collect::<Result<Vec<_>>>()?;
        PredictionRun::new(predictions, self.metadata())
    }
}

pub fn cmd_predict(bundle: &Path, questions: &Path, out: &Path, options: &PredictOptions) -> Result<PredictionRun> {
    let predictor = Predictor::load(bundle, options)?;
    check_file("question file", questions)?;
    let qs = load_dataset(questions, predictor.manifest.config.mode_source(), Split::Test)?;
    let run = predictor.predict_set(&qs)?;
    run.save(out)?;
    Ok(run)
}

fn load_gold(gold: &Path, mode: EvalMode) -> Result<QuestionSet> {
    check_file("gold file", gold)?;
    let source = match mode {
        EvalMode::Dbpedia => Source::Dbpedia,
        EvalMode::Wikidata => Source::Wikidata,
    };
    load_dataset(gold, source, Split::Test)
}

/// Evaluate a run file; writes `report.json` and `report.txt` into
/// `out_dir` when given.
pub fn cmd_evaluate(run: &Path, gold: &Path, mode: EvalMode, hierarchy: Option<&Path>, out_dir: Option<&Path>) -> Result<EvalReport> {
    if mode == EvalMode::Dbpedia && hierarchy.is_none() {
        return Err(Error::Config("DBpedia evaluation needs --hierarchy".into()));
    }
    check_file("run file", run)?;
    if let Some(h) = hierarchy {
        check_file("hierarchy", h)?;
    }
    let hier = hierarchy.map(TypeHierarchy::load).transpose()?;
    let run = PredictionRun::load(run)?;
    let gold = load_gold(gold, mode)?;
    let report = evaluate_run(&run, &gold, hier.as_ref(), mode)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join("report.json"), &report.to_json()?)?;
        write_text(&dir.join("report.txt"), &report.to_text())?;
    }
    Ok(report)
}

/// The per-type miss table: types missed at least once, worst first.
pub fn cmd_analyze(run: &Path, gold: &Path, mode: EvalMode, n: usize, out: Option<&Path>) -> Result<(Vec<MissRow>, String)> {
    check_file("run file", run)?;
    let run = PredictionRun::load(run)?;
    let gold = load_gold(gold, mode)?;
    let rows: Vec<MissRow> = error_analysis(&run, &gold, n).into_iter().filter(|r| r.errors > 0).collect();
    let mut text = String::new();
    if let Some(h) = &run.metadata.config_hash {
        text.push_str(&format!("# config: {h}\n"));
    }
    if !run.metadata.seeds.is_empty() {
        let seeds: Vec<String> = run.metadata.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
        text.push_str(&format!("# seeds: {}\n", seeds.join(" ")));
    }
    text.push_str(&miss_table_tsv(&rows));
    if let Some(path) = out {
        write_text(path, &text)?;
    }
    Ok((rows, text))
}

pub fn cmd_stats(path: &Path, source: Source, split: Split) -> Result<DatasetStats> {
    check_file("dataset", path)?;
    Ok(dataset_stats(&load_dataset(path, source, split)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub dataset: PathBuf,
    pub stats: DatasetStats,
    pub hierarchy_types: Option<usize>,
    pub hierarchy_depth: Option<usize>,
    pub entities: Option<usize>,
    pub untyped_entities: Option<usize>,
}

/// Validate raw inputs and write a normalized copy of the dataset plus its
/// statistics into `out_dir`.
pub fn cmd_ingest(
    input: &Path,
    source: Source,
    split: Split,
    hierarchy: Option<&Path>,
    entities: Option<&Path>,
    out_dir: &Path,
) -> Result<IngestSummary> {
    check_file("dataset", input)?;
    let qs = load_dataset(input, source, split)?;
    let stats = dataset_stats(&qs);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = format!(
        "{}_{}",
        serde_json::to_value(source).unwrap().as_str().unwrap(),
        serde_json::to_value(split).unwrap().as_str().unwrap()
    );
    let dataset = out_dir.join(format!("{stem}.json"));
    write_text(&dataset, &qs.to_json()?)?;
    write_text(&out_dir.join(format!("{stem}.stats.tsv")), &stats.to_tsv())?;
    write_text(
        &out_dir.join(format!("{stem}.stats.json")),
        &serde_json::to_string_pretty(&stats).map_err(|e| Error::Encoding(e.to_string()))?,
    )?;

    let (mut hierarchy_types, mut hierarchy_depth) = (None, None);
    if let Some(h) = hierarchy {
        check_file("hierarchy", h)?;
        let hier = TypeHierarchy::load(h)?;
        write_text(&out_dir.join("type_depths.tsv"), &hier.depths_tsv())?;
        hierarchy_types = Some(hier.len());
        hierarchy_depth = Some(hier.max_depth());
    }
    let (mut n_entities, mut untyped) = (None, None);
    if let Some(e) = entities {
        check_file("entities file", e)?;
        let records = load_entities(e)?;
        untyped = Some(records.iter().filter(|r| r.types.is_empty()).count());
        n_entities = Some(records.len());
    }
    Ok(IngestSummary {
        dataset,
        stats,
        hierarchy_types,
        hierarchy_depth,
        entities: n_entities,
        untyped_entities: untyped,
    })
}
