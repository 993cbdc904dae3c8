//! Unsupervised type ranking with BM25.
//!
//! * Type-centric (early fusion): every type gets a pseudo-document made of
//!   the abstracts of all entities bearing it; type documents are ranked
//!   directly.
//! * Entity-centric (late fusion): entities are ranked by their abstract,
//!   and each type collects the scores of the top-k entities that carry it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::container;
use crate::error::{Error, Result};
use crate::ranking::RankedTypeList;
use crate::textproc::tokenize;

/// Default number of entities aggregated by the entity-centric ranker.
pub const DEFAULT_EC_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub id: String,
    pub abstract_text: String,
    pub types: Vec<String>,
}

/// Parse `entity-id<TAB>abstract<TAB>type1,type2,...` lines.
pub fn parse_entities(text: &str) -> Result<Vec<EntityRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 || cols[0].is_empty() {
            return Err(Error::Validation(format!(
                "entity line {}: expected 3 tab-separated columns",
                lineno + 1
            )));
        }
        out.push(EntityRecord {
            id: cols[0].to_string(),
            abstract_text: cols[1].to_string(),
            types: cols[2]
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect(),
        });
    }
    Ok(out)
}

pub fn load_entities(path: &Path) -> Result<Vec<EntityRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_entities(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Types,
    Entities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexHeader {
    kind: IndexKind,
    bm25: Bm25Params,
    docs: usize,
    terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub kind: IndexKind,
    pub params: Bm25Params,
    terms: Vec<String>,
    #[serde(skip)]
    term_ids: HashMap<String, u32>,
    /// Per term, `(doc, tf)` sorted by doc.
    postings: Vec<Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    avg_len: f64,
    labels: Vec<String>,
    /// Entity index only: the types of each document's entity.
    doc_types: Vec<Vec<String>>,
    /// Input records dropped because they had no types.
    pub skipped_untyped: usize,
}

struct Builder {
    terms: Vec<String>,
    term_ids: HashMap<String, u32>,
    postings: Vec<Vec<(u32, u32)>>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            terms: Vec::new(),
            term_ids: HashMap::new(),
            postings: Vec::new(),
        }
    }

    fn add_doc(&mut self, doc: u32, counts: BTreeMap<&str, u32>) {
        for (term, tf) in counts {
            let id = match self.term_ids.get(term) {
                Some(&id) => id,
                None => {
                    let id = self.terms.len() as u32;
                    self.term_ids.insert(term.to_string(), id);
                    self.terms.push(term.to_string());
                    self.postings.push(Vec::new());
                    id
                }
            };
            self.postings[id as usize].push((doc, tf));
        }
    }
}

impl InvertedIndex {
    fn finish(
        kind: IndexKind,
        params: Bm25Params,
        builder: Builder,
        doc_len: Vec<u32>,
        labels: Vec<String>,
        doc_types: Vec<Vec<String>>,
        skipped_untyped: usize,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("no typed entities to index".into()));
        }
        let avg_len = doc_len.iter().map(|&l| l as f64).sum::<f64>() / doc_len.len() as f64;
        if skipped_untyped > 0 {
            log::warn!("skipped {skipped_untyped} entities without types");
        }
        Ok(InvertedIndex {
            kind,
            params,
            terms: builder.terms,
            term_ids: builder.term_ids,
            postings: builder.postings,
            doc_len,
            avg_len,
            labels,
            doc_types,
            skipped_untyped,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.labels.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_label(&self, doc: usize) -> &str {
        &self.labels[doc]
    }

    pub fn doc_len(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|d| self.doc_len[d])
    }

    /// Types of an entity document; empty for type indexes.
    pub fn entity_types(&self, label: &str) -> &[String] {
        match self.labels.iter().position(|l| l == label) {
            Some(d) if self.kind == IndexKind::Entities => &self.doc_types[d],
            _ => &[],
        }
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.term_ids.get(term).map_or(0, |&t| self.postings[t as usize].len())
    }

    pub fn term_frequency(&self, term: &str, label: &str) -> u32 {
        let (Some(&t), Some(d)) = (self.term_ids.get(term), self.labels.iter().position(|l| l == label)) else {
            return 0;
        };
        let list = &self.postings[t as usize];
        list.binary_search_by_key(&(d as u32), |&(doc, _)| doc).map_or(0, |i| list[i].1)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = IndexHeader {
            kind: self.kind,
            bm25: self.params,
            docs: self.doc_count(),
            terms: self.terms.len(),
        };
        container::write(path, "bm25-index", 1, &header, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (header, mut index): (IndexHeader, InvertedIndex) = container::read(path, "bm25-index", 1)?;
        if header.kind != index.kind || header.docs != index.doc_count() {
            return Err(Error::Format(format!("{}: header does not match payload", path.display())));
        }
        index.term_ids = index.terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(index)
    }
}

fn count_tokens(tokens: &[String]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

/// One document per type, the concatenation of its entities' abstracts.
/// Type documents are numbered in lexicographic label order.
pub fn build_type_index<I>(entities: I, params: Bm25Params) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = EntityRecord>,
{
    let mut per_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut skipped = 0;
    let mut seen_any = false;
    for e in entities {
        seen_any = true;
        if e.types.is_empty() {
            skipped += 1;
            continue;
        }
        let tokens = tokenize(&e.abstract_text);
        let unique: HashSet<&String> = e.types.iter().collect();
        for t in unique {
            per_type.entry(t.clone()).or_default().extend(tokens.iter().cloned());
        }
    }
    if !seen_any {
        return Err(Error::InvalidArgument("empty entity stream".into()));
    }
    let mut builder = Builder::new();
    let mut doc_len = Vec::with_capacity(per_type.len());
    let mut labels = Vec::with_capacity(per_type.len());
    for (doc, (label, tokens)) in per_type.iter().enumerate() {
        builder.add_doc(doc as u32, count_tokens(tokens));
        doc_len.push(tokens.len() as u32);
        labels.push(label.clone());
    }
    InvertedIndex::finish(IndexKind::Types, params, builder, doc_len, labels, Vec::new(), skipped)
}

/// One document per entity (its abstract), keeping each entity's types.
pub fn build_entity_index<I>(entities: I, params: Bm25Params) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = EntityRecord>,
{
    let mut builder = Builder::new();
    let mut doc_len = Vec::new();
    let mut labels = Vec::new();
    let mut doc_types = Vec::new();
    let mut ids = HashSet::new();
    let mut skipped = 0;
    let mut seen_any = false;
    for e in entities {
        seen_any = true;
        if !ids.insert(e.id.clone()) {
            return Err(Error::Validation(format!("duplicate entity id {}", e.id)));
        }
        if e.types.is_empty() {
            skipped += 1;
            continue;
        }
        let tokens = tokenize(&e.abstract_text);
        builder.add_doc(labels.len() as u32, count_tokens(&tokens));
        doc_len.push(tokens.len() as u32);
        labels.push(e.id);
        let mut types = e.types;
        types.dedup();
        doc_types.push(types);
    }
    if !seen_any {
        return Err(Error::InvalidArgument("empty entity stream".into()));
    }
    InvertedIndex::finish(IndexKind::Entities, params, builder, doc_len, labels, doc_types, skipped)
}

/// `ln(1 + (N − df + 0.5) / (df + 0.5))`, floored at 0.
pub fn bm25_idf(n_docs: usize, df: usize) -> f64 {
    let (n, df) = (n_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

/// Score every document containing at least one query term and return the
/// top `cutoff` as `(label, score)`. Repeated query terms count once.
pub fn bm25_rank(index: &InvertedIndex, query_tokens: &[String], cutoff: usize) -> Vec<(String, f64)> {
    rank_docs(index, query_tokens, cutoff)
        .into_iter()
        .map(|(d, s)| (index.labels[d as usize].clone(), s))
        .collect()
}

fn rank_docs(index: &InvertedIndex, query_tokens: &[String], cutoff: usize) -> Vec<(u32, f64)> {
    let mut terms: Vec<u32> = query_tokens.iter().filter_map(|t| index.term_ids.get(t).copied()).collect();
    terms.sort_unstable();
    terms.dedup();
    if terms.is_empty() || cutoff == 0 {
        return Vec::new();
    }

    let Bm25Params { k1, b } = index.params;
    let n = index.doc_count();
    let mut scores: HashMap<u32, f64> = HashMap::new();
    for t in terms {
        let list = &index.postings[t as usize];
        let idf = bm25_idf(n, list.len());
        for &(doc, tf) in list {
            let tf = tf as f64;
            let norm = 1.0 - b + b * index.doc_len[doc as usize] as f64 / index.avg_len;
            *scores.entry(doc).or_insert(0.0) += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
        }
    }
    let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.labels[a.0 as usize].cmp(&index.labels[b.0 as usize]))
    });
    ranked.truncate(cutoff);
    ranked
}

/// Type-centric ranking; returns at most `cutoff` types.
pub fn rank_types_tc(question: &str, type_index: &InvertedIndex, cutoff: usize) -> RankedTypeList {
    RankedTypeList::from_scores(bm25_rank(type_index, &tokenize(question), cutoff))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Sum,
    Max,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregation::Sum),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::InvalidArgument(format!("unknown aggregation {other:?}"))),
        }
    }
}

/// Entity-centric ranking over the top `k` entities.
pub fn rank_types_ec(question: &str, entity_index: &InvertedIndex, k: usize, aggregation: Aggregation) -> Result<RankedTypeList> {
    if k == 0 {
        return Err(Error::InvalidArgument("entity cut-off k must be at least 1".into()));
    }
    let mut per_type: HashMap<String, f64> = HashMap::new();
    if entity_index.kind != IndexKind::Entities {
        return Err(Error::InvalidArgument("entity-centric ranking needs an entity index".into()));
    }
    for (doc, score) in rank_docs(entity_index, &tokenize(question), k) {
        for t in &entity_index.doc_types[doc as usize] {
            let slot = per_type.entry(t.clone()).or_insert(match aggregation {
                Aggregation::Sum => 0.0,
                Aggregation::Max => f64::NEG_INFINITY,
            });
            match aggregation {
                Aggregation::Sum => *slot += score,
                Aggregation::Max => *slot = slot.max(score),
            }
        }
    }
    Ok(RankedTypeList::from_scores(per_type))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ent(id: &str, text: &str, types: &[&str]) -> EntityRecord {
        EntityRecord {
            id: id.into(),
            abstract_text: text.into(),
            types: types.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn toks(q: &str) -> Vec<String> {
        tokenize(q)
    }

    #[test]
    fn type_docs_concatenate_abstracts() {
        let idx = build_type_index(
            vec![
                ent("e1", "an american gymnast", &["Person", "Gymnast"]),
                ent("e2", "british politician and writer", &["Person"]),
            ],
            Bm25Params::default(),
        )
        .unwrap();
        assert_eq!(idx.doc_count(), 2);
        assert_eq!(idx.doc_len("Person"), Some(3 + 4));
        assert_eq!(idx.doc_len("Gymnast"), Some(3));
        assert_eq!(idx.term_frequency("gymnast", "Person"), 1);
        assert_eq!(idx.term_frequency("gymnast", "Gymnast"), 1);
    }

    #[test]
    fn untyped_entities_skipped_and_empty_stream_rejected() {
        let idx = build_type_index(vec![ent("a", "x y", &[]), ent("b", "some text", &["T"])], Bm25Params::default()).unwrap();
        assert_eq!(idx.skipped_untyped, 1);
        assert!(build_type_index(Vec::new(), Bm25Params::default()).is_err());
        assert!(build_entity_index(Vec::new(), Bm25Params::default()).is_err());
    }

    #[test]
    fn entity_index_one_doc_per_entity() {
        let idx = build_entity_index(
            vec![
                ent("a", "red apple", &["Fruit"]),
                ent("b", "green pear", &["Fruit"]),
                ent("c", "blue car", &["Car"]),
            ],
            Bm25Params::default(),
        )
        .unwrap();
        assert_eq!(idx.doc_count(), 3);
        assert_eq!(idx.entity_types("c"), ["Car".to_string()]);
        let dup = build_entity_index(vec![ent("a", "x", &["T"]), ent("a", "y", &["T"])], Bm25Params::default());
        assert!(matches!(dup, Err(Error::Validation(_))));
    }

    #[test]
    fn bm25_two_doc_hand_computation() {
        // doc A: "gymnast coach gymnast" (3 tokens), doc B: "river" (1 token)
        let idx = build_entity_index(
            vec![ent("A", "gymnast coach gymnast", &["T"]), ent("B", "river", &["U"])],
            Bm25Params::default(),
        )
        .unwrap();
        let ranked = bm25_rank(&idx, &toks("gymnast"), 10);
        assert_eq!(ranked.len(), 1);
        let (n, df, tf, dl, avg) = (2.0f64, 1.0f64, 2.0f64, 3.0f64, 2.0f64);
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        let expected = idf * tf * 2.2 / (tf + 1.2 * (1.0 - 0.75 + 0.75 * dl / avg));
        assert_eq!(ranked[0].0, "A");
        assert!((ranked[0].1 - expected).abs() < 1e-9);
    }

    #[test]
    fn bm25_edge_cases() {
        let idx = build_entity_index(vec![ent("A", "solo term", &["T"])], Bm25Params::default()).unwrap();
        let r = bm25_rank(&idx, &toks("term"), 5);
        assert_eq!(r[0].0, "A");
        assert!(r[0].1 > 0.0);
        assert!(bm25_rank(&idx, &toks("nothing here"), 5).is_empty());
        assert!(bm25_rank(&idx, &[], 5).is_empty());
    }

    #[test]
    fn tc_ranks_matching_type_first() {
        let idx = build_type_index(
            vec![
                ent("e1", "famous gymnasts and coaches", &["Person"]),
                ent("e2", "a large country in europe", &["Country"]),
            ],
            Bm25Params::default(),
        )
        .unwrap();
        let r = rank_types_tc("Who are the gymnasts coached by Amanda Reddin?", &idx, 10);
        assert_eq!(r.labels()[0], "Person");
        assert_eq!(r, rank_types_tc("Who are the gymnasts coached by Amanda Reddin?", &idx, 10));
    }

    #[test]
    fn ec_k1_returns_top_entity_types() {
        let idx = build_entity_index(
            vec![
                ent("a", "gymnast gymnast champion", &["Gymnast", "Athlete", "Person"]),
                ent("b", "gymnast club", &["Organisation"]),
            ],
            Bm25Params::default(),
        )
        .unwrap();
        let top = bm25_rank(&idx, &toks("gymnast champion"), 1);
        let r = rank_types_ec("gymnast champion", &idx, 1, Aggregation::Sum).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.entries().iter().all(|(_, s)| *s == top[0].1));
        assert!(rank_types_ec("x", &idx, 0, Aggregation::Sum).is_err());
    }

    #[test]
    fn ec_k2_sums_by_hand() {
        let idx = build_entity_index(
            vec![
                ent("a", "alpine river valley", &["River", "Place"]),
                ent("b", "river delta city", &["City", "Place"]),
                ent("c", "desert", &["Place"]),
            ],
            Bm25Params::default(),
        )
        .unwrap();
        let ents = bm25_rank(&idx, &toks("river city"), 2);
        let (sa, sb) = (
            ents.iter().find(|e| e.0 == "a").unwrap().1,
            ents.iter().find(|e| e.0 == "b").unwrap().1,
        );
        let r = rank_types_ec("river city", &idx, 2, Aggregation::Sum).unwrap();
        let get = |l: &str| r.entries().iter().find(|e| e.0 == l).unwrap().1;
        assert!((get("Place") - (sa + sb)).abs() < 1e-12);
        assert!((get("River") - sa).abs() < 1e-12);
        assert!((get("City") - sb).abs() < 1e-12);
        let m = rank_types_ec("river city", &idx, 2, Aggregation::Max).unwrap();
        assert!((m.entries()[0].1 - sa.max(sb)).abs() < 1e-12);
    }

    #[test]
    fn parse_entity_tsv() {
        let e = parse_entities("Q1\tAn abstract.\tdbo:Person, dbo:Agent\nQ2\tNo types\t\n").unwrap();
        assert_eq!(e[0].types, ["dbo:Person", "dbo:Agent"]);
        assert!(e[1].types.is_empty());
        assert!(parse_entities("only two\tcolumns\n").is_err());
    }

    #[test]
    fn index_persists() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("idx.bin");
        let idx = build_entity_index(
            vec![ent("a", "red apple", &["Fruit"]), ent("b", "car", &["Car"])],
            Bm25Params::default(),
        )
        .unwrap();
        idx.save(&p).unwrap();
        let back = InvertedIndex::load(&p).unwrap();
        assert_eq!(bm25_rank(&back, &toks("apple"), 3), bm25_rank(&idx, &toks("apple"), 3));
    }
}
