//! Tokenization and TF-IDF features.
//!
//! Tokens are lowercased maximal runs of at least two alphanumeric
//! characters. Weights are raw term frequency times smoothed idf
//! `ln((1 + N) / (1 + df)) + 1`, L2-normalized per document.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut run = 0usize;
    let mut flush = |current: &mut String, run: &mut usize| {
        if *run >= 2 {
            tokens.push(std::mem::take(current));
        } else {
            current.clear();
        }
        *run = 0;
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
            run += 1;
        } else {
            flush(&mut current, &mut run);
        }
    }
    flush(&mut current, &mut run);
    tokens
}

/// Sparse vector with strictly increasing term ids and no zero weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Build from arbitrary `(id, weight)` pairs. Duplicate ids are summed
    /// and zeros dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(id, _)| id);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (id, w) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == id => last.1 += w,
                _ => entries.push((id, w)),
            }
        }
        entries.retain(|&(_, w)| w != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_id(&self) -> Option<u32> {
        self.entries.last().map(|&(id, _)| id)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for e in &mut self.entries {
                e.1 /= n;
            }
        }
        self
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(id, w)| dense.get(id as usize).copied().unwrap_or(0.0) * w)
            .sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn add_to_dense(&self, dense: &mut [f64], scale: f64) {
        for &(id, w) in &self.entries {
            dense[id as usize] += scale * w;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VocabularyFile {
    format: String,
    version: u32,
    n_docs: usize,
    /// `(term, id, df)` triples in id order.
    terms: Vec<(String, u32, usize)>,
}

const VOCAB_FORMAT: &str = "answer-type/vocabulary";
const VOCAB_VERSION: u32 = 1;

/// Term dictionary with document frequencies, fitted on training text only.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
    df: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    /// Ids are assigned in order of first occurrence across the corpus.
    pub fn fit<S: AsRef<str>>(train_texts: &[S]) -> Result<Self> {
        if train_texts.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a vocabulary on zero documents".into()));
        }
        let mut terms = Vec::new();
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        let mut last_doc: Vec<usize> = Vec::new();
        for (doc, text) in train_texts.iter().enumerate() {
            for tok in tokenize(text.as_ref()) {
                let id = match ids.get(&tok) {
                    Some(&id) => id as usize,
                    None => {
                        let id = terms.len();
                        ids.insert(tok.clone(), id as u32);
                        terms.push(tok);
                        df.push(0);
                        last_doc.push(usize::MAX);
                        id
                    }
                };
                if last_doc[id] != doc {
                    last_doc[id] = doc;
                    df[id] += 1;
                }
            }
        }
        if terms.is_empty() {
            return Err(Error::InvalidArgument("training corpus contains no tokens".into()));
        }
        Ok(Vocabulary {
            terms,
            ids,
            df,
            n_docs: train_texts.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.id(term).map(|id| self.df[id as usize])
    }

    pub fn idf(&self, id: u32) -> f64 {
        let n = self.n_docs as f64;
        let df = self.df[id as usize] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// L2-normalized TF-IDF vector; out-of-vocabulary tokens are ignored.
    pub fn vectorize(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for tok in tokenize(text) {
            if let Some(id) = self.id(&tok) {
                *counts.entry(id).or_insert(0.0) += 1.0;
            }
        }
        let pairs = counts.into_iter().map(|(id, tf)| (id, tf * self.idf(id))).collect();
        SparseVector::from_pairs(pairs).normalized()
    }

    /// Content hash used to tie models to the vocabulary they were trained on.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.n_docs.to_le_bytes());
        for (term, df) in self.terms.iter().zip(&self.df) {
            h.update(term.as_bytes());
            h.update([0u8]);
            h.update(df.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VocabularyFile {
            format: VOCAB_FORMAT.into(),
            version: VOCAB_VERSION,
            n_docs: self.n_docs,
            terms: self
                .terms
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), i as u32, self.df[i]))
                .collect(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Encoding(e.to_string()))
    }

    pub fn from_json(origin: &Path, json: &str) -> Result<Self> {
        let file: VocabularyFile = serde_json::from_str(json).map_err(|e| Error::json(origin, e))?;
        if file.format != VOCAB_FORMAT || file.version != VOCAB_VERSION {
            return Err(Error::Format(format!(
                "{}: expected {VOCAB_FORMAT} v{VOCAB_VERSION}, found {} v{}",
                origin.display(),
                file.format,
                file.version
            )));
        }
        let mut terms = vec![String::new(); file.terms.len()];
        let mut df = vec![0; file.terms.len()];
        let mut ids = HashMap::with_capacity(file.terms.len());
        for (term, id, d) in file.terms {
            let slot = id as usize;
            if slot >= terms.len() || ids.insert(term.clone(), id).is_some() || d == 0 || d > file.n_docs {
                return Err(Error::Validation(format!("{}: bad vocabulary entry {term:?}", origin.display())));
            }
            terms[slot] = term;
            df[slot] = d;
        }
        if ids.len() != terms.len() {
            return Err(Error::Validation(format!("{}: term ids are not dense", origin.display())));
        }
        Ok(Vocabulary {
            terms,
            ids,
            df,
            n_docs: file.n_docs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(path, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_table_one_question() {
        assert_eq!(
            tokenize("Who are the gymnasts coached by Amanda Reddin?"),
            ["who", "are", "the", "gymnasts", "coached", "by", "amanda", "reddin"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize("A I").is_empty());
        assert_eq!(tokenize("don't x-ray 1999"), ["don", "ray", "1999"]);
    }

    #[test]
    fn fit_drops_single_chars_and_counts_documents() {
        let v = Vocabulary::fit(&["a cat", "a dog"]).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.df("cat"), Some(1));
        assert_eq!(v.df("dog"), Some(1));
        assert_eq!(v.id("a"), None);

        let v = Vocabulary::fit(&["x1 x1"]).unwrap();
        assert_eq!(v.df("x1"), Some(1));
    }

    #[test]
    fn fit_rejects_empty_corpus() {
        assert!(Vocabulary::fit::<&str>(&[]).is_err());
        assert!(Vocabulary::fit(&["", "a b"]).is_err());
    }

    #[test]
    fn ids_follow_first_occurrence() {
        let v = Vocabulary::fit(&["zebra apple", "apple mango"]).unwrap();
        assert_eq!(v.id("zebra"), Some(0));
        assert_eq!(v.id("apple"), Some(1));
        assert_eq!(v.id("mango"), Some(2));
    }

    #[test]
    fn vectorize_single_term_and_oov() {
        let v = Vocabulary::fit(&["cat", "cat dog"]).unwrap();
        let idf_dog = (3.0f64 / 2.0).ln() + 1.0;
        assert!((v.idf(v.id("dog").unwrap()) - idf_dog).abs() < 1e-12);
        let x = v.vectorize("dog");
        assert_eq!(x.entries(), &[(v.id("dog").unwrap(), 1.0)]);
        assert!(v.vectorize("unicorn horse").is_empty());
    }

    #[test]
    fn vectorize_two_terms_by_hand() {
        let v = Vocabulary::fit(&["cat", "cat dog"]).unwrap();
        let idf_cat = 1.0; // ln(3/3) + 1
        let idf_dog = (1.5f64).ln() + 1.0;
        let (a, b) = (2.0 * idf_cat, idf_dog);
        let n = (a * a + b * b).sqrt();
        let x = v.vectorize("cat dog cat");
        assert!((x.entries()[0].1 - a / n).abs() < 1e-12);
        assert!((x.entries()[1].1 - b / n).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let v = Vocabulary::fit(&["who wrote this book", "where is the book"]).unwrap();
        let back = Vocabulary::from_json(Path::new("v.json"), &v.to_json().unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.fingerprint(), v.fingerprint());
        let refit = Vocabulary::fit(&["who wrote this book", "where is the book"]).unwrap();
        assert_eq!(refit, v);
    }

    #[test]
    fn from_pairs_merges_and_drops_zero() {
        let s = SparseVector::from_pairs(vec![(3, 1.0), (1, 2.0), (3, -1.0), (2, 0.5)]);
        assert_eq!(s.entries(), &[(1, 2.0), (2, 0.5)]);
    }

    proptest! {
        #[test]
        fn vectors_are_sorted_unique_and_unit(words in prop::collection::vec("[a-e]{1,3}", 1..30), query in prop::collection::vec("[a-f]{1,3}", 0..12)) {
            let corpus: Vec<String> = words.chunks(3).map(|c| c.join(" ")).collect();
            prop_assume!(corpus.iter().any(|d| !tokenize(d).is_empty()));
            let v = Vocabulary::fit(&corpus).unwrap();
            let x = v.vectorize(&query.join(" "));
            prop_assert!(x.entries().windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(x.iter().all(|(_, w)| w != 0.0));
            if !x.is_empty() {
                prop_assert!((x.norm() - 1.0).abs() < 1e-9);
            }
            prop_assert_eq!(x, v.vectorize(&query.join(" ")));
        }
    }
}
