use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Types ordered by descending score, ties broken by ascending label. Labels
/// are unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedTypeList {
    entries: Vec<(String, f64)>,
}

impl RankedTypeList {
    /// Sort arbitrary `(label, score)` pairs. A label that appears more than
    /// once keeps its highest score. NaN scores sort last.
    pub fn from_scores<I>(scores: I) -> Self
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut best: HashMap<String, f64> = HashMap::new();
        for (label, score) in scores {
            let score = if score.is_nan() { f64::NEG_INFINITY } else { score };
            best.entry(label).and_modify(|s| *s = s.max(score)).or_insert(score);
        }
        let mut entries: Vec<(String, f64)> = best.into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedTypeList { entries }
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.entries.truncate(k);
        self
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn labels(&self) -> Vec<&str> {
        self.entries.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the ordering and uniqueness invariants hold.
    pub fn is_well_formed(&self) -> bool {
        let sorted = self
            .entries
            .windows(2)
            .all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        let mut seen = std::collections::HashSet::new();
        sorted && self.entries.iter().all(|(l, _)| seen.insert(l.as_str()))
    }
}
