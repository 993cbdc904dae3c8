//! Ontology type hierarchy and the lenient linear-decay gain.
//!
//! The input is a TSV of `child<TAB>parent` lines; a parent of `ROOT` marks a
//! top-level type (depth 1). Each type has at most one parent.
//!
//! Two types are on the same path when one is an ancestor of the other (or
//! they are equal). Their distance is the number of parent edges between
//! them. Types that only share a common ancestor are not on the same path
//! and earn no gain.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

pub const ROOT_TOKEN: &str = "ROOT";

#[derive(Debug, Clone, PartialEq)]
pub struct TypeHierarchy {
    parent: HashMap<String, Option<String>>,
    depth: HashMap<String, usize>,
    max_depth: usize,
}

impl TypeHierarchy {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut parent: HashMap<String, Option<String>> = HashMap::new();
        for (child, par) in pairs {
            let child = child.into();
            let par = par.into();
            let par = if par == ROOT_TOKEN { None } else { Some(par) };
            if let Some(existing) = parent.get(&child) {
                if *existing != par {
                    return Err(Error::Validation(format!("type {child} has more than one parent")));
                }
            }
            parent.insert(child, par);
        }
        for (child, par) in &parent {
            if let Some(p) = par {
                if !parent.contains_key(p) {
                    return Err(Error::OrphanParent {
                        child: child.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }

        let mut depth: HashMap<String, usize> = HashMap::with_capacity(parent.len());
        let mut names: Vec<&String> = parent.keys().collect();
        names.sort();
        for start in names {
            if depth.contains_key(start) {
                continue;
            }
            // Walk up until a known depth or a root, then assign on the way back.
            let mut chain: Vec<&String> = Vec::new();
            let mut on_chain: HashSet<&String> = HashSet::new();
            let mut cur = start;
            let base = loop {
                if let Some(&d) = depth.get(cur) {
                    break d;
                }
                if !on_chain.insert(cur) {
                    return Err(Error::Cycle(cur.clone()));
                }
                chain.push(cur);
                match &parent[cur] {
                    Some(p) => cur = p,
                    None => break 0,
                }
            };
            for (i, t) in chain.iter().rev().enumerate() {
                depth.insert((*t).clone(), base + i + 1);
            }
        }
        let max_depth = depth.values().copied().max().unwrap_or(0);
        Ok(TypeHierarchy { parent, depth, max_depth })
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(c), Some(p), None) if !c.is_empty() && !p.is_empty() => pairs.push((c.to_string(), p.to_string())),
                _ => {
                    return Err(Error::Validation(format!(
                        "hierarchy line {}: expected child<TAB>parent, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn contains(&self, t: &str) -> bool {
        self.parent.contains_key(t)
    }

    /// Maximum depth `h` over all types.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn depth(&self, t: &str) -> Option<usize> {
        self.depth.get(t).copied()
    }

    pub fn parent(&self, t: &str) -> Option<&str> {
        self.parent.get(t).and_then(|p| p.as_deref())
    }

    /// `t` followed by its ancestors up to the root.
    pub fn ancestors<'a>(&'a self, t: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let start = self.parent.get_key_value(t).map(|(k, _)| k.as_str());
        std::iter::successors(start, move |cur| self.parent(cur))
    }

    /// Number of parent edges between `t` and `g` if one is an ancestor of
    /// the other.
    pub fn path_distance(&self, t: &str, g: &str) -> Option<usize> {
        let (dt, dg) = (self.depth(t)?, self.depth(g)?);
        let (deep, shallow, d) = if dt >= dg { (t, g, dt - dg) } else { (g, t, dg - dt) };
        let reached = self.ancestors(deep).nth(d)?;
        (reached == shallow).then_some(d)
    }

    pub fn on_same_path(&self, t: &str, g: &str) -> bool {
        if !self.contains(t) || !self.contains(g) {
            log::debug!("on_same_path: unknown type in ({t}, {g})");
            return false;
        }
        self.path_distance(t, g).is_some()
    }

    /// `(type, depth)` for every type, sorted by name.
    pub fn depths(&self) -> BTreeMap<&str, usize> {
        self.depth.iter().map(|(k, &v)| (k.as_str(), v)).collect()
    }

    pub fn depths_tsv(&self) -> String {
        let mut out = String::from("type\tdepth\n");
        for (t, d) in self.depths() {
            out.push_str(&format!("{t}\t{d}\n"));
        }
        out
    }
}

/// `1 − d(t, t*)/h` where `t*` is the closest gold type on a path shared
/// with `t`; 0 when `t` shares no path with any gold type or is unknown.
pub fn lenient_gain<S: AsRef<str>>(t: &str, gold: &[S], hier: &TypeHierarchy) -> f64 {
    let h = hier.max_depth();
    if h == 0 || !hier.contains(t) {
        return 0.0;
    }
    gold.iter()
        .filter_map(|g| hier.path_distance(t, g.as_ref()))
        .min()
        .map_or(0.0, |d| 1.0 - d as f64 / h as f64)
}
