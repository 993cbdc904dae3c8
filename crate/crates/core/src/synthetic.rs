//! A small generated corpus in the SMART format, with a matching ontology
//! and entity abstracts, for demos and tests that must run without the real
//! challenge data.
//!
//! Every type owns a handful of cue words. Resource questions mention a cue
//! of their most specific type (sometimes of its parent) plus the name of an
//! unrelated entity; entity abstracts mention their own type's cues. The
//! other categories follow fixed question templates.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Question, QuestionSet, RawCategory, Source, Split};
use crate::error::{Error, Result};
use crate::fusion::EntityRecord;
use crate::typehier::{TypeHierarchy, ROOT_TOKEN};

const ONTOLOGY: &[(&str, &str)] = &[
    ("Agent", ROOT_TOKEN),
    ("Person", "Agent"),
    ("Athlete", "Person"),
    ("Gymnast", "Athlete"),
    ("SoccerPlayer", "Athlete"),
    ("Swimmer", "Athlete"),
    ("Artist", "Person"),
    ("MusicalArtist", "Artist"),
    ("Painter", "Artist"),
    ("Writer", "Artist"),
    ("Politician", "Person"),
    ("President", "Politician"),
    ("Scientist", "Person"),
    ("Organisation", "Agent"),
    ("Company", "Organisation"),
    ("SportsTeam", "Organisation"),
    ("University", "Organisation"),
    ("Band", "Organisation"),
    ("Place", ROOT_TOKEN),
    ("PopulatedPlace", "Place"),
    ("City", "PopulatedPlace"),
    ("Country", "PopulatedPlace"),
    ("NaturalPlace", "Place"),
    ("Mountain", "NaturalPlace"),
    ("River", "NaturalPlace"),
    ("Building", "Place"),
    ("Stadium", "Building"),
    ("Work", ROOT_TOKEN),
    ("Film", "Work"),
    ("Book", "Work"),
    ("MusicalWork", "Work"),
    ("Album", "MusicalWork"),
    ("Song", "MusicalWork"),
    ("Event", ROOT_TOKEN),
    ("SportsEvent", "Event"),
    ("MilitaryConflict", "Event"),
    ("Species", ROOT_TOKEN),
    ("Animal", "Species"),
    ("Plant", "Species"),
];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ra", "ven", "dor", "ta", "sel", "qui", "bar", "no", "zu", "fen", "ith", "gal", "mor", "pe", "vas", "ul", "kren",
    "sa", "tor", "lim", "edo",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub questions: usize,
    pub entities_per_type: usize,
    /// Probability that a resource question names its type's parent cue.
    pub parent_cue_rate: f64,
    /// Probability that a question has no text.
    pub blank_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            questions: 1500,
            entities_per_type: 12,
            parent_cue_rate: 0.25,
            blank_rate: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub questions: QuestionSet,
    pub hierarchy_tsv: String,
    pub entities: Vec<EntityRecord>,
}

/// Paths written by [`SyntheticCorpus::write_to`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub hierarchy: PathBuf,
    pub entities: PathBuf,
}

fn label(t: &str) -> String {
    format!("dbo:{t}")
}

fn pseudo_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

struct TypeInfo {
    name: &'static str,
    parent: Option<usize>,
    cues: Vec<String>,
    /// Most specific first, e.g. `[Gymnast, Athlete, Person, Agent]`.
    path: Vec<String>,
}

fn build_types(rng: &mut ChaCha8Rng) -> Vec<TypeInfo> {
    let mut types: Vec<TypeInfo> = Vec::with_capacity(ONTOLOGY.len());
    for &(name, parent) in ONTOLOGY {
        let parent = (parent != ROOT_TOKEN).then(|| types.iter().position(|t| t.name == parent).unwrap());
        let mut cues = vec![name.to_lowercase()];
        cues.push(pseudo_word(rng, 2));
        cues.push(pseudo_word(rng, 3));
        let mut path = vec![label(name)];
        if let Some(p) = parent {
            path.extend(types[p].path.iter().cloned());
        }
        types.push(TypeInfo { name, parent, cues, path });
    }
    types
}

fn is_leaf(types: &[TypeInfo], i: usize) -> bool {
    !types.iter().any(|t| t.parent == Some(i))
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if config.questions == 0 || config.entities_per_type == 0 {
        return Err(Error::InvalidArgument("synthetic corpus needs questions and entities".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let types = build_types(&mut rng);

    let mut hierarchy_tsv = String::new();
    for &(name, parent) in ONTOLOGY {
        let parent = if parent == ROOT_TOKEN {
            ROOT_TOKEN.to_string()
        } else {
            label(parent)
        };
        let _ = writeln!(hierarchy_tsv, "{}\t{parent}", label(name));
    }

    let mut entities = Vec::new();
    let mut names = Vec::new();
    for (ti, t) in types.iter().enumerate() {
        for j in 0..config.entities_per_type {
            let name = format!("{}{}", pseudo_word(&mut rng, 2), pseudo_word(&mut rng, 1));
            let cue = t.cues.choose(&mut rng).unwrap();
            let other = t.cues.choose(&mut rng).unwrap();
            let filler: Vec<String> = (0..4).map(|_| pseudo_word(&mut rng, 2)).collect();
            let abstract_text = format!("{name} is a {cue} known as a {other} from {}", filler.join(" "));
            entities.push(EntityRecord {
                id: format!("dbr:{}_{j}", t.name),
                abstract_text,
                types: t.path.clone(),
            });
            names.push((ti, name));
        }
    }

    // leaf popularity falls off with position
    let leaves: Vec<usize> = (0..types.len()).filter(|&i| is_leaf(&types, i)).collect();
    let weights: Vec<f64> = (0..leaves.len()).map(|r| 1.0 / (1.0 + r as f64).sqrt()).collect();
    let leaf_dist = rand::distributions::WeightedIndex::new(&weights).expect("positive weights");

    let mut questions = Vec::with_capacity(config.questions);
    for i in 0..config.questions {
        let (_, name) = names.choose(&mut rng).unwrap().clone();
        let roll: f64 = rng.gen();
        let (category, types_out, text) = if roll < 0.16 {
            let t = &types[*leaves.choose(&mut rng).unwrap()];
            let text = match rng.gen_range(0..3) {
                0 => format!("Is {name} a {}?", t.cues[0]),
                1 => format!("Does {name} have a {}?", t.cues[1]),
                _ => format!("Was {name} ever a {}?", t.cues[0]),
            };
            (RawCategory::Boolean, vec!["boolean".to_string()], text)
        } else if roll < 0.26 {
            let text = match rng.gen_range(0..3) {
                0 => format!("When was {name} founded?"),
                1 => format!("What year did {name} begin?"),
                _ => format!("On which date was {name} born?"),
            };
            (RawCategory::Literal, vec!["date".to_string()], text)
        } else if roll < 0.36 {
            let text = match rng.gen_range(0..3) {
                0 => format!("How many members does {name} have?"),
                1 => format!("What is the population of {name}?"),
                _ => format!("How tall is {name}?"),
            };
            (RawCategory::Literal, vec!["number".to_string()], text)
        } else if roll < 0.46 {
            let text = match rng.gen_range(0..3) {
                0 => format!("What is the motto of {name}?"),
                1 => format!("What is the nickname of {name}?"),
                _ => format!("What is {name} called in the local language?"),
            };
            (RawCategory::Literal, vec!["string".to_string()], text)
        } else {
            let leaf = leaves[rng.sample(&leaf_dist)];
            let t = &types[leaf];
            let cue_type = match t.parent {
                Some(p) if rng.gen_bool(config.parent_cue_rate) => &types[p],
                _ => t,
            };
            let cue = cue_type.cues.choose(&mut rng).unwrap();
            let text = match rng.gen_range(0..4) {
                0 => format!("Which {cue} is associated with {name}?"),
                1 => format!("Who is the {cue} of {name}?"),
                2 => format!("Name the {cue} linked to {name}."),
                _ => format!("Give me the {cue} that {name} mentions."),
            };
            (RawCategory::Resource, t.path.clone(), text)
        };
        let text = if rng.gen_bool(config.blank_rate) { String::new() } else { text };
        questions.push(Question {
            id: format!("dbpedia_{i}"),
            text,
            category: Some(category),
            types: types_out,
        });
    }

    Ok(SyntheticCorpus {
        questions: QuestionSet::new(Source::Dbpedia, Split::Train, questions)?,
        hierarchy_tsv,
        entities,
    })
}

impl SyntheticCorpus {
    pub fn hierarchy(&self) -> TypeHierarchy {
        TypeHierarchy::parse_tsv(&self.hierarchy_tsv).expect("generated ontology is valid")
    }

    pub fn entities_tsv(&self) -> String {
        let mut s = String::new();
        for e in &self.entities {
            let _ = writeln!(s, "{}\t{}\t{}", e.id, e.abstract_text, e.types.join(","));
        }
        s
    }

    /// Split off every `test_every`-th question as a test set.
    pub fn train_test(&self, test_every: usize) -> Result<(QuestionSet, QuestionSet)> {
        if test_every < 2 {
            return Err(Error::InvalidArgument("test_every must be at least 2".into()));
        }
        let (test, train): (Vec<_>, Vec<_>) = self
            .questions
            .questions
            .iter()
            .cloned()
            .enumerate()
            .partition(|(i, _)| i % test_every == 0);
        let strip = |v: Vec<(usize, Question)>| v.into_iter().map(|(_, q)| q).collect();
        Ok((
            QuestionSet::new(Source::Dbpedia, Split::Train, strip(train))?,
            QuestionSet::new(Source::Dbpedia, Split::Test, strip(test))?,
        ))
    }

    /// Write `train.json`, `test.json` (every fifth question),
    /// `ontology.tsv` and `entities.tsv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<SyntheticFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (train, test) = self.train_test(5)?;
        let files = SyntheticFiles {
            train: dir.join("train.json"),
            test: dir.join("test.json"),
            hierarchy: dir.join("ontology.tsv"),
            entities: dir.join("entities.tsv"),
        };
        let write = |p: &Path, s: &str| std::fs::write(p, s).map_err(|e| Error::io(p, e));
        write(&files.train, &train.to_json()?)?;
        write(&files.test, &test.to_json()?)?;
        write(&files.hierarchy, &self.hierarchy_tsv)?;
        write(&files.entities, &self.entities_tsv())?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_consistent() {
        let cfg = SyntheticConfig {
            questions: 300,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        let h = a.hierarchy();
        assert_eq!(h.max_depth(), 4);
        for q in &a.questions.questions {
            if q.category == Some(RawCategory::Resource) {
                assert!(q.types.iter().all(|t| h.contains(t)));
            }
        }
        assert!(a.entities.iter().all(|e| e.types.iter().all(|t| h.contains(t))));
    }

    #[test]
    fn files_round_trip() {
        let corpus = generate(&SyntheticConfig {
            questions: 50,
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = corpus.write_to(dir.path()).unwrap();
        let train = crate::dataset::load_dataset(&files.train, Source::Dbpedia, Split::Train).unwrap();
        let test = crate::dataset::load_dataset(&files.test, Source::Dbpedia, Split::Test).unwrap();
        assert_eq!(train.len() + test.len(), 50);
        assert_eq!(crate::fusion::load_entities(&files.entities).unwrap(), corpus.entities);
    }
}
