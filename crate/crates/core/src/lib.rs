//! Answer type prediction for natural-language questions.
//!
//! A question is first assigned one of five flat categories (boolean,
//! literal-date, literal-number, literal-string, resource). Resource
//! questions then receive a ranked list of ontology types, produced by one
//! of three rankers: BM25 over type documents ([`fusion::rank_types_tc`]),
//! BM25 over typed entities ([`fusion::rank_types_ec`]), or an extreme
//! multi-label classifier ([`xmc`]).
//!
//! ```no_run
//! use answer_type::dataset::{load_dataset, Source, Split};
//! use answer_type::textproc::Vocabulary;
//!
//! let train = load_dataset("dbpedia_train.json", Source::Dbpedia, Split::Train)?;
//! let texts: Vec<&str> = train.trainable().map(|q| q.text.as_str()).collect();
//! let vocab = Vocabulary::fit(&texts)?;
//! println!("{} questions, {} terms", train.len(), vocab.len());
//! # Ok::<(), answer_type::Error>(())
//! ```

pub mod catclf;
mod container;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod linear;
pub mod pipeline;
pub mod ranking;
pub mod synthetic;
pub mod textproc;
pub mod typehier;
pub mod xmc;

pub use error::{Error, Result};
