//! Cross-validate the five-way category classifier, then train on all data
//! and classify new questions.
//!
//! Runs on a generated corpus by default; pass a SMART train file to use it
//! instead.

use answer_type::catclf::{cross_validate, train_category_classifier};
use answer_type::dataset::{load_dataset, FlatCategory, Source, Split};
use answer_type::linear::SgdParams;
use answer_type::synthetic::{generate, SyntheticConfig};
use answer_type::textproc::{SparseVector, Vocabulary};

fn main() -> answer_type::Result<()> {
    let qs = match std::env::args().nth(1) {
        Some(path) => load_dataset(path, Source::Dbpedia, Split::Train)?,
        None => generate(&SyntheticConfig::default())?.questions,
    };
    let params = SgdParams::default();

    let cv = cross_validate(&qs, 5, 0, &params)?;
    for (i, f) in cv.folds.iter().enumerate() {
        println!("fold {i}: accuracy {:.4}  5-way {:.4}", f.raw, f.flat);
    }
    println!("mean:   accuracy {:.4}  5-way {:.4}", cv.mean.raw, cv.mean.flat);

    let train: Vec<_> = qs.trainable().filter(|q| q.flat_category().is_some()).collect();
    let texts: Vec<&str> = train.iter().map(|q| q.text.as_str()).collect();
    let vocab = Vocabulary::fit(&texts)?;
    let xs: Vec<SparseVector> = texts.iter().map(|t| vocab.vectorize(t)).collect();
    let ys: Vec<FlatCategory> = train.iter().map(|q| q.flat_category().unwrap()).collect();
    let model = train_category_classifier(&xs, &ys, vocab.len(), &vocab.fingerprint(), &params)?;

    for q in [
        "How many members does the club have?",
        "When was the club founded?",
        "Is the club a company?",
        "Which athlete is associated with the club?",
    ] {
        let p = model.predict(&vocab.vectorize(q))?;
        println!("{:<45} -> {}", q, p.category);
    }
    Ok(())
}
