//! Load a SMART-format file, print category counts, flatten categories and
//! build stratified folds.
//!
//! ```text
//! cargo run --example dataset_stats [path/to/smarttask_dbpedia_train.json]
//! ```

use std::path::PathBuf;

use answer_type::dataset::{dataset_stats, load_dataset, split_folds, Source, Split};

fn main() -> answer_type::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/table1.json"));
    let qs = load_dataset(&path, Source::Dbpedia, Split::Train)?;

    print!("{}", dataset_stats(&qs).to_tsv());
    println!();
    for q in &qs.questions {
        let flat = q.flat_category().map_or("-", |c| c.as_str());
        println!("{:<16} {:<55} {:?}", flat, q.text, q.types);
    }

    let folds = split_folds(&qs, 2, 42)?;
    println!("\nfold sizes: {:?}", folds.fold_sizes());
    Ok(())
}
