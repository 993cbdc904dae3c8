//! Score prediction runs: a perfect run on four example questions, and a
//! run with mistakes.

use std::path::Path;

use answer_type::dataset::{load_dataset, RawCategory, Source, Split};
use answer_type::eval::{evaluate_run, mrr, EvalMode, Prediction, PredictionRun, RunMetadata};
use answer_type::typehier::TypeHierarchy;

fn main() -> answer_type::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let gold = load_dataset(dir.join("table1.json"), Source::Dbpedia, Split::Test)?;
    let hier = TypeHierarchy::load(&dir.join("dbpedia_ontology_subset.tsv"))?;

    let perfect = PredictionRun::from_gold(&gold);
    println!("== gold answers as predictions");
    print!("{}", evaluate_run(&perfect, &gold, Some(&hier), EvalMode::Dbpedia)?.to_text());

    let flawed = PredictionRun::new(
        vec![
            Prediction {
                id: "dbpedia_1".into(),
                category: Some(RawCategory::Resource),
                types: vec!["dbo:Athlete".into(), "dbo:SoccerPlayer".into()],
            },
            Prediction {
                id: "dbpedia_2".into(),
                category: Some(RawCategory::Literal),
                types: vec!["string".into()],
            },
            Prediction {
                id: "dbpedia_3".into(),
                category: Some(RawCategory::Literal),
                types: vec!["date".into()],
            },
            Prediction {
                id: "dbpedia_4".into(),
                category: Some(RawCategory::Resource),
                types: vec!["dbo:Country".into()],
            },
        ],
        RunMetadata {
            method: "hand-made".into(),
            ..Default::default()
        },
    )?;
    println!("\n== a run with mistakes");
    print!("{}", evaluate_run(&flawed, &gold, Some(&hier), EvalMode::Dbpedia)?.to_text());
    println!("\n== same run, exact-match reciprocal rank");
    print!("{}", evaluate_run(&flawed, &gold, None, EvalMode::Wikidata)?.to_text());

    println!(
        "\nMRR of hits at ranks 1 and 2: {}",
        mrr(&[(vec!["a"], vec!["a"]), (vec!["b", "a"], vec!["a"])])
    );
    Ok(())
}
