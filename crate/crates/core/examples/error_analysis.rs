//! Train on a generated corpus, predict its test split with the type-centric
//! ranker and list the gold types missed most often.

use answer_type::dataset::{load_dataset, Source, Split};
use answer_type::eval::{error_analysis, miss_table_tsv};
use answer_type::pipeline::{cmd_predict, cmd_train, DatasetRef, PipelineConfig, PredictOptions, Stage2Method};
use answer_type::synthetic::{generate, SyntheticConfig};

fn main() -> answer_type::Result<()> {
    let dir = std::env::temp_dir().join("answer-type-error-analysis");
    let files = generate(&SyntheticConfig::default())?.write_to(&dir)?;
    let config = PipelineConfig {
        train: vec![DatasetRef {
            source: Source::Dbpedia,
            path: files.train.clone(),
        }],
        hierarchy: Some(files.hierarchy.clone()),
        entities: Some(files.entities.clone()),
        stage2: Stage2Method::Tc,
        ..PipelineConfig::default()
    };
    let bundle = dir.join("bundle-tc");
    cmd_train(&config, &bundle)?;
    let run = cmd_predict(&bundle, &files.test, &dir.join("run-tc.json"), &PredictOptions::default())?;
    let gold = load_dataset(&files.test, Source::Dbpedia, Split::Test)?;

    print!("{}", miss_table_tsv(&error_analysis(&run, &gold, 10)));
    Ok(())
}
