//! Train, predict and evaluate every stage-2 back-end on the same data and
//! compare them.
//!
//! ```text
//! cargo run --release --example end_to_end
//! ```

use answer_type::dataset::Source;
use answer_type::eval::EvalMode;
use answer_type::pipeline::{cmd_evaluate, cmd_predict, cmd_train, DatasetRef, PipelineConfig, PredictOptions, Stage2Method};
use answer_type::synthetic::{generate, SyntheticConfig};

fn main() -> answer_type::Result<()> {
    let dir = std::env::temp_dir().join("answer-type-end-to-end");
    let files = generate(&SyntheticConfig {
        questions: 3000,
        ..Default::default()
    })?
    .write_to(&dir)?;

    println!("{:<10}{:>10}{:>10}{:>10}", "method", "accuracy", "NDCG@5", "NDCG@10");
    for stage2 in [Stage2Method::Tc, Stage2Method::Ec, Stage2Method::Xmc] {
        let config = PipelineConfig {
            train: vec![DatasetRef {
                source: Source::Dbpedia,
                path: files.train.clone(),
            }],
            hierarchy: Some(files.hierarchy.clone()),
            entities: Some(files.entities.clone()),
            stage2,
            ..PipelineConfig::default()
        };
        let bundle = dir.join(format!("bundle-{stage2}"));
        cmd_train(&config, &bundle)?;
        let run_path = dir.join(format!("run-{stage2}.json"));
        cmd_predict(&bundle, &files.test, &run_path, &PredictOptions::default())?;
        let r = cmd_evaluate(
            &run_path,
            &files.test,
            EvalMode::Dbpedia,
            Some(&files.hierarchy),
            Some(&dir.join(format!("report-{stage2}"))),
        )?;
        println!(
            "{:<10}{:>10.4}{:>10.4}{:>10.4}",
            r.method,
            r.accuracy,
            r.ndcg_at_5.unwrap_or(0.0),
            r.ndcg_at_10.unwrap_or(0.0)
        );
    }
    println!("\nreports in {}", dir.display());
    Ok(())
}
