//! Train the extreme multi-label type classifier and inspect its label
//! clusters, ensemble weights and predictions.

use answer_type::dataset::RawCategory;
use answer_type::synthetic::{generate, SyntheticConfig};
use answer_type::textproc::Vocabulary;
use answer_type::xmc::{ClusterParams, TrainExample, XmcModel, XmcParams};

fn main() -> answer_type::Result<()> {
    let corpus = generate(&SyntheticConfig {
        questions: 3000,
        ..Default::default()
    })?;
    let (train, test) = corpus.train_test(5)?;
    let resource = |q: &&answer_type::dataset::Question| q.category == Some(RawCategory::Resource) && q.is_usable();

    let texts: Vec<&str> = train.trainable().map(|q| q.text.as_str()).collect();
    let vocab = Vocabulary::fit(&texts)?;
    let examples: Vec<TrainExample> = train
        .questions
        .iter()
        .filter(resource)
        .map(|q| TrainExample {
            id: q.id.clone(),
            x: vocab.vectorize(&q.text),
            labels: q.types.clone(),
        })
        .collect();
    let labels: Vec<String> = corpus.hierarchy().depths().keys().map(|s| s.to_string()).collect();

    let params = XmcParams {
        cluster: ClusterParams {
            max_leaf: 8,
            ..ClusterParams::default()
        },
        ..XmcParams::default()
    };
    let model = XmcModel::fit(&examples, &labels, vocab.len(), &params)?;
    println!(
        "{} labels in {} clusters (overflow: {:?})",
        model.index.label_count(),
        model.index.cluster_count(),
        model.index.overflow
    );
    for (i, c) in model.index.clusters.iter().enumerate() {
        println!("  cluster {i}: {}", c.join(" "));
    }
    println!(
        "ensemble weights {:?} (fitted: {}, {} pairs)",
        model.ranker.weights, model.ranker.fitted, model.ranker.pairs
    );

    for q in test.questions.iter().filter(resource).take(5) {
        let ranked = model.predict(&vocab.vectorize(&q.text), 4)?;
        println!("\n{}\n  gold: {}\n  pred: {}", q.text, q.types.join(" "), ranked.labels().join(" "));
    }
    Ok(())
}
