//! Fit a TF-IDF vocabulary and inspect question vectors.

use answer_type::textproc::{tokenize, Vocabulary};

fn main() -> answer_type::Result<()> {
    let corpus = [
        "Who are the gymnasts coached by Amanda Reddin?",
        "How many superpowers does wonder woman have?",
        "When did Margaret Mead marry Gregory Bateson?",
        "Is Azerbaijan a member of European Go Federation?",
    ];
    let vocab = Vocabulary::fit(&corpus)?;
    println!(
        "{} terms over {} documents, fingerprint {}",
        vocab.len(),
        vocab.n_docs(),
        &vocab.fingerprint()[..12]
    );

    let query = "Which gymnasts did Amanda Reddin coach?";
    println!("tokens: {:?}", tokenize(query));
    let v = vocab.vectorize(query);
    for (id, w) in v.iter() {
        println!("  {:<10} idf {:.3}  weight {:.4}", vocab.term(id).unwrap(), vocab.idf(id), w);
    }
    println!("norm {:.6}", v.norm());
    Ok(())
}
