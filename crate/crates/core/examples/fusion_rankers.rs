//! Rank types with BM25, type-centric and entity-centric.

use std::path::Path;

use answer_type::fusion::{build_entity_index, build_type_index, load_entities, rank_types_ec, rank_types_tc, Aggregation, Bm25Params};

fn main() -> answer_type::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/entities_toy.tsv");
    let entities = load_entities(&path)?;
    let tc = build_type_index(entities.clone(), Bm25Params::default())?;
    let ec = build_entity_index(entities, Bm25Params::default())?;
    println!(
        "{} type documents, {} entity documents ({} untyped skipped)",
        tc.doc_count(),
        ec.doc_count(),
        ec.skipped_untyped
    );

    for q in [
        "Who are the gymnasts coached by Amanda Reddin?",
        "Which river flows south of the Caucasus mountains?",
    ] {
        println!("\n{q}");
        println!("  type-centric:");
        for (t, s) in rank_types_tc(q, &tc, 5).entries() {
            println!("    {t:<28} {s:.4}");
        }
        println!("  entity-centric (k=3, sum):");
        for (t, s) in rank_types_ec(q, &ec, 3, Aggregation::Sum)?.truncated(5).entries() {
            println!("    {t:<28} {s:.4}");
        }
    }
    Ok(())
}
