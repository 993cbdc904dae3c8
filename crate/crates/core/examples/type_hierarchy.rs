//! Load an ontology and compute lenient gains and NDCG for ranked type lists.

use std::path::Path;

use answer_type::eval::ndcg_at_k;
use answer_type::typehier::{lenient_gain, TypeHierarchy};

fn main() -> answer_type::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/dbpedia_ontology_subset.tsv");
    let hier = TypeHierarchy::load(&path)?;
    println!("{} types, max depth {}", hier.len(), hier.max_depth());

    let gold = ["dbo:Gymnast", "dbo:Athlete", "dbo:Person", "dbo:Agent"];
    for t in ["dbo:Gymnast", "dbo:Athlete", "dbo:Agent", "dbo:SoccerPlayer", "dbo:Place"] {
        println!("gain({t}) vs {{Gymnast}} = {:.4}", lenient_gain(t, &gold[..1], &hier));
    }

    for ranked in [
        vec!["dbo:Gymnast", "dbo:Athlete", "dbo:Person", "dbo:Agent"],
        vec!["dbo:Athlete", "dbo:Person"],
        vec!["dbo:SoccerPlayer", "dbo:Athlete", "dbo:Place"],
    ] {
        let s = ndcg_at_k(&ranked, &gold, &hier, 5);
        println!("NDCG@5 {:.4} (uncapped {:.4})  {ranked:?}", s.value, s.raw);
    }
    Ok(())
}
