//! List the guided edits from a student query towards a correct query.
//!
//! `cargo run --example edits [toy] STUDENT_SQL CORRECT_SQL`

use sqlgrade_core::canon::*;
use sqlgrade_core::distance::ComponentWeights;
use sqlgrade_core::edit::enumerate_edits;
use sqlgrade_core::schema::Schema;
use sqlgrade_core::sql::{parse, resolve};

fn main() {
    let dir = format!("{}/../../fixtures", env!("CARGO_MANIFEST_DIR"));
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let file = if args.first().is_some_and(|a| a == "toy") {
        args.remove(0);
        "toy.toml"
    } else {
        "university.toml"
    };
    let schema = Schema::load(&std::fs::read_to_string(format!("{dir}/{file}")).unwrap()).unwrap();
    let tree = |sql: &str| build_flat_tree(&resolve(&parse(sql).unwrap(), &schema).unwrap(), &schema).unwrap();
    let sq = canonicalize_syntactic(&tree(&args[0]), &schema).unwrap().0;
    let cq = canonicalize_full(&tree(&args[1]), &schema).unwrap().0;
    println!("sq {}\ncq {}", sq.serialize(), cq.serialize());
    for (e, t) in enumerate_edits(&sq, &cq, &ComponentWeights::default()) {
        let full = canonicalize_full(&t, &schema).unwrap().0;
        let hit = if full == cq { "  <== match" } else { "" };
        println!("{:>5} {:?} {}{hit}", e.cost.to_string(), e.kind, e.description);
    }
}
