//! Print canonical forms.
//!
//! `cargo run --example dump [toy] [ID | SQL]` prints every fixture query, one
//! corpus query with its rewrite trace, or the canonical form of ad-hoc SQL.

use sqlgrade_core::canon::*;
use sqlgrade_core::corpus::Corpus;
use sqlgrade_core::schema::Schema;
use sqlgrade_core::sql::{parse, resolve};

fn main() {
    let dir = format!("{}/../../fixtures", env!("CARGO_MANIFEST_DIR"));
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let schema_file = if args.first().is_some_and(|a| a == "toy") {
        args.remove(0);
        "toy.toml"
    } else {
        "university.toml"
    };
    let schema = Schema::load(&std::fs::read_to_string(format!("{dir}/{schema_file}")).unwrap()).unwrap();
    let corpus = Corpus::load(&std::fs::read_to_string(format!("{dir}/queries.toml")).unwrap()).unwrap();
    let filter = args.first().cloned();
    let queries: Vec<(String, String)> = match &filter {
        Some(f) if corpus.get(f).is_none() => vec![("sql".into(), f.clone())],
        _ => corpus.queries.iter().map(|q| (q.id.clone(), q.sql.clone())).collect(),
    };
    for (id, sql) in &queries {
        if filter.as_ref().is_some_and(|f| f != id && id != "sql") {
            continue;
        }
        let rq = match parse(sql).and_then(|a| resolve(&a, &schema)) {
            Ok(rq) => rq,
            Err(e) => {
                println!("{id} ERROR {e}");
                continue;
            }
        };
        let t = build_flat_tree(&rq, &schema).unwrap();
        match canonicalize_full(&t, &schema) {
            Ok((c, tr)) => {
                println!("{id} size={} steps={}\n  {}", c.root().size(), tr.steps.len(), c.serialize());
                if filter.is_some() {
                    println!("{tr}");
                }
            }
            Err(e) => println!("{id} ERROR {e}"),
        }
    }
}
