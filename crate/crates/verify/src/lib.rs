//! Shared pieces of the acceptance suite: fixture loading, a mutation
//! corpus built from the reference queries, and a brute-force search oracle
//! that shares nothing with the real search except the edit space.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqlgrade_core::canon::{build_flat_tree, canonicalize_full, canonicalize_syntactic};
use sqlgrade_core::corpus::Corpus;
use sqlgrade_core::distance::{node_counts, total_marks, ComponentWeights};
use sqlgrade_core::edit::{enumerate_edits, Edit};
use sqlgrade_core::flat::FlatTree;
use sqlgrade_core::rational::Rational;
use sqlgrade_core::schema::Schema;
use sqlgrade_core::sql::{parse, resolve};

pub fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn schema(name: &str) -> Schema {
    Schema::load(&fixture(name)).unwrap()
}

pub fn corpus() -> Corpus {
    Corpus::load(&fixture("queries.toml")).unwrap()
}

pub fn tree(sql: &str, s: &Schema) -> FlatTree {
    build_flat_tree(&resolve(&parse(sql).unwrap(), s).unwrap(), s).unwrap()
}

pub fn syntactic(sql: &str, s: &Schema) -> FlatTree {
    canonicalize_syntactic(&tree(sql, s), s).unwrap().0
}

pub fn full(sql: &str, s: &Schema) -> FlatTree {
    canonicalize_full(&tree(sql, s), s).unwrap().0
}

/// Billed node count.
pub fn size(t: &FlatTree) -> u32 {
    node_counts(t).values().sum()
}

pub struct Mutant {
    /// Corpus id of the query the mutant was made from.
    pub source: String,
    pub sq: FlatTree,
    pub cq: FlatTree,
    pub injected: Vec<Edit>,
    pub injected_cost: Rational,
}

/// Guided successors of `t` towards `target`, in syntactic canonical form.
fn successors(t: &FlatTree, target: &FlatTree, s: &Schema, w: &ComponentWeights) -> Vec<(Edit, FlatTree)> {
    enumerate_edits(t, target, w)
        .into_iter()
        .filter_map(|(e, n)| canonicalize_syntactic(&n, s).ok().map(|(n, _)| (e, n)))
        .collect()
}

/// An injected edit counts only if one guided edit towards `cq` takes its
/// result straight back at no more than its own cost. Edits that
/// canonicalization folds into something else (an equality absorbed into a
/// class, an ON condition moved to WHERE) are not independent faults.
fn reversible(before: &FlatTree, after: &FlatTree, e: &Edit, cq: &FlatTree, s: &Schema, w: &ComponentWeights) -> bool {
    successors(after, cq, s, w)
        .into_iter()
        .any(|(back, t)| back.cost <= e.cost && &t == before)
}

/// Mutants of every corpus query whose canonical form has at most
/// `max_size` billed nodes: up to `per_query` each, with 1, 2 and 3
/// injected edits in turn. Each edit is guided towards another corpus
/// query, so faults look like parts of other answers.
pub fn mutants(s: &Schema, max_size: u32, per_query: usize, seed: u64) -> Vec<Mutant> {
    let w = ComponentWeights::default();
    let corpus = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let donors: Vec<FlatTree> = corpus.queries.iter().map(|q| full(&q.sql, s)).collect();
    let mut out = Vec::new();
    for (qi, q) in corpus.queries.iter().enumerate() {
        let cq = &donors[qi];
        if size(cq) > max_size {
            continue;
        }
        let start = syntactic(&q.sql, s);
        let mut order: Vec<usize> = (0..donors.len()).filter(|&d| d != qi).collect();
        order.shuffle(&mut rng);
        let mut made = 0;
        for (attempt, d) in order.into_iter().enumerate() {
            if made == per_query {
                break;
            }
            let k = 1 + attempt % 3;
            let mut t = start.clone();
            let mut seen = vec![cq.clone()];
            let mut injected: Vec<Edit> = Vec::new();
            for _ in 0..k {
                let options: Vec<(Edit, FlatTree, FlatTree)> = successors(&t, &donors[d], s, &w)
                    .into_iter()
                    .filter_map(|(e, n)| {
                        let f = canonicalize_full(&n, s).ok()?.0;
                        (!seen.contains(&f) && reversible(&t, &n, &e, cq, s, &w)).then_some((e, n, f))
                    })
                    .collect();
                let Some((e, n, f)) = options.choose(&mut rng) else {
                    break;
                };
                injected.push(e.clone());
                seen.push(f.clone());
                t = n.clone();
            }
            if injected.len() != k {
                continue;
            }
            out.push(Mutant {
                source: q.id.clone(),
                sq: t,
                cq: cq.clone(),
                injected_cost: injected.iter().map(|e| e.cost).sum(),
                injected,
            });
            made += 1;
        }
    }
    out
}

/// Cheapest cost of reaching `cq` from `sq` in the guided edit space, by
/// label-correcting breadth-first relaxation: every state whose cost drops
/// is expanded again, until nothing changes. Paths costing more than
/// `bound`, or leaving no marks, are cut. `None` when no goal is reachable
/// under those limits.
pub fn brute_force_cost(sq: &FlatTree, cq: &FlatTree, s: &Schema, w: &ComponentWeights, bound: Rational) -> Option<Rational> {
    let total = total_marks(cq, w).unwrap();
    let mut cost: HashMap<String, Rational> = HashMap::from([(sq.serialize().to_string(), Rational::from_integer(0))]);
    let mut layer = vec![(sq.clone(), Rational::from_integer(0))];
    let mut best: Option<Rational> = None;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for (t, c) in layer {
            if cost[t.serialize()] < c {
                continue;
            }
            if canonicalize_full(&t, s).is_ok_and(|(f, _)| &f == cq) {
                best = Some(best.map_or(c, |b| b.min(c)));
                continue;
            }
            for (e, n) in successors(&t, cq, s, w) {
                let nc = c + e.cost;
                if nc > bound || nc >= total {
                    continue;
                }
                let key = n.serialize().to_string();
                if cost.get(&key).is_none_or(|old| nc < *old) {
                    cost.insert(key, nc);
                    next.push((n, nc));
                }
            }
        }
        layer = next;
    }
    best
}
