use std::collections::BTreeMap;

use sqlgrade_core::canon::{build_flat_tree, canonicalize_full, canonicalize_syntactic};
use sqlgrade_core::distance::{total_marks, ComponentWeights};
use sqlgrade_core::edit::{enumerate_edits, EditKind};
use sqlgrade_core::flat::FlatTree;
use sqlgrade_core::rational::Rational;
use sqlgrade_core::schema::Schema;
use sqlgrade_core::search::*;
use sqlgrade_core::sql::{parse, resolve};

fn schema(name: &str) -> Schema {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    Schema::load(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tree(sql: &str, s: &Schema) -> FlatTree {
    build_flat_tree(&resolve(&parse(sql).unwrap(), s).unwrap(), s).unwrap()
}

fn syntactic(sql: &str, s: &Schema) -> FlatTree {
    canonicalize_syntactic(&tree(sql, s), s).unwrap().0
}

fn full(sql: &str, s: &Schema) -> FlatTree {
    canonicalize_full(&tree(sql, s), s).unwrap().0
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

const SMALL_SQ: &str = "SELECT * FROM r INNER JOIN s ON (r.A=s.B) WHERE s.A>10";
const SMALL_CQ: &str = "SELECT * FROM r INNER JOIN s ON (r.A=s.A) WHERE r.A>10";

const SEMESTER_SQ: &str = "SELECT DISTINCT id, name FROM student INNER JOIN takes USING(id)";
const SEMESTER_CQ: &str =
    "SELECT DISTINCT id, name FROM student INNER JOIN takes USING(id) WHERE takes.semester='Spring'";

fn both(sq: &FlatTree, cq: &FlatTree, db: &Schema, w: &ComponentWeights) -> [SearchResult; 2] {
    [
        exhaustive_search(sq, cq, db, w, Budget::EXHAUSTIVE).unwrap(),
        greedy_search(sq, cq, db, w, Budget::GREEDY).unwrap(),
    ]
}

#[test]
fn identical_queries_match_immediately() {
    let toy = schema("toy.toml");
    let w = ComponentWeights::default();
    for r in both(&syntactic(SMALL_CQ, &toy), &full(SMALL_CQ, &toy), &toy, &w) {
        assert_eq!(r.outcome, Outcome::Matched);
        assert_eq!(r.marks_fraction, int(1));
        assert!(r.edit_seq.is_empty());
        assert_eq!(r.explored_states, 1);
    }
}

#[test]
fn small_pair_is_one_edit_away() {
    let toy = schema("toy.toml");
    let w = ComponentWeights::default();
    let cq = full(SMALL_CQ, &toy);
    let t = total_marks(&cq, &w).unwrap();
    for r in both(&syntactic(SMALL_SQ, &toy), &cq, &toy, &w) {
        assert_eq!(r.outcome, Outcome::Matched);
        assert_eq!(r.edit_seq.descriptions(), ["replace join condition r.a = s.b with r.a = s.a"]);
        assert_eq!(r.marks_fraction, (t - int(1)) / t);
    }
}

#[test]
fn missing_selection_needs_one_insert() {
    let uni = schema("university.toml");
    let w = ComponentWeights::default();
    let cq = full(SEMESTER_CQ, &uni);
    let r = greedy_search(&syntactic(SEMESTER_SQ, &uni), &cq, &uni, &w, Budget::GREEDY).unwrap();
    assert_eq!(r.outcome, Outcome::Matched);
    assert_eq!(r.edit_seq.len(), 1);
    let e = &r.edit_seq.edits[0];
    assert_eq!(e.kind, EditKind::Insert);
    assert_eq!(e.description, "insert selection condition takes.semester = 'Spring'");
    assert!(r.elapsed.as_secs_f64() < 1.0);
}

#[test]
fn unrelated_query_gets_zero_marks() {
    let toy = schema("toy.toml");
    let w = ComponentWeights::default();
    let cq = full("SELECT r.a FROM r", &toy);
    let sq = syntactic("SELECT s.b, s.a FROM s WHERE s.a > 3 AND s.b < 2", &toy);
    for r in both(&sq, &cq, &toy, &w) {
        assert_eq!(r.outcome, Outcome::ZeroMarks, "{:?}", r.edit_seq.descriptions());
        assert_eq!(r.marks_fraction, int(0));
        assert!(r.edit_seq.is_empty());
    }
}

#[test]
fn scaling_weights_keeps_the_fraction() {
    let toy = schema("toy.toml");
    let w = ComponentWeights::default();
    let w3 = w.scaled(int(3));
    let cq = full(SMALL_CQ, &toy);
    let sq = syntactic(SMALL_SQ, &toy);
    assert_eq!(total_marks(&cq, &w3).unwrap(), total_marks(&cq, &w).unwrap() * int(3));
    let [a, _] = both(&sq, &cq, &toy, &w);
    let [b, _] = both(&sq, &cq, &toy, &w3);
    assert_eq!(a.marks_fraction, b.marks_fraction);
}

#[test]
fn budget_exhaustion_is_reported() {
    let uni = schema("university.toml");
    let w = ComponentWeights::default();
    let cq = full("SELECT DISTINCT s.id, s.name FROM student s, takes t WHERE s.id = t.id AND t.year = 2009", &uni);
    let sq = syntactic("SELECT s.name FROM student s WHERE s.tot_cred > 3 ORDER BY s.name", &uni);
    let tight = Budget {
        time: std::time::Duration::from_secs(10),
        max_states: 3,
    };
    let r = exhaustive_search(&sq, &cq, &uni, &w, tight).unwrap();
    assert_eq!(r.outcome, Outcome::BudgetExceeded);
    assert!(r.marks_fraction >= int(0) && r.marks_fraction <= int(1));
}

/// Pairs of (schema, student, correct) small enough for the depth-bounded oracle.
const PAIRS: &[(&str, &str, &str)] = &[
    ("toy.toml", SMALL_SQ, SMALL_CQ),
    (
        "toy.toml",
        "SELECT r.a FROM r WHERE r.b = 3 ORDER BY r.a",
        "SELECT DISTINCT r.a, r.b FROM r WHERE r.b < 3 ORDER BY r.a",
    ),
    ("toy.toml", "SELECT r.a FROM r LEFT JOIN s ON r.a = s.a", "SELECT r.a FROM r, s WHERE r.a = s.a"),
    ("toy.toml", "SELECT r.a FROM r, s WHERE r.a = s.a", "SELECT r.a FROM r LEFT JOIN s ON r.a = s.a"),
    (
        "toy.toml",
        "SELECT r.a FROM r WHERE EXISTS (SELECT * FROM s WHERE s.a = r.a)",
        "SELECT r.a FROM r WHERE NOT EXISTS (SELECT * FROM s WHERE s.b = r.a)",
    ),
    ("toy.toml", "SELECT r.a, SUM(r.b) FROM r GROUP BY r.a", "SELECT r.a, MAX(r.b) FROM r GROUP BY r.a"),
    (
        "toy.toml",
        "SELECT r.b, r.a FROM r, s WHERE r.a = s.a ORDER BY r.a, r.b",
        "SELECT r.a, r.b FROM r, s WHERE r.a = s.a ORDER BY r.b",
    ),
    ("toy.toml", "SELECT r.a FROM r WHERE r.b > 4", "SELECT r.a FROM r, s WHERE r.b > 4 AND r.a = s.b"),
    ("university.toml", SEMESTER_SQ, SEMESTER_CQ),
    (
        "university.toml",
        "SELECT name FROM instructor WHERE salary > 5000",
        "SELECT name FROM instructor WHERE salary > 5000 AND dept_name = 'Physics'",
    ),
];

/// Minimum cost over every edit sequence of length at most `depth`.
fn oracle(sq: &FlatTree, cq: &FlatTree, db: &Schema, w: &ComponentWeights, depth: usize) -> Option<Rational> {
    let mut layer: BTreeMap<String, (FlatTree, Rational)> = BTreeMap::new();
    layer.insert(sq.serialize().to_string(), (sq.clone(), int(0)));
    let mut best: Option<Rational> = None;
    for level in 0..=depth {
        let mut next: BTreeMap<String, (FlatTree, Rational)> = BTreeMap::new();
        for (t, cost) in layer.values() {
            // States out of marks are discarded, as in the search.
            if *cost < total_marks(cq, w).unwrap() && canonicalize_full(t, db).unwrap().0 == *cq {
                best = Some(best.map_or(*cost, |b| b.min(*cost)));
            }
            if level == depth {
                continue;
            }
            for (e, n) in enumerate_edits(t, cq, w) {
                let n = canonicalize_syntactic(&n, db).unwrap().0;
                let c = *cost + e.cost;
                let k = n.serialize().to_string();
                if next.get(&k).is_none_or(|(_, old)| c < *old) {
                    next.insert(k, (n, c));
                }
            }
        }
        layer = next;
    }
    best
}

#[test]
fn exhaustive_matches_the_bounded_oracle() {
    let w = ComponentWeights::default();
    for (file, s, c) in PAIRS {
        let db = schema(file);
        let sq = syntactic(s, &db);
        let cq = full(c, &db);
        let t = total_marks(&cq, &w).unwrap();
        let r = exhaustive_search(&sq, &cq, &db, &w, Budget::EXHAUSTIVE).unwrap();
        let want = oracle(&sq, &cq, &db, &w, 3).expect(s);
        assert_eq!(r.outcome, Outcome::Matched, "{s}");
        assert_eq!(r.edit_seq.total_cost, want, "{s}: {:?}", r.edit_seq.descriptions());
        assert_eq!(r.marks_fraction, (t - want) / t);
    }
}

#[test]
fn matched_sequences_replay_to_the_correct_query() {
    let w = ComponentWeights::default();
    for (file, s, c) in PAIRS {
        let db = schema(file);
        let sq = syntactic(s, &db);
        let cq = full(c, &db);
        for r in both(&sq, &cq, &db, &w) {
            if r.outcome == Outcome::Matched {
                let end = r.edit_seq.replay(&sq, &db).unwrap();
                assert_eq!(canonicalize_full(&end, &db).unwrap().0, cq, "{s}");
                let sum: Rational = r.edit_seq.edits.iter().map(|e| e.cost).sum();
                assert_eq!(sum, r.edit_seq.total_cost);
            }
        }
    }
}

#[test]
fn greedy_agrees_with_exhaustive_on_small_pairs() {
    let w = ComponentWeights::default();
    for (file, s, c) in PAIRS {
        let db = schema(file);
        let [e, g] = both(&syntactic(s, &db), &full(c, &db), &db, &w);
        assert_eq!(g.outcome, Outcome::Matched, "{s}");
        assert_eq!(g.marks_fraction, e.marks_fraction, "{s}: {:?}", g.edit_seq.descriptions());
    }
}

#[test]
fn popped_marks_never_increase() {
    let w = ComponentWeights::default();
    for (file, s, c) in PAIRS {
        let db = schema(file);
        let mut popped = vec![];
        exhaustive_search_observed(&syntactic(s, &db), &full(c, &db), &db, &w, Budget::EXHAUSTIVE, &mut |m| {
            popped.push(m)
        })
        .unwrap();
        assert!(popped.windows(2).all(|p| p[0] >= p[1]), "{s}: {popped:?}");
    }
}
