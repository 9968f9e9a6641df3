use std::collections::BTreeSet;

use sqlgrade_core::canon::{build_flat_tree, canonicalize_full, canonicalize_syntactic, equivalence_classes};
use sqlgrade_core::distance::ComponentWeights;
use sqlgrade_core::edit::*;
use sqlgrade_core::flat::{Component, FlatTree};
use sqlgrade_core::rational::Rational;
use sqlgrade_core::schema::Schema;
use sqlgrade_core::sql::{parse, resolve, ResolvedQuery};

fn schema(name: &str) -> Schema {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    Schema::load(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn resolved(sql: &str, s: &Schema) -> ResolvedQuery {
    resolve(&parse(sql).unwrap(), s).unwrap()
}

fn syntactic(sql: &str, s: &Schema) -> FlatTree {
    canonicalize_syntactic(&build_flat_tree(&resolved(sql, s), s).unwrap(), s).unwrap().0
}

fn full(sql: &str, s: &Schema) -> FlatTree {
    canonicalize_full(&build_flat_tree(&resolved(sql, s), s).unwrap(), s).unwrap().0
}

fn edits(sq: &FlatTree, cq: &FlatTree) -> Vec<(Edit, FlatTree)> {
    enumerate_edits(sq, cq, &ComponentWeights::default())
}

fn find<'a>(es: &'a [(Edit, FlatTree)], kind: EditKind, desc: &str) -> Option<&'a (Edit, FlatTree)> {
    es.iter().find(|(e, _)| e.kind == kind && e.description == desc)
}

fn listing(es: &[(Edit, FlatTree)]) -> String {
    es.iter().map(|(e, _)| format!("{:?} {e}\n", e.kind)).collect()
}

const SMALL_SQ: &str = "SELECT * FROM r INNER JOIN s ON (r.A=s.B) WHERE s.A>10";
const SMALL_CQ: &str = "SELECT * FROM r INNER JOIN s ON (r.A=s.A) WHERE r.A>10";

const SEMESTER_SQ: &str = "SELECT DISTINCT id, name FROM student INNER JOIN takes USING(id)";
const SEMESTER_CQ: &str =
    "SELECT DISTINCT id, name FROM student INNER JOIN takes USING(id) WHERE takes.semester='Spring'";

#[test]
fn small_pair_offers_both_replacements() {
    let toy = schema("toy.toml");
    let es = edits(&syntactic(SMALL_SQ, &toy), &full(SMALL_CQ, &toy));
    let (join, _) = find(&es, EditKind::Replace, "replace join condition r.a = s.b with r.a = s.a")
        .unwrap_or_else(|| panic!("{}", listing(&es)));
    assert_eq!(join.component, Component::JoinCondition);
    assert_eq!(join.cost, Rational::from_integer(1));
    assert!(
        find(&es, EditKind::Replace, "replace selection condition s.a > 10 with r.a > 10").is_some(),
        "{}",
        listing(&es)
    );
}

#[test]
fn join_condition_replacement_merges_the_classes() {
    let toy = schema("toy.toml");
    let es = edits(&syntactic(SMALL_SQ, &toy), &full(SMALL_CQ, &toy));
    let (_, t) = find(&es, EditKind::Replace, "replace join condition r.a = s.b with r.a = s.a").unwrap();
    let classes = equivalence_classes(t);
    let labels: Vec<Vec<String>> =
        classes.iter().map(|c| c.iter().map(sqlgrade_core::flat::expr_key).collect()).collect();
    assert!(labels.contains(&vec!["r#1.a".to_string(), "s#1.a".to_string()]), "{labels:?}");
    // With the join fixed, canonicalization proves equivalence.
    assert_eq!(canonicalize_full(t, &toy).unwrap().0, full(SMALL_CQ, &toy));
}

#[test]
fn missing_selection_is_a_single_insert() {
    let uni = schema("university.toml");
    let cq = full(SEMESTER_CQ, &uni);
    let es = edits(&syntactic(SEMESTER_SQ, &uni), &cq);
    let (e, t) = find(&es, EditKind::Insert, "insert selection condition takes.semester = 'Spring'")
        .unwrap_or_else(|| panic!("{}", listing(&es)));
    assert_eq!(e.component, Component::SelectionCondition);
    assert_eq!(canonicalize_full(t, &uni).unwrap().0, cq);
}

#[test]
fn relation_delete_waits_for_its_conditions() {
    let toy = schema("toy.toml");
    let cq = full("SELECT s.b FROM s", &toy);
    let sq = syntactic("SELECT s.b FROM r, s WHERE r.a > 5", &toy);
    let es = edits(&sq, &cq);
    assert!(find(&es, EditKind::Delete, "delete relation r").is_none(), "{}", listing(&es));
    let (_, t) = find(&es, EditKind::Delete, "delete selection condition r.a > 5")
        .unwrap_or_else(|| panic!("{}", listing(&es)));
    let next = edits(t, &cq);
    let (_, done) = find(&next, EditKind::Delete, "delete relation r").unwrap_or_else(|| panic!("{}", listing(&next)));
    assert_eq!(done, &cq);
}

#[test]
fn consistency_rejects_a_dangling_condition() {
    let toy = schema("toy.toml");
    let cq = full("SELECT s.b FROM s", &toy);
    let sq = syntactic("SELECT s.b FROM r, s WHERE r.a > 5", &toy);
    let (del, _) = edits(&sq, &cq)
        .into_iter()
        .find(|(e, _)| e.description == "delete selection condition r.a > 5")
        .unwrap();
    let after = apply_edit(&sq, &del).unwrap();
    // The same deletion no longer fits the edited tree.
    assert!(check_consistency(&sq, &del));
    assert!(!check_consistency(&after, &del) || apply_edit(&after, &del).unwrap() != after);
}

#[test]
fn insert_then_delete_round_trips() {
    let uni = schema("university.toml");
    let sq = syntactic(SEMESTER_SQ, &uni);
    let cq = full(SEMESTER_CQ, &uni);
    let (_, t) = edits(&sq, &cq)
        .into_iter()
        .find(|(e, _)| e.kind == EditKind::Insert)
        .unwrap();
    let back = edits(&t, &sq);
    let (_, restored) = back
        .iter()
        .find(|(e, _)| e.description == "delete selection condition takes.semester = 'Spring'")
        .unwrap_or_else(|| panic!("{}", listing(&back)));
    assert_eq!(restored.serialize(), sq.serialize());
}

const PAIRS: &[(&str, &str, &str)] = &[
    ("toy.toml", SMALL_SQ, SMALL_CQ),
    ("toy.toml", "SELECT r.a FROM r WHERE r.b = 3 ORDER BY r.a", "SELECT DISTINCT r.b, r.a FROM r ORDER BY r.b, r.a"),
    ("toy.toml", "SELECT r.a FROM r LEFT JOIN s ON r.a = s.a", "SELECT r.a FROM r, s WHERE r.a = s.a AND s.b > 2"),
    ("toy.toml", "SELECT r.a FROM r, s WHERE r.a = s.a", "SELECT r.a FROM r LEFT JOIN s ON r.a = s.a"),
    (
        "toy.toml",
        "SELECT r.a FROM r WHERE EXISTS (SELECT * FROM s WHERE s.a = r.a)",
        "SELECT r.a FROM r WHERE NOT EXISTS (SELECT * FROM s WHERE s.b = r.a)",
    ),
    ("toy.toml", "SELECT r.a, SUM(r.b) FROM r GROUP BY r.a", "SELECT r.a, MAX(r.b) FROM r GROUP BY r.a HAVING COUNT(*) > 1"),
    ("toy.toml", "SELECT r.a FROM r UNION SELECT s.a FROM s", "SELECT r.a FROM r UNION ALL SELECT s.b FROM s"),
    (
        "university.toml",
        "SELECT name FROM student s LEFT JOIN takes t ON s.id=t.id WHERE t.grade='F' ORDER BY name, s.id",
        "SELECT DISTINCT s.id, name FROM student s JOIN takes t ON s.id = t.id and t.semester='Fall' ORDER BY s.id, name",
    ),
    (
        "university.toml",
        "SELECT id FROM takes WHERE course_id IN (SELECT course_id FROM course WHERE credits > 3)",
        "SELECT id FROM takes WHERE course_id NOT IN (SELECT course_id FROM course WHERE dept_name = 'Biology')",
    ),
];

#[test]
fn every_emitted_edit_is_consistent_and_costed() {
    let w = ComponentWeights::default();
    for (file, s, c) in PAIRS {
        let db = schema(file);
        let sq = syntactic(s, &db);
        let cq = full(c, &db);
        let es = enumerate_edits(&sq, &cq, &w);
        assert!(!es.is_empty(), "{s}");
        for (e, t) in &es {
            assert!(check_consistency(&sq, e), "{e}");
            assert_eq!(&apply_edit(&sq, e).unwrap(), t, "{e}");
            assert!(e.cost > Rational::from_integer(0), "{e}");
            // The result canonicalizes without error.
            canonicalize_syntactic(t, &db).unwrap();
        }
    }
}

#[test]
fn payloads_come_from_the_correct_query() {
    for (file, s, c) in PAIRS {
        let db = schema(file);
        let cq = full(c, &db);
        let mut keys = BTreeSet::new();
        cq.root().walk(&mut |n| {
            keys.insert(n.key.clone());
        });
        for (e, _) in edits(&syntactic(s, &db), &cq) {
            if let Some(p) = &e.payload {
                assert!(keys.contains(p), "{e}: {p}");
            }
        }
    }
}

#[test]
fn moves_cost_less_than_delete_plus_insert() {
    let toy = schema("toy.toml");
    let sq = syntactic("SELECT r.a FROM r LEFT JOIN s ON r.a = s.a AND s.b = 2", &toy);
    let cq = full("SELECT r.a FROM r LEFT JOIN s ON r.a = s.a WHERE s.b = 2", &toy);
    let es = edits(&sq, &cq);
    let cost = |k: EditKind| es.iter().find(|(e, _)| e.kind == k && e.description.contains("s.b = 2")).map(|(e, _)| e.cost);
    // Deleting and inserting the same condition cost the same.
    let (mv, ins) = (cost(EditKind::Move).unwrap(), cost(EditKind::Insert).unwrap());
    assert!(mv < ins + ins, "{}", listing(&es));
    let (_, t) = es.iter().find(|(e, _)| e.kind == EditKind::Move && e.description.contains("s.b = 2")).unwrap();
    assert_eq!(canonicalize_full(t, &toy).unwrap().0, cq);
}

#[test]
fn reorder_fixes_order_by() {
    let toy = schema("toy.toml");
    let sq = syntactic("SELECT r.a, r.b FROM r ORDER BY r.a, r.b DESC", &toy);
    let cq = full("SELECT r.a, r.b FROM r ORDER BY r.b DESC, r.a", &toy);
    let es = edits(&sq, &cq);
    let (e, t) = es.iter().find(|(e, _)| e.kind == EditKind::Reorder).unwrap_or_else(|| panic!("{}", listing(&es)));
    assert_eq!(e.cost, Rational::new(1, 2));
    assert_eq!(t, &cq);
}

#[test]
fn join_flips_regroup_from_the_correct_query() {
    let toy = schema("toy.toml");
    let sq = syntactic("SELECT r.a FROM r, s WHERE r.a = s.a", &toy);
    let cq = full("SELECT r.a FROM s LEFT JOIN r ON r.a = s.a", &toy);
    let es = edits(&sq, &cq);
    let (e, t) = es
        .iter()
        .find(|(e, _)| e.kind == EditKind::JoinTypeFlip)
        .unwrap_or_else(|| panic!("{}", listing(&es)));
    assert_eq!(e.component, Component::JoinOperator);
    assert_eq!(t, &cq, "{e}");
}

#[test]
fn exists_flip_is_a_connective_edit() {
    let toy = schema("toy.toml");
    let sq = syntactic("SELECT r.a FROM r WHERE EXISTS (SELECT * FROM s WHERE s.a = r.a)", &toy);
    let cq = full("SELECT r.a FROM r WHERE NOT EXISTS (SELECT * FROM s WHERE s.a = r.a)", &toy);
    let es = edits(&sq, &cq);
    let (e, t) = es
        .iter()
        .find(|(e, _)| e.kind == EditKind::ConnectiveFlip)
        .unwrap_or_else(|| panic!("{}", listing(&es)));
    assert_eq!(e.component, Component::SubqueryConnective);
    assert_eq!(canonicalize_full(t, &toy).unwrap().0, cq);
}

#[test]
fn exists_projection_is_never_edited() {
    let toy = schema("toy.toml");
    let sq = syntactic("SELECT r.a FROM r WHERE EXISTS (SELECT s.b FROM s WHERE s.a = r.a)", &toy);
    let cq = full("SELECT r.a FROM r WHERE EXISTS (SELECT s.a FROM s WHERE s.a = r.b)", &toy);
    for (e, _) in edits(&sq, &cq) {
        assert_ne!(e.component, Component::Projection, "{e}");
    }
}

const WITH_CQ: &str = "WITH v AS (SELECT r.a FROM r WHERE r.b > 6) SELECT x.a FROM v x, v y WHERE x.a = y.a";
const WITH_SQ: &str = "WITH v AS (SELECT r.a FROM r WHERE r.b > 5) SELECT x.a FROM v x, v y WHERE x.a = y.a";

/// Fix the student query one lowest-cost matching step at a time.
fn fix_path(sq: &FlatTree, cq: &FlatTree, db: &Schema) -> EditSequence {
    let mut seq = EditSequence::new();
    let mut t = sq.clone();
    while canonicalize_full(&t, db).unwrap().0 != *cq {
        let (e, next) = edits(&t, cq)
            .into_iter()
            .find(|(_, n)| {
                let a = sqlgrade_core::distance::canonicalized_edit_distance(
                    &canonicalize_full(n, db).unwrap().0,
                    cq,
                    &ComponentWeights::default(),
                );
                let b = sqlgrade_core::distance::canonicalized_edit_distance(
                    &canonicalize_full(&t, db).unwrap().0,
                    cq,
                    &ComponentWeights::default(),
                );
                a.total < b.total
            })
            .expect("progress");
        seq = seq.with(e);
        t = next;
        assert!(seq.len() < 6);
    }
    seq
}

#[test]
fn with_binding_fixes_are_billed_once() {
    let toy = schema("toy.toml");
    let r = resolved(WITH_SQ, &toy);
    let sq = syntactic(WITH_SQ, &toy);
    let cq = full(WITH_CQ, &toy);
    let seq = fix_path(&sq, &cq, &toy);
    assert_eq!(seq.len(), 2, "{:?}", seq.descriptions());
    let adjusted = adjust_with_cost(&seq, &r.with_origin);
    assert_eq!(adjusted.total_cost * Rational::from_integer(2), seq.total_cost);
    assert!(adjusted.edits[1].description.ends_with("(same fix as in the other use of the WITH binding)"));
}

#[test]
fn constant_fixes_are_told_apart_by_their_binding_copy() {
    let toy = schema("toy.toml");
    let sq_sql = "WITH v AS (SELECT r.a FROM r WHERE r.b <> 5) SELECT x.a FROM v x, v y WHERE x.a = y.a";
    let cq_sql = "WITH v AS (SELECT r.a FROM r WHERE r.b <> 6) SELECT x.a FROM v x, v y WHERE x.a = y.a";
    let r = resolved(sq_sql, &toy);
    let seq = fix_path(&syntactic(sq_sql, &toy), &full(cq_sql, &toy), &toy);
    assert_eq!(seq.len(), 2, "{:?}", seq.descriptions());
    assert!(seq.edits.iter().all(|e| e.target.as_deref() == Some("5") && e.context.is_some()));
    assert_eq!(adjust_with_cost(&seq, &r.with_origin).total_cost, Rational::from_integer(1));
}

#[test]
fn different_with_fixes_are_both_billed() {
    let toy = schema("toy.toml");
    let sq_sql = "WITH v AS (SELECT r.a FROM r WHERE r.b > 5) SELECT x.a FROM v x, v y WHERE x.a = y.a";
    let r = resolved(sq_sql, &toy);
    let sq = syntactic(sq_sql, &toy);
    let cq = full("SELECT x.a FROM r x, r y WHERE x.a = y.a AND x.b > 6 AND y.b > 7", &toy);
    let seq = fix_path(&sq, &cq, &toy);
    assert_eq!(adjust_with_cost(&seq, &r.with_origin), seq);
}

#[test]
fn sequences_without_with_are_unchanged() {
    let toy = schema("toy.toml");
    let r = resolved(SMALL_SQ, &toy);
    let sq = syntactic(SMALL_SQ, &toy);
    let cq = full(SMALL_CQ, &toy);
    let seq = fix_path(&sq, &cq, &toy);
    assert_eq!(adjust_with_cost(&seq, &r.with_origin), seq);
    assert_eq!(seq.replay(&sq, &toy).map(|t| canonicalize_full(&t, &toy).unwrap().0).unwrap(), cq);
}
