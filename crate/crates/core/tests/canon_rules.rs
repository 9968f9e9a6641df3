use sqlgrade_core::canon::*;
use sqlgrade_core::flat::FlatTree;
use sqlgrade_core::schema::Schema;
use sqlgrade_core::sql::{parse, resolve};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn university() -> Schema {
    Schema::load(&fixture("university.toml")).unwrap()
}

fn toy() -> Schema {
    Schema::load(&fixture("toy.toml")).unwrap()
}

fn flat(sql: &str, schema: &Schema) -> FlatTree {
    let rq = resolve(&parse(sql).unwrap(), schema).unwrap_or_else(|e| panic!("{sql}: {e}"));
    build_flat_tree(&rq, schema).unwrap()
}

/// Full canonical form, checked against a few shuffled rule priorities.
fn full(sql: &str, schema: &Schema) -> FlatTree {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let t = flat(sql, schema);
    let out = canonicalize_full(&t, schema).unwrap().0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sql.len() as u64);
    for _ in 0..3 {
        let mut rules: Vec<RuleId> = RuleId::all().collect();
        rules.shuffle(&mut rng);
        let other = canonicalize_with(&t, schema, &rules).unwrap().0;
        assert_eq!(out.serialize(), other.serialize(), "{sql} under {rules:?}");
    }
    out
}

fn syntactic(sql: &str, schema: &Schema) -> FlatTree {
    canonicalize_syntactic(&flat(sql, schema), schema).unwrap().0
}

#[track_caller]
fn same(a: &str, b: &str, schema: &Schema) {
    let (x, y) = (full(a, schema), full(b, schema));
    assert_eq!(x.serialize(), y.serialize(), "\n{a}\n{b}");
}

#[track_caller]
fn differ(a: &str, b: &str, schema: &Schema) {
    let (x, y) = (full(a, schema), full(b, schema));
    assert_ne!(x.serialize(), y.serialize(), "\n{a}\n{b}");
}

#[test]
fn between_becomes_two_conjuncts() {
    let s = university();
    let t = syntactic("SELECT building FROM classroom WHERE capacity BETWEEN 5 AND 10", &s);
    assert!(t.serialize().contains("pred{<=(5,classroom#1.capacity),<=(classroom#1.capacity,10)}"));
    same(
        "SELECT building FROM classroom WHERE capacity NOT BETWEEN 5 AND 10",
        "SELECT building FROM classroom WHERE capacity < 5 OR capacity > 10",
        &s,
    );
}

#[test]
fn not_is_pushed_into_comparisons() {
    let s = toy();
    same("SELECT * FROM r WHERE NOT (r.a > r.b)", "SELECT * FROM r WHERE r.a <= r.b", &s);
    same(
        "SELECT * FROM r WHERE NOT (r.a = 1 AND r.b IS NULL)",
        "SELECT * FROM r WHERE r.a <> 1 OR r.b IS NOT NULL",
        &s,
    );
}

#[test]
fn comparison_direction_is_normalized() {
    let s = toy();
    let a = syntactic("SELECT * FROM r WHERE 5 < r.a", &s);
    let b = syntactic("SELECT * FROM r WHERE r.a > 5", &s);
    assert_eq!(a.serialize(), b.serialize());
}

#[test]
fn in_subquery_matches_exists() {
    let s = university();
    same(
        "SELECT id, name FROM student WHERE id IN (SELECT id FROM takes WHERE grade = 'F')",
        "SELECT id, name FROM student s WHERE EXISTS (SELECT * FROM takes t WHERE t.grade = 'F' AND t.id = s.id)",
        &s,
    );
    same(
        "SELECT building FROM classroom WHERE capacity IN (10, 20)",
        "SELECT building FROM classroom WHERE capacity = 10 OR capacity = 20",
        &s,
    );
}

#[test]
fn not_in_over_nullable_column_keeps_null_guard() {
    let s = toy();
    let t = full("SELECT * FROM r WHERE r.a NOT IN (SELECT s.b FROM s)", &s);
    assert!(t.serialize().contains("IS NULL(r#1.a)"), "{}", t.serialize());
    assert!(t.serialize().contains("IS NULL(s#1.b)"), "{}", t.serialize());
    // Over non-nullable keys the guards are unnecessary.
    let u = university();
    same(
        "SELECT id FROM student WHERE id NOT IN (SELECT id FROM takes)",
        "SELECT id FROM student s WHERE NOT EXISTS (SELECT * FROM takes t WHERE t.id = s.id)",
        &u,
    );
}

#[test]
fn all_quantifier_becomes_not_exists() {
    let s = university();
    same(
        "SELECT building FROM classroom c WHERE capacity >= ALL (SELECT capacity FROM classroom)",
        "SELECT building FROM classroom c WHERE NOT EXISTS (SELECT * FROM classroom d \
         WHERE c.capacity < d.capacity OR c.capacity IS NULL OR d.capacity IS NULL)",
        &s,
    );
}

#[test]
fn distinct_in_subquery_is_irrelevant() {
    let s = university();
    same(
        "SELECT name FROM student WHERE id IN (SELECT DISTINCT id FROM takes)",
        "SELECT name FROM student WHERE id IN (SELECT id FROM takes)",
        &s,
    );
}

#[test]
fn right_join_is_mirrored_left_join() {
    let s = university();
    same(
        "SELECT s.name, t.grade FROM takes t RIGHT OUTER JOIN student s ON s.id = t.id",
        "SELECT s.name, t.grade FROM student s LEFT OUTER JOIN takes t ON s.id = t.id",
        &s,
    );
}

#[test]
fn order_by_without_limit_in_subquery_is_dropped() {
    let s = university();
    same(
        "SELECT name FROM student WHERE id IN (SELECT id FROM takes ORDER BY year)",
        "SELECT name FROM student WHERE id IN (SELECT id FROM takes)",
        &s,
    );
    differ(
        "SELECT name FROM student ORDER BY name",
        "SELECT name FROM student",
        &s,
    );
}

#[test]
fn joins_and_equalities_flatten() {
    let s = toy();
    let a = flat("SELECT * FROM (r JOIN s ON r.a = s.a) JOIN r AS r2 ON s.b = r2.b", &s);
    let b = flat("SELECT * FROM r, s, r AS r2 WHERE r2.b = s.b AND r.a = s.a", &s);
    assert_eq!(a.serialize(), b.serialize());
    let t = flat("SELECT r.a FROM r, s WHERE r.a = s.a AND s.a = s.b AND r.b = s.b", &s);
    assert!(t.serialize().contains("={r#1.a,r#1.b,s#1.a,s#1.b}"), "{}", t.serialize());
}

#[test]
fn with_binding_is_inlined() {
    let s = university();
    let t = full(
        "WITH f AS (SELECT id FROM takes WHERE grade = 'F') SELECT s.name FROM student s, f WHERE s.id = f.id",
        &s,
    );
    assert!(!t.serialize().contains("derived"), "{}", t.serialize());
    same(
        "WITH f AS (SELECT id FROM takes WHERE grade = 'F') SELECT s.name FROM student s, f WHERE s.id = f.id",
        "SELECT s.name FROM student s, takes t WHERE s.id = t.id AND t.grade = 'F'",
        &s,
    );
}

#[test]
fn distinct_over_key_is_dropped() {
    let s = university();
    same("SELECT DISTINCT id, name FROM student", "SELECT id, name FROM student", &s);
    differ("SELECT DISTINCT name FROM student", "SELECT name FROM student", &s);
    // takes' key is not in the output, so a student can appear twice.
    differ(
        "SELECT DISTINCT s.id FROM student s, takes t WHERE s.id = t.id",
        "SELECT s.id FROM student s, takes t WHERE s.id = t.id",
        &s,
    );
}

#[test]
fn intersect_all_with_duplicate_free_input_loses_all() {
    let s = university();
    same(
        "SELECT id FROM student INTERSECT ALL SELECT id FROM takes",
        "SELECT id FROM student INTERSECT SELECT id FROM takes",
        &s,
    );
    differ(
        "SELECT id FROM takes EXCEPT ALL SELECT id FROM student",
        "SELECT id FROM takes EXCEPT SELECT id FROM student",
        &s,
    );
}

#[test]
fn distinct_moves_out_of_from_subquery() {
    let s = university();
    same(
        "SELECT x.building, st.id FROM student st, (SELECT DISTINCT building FROM classroom) x",
        "SELECT DISTINCT c.building, st.id FROM student st, classroom c",
        &s,
    );
}

#[test]
fn join_with_referenced_relation_is_eliminated() {
    let s = university();
    same(
        "SELECT student.id, department.dept_name FROM student INNER JOIN department USING (dept_name)",
        "SELECT student.id, student.dept_name FROM student",
        &s,
    );
    // A non-key attribute of department keeps the join.
    differ(
        "SELECT student.id, department.building FROM student INNER JOIN department USING (dept_name)",
        "SELECT student.id FROM student",
        &s,
    );
}

#[test]
fn referencing_side_is_never_eliminated() {
    let s = university();
    // Students without enrolments drop out of the join.
    differ(
        "SELECT DISTINCT id, name FROM student INNER JOIN takes USING (id)",
        "SELECT id, name FROM student",
        &s,
    );
}

#[test]
fn null_rejecting_condition_makes_outer_join_inner() {
    let s = university();
    same(
        "SELECT * FROM department LEFT OUTER JOIN student USING (dept_name) WHERE student.dept_name = 'Biology'",
        "SELECT * FROM department INNER JOIN student USING (dept_name) WHERE student.dept_name = 'Biology'",
        &s,
    );
    differ(
        "SELECT * FROM department d LEFT OUTER JOIN student st ON d.dept_name = st.dept_name WHERE st.tot_cred IS NULL",
        "SELECT * FROM department d INNER JOIN student st ON d.dept_name = st.dept_name WHERE st.tot_cred IS NULL",
        &s,
    );
}

#[test]
fn outer_join_along_foreign_key_is_inner() {
    let s = university();
    same(
        "SELECT * FROM student LEFT OUTER JOIN department USING (dept_name)",
        "SELECT * FROM student INNER JOIN department USING (dept_name)",
        &s,
    );
    differ(
        "SELECT * FROM department LEFT OUTER JOIN student USING (dept_name)",
        "SELECT * FROM department INNER JOIN student USING (dept_name)",
        &s,
    );
}

#[test]
fn filter_position_around_outer_join_matters() {
    let s = university();
    differ(
        "SELECT id, course_id FROM student LEFT OUTER JOIN (SELECT * FROM takes WHERE takes.year = 2018) t USING (id)",
        "SELECT id, course_id FROM student LEFT OUTER JOIN takes USING (id) WHERE takes.year = 2018",
        &s,
    );
    same(
        "SELECT id, course_id FROM student LEFT OUTER JOIN (SELECT * FROM takes WHERE takes.year = 2018) t USING (id)",
        "SELECT s.id, t.course_id FROM student s LEFT OUTER JOIN takes t ON s.id = t.id AND t.year = 2018",
        &s,
    );
}

#[test]
fn preserved_side_filter_is_pushed_down() {
    let s = university();
    same(
        "SELECT s.id, t.grade FROM student s LEFT OUTER JOIN takes t ON s.id = t.id WHERE s.tot_cred < 30",
        "SELECT s.id, t.grade FROM (SELECT * FROM student WHERE tot_cred < 30) s LEFT OUTER JOIN takes t ON s.id = t.id",
        &s,
    );
}

#[test]
fn integer_strict_inequality() {
    let s = university();
    same(
        "SELECT building FROM classroom WHERE capacity > 50",
        "SELECT building FROM classroom WHERE capacity >= 51",
        &s,
    );
    // Numeric columns are not rewritten.
    differ(
        "SELECT name FROM instructor WHERE salary > 50",
        "SELECT name FROM instructor WHERE salary >= 51",
        &s,
    );
    let toy = toy();
    let t = full("SELECT * FROM r WHERE r.a < r.b", &toy);
    assert!(t.serialize().contains("<=(+1(r#1.a),r#1.b)"), "{}", t.serialize());
}

#[test]
fn least_class_member_replaces_the_others() {
    let s = university();
    same(
        "SELECT student.dept_name FROM student INNER JOIN department USING (dept_name) WHERE student.dept_name LIKE 'English%'",
        "SELECT department.dept_name FROM student INNER JOIN department USING (dept_name) WHERE department.dept_name LIKE 'English%'",
        &s,
    );
    let toy = toy();
    same(
        "SELECT * FROM r INNER JOIN s ON (r.a = s.a) WHERE s.a > 10",
        "SELECT * FROM r INNER JOIN s ON (r.a = s.a) WHERE r.a > 10",
        &toy,
    );
    same(
        "SELECT s.b FROM r, s WHERE r.a = s.a AND s.a = 3",
        "SELECT s.b FROM r, s WHERE r.a = 3 AND s.a = 3",
        &toy,
    );
}

#[test]
fn classes_are_scoped_to_conjunctions() {
    let toy = toy();
    let t = full("SELECT * FROM r, s WHERE r.a = s.a OR r.b = s.b", &toy);
    assert!(equivalence_classes(&t).is_empty());
    let t = full("SELECT * FROM r, s WHERE r.a = s.a AND s.a = s.b", &toy);
    assert_eq!(equivalence_classes(&t).len(), 1);
    assert_eq!(equivalence_classes(&t)[0].len(), 3);
}

#[test]
fn order_by_items_determined_earlier_are_dropped() {
    let s = university();
    same(
        "SELECT id, name FROM student ORDER BY id, name",
        "SELECT id, name FROM student ORDER BY id",
        &s,
    );
    differ(
        "SELECT id, name FROM student ORDER BY name, id",
        "SELECT id, name FROM student ORDER BY name",
        &s,
    );
}

#[test]
fn group_by_is_completed_with_determined_attributes() {
    let s = university();
    same(
        "SELECT id, COUNT(*) FROM student INNER JOIN takes USING (id) GROUP BY id, name",
        "SELECT id, COUNT(*) FROM student INNER JOIN takes USING (id) GROUP BY id",
        &s,
    );
    differ(
        "SELECT name, COUNT(*) FROM student GROUP BY name",
        "SELECT name, COUNT(*) FROM student GROUP BY name, id",
        &s,
    );
}

#[test]
fn canonicalization_is_idempotent_on_the_corpus() {
    let s = university();
    let corpus = sqlgrade_core::corpus::Corpus::load(&fixture("queries.toml")).unwrap();
    for q in &corpus.queries {
        let once = full(&q.sql, &s);
        let (twice, trace) = canonicalize_full(&once, &s).unwrap();
        assert_eq!(once.serialize(), twice.serialize(), "{}", q.id);
        assert!(trace.is_empty(), "{}", q.id);
    }
}

#[test]
fn trace_replays_to_the_same_tree() {
    let s = university();
    let t = flat(
        "SELECT DISTINCT s.id, s.name FROM takes t RIGHT OUTER JOIN student s ON s.id = t.id \
         WHERE NOT (t.year <= 2009) AND s.id IN (SELECT id FROM takes WHERE grade BETWEEN 'A' AND 'C')",
        &s,
    );
    let (out, trace) = canonicalize_full(&t, &s).unwrap();
    assert!(trace.steps.len() >= 4, "{trace}");
    assert_eq!(trace.replay(&t, &s).unwrap().serialize(), out.serialize());
    let unchanged = canonicalize_full(&out, &s).unwrap();
    assert!(unchanged.1.is_empty());
}

#[test]
fn rule_order_does_not_change_the_result() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let s = university();
    let corpus = sqlgrade_core::corpus::Corpus::load(&fixture("queries.toml")).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for q in &corpus.queries {
        let t = flat(&q.sql, &s);
        let reference = canonicalize_full(&t, &s).unwrap().0;
        for _ in 0..5 {
            let mut rules: Vec<RuleId> = RuleId::all().collect();
            rules.shuffle(&mut rng);
            let other = canonicalize_with(&t, &s, &rules).unwrap().0;
            assert_eq!(reference.serialize(), other.serialize(), "{} with {rules:?}", q.id);
        }
    }
}

#[test]
fn rule_codes_round_trip() {
    for r in RuleId::all() {
        assert_eq!(r.code().parse::<RuleId>().unwrap(), r);
    }
    assert_eq!(RuleId::all().count(), 21);
}
