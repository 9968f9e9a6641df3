//! Rewrites must not change query results. Every rule application is
//! replayed step by step and both sides are run on random databases that
//! satisfy the schema constraints.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqlgrade_core::canon::{apply_rule, build_flat_tree, canonicalize_full, RuleId};
use sqlgrade_core::corpus::Corpus;
use sqlgrade_core::eval::{evaluate, literals, random_database, same_bag, Database, Generator};
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

/// Same relation names as the toy schema, with a key on `r.a` and a
/// mandatory reference from `s.b` to it.
fn keyed() -> Schema {
    Schema::load(
        r#"
[[relation]]
name = "r"
primary_key = ["a"]
attributes = [{ name = "a", type = "int" }, { name = "b", type = "int" }]

[[relation]]
name = "s"
primary_key = ["a"]
attributes = [{ name = "a", type = "int" }, { name = "b", type = "int", nullable = false }]
[[relation.foreign_key]]
attrs = ["b"]
references = "r"
ref_attrs = ["a"]
"#,
    )
    .unwrap()
}

fn flat(sql: &str, schema: &Schema) -> FlatTree {
    let rq = resolve(&parse(sql).unwrap(), schema).unwrap_or_else(|e| panic!("{sql}: {e}"));
    build_flat_tree(&rq, schema).unwrap()
}

fn databases(t: &FlatTree, schema: &Schema, n: usize, seed: u64) -> Vec<Database> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let gen = Generator {
                rows: 1 + i % 4,
                extra: literals(t.query()),
                ..Generator::default()
            };
            random_database(schema, &gen, &mut rng)
        })
        .collect()
}

/// First database on which the two trees disagree, if any.
fn counterexample(a: &FlatTree, b: &FlatTree, schema: &Schema, dbs: &[Database]) -> Option<String> {
    for db in dbs {
        let x = evaluate(a.query(), db, schema);
        let y = evaluate(b.query(), db, schema);
        match (&x, &y) {
            (Ok(x), Ok(y)) if same_bag(x, y) => {}
            _ => return Some(format!("{db:?}\n  before: {x:?}\n  after:  {y:?}")),
        }
    }
    None
}

/// Run the fixpoint by hand so every single rule application is checked.
/// Returns the rules that fired.
fn check_steps(sql: &str, schema: &Schema, n: usize) -> BTreeSet<RuleId> {
    let mut t = flat(sql, schema);
    let dbs = databases(&t, schema, n, sql.len() as u64);
    let mut fired = BTreeSet::new();
    'fix: for _ in 0..500 {
        for rule in RuleId::all() {
            if let Some(next) = apply_rule(rule, &t, schema) {
                if let Some(ce) = counterexample(&t, &next, schema, &dbs) {
                    panic!(
                        "{rule} changed the result of {sql}\n{}\n{}\n{ce}",
                        t.serialize(),
                        next.serialize()
                    );
                }
                fired.insert(rule);
                t = next;
                continue 'fix;
            }
        }
        return fired;
    }
    panic!("no fixpoint for {sql}");
}

const UNIVERSITY_GOLDEN: &[&str] = &[
    "SELECT building FROM classroom WHERE capacity NOT BETWEEN 5 AND 10",
    "SELECT id, name FROM student WHERE id IN (SELECT id FROM takes WHERE grade = 'F')",
    "SELECT building FROM classroom WHERE capacity IN (10, 20)",
    "SELECT id FROM student WHERE id NOT IN (SELECT id FROM takes)",
    "SELECT building FROM classroom c WHERE capacity >= ALL (SELECT capacity FROM classroom)",
    "SELECT building FROM classroom c WHERE capacity > SOME (SELECT capacity FROM classroom)",
    "SELECT name FROM student WHERE id IN (SELECT DISTINCT id FROM takes)",
    "SELECT s.name, t.grade FROM takes t RIGHT OUTER JOIN student s ON s.id = t.id",
    "SELECT name FROM student WHERE id IN (SELECT id FROM takes ORDER BY year)",
    "WITH f AS (SELECT id FROM takes WHERE grade = 'F') SELECT s.name FROM student s, f WHERE s.id = f.id",
    "SELECT DISTINCT id, name FROM student",
    "SELECT id FROM student INTERSECT ALL SELECT id FROM takes",
    "SELECT id FROM takes EXCEPT ALL SELECT id FROM student",
    "SELECT x.building, st.id FROM student st, (SELECT DISTINCT building FROM classroom) x",
    "SELECT student.id, department.dept_name FROM student INNER JOIN department USING (dept_name)",
    "SELECT * FROM department LEFT OUTER JOIN student USING (dept_name) WHERE student.dept_name = 'Biology'",
    "SELECT * FROM student LEFT OUTER JOIN department USING (dept_name)",
    "SELECT id, course_id FROM student LEFT OUTER JOIN (SELECT * FROM takes WHERE takes.year = 2018) t USING (id)",
    "SELECT s.id, t.grade FROM student s LEFT OUTER JOIN takes t ON s.id = t.id WHERE s.tot_cred < 30",
    "SELECT building FROM classroom WHERE capacity > 50",
    "SELECT student.dept_name FROM student INNER JOIN department USING (dept_name) WHERE student.dept_name LIKE 'Bio%'",
    "SELECT id, name FROM student ORDER BY id, name",
    "SELECT id, COUNT(*) FROM student INNER JOIN takes USING (id) GROUP BY id, name",
    "SELECT dept_name, COUNT(*) FROM instructor GROUP BY dept_name HAVING COUNT(*) > 1",
];

const TOY_GOLDEN: &[&str] = &[
    "SELECT * FROM r WHERE NOT (r.a > r.b)",
    "SELECT * FROM r WHERE NOT (r.a = 1 AND r.b IS NULL)",
    "SELECT * FROM r WHERE r.a NOT IN (SELECT s.b FROM s)",
    "SELECT * FROM r WHERE r.a < r.b",
    "SELECT * FROM r INNER JOIN s ON (r.a = s.a) WHERE s.a > 1",
    "SELECT s.b FROM r, s WHERE r.a = s.a AND s.a = 3",
    "SELECT * FROM (r JOIN s ON r.a = s.a) JOIN r AS r2 ON s.b = r2.b",
    "SELECT r.a FROM r, s WHERE r.a = s.a AND s.a = s.b AND r.b = s.b",
    "SELECT * FROM r WHERE r.a = r.a",
    "SELECT r.a FROM r WHERE r.b IN (SELECT MAX(s.b) FROM s WHERE s.a = r.a GROUP BY s.a)",
];

#[test]
fn every_rule_application_preserves_results() {
    let u = university();
    let toy = toy();
    let mut fired = BTreeSet::new();
    for sql in UNIVERSITY_GOLDEN {
        fired.extend(check_steps(sql, &u, 40));
    }
    for sql in TOY_GOLDEN {
        fired.extend(check_steps(sql, &toy, 40));
    }
    // Disambiguation and WITH inlining happen during resolution.
    let expected: BTreeSet<RuleId> = RuleId::all()
        .filter(|r| !matches!(r, RuleId::Disambiguate | RuleId::InlineWith))
        .collect();
    let missing: Vec<_> = expected.difference(&fired).collect();
    assert!(missing.is_empty(), "no golden pair exercises {missing:?}");
}

#[test]
fn corpus_canonical_forms_preserve_results() {
    let u = university();
    let corpus = Corpus::load(&fixture("queries.toml")).unwrap();
    for q in &corpus.queries {
        check_steps(&q.sql, &u, 25);
    }
}

/// The evaluator must be able to tell apart queries that really differ,
/// otherwise the checks above prove nothing.
#[test]
fn evaluator_separates_inequivalent_queries() {
    let u = university();
    let toy = toy();
    let pairs: &[(&str, &str, &Schema)] = &[
        (
            "SELECT id, course_id FROM student LEFT OUTER JOIN (SELECT * FROM takes WHERE takes.year = 2018) t USING (id)",
            "SELECT id, course_id FROM student LEFT OUTER JOIN takes USING (id) WHERE takes.year = 2018",
            &u,
        ),
        (
            "SELECT id FROM takes EXCEPT ALL SELECT id FROM student",
            "SELECT id FROM takes EXCEPT SELECT id FROM student",
            &u,
        ),
        (
            "SELECT DISTINCT id, name FROM student INNER JOIN takes USING (id)",
            "SELECT id, name FROM student",
            &u,
        ),
        (
            "SELECT DISTINCT name FROM student",
            "SELECT name FROM student",
            &u,
        ),
        (
            "SELECT * FROM department LEFT OUTER JOIN student USING (dept_name)",
            "SELECT * FROM department INNER JOIN student USING (dept_name)",
            &u,
        ),
        (
            "SELECT * FROM r WHERE r.a NOT IN (SELECT s.b FROM s)",
            "SELECT * FROM r WHERE NOT EXISTS (SELECT * FROM s WHERE s.b = r.a)",
            &toy,
        ),
    ];
    for (a, b, schema) in pairs {
        let (x, y) = (flat(a, schema), flat(b, schema));
        let dbs = databases(&x, schema, 60, 7);
        assert!(
            counterexample(&x, &y, schema, &dbs).is_some(),
            "no database separates\n{a}\n{b}"
        );
    }
}

fn condition(rels: &'static [&'static str]) -> impl Strategy<Value = String> {
    let col = move || {
        (prop::sample::select(rels), prop::sample::select(&["a", "b"][..]))
            .prop_map(|(r, c)| format!("{r}.{c}"))
    };
    let op = prop::sample::select(&["=", "<>", "<", "<=", ">", ">="][..]);
    let atom = (
        col(),
        op,
        prop_oneof![col(), (1i64..=3).prop_map(|v| v.to_string())],
        0..9u8,
    )
        .prop_map(|(l, op, r, kind)| match kind {
            0 => format!("{l} IS NULL"),
            1 => format!("{l} IS NOT NULL"),
            2 => format!("{l} BETWEEN 1 AND 2"),
            3 => format!("{l} IN (1, 3)"),
            4 => format!("{l} NOT IN (SELECT s2.b FROM s s2 WHERE s2.a = r.a)"),
            5 => format!("EXISTS (SELECT * FROM s s2 WHERE s2.b {op} {l})"),
            6 => format!("{l} {op} ALL (SELECT r2.b FROM r r2)"),
            _ => format!("{l} {op} {r}"),
        });
    atom.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} AND {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} OR {b})")),
            inner.prop_map(|a| format!("NOT ({a})")),
        ]
    })
}

fn toy_query() -> impl Strategy<Value = String> {
    let single = (
        prop::sample::select(&["*", "r.a", "r.a, r.b", "DISTINCT r.b"][..]),
        prop::option::of(condition(&["r"])),
    )
        .prop_map(|(p, c)| (p, "r", c));
    let joined = (
        prop::sample::select(&["*", "r.a", "r.a, r.b", "r.b, s.a", "DISTINCT r.a, s.b"][..]),
        prop::sample::select(
            &[
                "r, s",
                "r JOIN s ON r.a = s.a",
                "r LEFT OUTER JOIN s ON r.a = s.b",
                "r RIGHT OUTER JOIN s ON r.b = s.b",
                "r FULL OUTER JOIN s ON r.a = s.a",
                "r LEFT OUTER JOIN s ON r.a = s.a AND s.b > 1",
            ][..],
        ),
        prop::option::of(condition(&["r", "s"])),
    );
    prop_oneof![single, joined].prop_map(|(p, f, c)| match c {
        Some(c) => format!("SELECT {p} FROM {f} WHERE {c}"),
        None => format!("SELECT {p} FROM {f}"),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_toy_queries_keep_their_results(sql in toy_query()) {
        check_steps(&sql, &toy(), 12);
    }

    #[test]
    fn random_keyed_queries_keep_their_results(sql in toy_query()) {
        check_steps(&sql, &keyed(), 12);
    }

    #[test]
    fn canonical_form_is_a_fixpoint(sql in toy_query()) {
        let s = keyed();
        let (once, _) = canonicalize_full(&flat(&sql, &s), &s).unwrap();
        let (twice, trace) = canonicalize_full(&once, &s).unwrap();
        prop_assert_eq!(once.serialize(), twice.serialize());
        prop_assert!(trace.is_empty());
    }
}
