//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqlgrade_core::canon::{canonicalize_full, canonicalize_with, RuleId};
use sqlgrade_core::distance::{canonicalized_edit_distance, total_marks, ComponentWeights};
use sqlgrade_core::edit::{adjust_with_cost, EditKind};
use sqlgrade_core::flat::{Component, FlatTree};
use sqlgrade_core::rational::{self, Rational};
use sqlgrade_core::schema::Schema;
use sqlgrade_core::search::{exhaustive_search, greedy_search, Budget, Outcome, SearchResult};
use sqlgrade_core::sql::{parse, resolve};
use sqlgrade_verify::*;

const SMALL_SQ: &str = "SELECT * FROM r INNER JOIN s ON (r.A=s.B) WHERE s.A>10";
const SMALL_CQ: &str = "SELECT * FROM r INNER JOIN s ON (r.A=s.A) WHERE r.A>10";

const SEMESTER_SQ: &str = "SELECT DISTINCT id, name FROM student INNER JOIN takes USING(id)";
const SEMESTER_CQ: &str =
    "SELECT DISTINCT id, name FROM student INNER JOIN takes USING(id) WHERE takes.semester='Spring'";

const INTRO_SQ: &str = "SELECT id, course_id FROM student LEFT OUTER JOIN takes USING (id) WHERE takes.year = 2018";
const INTRO_CQ: &str =
    "SELECT id, course_id FROM student LEFT OUTER JOIN (SELECT * FROM takes WHERE takes.year = 2018) t USING (id)";

const WITH_SQ: &str = "WITH v AS (SELECT r.a FROM r WHERE r.b <> 5) SELECT x.a FROM v x, v y WHERE x.a = y.a";
const WITH_CQ: &str = "WITH v AS (SELECT r.a FROM r WHERE r.b <> 6) SELECT x.a FROM v x, v y WHERE x.a = y.a";

/// One golden pair per rewrite rule: the rule fires on `before`, and both
/// sides end in the same canonical form. Disambiguation and WITH inlining
/// run inside name resolution, and flattening inside flat-tree
/// construction, so those three leave no trace step.
const GOLDEN: &[(RuleId, &str, &str, &str)] = &[
    (
        RuleId::Disambiguate,
        "university.toml",
        "SELECT name FROM student WHERE tot_cred > 30",
        "SELECT student.name FROM student WHERE student.tot_cred > 30",
    ),
    (
        RuleId::InlineWith,
        "university.toml",
        "WITH f AS (SELECT id FROM takes WHERE grade = 'F') SELECT s.name FROM student s, f WHERE s.id = f.id",
        "SELECT s.name FROM student s, takes t WHERE s.id = t.id AND t.grade = 'F'",
    ),
    (
        RuleId::Between,
        "university.toml",
        "SELECT building FROM classroom WHERE capacity BETWEEN 5 AND 10",
        "SELECT building FROM classroom WHERE capacity >= 5 AND capacity <= 10",
    ),
    (
        RuleId::PushNot,
        "toy.toml",
        "SELECT * FROM r WHERE NOT (r.a = 1 AND r.b IS NULL)",
        "SELECT * FROM r WHERE r.a <> 1 OR r.b IS NOT NULL",
    ),
    (
        RuleId::Direction,
        "toy.toml",
        "SELECT * FROM r WHERE r.a > 10",
        "SELECT * FROM r WHERE 10 < r.a",
    ),
    (
        RuleId::InToExists,
        "university.toml",
        "SELECT id, name FROM student WHERE id IN (SELECT id FROM takes WHERE grade = 'F')",
        "SELECT id, name FROM student s WHERE EXISTS (SELECT * FROM takes t WHERE t.grade = 'F' AND t.id = s.id)",
    ),
    (
        RuleId::NotInToNotExists,
        "university.toml",
        "SELECT id FROM student WHERE id NOT IN (SELECT id FROM takes)",
        "SELECT id FROM student s WHERE NOT EXISTS (SELECT * FROM takes t WHERE t.id = s.id)",
    ),
    (
        RuleId::SubqueryDistinct,
        "university.toml",
        "SELECT name FROM student WHERE EXISTS (SELECT DISTINCT id FROM takes WHERE takes.id = student.id)",
        "SELECT name FROM student WHERE EXISTS (SELECT id FROM takes WHERE takes.id = student.id)",
    ),
    (
        RuleId::RightToLeft,
        "university.toml",
        "SELECT s.name, t.grade FROM takes t RIGHT OUTER JOIN student s ON s.id = t.id",
        "SELECT s.name, t.grade FROM student s LEFT OUTER JOIN takes t ON s.id = t.id",
    ),
    (
        RuleId::SubqueryOrderBy,
        "university.toml",
        "SELECT name FROM student WHERE id IN (SELECT id FROM takes ORDER BY year)",
        "SELECT name FROM student WHERE id IN (SELECT id FROM takes)",
    ),
    (
        RuleId::Flatten,
        "toy.toml",
        "SELECT * FROM (r JOIN s ON r.a = s.a) JOIN r AS r2 ON s.b = r2.b",
        "SELECT * FROM r, s, r AS r2 WHERE r2.b = s.b AND r.a = s.a",
    ),
    (
        RuleId::DistinctRemoval,
        "university.toml",
        "SELECT DISTINCT id, name FROM student",
        "SELECT id, name FROM student",
    ),
    (
        RuleId::DistinctPullUp,
        "university.toml",
        "SELECT x.building, st.id FROM student st, (SELECT DISTINCT building FROM classroom) x",
        "SELECT DISTINCT c.building, st.id FROM student st, classroom c",
    ),
    (
        RuleId::JoinElimination,
        "university.toml",
        "SELECT student.id, department.dept_name FROM student INNER JOIN department USING (dept_name)",
        "SELECT student.id, student.dept_name FROM student",
    ),
    (
        RuleId::NullRejection,
        "university.toml",
        "SELECT * FROM department LEFT OUTER JOIN student USING (dept_name) WHERE student.dept_name = 'Biology'",
        "SELECT * FROM department INNER JOIN student USING (dept_name) WHERE student.dept_name = 'Biology'",
    ),
    (
        RuleId::ForeignKeyOuterJoin,
        "university.toml",
        "SELECT * FROM student LEFT OUTER JOIN department USING (dept_name)",
        "SELECT * FROM student INNER JOIN department USING (dept_name)",
    ),
    (
        RuleId::PushDown,
        "university.toml",
        "SELECT s.id, t.grade FROM student s LEFT OUTER JOIN takes t ON s.id = t.id WHERE s.tot_cred < 30",
        "SELECT s.id, t.grade FROM (SELECT * FROM student WHERE tot_cred < 30) s LEFT OUTER JOIN takes t ON s.id = t.id",
    ),
    (
        RuleId::IntegerLessThan,
        "university.toml",
        "SELECT building FROM classroom WHERE capacity > 50",
        "SELECT building FROM classroom WHERE capacity >= 51",
    ),
    (
        RuleId::ClassRepresentative,
        "toy.toml",
        "SELECT * FROM r INNER JOIN s ON (r.a = s.a) WHERE s.a > 10",
        "SELECT * FROM r INNER JOIN s ON (r.a = s.a) WHERE r.a > 10",
    ),
    (
        RuleId::OrderByPruning,
        "university.toml",
        "SELECT id, name FROM student ORDER BY id, name",
        "SELECT id, name FROM student ORDER BY id",
    ),
    (
        RuleId::GroupByCompletion,
        "university.toml",
        "SELECT id, COUNT(*) FROM student INNER JOIN takes USING (id) GROUP BY id",
        "SELECT id, COUNT(*) FROM student INNER JOIN takes USING (id) GROUP BY id, name",
    ),
];

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Every search run by the suite, for the soundness criterion.
struct Run {
    schema: Schema,
    sq: FlatTree,
    cq: FlatTree,
    result: SearchResult,
}

struct Suite {
    w: ComponentWeights,
    toy: Schema,
    uni: Schema,
    mutants: Vec<Mutant>,
    /// Exhaustive and greedy result per mutant.
    mutant_runs: Vec<(SearchResult, SearchResult)>,
    runs: Vec<Run>,
}

impl Suite {
    fn record(&mut self, schema: &Schema, sq: &FlatTree, cq: &FlatTree, result: &SearchResult) {
        self.runs.push(Run {
            schema: schema.clone(),
            sq: sq.clone(),
            cq: cq.clone(),
            result: result.clone(),
        });
    }
}

fn under_a_second(d: Duration) -> bool {
    d < Duration::from_secs(1)
}

fn small_edit_regression(s: &mut Suite) -> Check {
    let toy = s.toy.clone();
    let start = Instant::now();
    let sq = syntactic(SMALL_SQ, &toy);
    let cq = full(SMALL_CQ, &toy);
    let t = total_marks(&cq, &s.w).unwrap();
    let results = [
        exhaustive_search(&sq, &cq, &toy, &s.w, Budget::EXHAUSTIVE).unwrap(),
        greedy_search(&sq, &cq, &toy, &s.w, Budget::GREEDY).unwrap(),
    ];
    for r in &results {
        s.record(&toy, &sq, &cq, r);
        ensure!(r.outcome == Outcome::Matched, "outcome {:?}", r.outcome);
        ensure!(r.edit_seq.len() == 1, "edits {:?}", r.edit_seq.descriptions());
        let e = &r.edit_seq.edits[0];
        ensure!(
            e.kind == EditKind::Replace && e.component == Component::JoinCondition,
            "edit {:?} on {}",
            e.kind,
            e.component
        );
        ensure!(r.marks_fraction == (t - e.cost) / t, "fraction {}", rational::to_string(&r.marks_fraction));
    }
    let d = canonicalized_edit_distance(&full(SMALL_SQ, &toy), &cq, &s.w);
    let billed: Vec<Component> = Component::ALL.into_iter().filter(|&c| d.edits(c) > 0).collect();
    let errors: u32 = Component::ALL.iter().map(|&c| d.edits(c)).sum();
    ensure!(errors == 2 && billed.len() == 2, "distance bills {errors} errors in {billed:?}");
    let elapsed = start.elapsed();
    ensure!(under_a_second(elapsed), "took {elapsed:?}");
    Ok(format!(
        "both modes: 1 join-condition replace, fraction {}; distance bills {:?}; {:.0?}",
        rational::to_string(&results[0].marks_fraction),
        billed.iter().map(|c| c.name()).collect::<Vec<_>>(),
        elapsed
    ))
}

fn missing_condition_regression(s: &mut Suite) -> Check {
    let uni = s.uni.clone();
    let start = Instant::now();
    let sq = syntactic(SEMESTER_SQ, &uni);
    let cq = full(SEMESTER_CQ, &uni);
    let r = greedy_search(&sq, &cq, &uni, &s.w, Budget::GREEDY).unwrap();
    s.record(&uni, &sq, &cq, &r);
    ensure!(r.outcome == Outcome::Matched, "outcome {:?}", r.outcome);
    ensure!(r.edit_seq.len() == 1, "edits {:?}", r.edit_seq.descriptions());
    let e = &r.edit_seq.edits[0];
    ensure!(e.kind == EditKind::Insert, "kind {:?}", e.kind);
    ensure!(
        e.description == "insert selection condition takes.semester = 'Spring'",
        "edit `{}`",
        e.description
    );
    let fixed = r.edit_seq.replay(&sq, &uni).unwrap();
    ensure!(canonicalize_full(&fixed, &uni).unwrap().0 == cq, "not equivalent after the insert");
    let elapsed = start.elapsed();
    ensure!(under_a_second(elapsed), "took {elapsed:?}");
    Ok(format!("greedy: `{}`, then equivalent; {:.0?}", e.description, elapsed))
}

fn outer_join_negative(s: &mut Suite) -> Check {
    let uni = &s.uni;
    let start = Instant::now();
    let (student, trace) = canonicalize_full(&tree(INTRO_SQ, uni), uni).unwrap();
    let correct = full(INTRO_CQ, uni);
    ensure!(student != correct, "the pair canonicalizes to the same tree");
    ensure!(
        trace.steps.iter().any(|st| st.rule == RuleId::NullRejection),
        "{} did not fire on the student query",
        RuleId::NullRejection.code()
    );
    let elapsed = start.elapsed();
    ensure!(under_a_second(elapsed), "took {elapsed:?}");
    Ok(format!("not equivalent; {} fired on the student side; {:.0?}", RuleId::NullRejection.code(), elapsed))
}

fn rule_goldens(s: &mut Suite) -> Check {
    let mut covered = Vec::new();
    for rule in RuleId::all() {
        let pairs: Vec<_> = GOLDEN.iter().filter(|g| g.0 == rule).collect();
        ensure!(!pairs.is_empty(), "no golden pair for {}", rule.code());
        for (_, file, before, after) in pairs {
            let db = if *file == "toy.toml" { &s.toy } else { &s.uni };
            let (a, trace) = canonicalize_full(&tree(before, db), db).unwrap();
            let fired = match rule {
                RuleId::Disambiguate => parse(before).unwrap() != parse(after).unwrap(),
                RuleId::InlineWith => !resolve(&parse(before).unwrap(), db).unwrap().with_origin.is_empty(),
                RuleId::Flatten => {
                    parse(before).unwrap() != parse(after).unwrap()
                        && tree(before, db).serialize() == tree(after, db).serialize()
                }
                _ => trace.steps.iter().any(|st| st.rule == rule),
            };
            ensure!(fired, "{} does not fire on `{before}`", rule.code());
            let b = full(after, db);
            ensure!(a.serialize() == b.serialize(), "{}: `{before}` and `{after}` differ", rule.code());
        }
        covered.push(rule.code());
    }
    Ok(format!("{} rules, {} ... {}", covered.len(), covered[0], covered[covered.len() - 1]))
}

fn build_mutation_corpus(s: &mut Suite) {
    s.mutants = mutants(&s.uni, 20, 16, 2024);
    let uni = s.uni.clone();
    for m in &s.mutants {
        let e = exhaustive_search(&m.sq, &m.cq, &uni, &s.w, Budget::EXHAUSTIVE).unwrap();
        let g = greedy_search(&m.sq, &m.cq, &uni, &s.w, Budget::GREEDY).unwrap();
        s.mutant_runs.push((e, g));
    }
    let runs: Vec<_> = s.mutants.iter().zip(&s.mutant_runs).map(|(m, (e, g))| (m.sq.clone(), m.cq.clone(), e.clone(), g.clone())).collect();
    for (sq, cq, e, g) in runs {
        s.record(&uni, &sq, &cq, &e);
        s.record(&uni, &sq, &cq, &g);
    }
}

fn finished(r: &SearchResult) -> bool {
    matches!(r.outcome, Outcome::Matched | Outcome::ZeroMarks)
}

fn greedy_matches_exhaustive(s: &mut Suite) -> Check {
    let n = s.mutants.len();
    ensure!(n >= 200, "only {n} mutants");
    let both: Vec<&(SearchResult, SearchResult)> = s.mutant_runs.iter().filter(|(e, g)| finished(e) && finished(g)).collect();
    let equal = both.iter().filter(|(e, g)| e.marks_fraction == g.marks_fraction).count();
    let mean = |f: &dyn Fn(&(SearchResult, SearchResult)) -> Duration| {
        s.mutant_runs.iter().map(f).sum::<Duration>().as_secs_f64() / n as f64
    };
    let (te, tg) = (mean(&|r| r.0.elapsed), mean(&|r| r.1.elapsed));
    let summary = format!(
        "{equal}/{} equal fractions over {n} mutants; mean time greedy {:.1} ms, exhaustive {:.1} ms",
        both.len(),
        tg * 1e3,
        te * 1e3
    );
    if equal != both.len() {
        let (worst, m) = s
            .mutant_runs
            .iter()
            .zip(&s.mutants)
            .filter(|((e, g), _)| finished(e) && finished(g) && e.marks_fraction != g.marks_fraction)
            .map(|((e, g), m)| (e.marks_fraction - g.marks_fraction, m))
            .max_by_key(|(d, _)| *d)
            .unwrap();
        return Err(format!(
            "{summary}; largest gap {} on a mutant of {}",
            rational::to_string(&worst),
            m.source
        ));
    }
    ensure!(tg < te, "{summary}: greedy is not faster");
    Ok(summary)
}

fn exhaustive_is_optimal(s: &mut Suite) -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for (m, (e, _)) in s.mutants.iter().zip(&s.mutant_runs) {
        if m.injected.len() > 2 || !finished(e) {
            continue;
        }
        let oracle = brute_force_cost(&m.sq, &m.cq, &s.uni, &s.w, m.injected_cost);
        let found = (e.outcome == Outcome::Matched).then_some(e.edit_seq.total_cost);
        ensure!(
            oracle == found,
            "mutant of {}: oracle {:?}, exhaustive {:?} via {:?}",
            m.source,
            oracle.map(|c| rational::to_string(&c)),
            found.map(|c| rational::to_string(&c)),
            e.edit_seq.descriptions()
        );
        checked += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "{checked} pairs took {elapsed:?}");
    Ok(format!("{checked} pairs within 2 edits agree with the brute-force oracle; {elapsed:.1?}"))
}

fn matched_results_are_sound(s: &mut Suite) -> Check {
    let mut checked = 0;
    for run in &s.runs {
        if run.result.outcome != Outcome::Matched {
            continue;
        }
        let end = run.result.edit_seq.replay(&run.sq, &run.schema).map_err(|e| e.to_string())?;
        let end = canonicalize_full(&end, &run.schema).unwrap().0;
        let d = canonicalized_edit_distance(&end, &run.cq, &s.w);
        ensure!(d.is_zero(), "replay of {:?} leaves distance {}", run.result.edit_seq.descriptions(), d.total);
        checked += 1;
    }
    Ok(format!("{checked} matched results replay to distance 0"))
}

fn canonicalizer_is_stable(s: &mut Suite) -> Check {
    let mut inputs: Vec<FlatTree> = corpus().queries.iter().map(|q| tree(&q.sql, &s.uni)).collect();
    inputs.extend(s.mutants.iter().map(|m| m.sq.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in &inputs {
        let (once, _) = canonicalize_full(t, &s.uni).map_err(|e| format!("{}: {e}", t.serialize()))?;
        let (twice, trace) = canonicalize_full(&once, &s.uni).unwrap();
        ensure!(once == twice && trace.is_empty(), "not idempotent on {}", t.serialize());
        for _ in 0..3 {
            let mut rules: Vec<RuleId> = RuleId::all().collect();
            rules.shuffle(&mut rng);
            let other = canonicalize_with(t, &s.uni, &rules).unwrap().0;
            ensure!(
                other.serialize() == once.serialize(),
                "rule order {:?} changes {}",
                rules.iter().map(|r| r.code()).collect::<Vec<_>>(),
                t.serialize()
            );
        }
    }
    Ok(format!("{} trees: idempotent, within the fixpoint cap, same result under 3 shuffled rule orders", inputs.len()))
}

fn with_fix_billed_once(s: &mut Suite) -> Check {
    let toy = s.toy.clone();
    let rq = resolve(&parse(WITH_SQ).unwrap(), &toy).unwrap();
    let sq = syntactic(WITH_SQ, &toy);
    let cq = full(WITH_CQ, &toy);
    let r = exhaustive_search(&sq, &cq, &toy, &s.w, Budget::EXHAUSTIVE).unwrap();
    s.record(&toy, &sq, &cq, &r);
    ensure!(r.outcome == Outcome::Matched, "outcome {:?}", r.outcome);
    ensure!(r.edit_seq.len() == 2, "expected one fix per expansion, got {:?}", r.edit_seq.descriptions());
    let [a, b] = [&r.edit_seq.edits[0], &r.edit_seq.edits[1]];
    let adjusted = adjust_with_cost(&r.edit_seq, &rq.with_origin);
    ensure!(
        adjusted.total_cost == a.cost && a.cost == b.cost,
        "billed {} for {:?}",
        rational::to_string(&adjusted.total_cost),
        adjusted.descriptions()
    );
    Ok(format!(
        "{} fixes, billed {}: {:?}",
        r.edit_seq.len(),
        rational::to_string(&adjusted.total_cost),
        adjusted.descriptions()
    ))
}

fn injection_bound(s: &mut Suite) -> Check {
    let mut matched = 0;
    for (m, (e, _)) in s.mutants.iter().zip(&s.mutant_runs) {
        let t = total_marks(&m.cq, &s.w).unwrap();
        ensure!(e.outcome != Outcome::BudgetExceeded, "budget exceeded on a mutant of {}", m.source);
        let floor = ((t - m.injected_cost) / t).max(Rational::from_integer(0));
        ensure!(
            e.marks_fraction >= floor,
            "mutant of {}: injected {} ({:?}), recovered {:?} at {:?}",
            m.source,
            rational::to_string(&m.injected_cost),
            m.injected.iter().map(|x| x.description.as_str()).collect::<Vec<_>>(),
            e.outcome,
            e.edit_seq.descriptions()
        );
        if e.outcome == Outcome::Matched {
            ensure!(e.edit_seq.total_cost <= m.injected_cost, "cost above the injected cost on {}", m.source);
            matched += 1;
        }
    }
    Ok(format!(
        "{} mutants, {matched} matched at no more than the injected cost, the rest had no marks to recover",
        s.mutants.len()
    ))
}

fn main() {
    let mut suite = Suite {
        w: ComponentWeights::default(),
        toy: schema("toy.toml"),
        uni: schema("university.toml"),
        mutants: Vec::new(),
        mutant_runs: Vec::new(),
        runs: Vec::new(),
    };
    let criteria: [(&str, fn(&mut Suite) -> Check); 10] = [
        ("small edit, large distance", small_edit_regression),
        ("missing condition needs one insert", missing_condition_regression),
        ("filter position around an outer join", outer_join_negative),
        ("rule golden pairs", rule_goldens),
        ("greedy equals exhaustive", greedy_matches_exhaustive),
        ("exhaustive is optimal", exhaustive_is_optimal),
        ("matched results are sound", matched_results_are_sound),
        ("canonicalizer idempotence and confluence", canonicalizer_is_stable),
        ("WITH fix billed once", with_fix_billed_once),
        ("injection bound", injection_bound),
    ];
    let start = Instant::now();
    build_mutation_corpus(&mut suite);
    println!("mutation corpus: {} mutants searched in {:.1?}", suite.mutants.len(), start.elapsed());
    // Soundness looks at every search the other criteria ran, so it goes last.
    let order = [0, 1, 2, 3, 4, 5, 7, 8, 9, 6];
    let mut lines = vec![String::new(); criteria.len()];
    let mut failed = 0;
    for i in order {
        let (name, check) = criteria[i];
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut suite)))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        lines[i] = match outcome {
            Ok(detail) => format!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                format!("FAIL  {:>2}. {name}: {why}", i + 1)
            }
        };
    }
    for l in &lines {
        println!("{l}");
    }
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}
