//! Grading of submissions against one or more correct queries.
//!
//! Assignments are TOML documents with one `[[question]]` table per question:
//!
//! ```toml
//! [[question]]
//! question_id = "q1"
//! prose = "Names of all students."
//! correct_queries = ["SELECT name FROM student"]
//! max_marks = 10
//! mode = "greedy"            # or "exhaustive"
//! weights = { projection = 2 }
//! budget = { time_ms = 5000, max_states = 200000 }
//! feedback = { hints = "all", show_marks = true }
//! ```
//!
//! Submissions are TOML too, one `[[submission]]` table with `student_id`,
//! `question_id` and `sql` each. Reports are JSON.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canon::{build_flat_tree, canonicalize_full, canonicalize_syntactic};
use crate::distance::{canonicalized_edit_distance, total_marks, ComponentWeights, DistanceBreakdown};
use crate::edit::{adjust_with_cost, Edit};
use crate::error::{Error, Result};
use crate::flat::FlatTree;
use crate::rational::{self, Rational};
use crate::schema::Schema;
use crate::search::{search, Budget, Mode, Outcome};
use crate::sql::{parse, resolve};

pub const FORMAT_VERSION: &str = "1";

/// How much of the edit sequence learning-mode feedback reveals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintDepth {
    #[default]
    All,
    First,
    /// Only whether the query is correct.
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackPolicy {
    #[serde(default)]
    pub hints: HintDepth,
    #[serde(default = "yes")]
    pub show_marks: bool,
}

fn yes() -> bool {
    true
}

impl Default for FeedbackPolicy {
    fn default() -> Self {
        FeedbackPolicy {
            hints: HintDepth::All,
            show_marks: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub time_ms: Option<u64>,
    pub max_states: Option<usize>,
}

impl BudgetConfig {
    pub fn resolve(&self, mode: Mode) -> Budget {
        let base = Budget::for_mode(mode);
        Budget {
            time: self.time_ms.map_or(base.time, Duration::from_millis),
            max_states: self.max_states.unwrap_or(base.max_states),
        }
    }
}

fn ten() -> Rational {
    Rational::from_integer(10)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub question_id: String,
    #[serde(default)]
    pub prose: String,
    pub correct_queries: Vec<String>,
    #[serde(default)]
    pub weights: ComponentWeights,
    #[serde(default = "ten", with = "rational::serde_str")]
    pub max_marks: Rational,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub feedback: FeedbackPolicy,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentFile {
    #[serde(default)]
    question: Vec<Assignment>,
}

/// Parse an assignment document.
pub fn load_assignments(text: &str) -> Result<Vec<Assignment>> {
    let f: AssignmentFile = toml::from_str(text).map_err(|e| Error::Assignment(e.to_string()))?;
    if f.question.is_empty() {
        return Err(Error::Assignment("no [[question]] tables".into()));
    }
    Ok(f.question)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Submission {
    pub student_id: String,
    pub question_id: String,
    pub sql: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmissionFile {
    #[serde(default)]
    submission: Vec<Submission>,
}

pub fn load_submissions(text: &str) -> Result<Vec<Submission>> {
    let f: SubmissionFile = toml::from_str(text).map_err(|e| Error::Assignment(e.to_string()))?;
    Ok(f.submission)
}

/// An assignment with its correct queries canonicalized once.
#[derive(Clone, Debug)]
pub struct PreparedAssignment {
    pub assignment: Assignment,
    pub correct: Vec<FlatTree>,
    pub budget: Budget,
}

impl PreparedAssignment {
    pub fn new(a: Assignment, schema: &Schema) -> Result<Self> {
        let bad = |m: String| Error::Assignment(format!("question {}: {m}", a.question_id));
        if a.correct_queries.is_empty() {
            return Err(bad("no correct queries".into()));
        }
        if a.max_marks < Rational::from_integer(0) {
            return Err(bad("max_marks is negative".into()));
        }
        let mut correct = Vec::new();
        for (i, sql) in a.correct_queries.iter().enumerate() {
            let t = prepare(sql, schema, true).map_err(|e| bad(format!("correct query {}: {e}", i + 1)))?;
            total_marks(&t, &a.weights).map_err(|e| bad(format!("correct query {}: {e}", i + 1)))?;
            correct.push(t);
        }
        let budget = a.budget.resolve(a.mode);
        Ok(PreparedAssignment {
            assignment: a,
            correct,
            budget,
        })
    }
}

/// Parse, resolve and canonicalize one query.
fn prepare(sql: &str, schema: &Schema, full: bool) -> Result<FlatTree> {
    let r = resolve(&parse(sql)?, schema)?;
    let t = build_flat_tree(&r, schema)?;
    Ok(if full { canonicalize_full(&t, schema)?.0 } else { canonicalize_syntactic(&t, schema)?.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeOutcome {
    Matched,
    ZeroMarks,
    BudgetExceeded,
    CycleDetected,
    Rejected,
}

impl From<Outcome> for GradeOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Matched => GradeOutcome::Matched,
            Outcome::ZeroMarks => GradeOutcome::ZeroMarks,
            Outcome::BudgetExceeded => GradeOutcome::BudgetExceeded,
            Outcome::CycleDetected => GradeOutcome::CycleDetected,
        }
    }
}

/// Result against one correct query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerQuery {
    /// 1-based position among the correct queries.
    pub index: usize,
    pub outcome: GradeOutcome,
    #[serde(with = "rational::serde_str")]
    pub marks_fraction: Rational,
    #[serde(with = "rational::serde_str")]
    pub edit_cost: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradingEntry {
    pub student_id: String,
    pub question_id: String,
    pub outcome: GradeOutcome,
    #[serde(with = "rational::serde_str")]
    pub marks_fraction: Rational,
    #[serde(with = "rational::serde_str")]
    pub awarded: Rational,
    pub best_correct_query_index: Option<usize>,
    pub edits: Vec<Edit>,
    pub rendered_edits: Vec<String>,
    pub distance_breakdown: Option<DistanceBreakdown>,
    pub per_query: Vec<PerQuery>,
    pub diagnostic: Option<String>,
    /// Line and column of a syntax error, 1-based.
    pub position: Option<(usize, usize)>,
    pub elapsed_ms: u64,
}

impl GradingEntry {
    pub fn equivalent(&self) -> bool {
        self.outcome == GradeOutcome::Matched && self.edits.is_empty()
    }

    /// True when some search against some correct query ran out of budget.
    pub fn budget_exceeded(&self) -> bool {
        self.per_query.iter().any(|p| p.outcome == GradeOutcome::BudgetExceeded)
    }

    fn rejected(student_id: &str, question_id: &str, e: &Error, start: Instant) -> GradingEntry {
        let position = match e {
            Error::Syntax { line, column, .. } => Some((*line, *column)),
            _ => None,
        };
        GradingEntry {
            student_id: student_id.to_string(),
            question_id: question_id.to_string(),
            outcome: GradeOutcome::Rejected,
            marks_fraction: Rational::from_integer(0),
            awarded: Rational::from_integer(0),
            best_correct_query_index: None,
            edits: vec![],
            rendered_edits: vec![],
            distance_breakdown: None,
            per_query: vec![],
            diagnostic: Some(e.to_string()),
            position,
            elapsed_ms: start.elapsed().as_millis() as u64,
        }
    }
}

/// Grade one submission with the assignment's own mode and budget.
pub fn grade_submission(student_id: &str, sql: &str, a: &PreparedAssignment, schema: &Schema) -> GradingEntry {
    grade_with(student_id, sql, a, schema, a.assignment.mode, a.budget)
}

/// Grade one submission with an explicit mode and budget.
pub fn grade_with(
    student_id: &str,
    sql: &str,
    a: &PreparedAssignment,
    schema: &Schema,
    mode: Mode,
    budget: Budget,
) -> GradingEntry {
    let start = Instant::now();
    let qid = &a.assignment.question_id;
    let resolved = match parse(sql).and_then(|ast| resolve(&ast, schema)) {
        Ok(r) => r,
        Err(e) => return GradingEntry::rejected(student_id, qid, &e, start),
    };
    let syn = build_flat_tree(&resolved, schema).and_then(|t| canonicalize_syntactic(&t, schema));
    let sq = match syn {
        Ok((t, _)) => t,
        Err(e) => return GradingEntry::rejected(student_id, qid, &e, start),
    };
    let full = match canonicalize_full(&sq, schema) {
        Ok((t, _)) => t,
        Err(e) => return GradingEntry::rejected(student_id, qid, &e, start),
    };
    let w = &a.assignment.weights;
    let one = Rational::from_integer(1);

    // Equivalent to some correct query: full marks, no search.
    if let Some(i) = a.correct.iter().position(|c| *c == full) {
        return GradingEntry {
            student_id: student_id.to_string(),
            question_id: qid.clone(),
            outcome: GradeOutcome::Matched,
            marks_fraction: one,
            awarded: a.assignment.max_marks,
            best_correct_query_index: Some(i + 1),
            edits: vec![],
            rendered_edits: vec![],
            distance_breakdown: Some(canonicalized_edit_distance(&full, &a.correct[i], w)),
            per_query: vec![PerQuery {
                index: i + 1,
                outcome: GradeOutcome::Matched,
                marks_fraction: one,
                edit_cost: Rational::from_integer(0),
            }],
            diagnostic: None,
            position: None,
            elapsed_ms: start.elapsed().as_millis() as u64,
        };
    }

    let mut per_query = Vec::new();
    let mut best: Option<(usize, Rational, GradeOutcome, Vec<Edit>, Rational)> = None;
    for (i, cq) in a.correct.iter().enumerate() {
        let r = match search(mode, &sq, cq, schema, w, budget) {
            Ok(r) => r,
            Err(e) => return GradingEntry::rejected(student_id, qid, &e, start),
        };
        let seq = adjust_with_cost(&r.edit_seq, &resolved.with_origin);
        let mut fraction = r.marks_fraction;
        if r.outcome == Outcome::Matched {
            let t = total_marks(cq, w).unwrap_or(one);
            let left = t - seq.total_cost;
            fraction = if left > Rational::from_integer(0) { left / t } else { Rational::from_integer(0) };
        }
        let outcome = GradeOutcome::from(r.outcome);
        per_query.push(PerQuery {
            index: i + 1,
            outcome,
            marks_fraction: fraction,
            edit_cost: seq.total_cost,
        });
        let key = |f: Rational, c: Rational, e: &[Edit]| {
            (std::cmp::Reverse(f), c, e.iter().map(|x| x.description.clone()).collect::<Vec<_>>())
        };
        let better = best
            .as_ref()
            .is_none_or(|(_, f, _, e, c)| key(fraction, seq.total_cost, &seq.edits) < key(*f, *c, e));
        if better {
            best = Some((i, fraction, outcome, seq.edits, seq.total_cost));
        }
    }
    let (i, fraction, outcome, edits, _) = best.expect("at least one correct query");
    GradingEntry {
        student_id: student_id.to_string(),
        question_id: qid.clone(),
        outcome,
        marks_fraction: fraction,
        awarded: fraction * a.assignment.max_marks,
        best_correct_query_index: Some(i + 1),
        rendered_edits: edits.iter().map(|e| e.description.clone()).collect(),
        edits,
        distance_breakdown: Some(canonicalized_edit_distance(&full, &a.correct[i], w)),
        per_query,
        diagnostic: None,
        position: None,
        elapsed_ms: start.elapsed().as_millis() as u64,
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BatchStats {
    pub submissions: usize,
    pub rejected: usize,
    pub matched: usize,
    pub budget_exceeded: usize,
    pub total_elapsed_ms: u64,
    pub mean_elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradingReport {
    pub format_version: String,
    pub entries: Vec<GradingEntry>,
    pub stats: BatchStats,
}

impl GradingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Grade every submission, `parallelism` at a time. Entries keep input order.
pub fn grade_batch(
    submissions: &[Submission],
    assignments: &[PreparedAssignment],
    schema: &Schema,
    parallelism: usize,
) -> Result<GradingReport> {
    let start = Instant::now();
    let grade = |s: &Submission| match assignments.iter().find(|a| a.assignment.question_id == s.question_id) {
        Some(a) => grade_submission(&s.student_id, &s.sql, a, schema),
        None => GradingEntry::rejected(
            &s.student_id,
            &s.question_id,
            &Error::Assignment(format!("unknown question `{}`", s.question_id)),
            Instant::now(),
        ),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Assignment(e.to_string()))?;
    let entries: Vec<GradingEntry> = pool.install(|| submissions.par_iter().map(grade).collect());
    let total_elapsed_ms = start.elapsed().as_millis() as u64;
    let stats = BatchStats {
        submissions: entries.len(),
        rejected: entries.iter().filter(|e| e.outcome == GradeOutcome::Rejected).count(),
        matched: entries.iter().filter(|e| e.outcome == GradeOutcome::Matched).count(),
        budget_exceeded: entries.iter().filter(|e| e.budget_exceeded()).count(),
        total_elapsed_ms,
        mean_elapsed_ms: if entries.is_empty() {
            0.0
        } else {
            entries.iter().map(|e| e.elapsed_ms as f64).sum::<f64>() / entries.len() as f64
        },
    };
    Ok(GradingReport {
        format_version: FORMAT_VERSION.to_string(),
        entries,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_defaults() {
        let a = load_assignments(
            r#"
            [[question]]
            question_id = "q"
            correct_queries = ["SELECT a FROM r"]
            "#,
        )
        .unwrap();
        assert_eq!(a[0].max_marks, Rational::from_integer(10));
        assert_eq!(a[0].mode, Mode::Greedy);
        assert_eq!(a[0].feedback, FeedbackPolicy::default());
        assert_eq!(a[0].budget.resolve(Mode::Exhaustive), Budget::EXHAUSTIVE);
    }

    #[test]
    fn assignment_overrides() {
        let a = load_assignments(
            r#"
            [[question]]
            question_id = "q"
            correct_queries = ["SELECT a FROM r"]
            max_marks = "5/2"
            mode = "exhaustive"
            weights = { projection = 2 }
            budget = { time_ms = 100 }
            feedback = { hints = "first", show_marks = false }
            "#,
        )
        .unwrap();
        let q = &a[0];
        assert_eq!(q.max_marks, Rational::new(5, 2));
        assert_eq!(q.weights.get(crate::flat::Component::Projection), Rational::from_integer(2));
        assert_eq!(q.budget.resolve(q.mode).time, Duration::from_millis(100));
        assert_eq!(q.feedback.hints, HintDepth::First);
        assert!(!q.feedback.show_marks);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = load_assignments("[[question]]\nquestion_id = \"q\"\ncorrect_queries = []\nmark = 3\n");
        assert!(matches!(e, Err(Error::Assignment(_))));
        assert!(load_assignments("").is_err());
    }
}
