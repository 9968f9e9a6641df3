//! Rewrite rules and the fixpoint driver that brings a query to canonical form.
//!
//! Rules run in catalog order. Each step applies the first rule that changes
//! the query (at every site it matches) and then starts over from the top of
//! the catalog, so the result does not depend on where a rule first fired.

pub(crate) mod common;
pub(crate) mod semantic;
pub(crate) mod syntactic;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat::{FlatNode, FlatTree};
use crate::ir::{Expr, Query};
use crate::schema::Schema;
use crate::sql::ResolvedQuery;

use common::tree_env;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    #[serde(rename = "SYN-1")]
    Disambiguate,
    #[serde(rename = "SYN-2")]
    InlineWith,
    #[serde(rename = "SYN-3")]
    Between,
    #[serde(rename = "SYN-4")]
    PushNot,
    #[serde(rename = "SYN-5")]
    Direction,
    #[serde(rename = "SYN-6")]
    InToExists,
    #[serde(rename = "SYN-7")]
    NotInToNotExists,
    #[serde(rename = "SYN-8")]
    SubqueryDistinct,
    #[serde(rename = "SYN-9")]
    RightToLeft,
    #[serde(rename = "SYN-10")]
    SubqueryOrderBy,
    #[serde(rename = "SYN-11")]
    Flatten,
    #[serde(rename = "SEM-1")]
    DistinctRemoval,
    #[serde(rename = "SEM-2")]
    DistinctPullUp,
    #[serde(rename = "SEM-3")]
    JoinElimination,
    #[serde(rename = "SEM-4")]
    NullRejection,
    #[serde(rename = "SEM-5")]
    ForeignKeyOuterJoin,
    #[serde(rename = "SEM-6")]
    PushDown,
    #[serde(rename = "SEM-7")]
    IntegerLessThan,
    #[serde(rename = "SEM-8")]
    ClassRepresentative,
    #[serde(rename = "SEM-9")]
    OrderByPruning,
    #[serde(rename = "SEM-10")]
    GroupByCompletion,
}

impl RuleId {
    pub const SYNTACTIC: [RuleId; 11] = [
        RuleId::Disambiguate,
        RuleId::InlineWith,
        RuleId::Between,
        RuleId::PushNot,
        RuleId::Direction,
        RuleId::InToExists,
        RuleId::NotInToNotExists,
        RuleId::SubqueryDistinct,
        RuleId::RightToLeft,
        RuleId::SubqueryOrderBy,
        RuleId::Flatten,
    ];

    pub const SEMANTIC: [RuleId; 10] = [
        RuleId::DistinctRemoval,
        RuleId::DistinctPullUp,
        RuleId::JoinElimination,
        RuleId::NullRejection,
        RuleId::ForeignKeyOuterJoin,
        RuleId::PushDown,
        RuleId::IntegerLessThan,
        RuleId::ClassRepresentative,
        RuleId::OrderByPruning,
        RuleId::GroupByCompletion,
    ];

    pub fn all() -> impl Iterator<Item = RuleId> {
        Self::SYNTACTIC.into_iter().chain(Self::SEMANTIC)
    }

    pub fn code(self) -> &'static str {
        match self {
            RuleId::Disambiguate => "SYN-1",
            RuleId::InlineWith => "SYN-2",
            RuleId::Between => "SYN-3",
            RuleId::PushNot => "SYN-4",
            RuleId::Direction => "SYN-5",
            RuleId::InToExists => "SYN-6",
            RuleId::NotInToNotExists => "SYN-7",
            RuleId::SubqueryDistinct => "SYN-8",
            RuleId::RightToLeft => "SYN-9",
            RuleId::SubqueryOrderBy => "SYN-10",
            RuleId::Flatten => "SYN-11",
            RuleId::DistinctRemoval => "SEM-1",
            RuleId::DistinctPullUp => "SEM-2",
            RuleId::JoinElimination => "SEM-3",
            RuleId::NullRejection => "SEM-4",
            RuleId::ForeignKeyOuterJoin => "SEM-5",
            RuleId::PushDown => "SEM-6",
            RuleId::IntegerLessThan => "SEM-7",
            RuleId::ClassRepresentative => "SEM-8",
            RuleId::OrderByPruning => "SEM-9",
            RuleId::GroupByCompletion => "SEM-10",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            RuleId::Disambiguate => "qualify every attribute with its relation instance",
            RuleId::InlineWith => "inline WITH bindings as FROM subqueries",
            RuleId::Between => "BETWEEN as two comparisons",
            RuleId::PushNot => "push NOT down to the atoms",
            RuleId::Direction => "write > and >= as < and <=",
            RuleId::InToExists => "IN / SOME subqueries as EXISTS",
            RuleId::NotInToNotExists => "NOT IN / ALL subqueries as NOT EXISTS",
            RuleId::SubqueryDistinct => "drop DISTINCT under EXISTS, IN, ALL and SOME",
            RuleId::RightToLeft => "RIGHT OUTER JOIN as LEFT OUTER JOIN",
            RuleId::SubqueryOrderBy => "drop ORDER BY in subqueries without LIMIT",
            RuleId::Flatten => "flatten joins, AND, OR, set operations and equalities",
            RuleId::DistinctRemoval => "drop DISTINCT when rows are already unique",
            RuleId::DistinctPullUp => "pull DISTINCT out of FROM subqueries",
            RuleId::JoinElimination => "remove joins implied by a foreign key",
            RuleId::NullRejection => "LEFT OUTER JOIN below a null-rejecting condition",
            RuleId::ForeignKeyOuterJoin => "LEFT OUTER JOIN along a non-nullable foreign key",
            RuleId::PushDown => "push conditions below outer joins",
            RuleId::IntegerLessThan => "integer a < b as a + 1 <= b",
            RuleId::ClassRepresentative => "use the least member of each equivalence class",
            RuleId::OrderByPruning => "drop ORDER BY items determined by earlier ones",
            RuleId::GroupByCompletion => "extend GROUP BY with determined attributes",
        }
    }

    pub fn is_semantic(self) -> bool {
        Self::SEMANTIC.contains(&self)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<RuleId> {
        RuleId::all()
            .find(|r| r.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown rule `{s}`")))
    }
}

/// Run a rule once over the whole query. `None` when it matches nowhere.
pub fn apply_rule_to_query(rule: RuleId, q: &Query, schema: &Schema) -> Option<Query> {
    let mut out = q.clone();
    let changed = match rule {
        // Both are carried out during name resolution.
        RuleId::Disambiguate | RuleId::InlineWith => false,
        RuleId::Between => syntactic::between(&mut out),
        RuleId::PushNot => syntactic::push_not(&mut out),
        RuleId::Direction => syntactic::direction(&mut out),
        RuleId::InToExists => syntactic::in_to_exists(&mut out),
        RuleId::NotInToNotExists => syntactic::not_in_to_not_exists(&mut out, schema),
        RuleId::SubqueryDistinct => syntactic::subquery_distinct(&mut out),
        RuleId::RightToLeft => syntactic::right_to_left(&mut out),
        RuleId::SubqueryOrderBy => syntactic::subquery_order(&mut out),
        RuleId::Flatten => syntactic::flatten(&mut out, schema),
        RuleId::DistinctRemoval => semantic::distinct_removal(&mut out, schema),
        RuleId::DistinctPullUp => semantic::distinct_pullup(&mut out, schema),
        RuleId::JoinElimination => semantic::join_elimination(&mut out, schema),
        RuleId::NullRejection => semantic::null_rejection(&mut out),
        RuleId::ForeignKeyOuterJoin => semantic::fk_outer_join(&mut out, schema),
        RuleId::PushDown => semantic::pushdown(&mut out),
        RuleId::IntegerLessThan => semantic::integer_lt(&mut out, schema),
        RuleId::ClassRepresentative => semantic::class_representatives(&mut out, schema),
        RuleId::OrderByPruning => semantic::order_by_pruning(&mut out, schema),
        RuleId::GroupByCompletion => semantic::group_by_completion(&mut out, schema),
    };
    (changed && out != *q).then_some(out)
}

pub fn apply_rule(rule: RuleId, t: &FlatTree, schema: &Schema) -> Option<FlatTree> {
    apply_rule_to_query(rule, t.query(), schema).map(FlatTree::new)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: RuleId,
    /// Child-index path in the tree view to the smallest subtree that changed.
    pub path: Vec<usize>,
    pub before: String,
    pub after: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteTrace {
    pub steps: Vec<TraceStep>,
}

impl RewriteTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-run the recorded rules in order on `input`.
    pub fn replay(&self, input: &FlatTree, schema: &Schema) -> Result<FlatTree> {
        let mut t = input.clone();
        for (i, step) in self.steps.iter().enumerate() {
            t = apply_rule(step.rule, &t, schema).ok_or_else(|| {
                Error::Validation(format!("step {} ({}) does not apply on replay", i + 1, step.rule))
            })?;
        }
        Ok(t)
    }
}

impl fmt::Display for RewriteTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            let path: Vec<String> = s.path.iter().map(usize::to_string).collect();
            writeln!(f, "{:>3}. {} at /{}", i + 1, s.rule, path.join("/"))?;
            writeln!(f, "     - {}", s.before)?;
            writeln!(f, "     + {}", s.after)?;
        }
        Ok(())
    }
}

/// Path to the smallest subtree where two views differ.
fn diff_path<'a>(mut a: &'a FlatNode, mut b: &'a FlatNode) -> (Vec<usize>, &'a FlatNode, &'a FlatNode) {
    let mut path = Vec::new();
    loop {
        if a.label != b.label || a.children.len() != b.children.len() {
            return (path, a, b);
        }
        let differing: Vec<usize> = (0..a.children.len())
            .filter(|&i| a.children[i].key != b.children[i].key)
            .collect();
        if differing.len() != 1 {
            return (path, a, b);
        }
        let i = differing[0];
        path.push(i);
        a = &a.children[i];
        b = &b.children[i];
    }
}

fn fingerprint(q: &Query) -> u64 {
    let mut h = DefaultHasher::new();
    q.hash(&mut h);
    h.finish()
}

fn node_count(n: &FlatNode) -> usize {
    let mut c = 0;
    n.walk(&mut |_| c += 1);
    c
}

/// Apply `rules` (earlier entries take priority) until none changes the query.
pub fn canonicalize_with(
    t: &FlatTree,
    schema: &Schema,
    rules: &[RuleId],
) -> Result<(FlatTree, RewriteTrace)> {
    let cap = 10 * node_count(t.root()).max(1);
    let mut seen = HashSet::from([fingerprint(t.query())]);
    let mut current = t.clone();
    let mut trace = RewriteTrace::default();
    'outer: loop {
        for &rule in rules {
            let Some(next) = apply_rule(rule, &current, schema) else {
                continue;
            };
            let (path, before, after) = diff_path(current.root(), next.root());
            trace.steps.push(TraceStep {
                rule,
                path,
                before: before.key.clone(),
                after: after.key.clone(),
            });
            if trace.steps.len() > cap || !seen.insert(fingerprint(next.query())) {
                return Err(Error::FixpointOverrun(trace.steps.len()));
            }
            current = next;
            continue 'outer;
        }
        return Ok((current, trace));
    }
}

pub fn canonicalize_syntactic(t: &FlatTree, schema: &Schema) -> Result<(FlatTree, RewriteTrace)> {
    canonicalize_with(t, schema, &RuleId::SYNTACTIC)
}

pub fn canonicalize_full(t: &FlatTree, schema: &Schema) -> Result<(FlatTree, RewriteTrace)> {
    let rules: Vec<RuleId> = RuleId::all().collect();
    canonicalize_with(t, schema, &rules)
}

/// Flattened tree of a resolved query: joins, connectives, set operations and
/// plain FROM subqueries are merged, equalities gathered into classes.
pub fn build_flat_tree(rq: &ResolvedQuery, schema: &Schema) -> Result<FlatTree> {
    let t = FlatTree::new(rq.query.clone());
    Ok(canonicalize_with(&t, schema, &[RuleId::Flatten])?.0)
}

/// Equivalence classes holding over the FROM clause of each select block,
/// outermost block first. Members are ranked: literal first, then attributes
/// in lexicographic order.
pub fn equivalence_classes(t: &FlatTree) -> Vec<Vec<Expr>> {
    let mut out = Vec::new();
    t.query().for_each_select(&mut |s| out.extend(tree_env(&s.from)));
    out
}
