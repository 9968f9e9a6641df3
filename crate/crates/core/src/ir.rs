//! Typed query tree shared by resolution, canonicalization and editing.
//!
//! Every attribute reference is already bound to a relation instance. Inner
//! joins are n-ary with their predicates attached, which is the flattened
//! shape once `canon::flatten` has run.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One occurrence of a relation (or FROM-subquery) in a query.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceId {
    pub relation: String,
    pub ordinal: u32,
}

impl InstanceId {
    pub fn new(relation: impl Into<String>, ordinal: u32) -> Self {
        InstanceId {
            relation: relation.into(),
            ordinal,
        }
    }

    pub fn is_derived(&self) -> bool {
        self.relation == DERIVED
    }
}

/// Relation name used for FROM-clause subqueries.
pub const DERIVED: &str = "derived";

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.relation, self.ordinal)
    }
}

/// Attribute of a relation instance. Ordered by (relation, ordinal, attribute).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttrRef {
    pub instance: InstanceId,
    pub attr: String,
}

impl AttrRef {
    pub fn new(instance: InstanceId, attr: impl Into<String>) -> Self {
        AttrRef {
            instance,
            attr: attr.into(),
        }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.attr)
    }
}

/// Literal value. Numbers are normalized so `5.0` and `5` are the same value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    /// Non-integral decimal in normalized text form, e.g. `2.5`.
    Num(String),
    Text(String),
}

impl Value {
    /// Parse a numeric literal, normalizing integral decimals to `Int`.
    pub fn parse_number(text: &str) -> Option<Value> {
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if (int_part.is_empty() && frac_part.is_empty())
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let int_part = int_part.trim_start_matches('0');
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            let digits = if int_part.is_empty() { "0" } else { int_part };
            if let Ok(v) = digits.parse::<i64>() {
                return Some(Value::Int(if neg { -v } else { v }));
            }
            let sign = if neg { "-" } else { "" };
            return Some(Value::Num(format!("{sign}{digits}")));
        }
        let int_digits = if int_part.is_empty() { "0" } else { int_part };
        let sign = if neg { "-" } else { "" };
        Some(Value::Num(format!("{sign}{int_digits}.{frac_part}")))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Num(s) => s.parse().ok(),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Num(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Num(s) => f.write_str(s),
            Value::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub fn from_name(name: &str) -> Option<AggFunc> {
        Some(match name.to_ascii_uppercase().as_str() {
            "COUNT" => AggFunc::Count,
            "SUM" => AggFunc::Sum,
            "AVG" => AggFunc::Avg,
            "MIN" => AggFunc::Min,
            "MAX" => AggFunc::Max,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// Operator `op'` with `NOT (a op b)` equivalent to `a op' b`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// Operator `op'` with `a op b` equivalent to `b op' a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ne => CmpOp::Ne,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Attr(AttrRef),
    /// Output column `index` of a FROM-clause subquery.
    Col { instance: InstanceId, index: usize },
    Lit(Value),
    Agg {
        func: AggFunc,
        distinct: bool,
        /// `None` is `COUNT(*)`.
        arg: Option<Box<Expr>>,
    },
    /// Integer offset, only produced by canonicalization.
    Plus(Box<Expr>, i64),
    Subquery(Box<Query>),
    /// Every column of every instance in the block's FROM clause.
    Star,
}

impl Expr {
    pub fn attr(instance: InstanceId, attr: &str) -> Expr {
        Expr::Attr(AttrRef::new(instance, attr))
    }

    pub fn is_simple(&self) -> bool {
        match self {
            Expr::Attr(_) | Expr::Col { .. } | Expr::Lit(_) => true,
            Expr::Plus(e, _) => e.is_simple(),
            _ => false,
        }
    }

    pub fn contains_agg(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Agg { .. }) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal that does not enter subqueries.
    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Agg { arg: Some(a), .. } => a.visit(f),
            Expr::Plus(e, _) => e.visit(f),
            _ => {}
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match self {
            Expr::Agg { arg: Some(a), .. } => a.visit_mut(f),
            Expr::Plus(e, _) => e.visit_mut(f),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pred {
    Cmp {
        op: CmpOp,
        left: Expr,
        right: Expr,
    },
    /// Equivalence class `=(a, b, ...)` of two or more simple members.
    EqClass(Vec<Expr>),
    Like {
        expr: Expr,
        pattern: Expr,
        negated: bool,
    },
    IsNull {
        expr: Expr,
        negated: bool,
    },
    Between {
        expr: Expr,
        low: Expr,
        high: Expr,
        negated: bool,
    },
    InList {
        expr: Expr,
        list: Vec<Expr>,
        negated: bool,
    },
    InSubquery {
        expr: Expr,
        query: Box<Query>,
        negated: bool,
    },
    Quantified {
        left: Expr,
        op: CmpOp,
        all: bool,
        query: Box<Query>,
    },
    Exists {
        query: Box<Query>,
        negated: bool,
    },
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
    Bool(bool),
}

impl Pred {
    pub fn cmp(op: CmpOp, left: Expr, right: Expr) -> Pred {
        Pred::Cmp { op, left, right }
    }

    pub fn has_subquery(&self) -> bool {
        let mut found = false;
        self.visit(&mut |p| {
            if matches!(
                p,
                Pred::InSubquery { .. } | Pred::Quantified { .. } | Pred::Exists { .. }
            ) {
                found = true;
            }
        });
        self.operands(&mut |e| {
            e.visit(&mut |x| {
                if matches!(x, Expr::Subquery(_)) {
                    found = true;
                }
            })
        });
        found
    }

    pub fn contains_agg(&self) -> bool {
        let mut found = false;
        self.operands(&mut |e| found |= e.contains_agg());
        found
    }

    /// Pre-order traversal over predicate nodes, not entering subqueries.
    pub fn visit(&self, f: &mut dyn FnMut(&Pred)) {
        f(self);
        match self {
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|p| p.visit(f)),
            Pred::Not(p) => p.visit(f),
            _ => {}
        }
    }

    /// Top-level operand expressions of every predicate node (not entering subqueries).
    pub fn operands(&self, f: &mut dyn FnMut(&Expr)) {
        match self {
            Pred::Cmp { left, right, .. } => {
                f(left);
                f(right);
            }
            Pred::EqClass(ms) => ms.iter().for_each(f),
            Pred::Like { expr, pattern, .. } => {
                f(expr);
                f(pattern);
            }
            Pred::IsNull { expr, .. } => f(expr),
            Pred::Between {
                expr, low, high, ..
            } => {
                f(expr);
                f(low);
                f(high);
            }
            Pred::InList { expr, list, .. } => {
                f(expr);
                list.iter().for_each(f);
            }
            Pred::InSubquery { expr, .. } => f(expr),
            Pred::Quantified { left, .. } => f(left),
            Pred::Exists { .. } | Pred::Bool(_) => {}
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|p| p.operands(f)),
            Pred::Not(p) => p.operands(f),
        }
    }

    pub fn operands_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Pred::Cmp { left, right, .. } => {
                f(left);
                f(right);
            }
            Pred::EqClass(ms) => ms.iter_mut().for_each(f),
            Pred::Like { expr, pattern, .. } => {
                f(expr);
                f(pattern);
            }
            Pred::IsNull { expr, .. } => f(expr),
            Pred::Between {
                expr, low, high, ..
            } => {
                f(expr);
                f(low);
                f(high);
            }
            Pred::InList { expr, list, .. } => {
                f(expr);
                list.iter_mut().for_each(f);
            }
            Pred::InSubquery { expr, .. } => f(expr),
            Pred::Quantified { left, .. } => f(left),
            Pred::Exists { .. } | Pred::Bool(_) => {}
            Pred::And(ps) | Pred::Or(ps) => ps.iter_mut().for_each(|p| p.operands_mut(f)),
            Pred::Not(p) => p.operands_mut(f),
        }
    }

    /// Subqueries directly owned by this predicate (connectives and scalar operands).
    pub fn subqueries(&self) -> Vec<&Query> {
        let mut out = Vec::new();
        self.collect_subqueries(&mut out);
        out
    }

    fn collect_subqueries<'a>(&'a self, out: &mut Vec<&'a Query>) {
        match self {
            Pred::InSubquery { query, .. }
            | Pred::Quantified { query, .. }
            | Pred::Exists { query, .. } => out.push(query),
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|p| p.collect_subqueries(out)),
            Pred::Not(p) => p.collect_subqueries(out),
            _ => {}
        }
        let mut scalar = Vec::new();
        self.direct_operands(&mut |e| collect_expr_subqueries(e, &mut scalar));
        out.extend(scalar);
    }

    fn direct_operands<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Pred::Cmp { left, right, .. } => {
                f(left);
                f(right);
            }
            Pred::EqClass(ms) => ms.iter().for_each(f),
            Pred::Like { expr, pattern, .. } => {
                f(expr);
                f(pattern);
            }
            Pred::IsNull { expr, .. } => f(expr),
            Pred::Between {
                expr, low, high, ..
            } => {
                f(expr);
                f(low);
                f(high);
            }
            Pred::InList { expr, list, .. } => {
                f(expr);
                list.iter().for_each(f);
            }
            Pred::InSubquery { expr, .. } => f(expr),
            Pred::Quantified { left, .. } => f(left),
            _ => {}
        }
    }

    pub fn subqueries_mut(&mut self, f: &mut dyn FnMut(&mut Query)) {
        match self {
            Pred::InSubquery { query, .. }
            | Pred::Quantified { query, .. }
            | Pred::Exists { query, .. } => f(query),
            Pred::And(ps) | Pred::Or(ps) => ps.iter_mut().for_each(|p| p.subqueries_mut(f)),
            Pred::Not(p) => p.subqueries_mut(f),
            _ => {}
        }
        match self {
            Pred::And(_) | Pred::Or(_) | Pred::Not(_) => {}
            _ => self.operands_shallow_mut(&mut |e| expr_subqueries_mut(e, f)),
        }
    }

    fn operands_shallow_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        match self {
            Pred::And(_) | Pred::Or(_) | Pred::Not(_) => {}
            _ => self.operands_mut(f),
        }
    }
}

fn collect_expr_subqueries<'a>(e: &'a Expr, out: &mut Vec<&'a Query>) {
    match e {
        Expr::Subquery(q) => out.push(q),
        Expr::Agg { arg: Some(a), .. } => collect_expr_subqueries(a, out),
        Expr::Plus(a, _) => collect_expr_subqueries(a, out),
        _ => {}
    }
}

fn expr_subqueries_mut(e: &mut Expr, f: &mut dyn FnMut(&mut Query)) {
    match e {
        Expr::Subquery(q) => f(q),
        Expr::Agg { arg: Some(a), .. } => expr_subqueries_mut(a, f),
        Expr::Plus(a, _) => expr_subqueries_mut(a, f),
        _ => {}
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderItem {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OuterKind {
    Left,
    Right,
    Full,
}

impl OuterKind {
    pub fn name(self) -> &'static str {
        match self {
            OuterKind::Left => "LEFT OUTER JOIN",
            OuterKind::Right => "RIGHT OUTER JOIN",
            OuterKind::Full => "FULL OUTER JOIN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum JoinTree {
    /// n-ary inner join (or cross product) with its conjunctive predicates.
    Inner {
        inputs: Vec<JoinTree>,
        preds: Vec<Pred>,
    },
    Outer {
        kind: OuterKind,
        left: Box<JoinTree>,
        right: Box<JoinTree>,
        on: Vec<Pred>,
    },
    Relation(InstanceId),
    Derived {
        instance: InstanceId,
        query: Box<Query>,
    },
}

impl JoinTree {
    pub fn inner(inputs: Vec<JoinTree>, preds: Vec<Pred>) -> JoinTree {
        JoinTree::Inner { inputs, preds }
    }

    /// Instances bound by this subtree (base relations and derived tables).
    pub fn instances(&self) -> Vec<InstanceId> {
        let mut out = Vec::new();
        self.collect_instances(&mut out);
        out
    }

    fn collect_instances(&self, out: &mut Vec<InstanceId>) {
        match self {
            JoinTree::Inner { inputs, .. } => inputs.iter().for_each(|i| i.collect_instances(out)),
            JoinTree::Outer { left, right, .. } => {
                left.collect_instances(out);
                right.collect_instances(out);
            }
            JoinTree::Relation(id) => out.push(id.clone()),
            JoinTree::Derived { instance, .. } => out.push(instance.clone()),
        }
    }

    pub fn instance_set(&self) -> BTreeSet<InstanceId> {
        self.instances().into_iter().collect()
    }

    /// Visit every predicate list in this subtree (inner predicates and ON lists).
    pub fn pred_lists(&self, f: &mut dyn FnMut(&Vec<Pred>)) {
        match self {
            JoinTree::Inner { inputs, preds } => {
                f(preds);
                inputs.iter().for_each(|i| i.pred_lists(f));
            }
            JoinTree::Outer {
                left, right, on, ..
            } => {
                f(on);
                left.pred_lists(f);
                right.pred_lists(f);
            }
            _ => {}
        }
    }

    pub fn pred_lists_mut(&mut self, f: &mut dyn FnMut(&mut Vec<Pred>)) {
        match self {
            JoinTree::Inner { inputs, preds } => {
                f(preds);
                inputs.iter_mut().for_each(|i| i.pred_lists_mut(f));
            }
            JoinTree::Outer {
                left, right, on, ..
            } => {
                f(on);
                left.pred_lists_mut(f);
                right.pred_lists_mut(f);
            }
            _ => {}
        }
    }

    pub fn derived_mut(&mut self, f: &mut dyn FnMut(&InstanceId, &mut Query)) {
        match self {
            JoinTree::Inner { inputs, .. } => inputs.iter_mut().for_each(|i| i.derived_mut(f)),
            JoinTree::Outer { left, right, .. } => {
                left.derived_mut(f);
                right.derived_mut(f);
            }
            JoinTree::Derived { instance, query } => f(instance, query),
            JoinTree::Relation(_) => {}
        }
    }

    pub fn derived(&self, f: &mut dyn FnMut(&InstanceId, &Query)) {
        match self {
            JoinTree::Inner { inputs, .. } => inputs.iter().for_each(|i| i.derived(f)),
            JoinTree::Outer { left, right, .. } => {
                left.derived(f);
                right.derived(f);
            }
            JoinTree::Derived { instance, query } => f(instance, query),
            JoinTree::Relation(_) => {}
        }
    }

    /// Instances that may be null-padded by an outer join inside this subtree.
    pub fn padded_instances(&self) -> BTreeSet<InstanceId> {
        let mut out = BTreeSet::new();
        self.collect_padded(false, &mut out);
        out
    }

    fn collect_padded(&self, padded: bool, out: &mut BTreeSet<InstanceId>) {
        match self {
            JoinTree::Inner { inputs, .. } => {
                inputs.iter().for_each(|i| i.collect_padded(padded, out))
            }
            JoinTree::Outer {
                kind, left, right, ..
            } => {
                let (lp, rp) = match kind {
                    OuterKind::Left => (padded, true),
                    OuterKind::Right => (true, padded),
                    OuterKind::Full => (true, true),
                };
                left.collect_padded(lp, out);
                right.collect_padded(rp, out);
            }
            JoinTree::Relation(id) | JoinTree::Derived { instance: id, .. } => {
                if padded {
                    out.insert(id.clone());
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Select {
    pub distinct: bool,
    pub projection: Vec<Expr>,
    /// Root is always `JoinTree::Inner`; its predicates are the WHERE clause.
    pub from: JoinTree,
    pub group_by: Vec<Expr>,
    pub having: Vec<Pred>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

impl Select {
    pub fn where_preds(&self) -> &[Pred] {
        match &self.from {
            JoinTree::Inner { preds, .. } => preds,
            _ => &[],
        }
    }

    pub fn where_preds_mut(&mut self) -> &mut Vec<Pred> {
        if !matches!(self.from, JoinTree::Inner { .. }) {
            let old = std::mem::replace(&mut self.from, JoinTree::inner(vec![], vec![]));
            self.from = JoinTree::inner(vec![old], vec![]);
        }
        match &mut self.from {
            JoinTree::Inner { preds, .. } => preds,
            _ => unreachable!(),
        }
    }

    pub fn has_aggregates(&self) -> bool {
        self.projection.iter().any(Expr::contains_agg)
            || self.having.iter().any(Pred::contains_agg)
            || self.order_by.iter().any(|o| o.expr.contains_agg())
    }

    pub fn is_grouped(&self) -> bool {
        !self.group_by.is_empty() || self.has_aggregates() || !self.having.is_empty()
    }

    /// Expressions of this block that are evaluated per output row or group,
    /// not counting predicates of the join tree.
    pub fn item_exprs_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        self.projection.iter_mut().for_each(&mut *f);
        self.group_by.iter_mut().for_each(&mut *f);
        for o in &mut self.order_by {
            f(&mut o.expr);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetKind {
    Union,
    Intersect,
    Except,
}

impl SetKind {
    pub fn name(self) -> &'static str {
        match self {
            SetKind::Union => "UNION",
            SetKind::Intersect => "INTERSECT",
            SetKind::Except => "EXCEPT",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Query {
    Select(Box<Select>),
    /// UNION and INTERSECT are n-ary and unordered; EXCEPT has exactly two ordered inputs.
    SetOp {
        kind: SetKind,
        all: bool,
        inputs: Vec<Query>,
    },
}

impl Query {
    pub fn as_select(&self) -> Option<&Select> {
        match self {
            Query::Select(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_select_mut(&mut self) -> Option<&mut Select> {
        match self {
            Query::Select(s) => Some(s),
            _ => None,
        }
    }

    /// Number of output columns, if it can be determined without the schema.
    pub fn arity_hint(&self) -> Option<usize> {
        match self {
            Query::Select(s) => {
                if s.projection.iter().any(|e| matches!(e, Expr::Star)) {
                    None
                } else {
                    Some(s.projection.len())
                }
            }
            Query::SetOp { inputs, .. } => inputs.iter().find_map(Query::arity_hint),
        }
    }

    /// Every select block in this query, outermost first, at any depth.
    pub fn for_each_select(&self, f: &mut dyn FnMut(&Select)) {
        match self {
            Query::Select(s) => {
                f(s);
                for_each_nested_query(s, &mut |q| q.for_each_select(f));
            }
            Query::SetOp { inputs, .. } => inputs.iter().for_each(|q| q.for_each_select(f)),
        }
    }

    /// Mutable variant of `for_each_select`; `f` runs before nested queries are visited.
    pub fn for_each_select_mut(&mut self, f: &mut dyn FnMut(&mut Select)) {
        match self {
            Query::Select(s) => {
                f(s);
                for_each_nested_query_mut(s, &mut |q| q.for_each_select_mut(f));
            }
            Query::SetOp { inputs, .. } => {
                inputs.iter_mut().for_each(|q| q.for_each_select_mut(f))
            }
        }
    }

    /// Visit every query node (including set operations), parents before children.
    pub fn for_each_query_mut(&mut self, f: &mut dyn FnMut(&mut Query)) {
        f(self);
        match self {
            Query::Select(s) => for_each_nested_query_mut(s, &mut |q| q.for_each_query_mut(f)),
            Query::SetOp { inputs, .. } => inputs.iter_mut().for_each(|q| q.for_each_query_mut(f)),
        }
    }

    pub fn for_each_query(&self, f: &mut dyn FnMut(&Query)) {
        f(self);
        match self {
            Query::Select(s) => for_each_nested_query(s, &mut |q| q.for_each_query(f)),
            Query::SetOp { inputs, .. } => inputs.iter().for_each(|q| q.for_each_query(f)),
        }
    }

    /// Every expression at any depth, including inside subqueries.
    pub fn for_each_expr_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        self.for_each_select_mut(&mut |s| {
            s.item_exprs_mut(&mut |e| e.visit_mut(&mut *f));
            s.from
                .pred_lists_mut(&mut |ps| ps.iter_mut().for_each(|p| p.operands_mut(&mut |e| e.visit_mut(&mut *f))));
            for p in &mut s.having {
                p.operands_mut(&mut |e| e.visit_mut(&mut *f));
            }
        });
    }

    pub fn for_each_expr(&self, f: &mut dyn FnMut(&Expr)) {
        self.for_each_select(&mut |s| {
            for e in s.projection.iter().chain(&s.group_by) {
                e.visit(&mut *f);
            }
            for o in &s.order_by {
                o.expr.visit(&mut *f);
            }
            s.from
                .pred_lists(&mut |ps| ps.iter().for_each(|p| p.operands(&mut |e| e.visit(&mut *f))));
            for p in &s.having {
                p.operands(&mut |e| e.visit(&mut *f));
            }
        });
    }

    /// Every relation instance bound anywhere in the query.
    pub fn all_instances(&self) -> Vec<InstanceId> {
        let mut out = Vec::new();
        self.for_each_select(&mut |s| out.extend(s.from.instances()));
        out
    }
}

/// Queries nested directly inside a block: derived tables, predicate subqueries
/// and scalar subqueries in any clause.
pub fn for_each_nested_query(s: &Select, f: &mut dyn FnMut(&Query)) {
    s.from.derived(&mut |_, q| f(q));
    s.from.pred_lists(&mut |ps| {
        for p in ps {
            for q in p.subqueries() {
                f(q);
            }
        }
    });
    for p in &s.having {
        for q in p.subqueries() {
            f(q);
        }
    }
    let mut scalar = Vec::new();
    for e in s.projection.iter().chain(&s.group_by) {
        collect_expr_subqueries(e, &mut scalar);
    }
    for o in &s.order_by {
        collect_expr_subqueries(&o.expr, &mut scalar);
    }
    scalar.into_iter().for_each(f);
}

pub fn for_each_nested_query_mut(s: &mut Select, f: &mut dyn FnMut(&mut Query)) {
    s.from.derived_mut(&mut |_, q| f(q));
    s.from
        .pred_lists_mut(&mut |ps| ps.iter_mut().for_each(|p| p.subqueries_mut(&mut *f)));
    for p in &mut s.having {
        p.subqueries_mut(&mut *f);
    }
    for e in s.projection.iter_mut().chain(s.group_by.iter_mut()) {
        expr_subqueries_mut(e, f);
    }
    for o in &mut s.order_by {
        expr_subqueries_mut(&mut o.expr, f);
    }
}

/// Instance ids referenced by an expression, including correlated references
/// made from inside its subqueries.
pub fn expr_refs(e: &Expr, out: &mut BTreeSet<InstanceId>) {
    e.visit(&mut |x| match x {
        Expr::Attr(a) => {
            out.insert(a.instance.clone());
        }
        Expr::Col { instance, .. } => {
            out.insert(instance.clone());
        }
        Expr::Subquery(q) => query_refs(q, out),
        _ => {}
    });
}

pub fn pred_refs(p: &Pred, out: &mut BTreeSet<InstanceId>) {
    p.operands(&mut |e| expr_refs(e, out));
    p.visit(&mut |x| match x {
        Pred::InSubquery { query, .. } | Pred::Quantified { query, .. } | Pred::Exists { query, .. } => {
            query_refs(query, out)
        }
        _ => {}
    });
}

/// All instance references inside a query, at any depth.
pub fn query_refs(q: &Query, out: &mut BTreeSet<InstanceId>) {
    q.for_each_expr(&mut |e| match e {
        Expr::Attr(a) => {
            out.insert(a.instance.clone());
        }
        Expr::Col { instance, .. } => {
            out.insert(instance.clone());
        }
        _ => {}
    });
}

/// Instances referenced by `p` that belong to `local`.
pub fn local_refs(p: &Pred, local: &BTreeSet<InstanceId>) -> BTreeSet<InstanceId> {
    let mut all = BTreeSet::new();
    pred_refs(p, &mut all);
    all.into_iter().filter(|i| local.contains(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_normalize() {
        assert_eq!(Value::parse_number("5.0"), Some(Value::Int(5)));
        assert_eq!(Value::parse_number("005"), Some(Value::Int(5)));
        assert_eq!(Value::parse_number("2.50"), Some(Value::Num("2.5".into())));
        assert_eq!(Value::parse_number(".5"), Some(Value::Num("0.5".into())));
        assert_eq!(Value::parse_number("-0.0"), Some(Value::Int(0)));
        assert_eq!(Value::parse_number("abc"), None);
        assert_eq!(Value::parse_number("."), None);
    }

    #[test]
    fn attr_order_is_relation_ordinal_attr() {
        let a = AttrRef::new(InstanceId::new("department", 1), "dept_name");
        let b = AttrRef::new(InstanceId::new("student", 1), "dept_name");
        let c = AttrRef::new(InstanceId::new("student", 2), "a");
        assert!(a < b && b < c);
    }

    #[test]
    fn cmp_negation_and_flip_are_involutions() {
        for op in [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge] {
            assert_eq!(op.negate().negate(), op);
            assert_eq!(op.flip().flip(), op);
        }
    }

    #[test]
    fn text_literal_quotes_are_doubled() {
        assert_eq!(Value::Text("O'Neil".into()).to_string(), "'O''Neil'");
    }
}
