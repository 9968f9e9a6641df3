//! Flattened tree view of a query.
//!
//! The view is derived from an already-flattened [`Query`]: n-ary inner joins,
//! AND/OR lists and equivalence classes have unordered children, outer joins,
//! EXCEPT and ORDER BY lists have ordered ones. Each node carries the
//! component it is billed to and a canonical serialization of its subtree in
//! which unordered children appear sorted.
//!
//! Serialization format: `label(c1,c2)` for ordered children and
//! `label{c1,c2}` for unordered ones; leaves are the bare label.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ir::*;

/// Billable query component. Every billed node belongs to exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Relation,
    JoinOperator,
    JoinCondition,
    SelectionCondition,
    Projection,
    Distinct,
    GroupBy,
    Having,
    Aggregate,
    OrderBy,
    SetOperator,
    SubqueryConnective,
    Limit,
}

impl Component {
    pub const ALL: [Component; 13] = [
        Component::Relation,
        Component::JoinOperator,
        Component::JoinCondition,
        Component::SelectionCondition,
        Component::Projection,
        Component::Distinct,
        Component::GroupBy,
        Component::Having,
        Component::Aggregate,
        Component::OrderBy,
        Component::SetOperator,
        Component::SubqueryConnective,
        Component::Limit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Relation => "relation",
            Component::JoinOperator => "join_operator",
            Component::JoinCondition => "join_condition",
            Component::SelectionCondition => "selection_condition",
            Component::Projection => "projection",
            Component::Distinct => "distinct",
            Component::GroupBy => "group_by",
            Component::Having => "having",
            Component::Aggregate => "aggregate",
            Component::OrderBy => "order_by",
            Component::SetOperator => "set_operator",
            Component::SubqueryConnective => "subquery_connective",
            Component::Limit => "limit",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown component `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatNode {
    pub label: String,
    /// `None` for structural containers that are never billed.
    pub class: Option<Component>,
    pub ordered: bool,
    /// Unordered children are kept sorted by key.
    pub children: Vec<FlatNode>,
    pub key: String,
}

impl FlatNode {
    fn new(label: impl Into<String>, class: Option<Component>, ordered: bool, mut children: Vec<FlatNode>) -> FlatNode {
        let label = label.into();
        if !ordered {
            children.sort_by(|a, b| a.key.cmp(&b.key));
        }
        let key = if children.is_empty() && class.is_some() {
            label.clone()
        } else {
            let (open, close) = if ordered { ('(', ')') } else { ('{', '}') };
            let mut k = String::with_capacity(label.len() + 2 + children.iter().map(|c| c.key.len() + 1).sum::<usize>());
            k.push_str(&label);
            k.push(open);
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    k.push(',');
                }
                k.push_str(&c.key);
            }
            k.push(close);
            k
        };
        FlatNode {
            label,
            class,
            ordered,
            children,
            key,
        }
    }

    fn leaf(label: impl Into<String>, class: Component) -> FlatNode {
        FlatNode::new(label, Some(class), true, vec![])
    }

    /// Visit every node of the subtree, parents first.
    pub fn walk(&self, f: &mut dyn FnMut(&FlatNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Number of billed nodes in the subtree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |x| {
            if x.class.is_some() {
                n += 1;
            }
        });
        n
    }

    /// Node at a child-index path, if it exists.
    pub fn at(&self, path: &[usize]) -> Option<&FlatNode> {
        let mut n = self;
        for &i in path {
            n = n.children.get(i)?;
        }
        Some(n)
    }
}

/// A flattened query together with its tree view.
#[derive(Clone, Debug)]
pub struct FlatTree {
    query: Query,
    root: FlatNode,
}

impl PartialEq for FlatTree {
    fn eq(&self, other: &Self) -> bool {
        self.root.key == other.root.key
    }
}

impl FlatTree {
    pub fn new(query: Query) -> FlatTree {
        let root = query_node(&query);
        FlatTree { query, root }
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn into_query(self) -> Query {
        self.query
    }

    pub fn root(&self) -> &FlatNode {
        &self.root
    }

    pub fn serialize(&self) -> &str {
        &self.root.key
    }
}

pub fn canonical_serialize(t: &FlatTree) -> String {
    t.serialize().to_string()
}

/// Equal serializations. Output column names never enter the view, so
/// projections are compared positionally.
pub fn is_canonically_equivalent(a: &FlatTree, b: &FlatTree) -> bool {
    a.serialize() == b.serialize()
}

/// Serialization key of a single expression, used to order operands.
pub fn expr_key(e: &Expr) -> String {
    expr_node(e, Component::SelectionCondition).key
}

pub fn pred_key(p: &Pred) -> String {
    pred_node(p, Component::SelectionCondition).key
}

pub fn query_key(q: &Query) -> String {
    query_node(q).key
}

pub fn attr_label(a: &AttrRef) -> String {
    format!("{}.{}", a.instance, a.attr)
}

pub fn col_label(instance: &InstanceId, index: usize) -> String {
    format!("{instance}.${}", index + 1)
}

pub(crate) fn query_node(q: &Query) -> FlatNode {
    match q {
        Query::Select(s) => select_node(s),
        Query::SetOp { kind, all, inputs } => {
            let label = if *all {
                format!("{} ALL", kind.name())
            } else {
                kind.name().to_string()
            };
            FlatNode::new(
                label,
                Some(Component::SetOperator),
                *kind == SetKind::Except,
                inputs.iter().map(query_node).collect(),
            )
        }
    }
}

/// Positions of the slot containers under a SELECT node.
pub mod slot {
    pub const DISTINCT: usize = 0;
    pub const PROJ: usize = 1;
    pub const FROM: usize = 2;
    pub const GROUP: usize = 3;
    pub const HAVING: usize = 4;
    pub const ORDER: usize = 5;
    pub const LIMIT: usize = 6;
}

pub(crate) fn select_node(s: &Select) -> FlatNode {
    let distinct = if s.distinct {
        vec![FlatNode::leaf("DISTINCT", Component::Distinct)]
    } else {
        vec![]
    };
    let proj = s
        .projection
        .iter()
        .map(|e| expr_node(e, Component::Projection))
        .collect();
    let group = s
        .group_by
        .iter()
        .map(|e| expr_node(e, Component::GroupBy))
        .collect();
    let having = s
        .having
        .iter()
        .map(|p| pred_node(p, Component::Having))
        .collect();
    let order = s
        .order_by
        .iter()
        .map(|o| {
            let mut n = expr_node(&o.expr, Component::OrderBy);
            if o.desc {
                n = FlatNode::new(format!("{} DESC", n.label), n.class, n.ordered, n.children);
            }
            n
        })
        .collect();
    let limit = match s.limit {
        Some(n) => vec![FlatNode::leaf(format!("LIMIT {n}"), Component::Limit)],
        None => vec![],
    };
    FlatNode::new(
        "SELECT",
        None,
        true,
        vec![
            FlatNode::new("distinct", None, true, distinct),
            FlatNode::new("proj", None, true, proj),
            FlatNode::new("from", None, true, vec![join_node(&s.from)]),
            FlatNode::new("group", None, false, group),
            FlatNode::new("having", None, false, having),
            FlatNode::new("order", None, true, order),
            FlatNode::new("limit", None, true, limit),
        ],
    )
}

pub(crate) fn join_node(t: &JoinTree) -> FlatNode {
    match t {
        JoinTree::Inner { inputs, preds } => FlatNode::new(
            "JOIN",
            None,
            true,
            vec![
                FlatNode::new("in", None, false, inputs.iter().map(join_node).collect()),
                FlatNode::new("pred", None, false, preds.iter().map(condition_node).collect()),
            ],
        ),
        JoinTree::Outer {
            kind,
            left,
            right,
            on,
        } => FlatNode::new(
            kind.name(),
            Some(Component::JoinOperator),
            true,
            vec![
                join_node(left),
                join_node(right),
                FlatNode::new("on", None, false, on.iter().map(condition_node).collect()),
            ],
        ),
        JoinTree::Relation(id) => FlatNode::leaf(id.to_string(), Component::Relation),
        JoinTree::Derived { instance, query } => FlatNode::new(
            instance.to_string(),
            Some(Component::Relation),
            true,
            vec![query_node(query)],
        ),
    }
}

/// Instances referenced directly by the operands of `p`, not looking into subqueries.
pub fn direct_refs(p: &Pred) -> BTreeSet<InstanceId> {
    let mut out = BTreeSet::new();
    p.operands(&mut |e| {
        e.visit(&mut |x| match x {
            Expr::Attr(a) => {
                out.insert(a.instance.clone());
            }
            Expr::Col { instance, .. } => {
                out.insert(instance.clone());
            }
            _ => {}
        })
    });
    out
}

/// Class of a WHERE/ON predicate: join condition when it relates two or more instances.
pub fn condition_class(p: &Pred) -> Component {
    if direct_refs(p).len() >= 2 {
        Component::JoinCondition
    } else {
        Component::SelectionCondition
    }
}

fn condition_node(p: &Pred) -> FlatNode {
    pred_node(p, condition_class(p))
}

pub(crate) fn pred_node(p: &Pred, class: Component) -> FlatNode {
    let c = Some(class);
    let ex = |e: &Expr| expr_node(e, class);
    match p {
        Pred::Cmp { op, left, right } => FlatNode::new(op.symbol(), c, true, vec![ex(left), ex(right)]),
        Pred::EqClass(ms) => FlatNode::new("=", c, false, ms.iter().map(ex).collect()),
        Pred::Like {
            expr,
            pattern,
            negated,
        } => FlatNode::new(
            if *negated { "NOT LIKE" } else { "LIKE" },
            c,
            true,
            vec![ex(expr), ex(pattern)],
        ),
        Pred::IsNull { expr, negated } => FlatNode::new(
            if *negated { "IS NOT NULL" } else { "IS NULL" },
            c,
            true,
            vec![ex(expr)],
        ),
        Pred::Between {
            expr,
            low,
            high,
            negated,
        } => FlatNode::new(
            if *negated { "NOT BETWEEN" } else { "BETWEEN" },
            c,
            true,
            vec![ex(expr), ex(low), ex(high)],
        ),
        Pred::InList {
            expr,
            list,
            negated,
        } => FlatNode::new(
            if *negated { "NOT IN" } else { "IN" },
            c,
            true,
            vec![ex(expr), FlatNode::new("list", None, false, list.iter().map(ex).collect())],
        ),
        Pred::InSubquery {
            expr,
            query,
            negated,
        } => FlatNode::new(
            if *negated { "NOT IN" } else { "IN" },
            Some(Component::SubqueryConnective),
            true,
            vec![expr_node(expr, Component::SubqueryConnective), query_node(query)],
        ),
        Pred::Quantified {
            left,
            op,
            all,
            query,
        } => FlatNode::new(
            format!("{} {}", op.symbol(), if *all { "ALL" } else { "SOME" }),
            Some(Component::SubqueryConnective),
            true,
            vec![expr_node(left, Component::SubqueryConnective), query_node(query)],
        ),
        Pred::Exists { query, negated } => FlatNode::new(
            if *negated { "NOT EXISTS" } else { "EXISTS" },
            Some(Component::SubqueryConnective),
            true,
            vec![query_node(query)],
        ),
        Pred::And(ps) => FlatNode::new("AND", c, false, ps.iter().map(|p| pred_node(p, class)).collect()),
        Pred::Or(ps) => FlatNode::new("OR", c, false, ps.iter().map(|p| pred_node(p, class)).collect()),
        Pred::Not(p) => FlatNode::new("NOT", c, true, vec![pred_node(p, class)]),
        Pred::Bool(b) => FlatNode::leaf(if *b { "TRUE" } else { "FALSE" }, class),
    }
}

pub(crate) fn expr_node(e: &Expr, class: Component) -> FlatNode {
    match e {
        Expr::Attr(a) => FlatNode::leaf(attr_label(a), class),
        Expr::Col { instance, index } => FlatNode::leaf(col_label(instance, *index), class),
        Expr::Lit(v) => FlatNode::leaf(v.to_string(), class),
        Expr::Agg {
            func,
            distinct,
            arg,
        } => match arg {
            None => FlatNode::leaf(format!("{}(*)", func.name()), Component::Aggregate),
            Some(a) => FlatNode::new(
                if *distinct {
                    format!("{} DISTINCT", func.name())
                } else {
                    func.name().to_string()
                },
                Some(Component::Aggregate),
                true,
                vec![expr_node(a, Component::Aggregate)],
            ),
        },
        Expr::Plus(inner, k) => FlatNode::new(
            if *k >= 0 { format!("+{k}") } else { format!("{k}") },
            Some(class),
            true,
            vec![expr_node(inner, class)],
        ),
        Expr::Subquery(q) => FlatNode::new(
            "SUBQ",
            Some(Component::SubqueryConnective),
            true,
            vec![query_node(q)],
        ),
        Expr::Star => FlatNode::leaf("*", class),
    }
}
