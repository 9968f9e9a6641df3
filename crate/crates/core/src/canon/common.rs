//! Helpers shared by the rewrite rules: predicate traversal, equivalence
//! classes and per-block functional dependencies.

use std::collections::{BTreeSet, HashMap};

use crate::flat::expr_key;
use crate::ir::*;
use crate::schema::{closure_with, DerivedFd, Schema};

/// Apply `f` to every predicate node in the query, children before parents.
/// Returns whether any call reported a change.
pub(crate) fn rewrite_preds(q: &mut Query, f: &mut dyn FnMut(&mut Pred) -> bool) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| {
        s.from.pred_lists_mut(&mut |ps| {
            for p in ps.iter_mut() {
                changed |= rewrite_pred(p, f);
            }
        });
        for p in &mut s.having {
            changed |= rewrite_pred(p, f);
        }
    });
    changed
}

fn rewrite_pred(p: &mut Pred, f: &mut dyn FnMut(&mut Pred) -> bool) -> bool {
    let mut changed = false;
    match p {
        Pred::And(ps) | Pred::Or(ps) => {
            for c in ps.iter_mut() {
                changed |= rewrite_pred(c, f);
            }
        }
        Pred::Not(c) => changed |= rewrite_pred(c, f),
        _ => {}
    }
    changed | f(p)
}

/// Visit every join tree node of every block, parents first.
pub(crate) fn rewrite_trees(q: &mut Query, f: &mut dyn FnMut(&mut JoinTree) -> bool) -> bool {
    fn walk(t: &mut JoinTree, f: &mut dyn FnMut(&mut JoinTree) -> bool) -> bool {
        let mut changed = f(t);
        match t {
            JoinTree::Inner { inputs, .. } => {
                for i in inputs {
                    changed |= walk(i, f);
                }
            }
            JoinTree::Outer { left, right, .. } => {
                changed |= walk(left, f);
                changed |= walk(right, f);
            }
            _ => {}
        }
        changed
    }
    let mut changed = false;
    q.for_each_select_mut(&mut |s| changed |= walk(&mut s.from, f));
    changed
}

/// Replace expressions wherever `f` yields a replacement, at any depth.
pub(crate) fn substitute(q: &mut Query, f: &dyn Fn(&Expr) -> Option<Expr>) -> bool {
    let mut changed = false;
    q.for_each_expr_mut(&mut |e| {
        if let Some(n) = f(e) {
            if *e != n {
                *e = n;
                changed = true;
            }
        }
    });
    changed
}

/// Substitute inside one expression, including inside its scalar subqueries.
pub(crate) fn substitute_expr(e: &mut Expr, f: &dyn Fn(&Expr) -> Option<Expr>) -> bool {
    let mut changed = false;
    e.visit_mut(&mut |x| {
        if let Some(n) = f(x) {
            if *x != n {
                *x = n;
                changed = true;
            }
        }
        if let Expr::Subquery(q) = x {
            changed |= substitute(q, f);
        }
    });
    changed
}

/// Substitute in the operands of a predicate and inside its subqueries.
pub(crate) fn substitute_pred(p: &mut Pred, f: &dyn Fn(&Expr) -> Option<Expr>) -> bool {
    let mut changed = false;
    p.operands_mut(&mut |e| changed |= substitute_expr(e, f));
    p.visit_subquery_preds_mut(&mut |q| changed |= substitute(q, f));
    changed
}

trait ConnectiveQueries {
    fn visit_subquery_preds_mut(&mut self, f: &mut dyn FnMut(&mut Query));
}

impl ConnectiveQueries for Pred {
    /// Subqueries owned by EXISTS/IN/quantified nodes (scalar ones are reached
    /// through the operands).
    fn visit_subquery_preds_mut(&mut self, f: &mut dyn FnMut(&mut Query)) {
        match self {
            Pred::InSubquery { query, .. }
            | Pred::Quantified { query, .. }
            | Pred::Exists { query, .. } => f(query),
            Pred::And(ps) | Pred::Or(ps) => {
                ps.iter_mut().for_each(|p| p.visit_subquery_preds_mut(f))
            }
            Pred::Not(p) => p.visit_subquery_preds_mut(f),
            _ => {}
        }
    }
}

/// Derived-table columns take part in closures as attribute `$i`.
pub(crate) fn col_ref(instance: &InstanceId, index: usize) -> AttrRef {
    AttrRef::new(instance.clone(), format!("${index}"))
}

pub(crate) fn as_attr(e: &Expr) -> Option<AttrRef> {
    match e {
        Expr::Attr(a) => Some(a.clone()),
        Expr::Col { instance, index } => Some(col_ref(instance, *index)),
        _ => None,
    }
}

pub(crate) fn from_attr(a: &AttrRef) -> Expr {
    match a.attr.strip_prefix('$').and_then(|i| i.parse().ok()) {
        Some(index) if a.instance.is_derived() => Expr::Col {
            instance: a.instance.clone(),
            index,
        },
        _ => Expr::Attr(a.clone()),
    }
}

/// Literals first, then attribute instances in (relation, ordinal, attribute)
/// order; anything else by serialization.
pub(crate) fn member_rank(e: &Expr) -> (u8, Option<AttrRef>, String) {
    match e {
        Expr::Lit(_) => (0, None, expr_key(e)),
        Expr::Attr(_) | Expr::Col { .. } => (1, as_attr(e), String::new()),
        _ => (2, None, expr_key(e)),
    }
}

/// Union of overlapping member groups. Members of each class are distinct and
/// ranked; classes come out in order of their representative.
pub(crate) fn merge_classes(groups: Vec<Vec<Expr>>) -> Vec<Vec<Expr>> {
    let mut classes: Vec<Vec<Expr>> = Vec::new();
    for g in groups {
        let mut merged: Vec<Expr> = g;
        let mut i = 0;
        while i < classes.len() {
            if classes[i].iter().any(|m| merged.contains(m)) {
                merged.extend(classes.swap_remove(i));
            } else {
                i += 1;
            }
        }
        classes.push(merged);
    }
    for c in &mut classes {
        c.sort_by_key(member_rank);
        c.dedup();
    }
    classes.retain(|c| c.len() >= 2);
    classes.sort_by_key(|c| member_rank(&c[0]));
    classes
}

pub(crate) fn list_classes(preds: &[Pred]) -> Vec<Vec<Expr>> {
    preds
        .iter()
        .filter_map(|p| match p {
            Pred::EqClass(ms) => Some(ms.clone()),
            _ => None,
        })
        .collect()
}

/// Classes that hold on every output row of a join subtree. An outer join
/// only passes up the classes of its preserved side.
pub(crate) fn tree_env(t: &JoinTree) -> Vec<Vec<Expr>> {
    match t {
        JoinTree::Inner { inputs, preds } => {
            let mut groups = list_classes(preds);
            for i in inputs {
                groups.extend(tree_env(i));
            }
            merge_classes(groups)
        }
        JoinTree::Outer {
            kind: OuterKind::Left,
            left,
            ..
        } => tree_env(left),
        JoinTree::Outer {
            kind: OuterKind::Right,
            right,
            ..
        } => tree_env(right),
        _ => Vec::new(),
    }
}

/// Map from each non-representative member to its class representative.
pub(crate) fn rep_map(classes: &[Vec<Expr>]) -> HashMap<Expr, Expr> {
    let mut out = HashMap::new();
    for c in classes {
        for m in &c[1..] {
            out.insert(m.clone(), c[0].clone());
        }
    }
    out
}

/// Functional dependencies holding on the rows of a block before grouping:
/// instance keys, declared FDs and the block's equivalence classes.
pub(crate) fn block_fds(s: &Select, schema: &Schema) -> Vec<DerivedFd> {
    let mut fds = Vec::new();
    for inst in s.from.instances() {
        let Ok(rel) = schema.relation(&inst.relation) else {
            continue;
        };
        let all: BTreeSet<AttrRef> = rel
            .attr_names()
            .map(|a| AttrRef::new(inst.clone(), a))
            .collect();
        for key in rel.keys() {
            fds.push(DerivedFd {
                lhs: key.iter().map(|a| AttrRef::new(inst.clone(), a.as_str())).collect(),
                rhs: all.clone(),
            });
        }
        for fd in schema
            .functional_dependencies
            .iter()
            .filter(|f| f.relation == inst.relation)
        {
            fds.push(DerivedFd {
                lhs: fd.lhs.iter().map(|a| AttrRef::new(inst.clone(), a.as_str())).collect(),
                rhs: fd.rhs.iter().map(|a| AttrRef::new(inst.clone(), a.as_str())).collect(),
            });
        }
    }
    for class in tree_env(&s.from) {
        let attrs: BTreeSet<AttrRef> = class.iter().filter_map(as_attr).collect();
        if class.iter().any(|m| matches!(m, Expr::Lit(_))) {
            fds.push(DerivedFd {
                lhs: BTreeSet::new(),
                rhs: attrs,
            });
        } else {
            for a in &attrs {
                fds.push(DerivedFd {
                    lhs: BTreeSet::from([a.clone()]),
                    rhs: attrs.clone(),
                });
            }
        }
    }
    fds
}

pub(crate) fn closure(seed: &BTreeSet<AttrRef>, fds: &[DerivedFd]) -> BTreeSet<AttrRef> {
    closure_with(seed, fds)
}

/// Number of output columns.
pub(crate) fn arity(q: &Query, schema: &Schema) -> Option<usize> {
    match q {
        Query::Select(s) => {
            let mut n = 0;
            for e in &s.projection {
                n += match e {
                    Expr::Star => star_expansion(s, schema)?.len(),
                    _ => 1,
                };
            }
            Some(n)
        }
        Query::SetOp { inputs, .. } => inputs.first().and_then(|q| arity(q, schema)),
    }
}

/// Columns of an instance in declaration order.
pub(crate) fn instance_columns(
    inst: &InstanceId,
    derived: Option<&Query>,
    schema: &Schema,
) -> Option<Vec<Expr>> {
    match derived {
        Some(q) => Some(
            (0..arity(q, schema)?)
                .map(|index| Expr::Col {
                    instance: inst.clone(),
                    index,
                })
                .collect(),
        ),
        None => Some(
            schema
                .relation(&inst.relation)
                .ok()?
                .attr_names()
                .map(|a| Expr::attr(inst.clone(), a))
                .collect(),
        ),
    }
}

/// What `*` stands for: every column of every instance, instances in
/// lexicographic order.
pub(crate) fn star_expansion(s: &Select, schema: &Schema) -> Option<Vec<Expr>> {
    let mut derived = HashMap::new();
    s.from.derived(&mut |id, q| {
        derived.insert(id.clone(), q.clone());
    });
    let mut insts = s.from.instances();
    insts.sort();
    let mut out = Vec::new();
    for i in &insts {
        out.extend(instance_columns(i, derived.get(i), schema)?);
    }
    Some(out)
}

/// Projection with `*` expanded.
pub(crate) fn output_exprs(s: &Select, schema: &Schema) -> Option<Vec<Expr>> {
    let mut out = Vec::new();
    for e in &s.projection {
        match e {
            Expr::Star => out.extend(star_expansion(s, schema)?),
            e => out.push(e.clone()),
        }
    }
    Some(out)
}

/// Whether every instance reachable from this block is a base relation.
pub(crate) fn all_base(s: &Select) -> bool {
    s.from.instances().iter().all(|i| !i.is_derived())
}

/// Whether the expression can evaluate to NULL.
pub(crate) fn may_be_null(e: &Expr, schema: &Schema, padded: &BTreeSet<InstanceId>) -> bool {
    match e {
        Expr::Attr(a) => padded.contains(&a.instance) || schema.attr_nullable(a),
        Expr::Col { .. } => true,
        Expr::Lit(v) => *v == Value::Null,
        Expr::Agg {
            func: AggFunc::Count,
            ..
        } => false,
        Expr::Agg { .. } => true,
        Expr::Plus(x, _) => may_be_null(x, schema, padded),
        Expr::Subquery(_) => true,
        Expr::Star => false,
    }
}

/// Instances that are null-padded anywhere in the query.
pub(crate) fn all_padded(q: &Query) -> BTreeSet<InstanceId> {
    let mut out = BTreeSet::new();
    q.for_each_select(&mut |s| out.extend(s.from.padded_instances()));
    out
}

pub(crate) fn is_int_expr(e: &Expr, schema: &Schema) -> bool {
    match e {
        Expr::Attr(a) => schema.attr_type(a) == Some(crate::schema::AttrType::Int),
        Expr::Lit(Value::Int(_)) => true,
        Expr::Plus(x, _) => is_int_expr(x, schema),
        Expr::Agg {
            func: AggFunc::Count,
            ..
        } => true,
        Expr::Agg {
            func: AggFunc::Sum | AggFunc::Min | AggFunc::Max,
            arg: Some(a),
            ..
        } => is_int_expr(a, schema),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(r: &str, x: &str) -> Expr {
        Expr::attr(InstanceId::new(r, 1), x)
    }

    #[test]
    fn overlapping_groups_merge() {
        let c = merge_classes(vec![
            vec![a("s", "b"), a("r", "a")],
            vec![a("t", "c"), a("u", "d")],
            vec![a("s", "b"), a("t", "c")],
        ]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0][0], a("r", "a"));
        assert_eq!(c[0].len(), 4);
    }

    #[test]
    fn literal_is_representative() {
        let c = merge_classes(vec![vec![a("r", "a"), Expr::Lit(Value::Int(3))]]);
        assert_eq!(c[0][0], Expr::Lit(Value::Int(3)));
    }

    #[test]
    fn col_round_trips_through_attr() {
        let e = Expr::Col {
            instance: InstanceId::new(DERIVED, 2),
            index: 3,
        };
        assert_eq!(from_attr(&as_attr(&e).unwrap()), e);
    }
}
