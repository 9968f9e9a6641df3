//! Visibility check for edited queries.
//!
//! A reference is in scope when its instance is bound by the block it sits
//! in or by an enclosing block. ON conditions and the predicates of a nested
//! join only see the instances of their own join subtree.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ir::*;

type Scope = BTreeSet<InstanceId>;

pub fn validate(q: &Query) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in q.all_instances() {
        if !seen.insert(id.clone()) {
            return Err(Error::InconsistentEdit(format!("{id} is bound twice")));
        }
    }
    query(q, &Scope::new(), false)
}

fn query(q: &Query, outer: &Scope, exists: bool) -> Result<()> {
    match q {
        Query::Select(s) => select(s, outer, exists),
        Query::SetOp { inputs, .. } => inputs.iter().try_for_each(|i| query(i, outer, false)),
    }
}

fn select(s: &Select, outer: &Scope, exists: bool) -> Result<()> {
    if s.projection.is_empty() && !exists {
        return Err(Error::InconsistentEdit("empty SELECT list".into()));
    }
    tree(&s.from, outer)?;
    let visible: Scope = outer.union(&s.from.instance_set()).cloned().collect();
    for e in s.projection.iter().chain(&s.group_by).chain(s.order_by.iter().map(|o| &o.expr)) {
        expr(e, &visible)?;
    }
    if s.group_by.iter().any(Expr::contains_agg) {
        return Err(Error::InconsistentEdit("aggregate in GROUP BY".into()));
    }
    s.having.iter().try_for_each(|p| pred(p, &visible))
}

fn tree(t: &JoinTree, outer: &Scope) -> Result<()> {
    let conds = match t {
        JoinTree::Inner { inputs, preds } => {
            inputs.iter().try_for_each(|i| tree(i, outer))?;
            preds
        }
        JoinTree::Outer { left, right, on, .. } => {
            tree(left, outer)?;
            tree(right, outer)?;
            on
        }
        JoinTree::Relation(_) => return Ok(()),
        JoinTree::Derived { query: q, .. } => return query(q, outer, false),
    };
    let scope: Scope = outer.union(&t.instance_set()).cloned().collect();
    for p in conds {
        if p.contains_agg() {
            return Err(Error::InconsistentEdit("aggregate in a join or WHERE condition".into()));
        }
        pred(p, &scope)?;
    }
    Ok(())
}

fn pred(p: &Pred, scope: &Scope) -> Result<()> {
    let mut res = Ok(());
    p.operands(&mut |e| {
        if res.is_ok() {
            res = expr(e, scope);
        }
    });
    res?;
    subqueries(p, scope)
}

fn subqueries(p: &Pred, scope: &Scope) -> Result<()> {
    match p {
        Pred::Exists { query: q, .. } => query(q, scope, true),
        Pred::InSubquery { query: q, .. } | Pred::Quantified { query: q, .. } => query(q, scope, false),
        Pred::And(ps) | Pred::Or(ps) => ps.iter().try_for_each(|x| subqueries(x, scope)),
        Pred::Not(x) => subqueries(x, scope),
        _ => Ok(()),
    }
}

fn expr(e: &Expr, scope: &Scope) -> Result<()> {
    let mut res = Ok(());
    e.visit(&mut |x| {
        if res.is_err() {
            return;
        }
        res = match x {
            Expr::Attr(AttrRef { instance, .. }) | Expr::Col { instance, .. } if !scope.contains(instance) => {
                Err(Error::InconsistentEdit(format!("{instance} is not in scope")))
            }
            Expr::Subquery(q) => query(q, scope, false),
            _ => Ok(()),
        };
    });
    res
}
