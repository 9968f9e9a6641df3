//! Syntactic rewrites. None of them consult keys or dependencies; nullability
//! is only used to decide which IS NULL guards a NOT EXISTS needs.

use std::collections::{BTreeMap, HashMap};

use super::common::*;
use crate::flat::{expr_key, pred_key};
use crate::ir::*;
use crate::schema::Schema;

/// BETWEEN as a pair of comparisons.
pub(super) fn between(q: &mut Query) -> bool {
    rewrite_preds(q, &mut |p| {
        let Pred::Between {
            expr,
            low,
            high,
            negated,
        } = p
        else {
            return false;
        };
        let (e, lo, hi) = (expr.clone(), low.clone(), high.clone());
        *p = if *negated {
            Pred::Or(vec![
                Pred::cmp(CmpOp::Lt, e.clone(), lo),
                Pred::cmp(CmpOp::Gt, e, hi),
            ])
        } else {
            Pred::And(vec![
                Pred::cmp(CmpOp::Ge, e.clone(), lo),
                Pred::cmp(CmpOp::Le, e, hi),
            ])
        };
        true
    })
}

/// Logical complement with NOT pushed all the way down. Exact under
/// three-valued logic.
pub(crate) fn negate(p: Pred) -> Pred {
    match p {
        Pred::Cmp { op, left, right } => Pred::Cmp {
            op: op.negate(),
            left,
            right,
        },
        Pred::EqClass(ms) => Pred::Or(
            ms.windows(2)
                .map(|w| Pred::cmp(CmpOp::Ne, w[0].clone(), w[1].clone()))
                .collect(),
        ),
        Pred::Like {
            expr,
            pattern,
            negated,
        } => Pred::Like {
            expr,
            pattern,
            negated: !negated,
        },
        Pred::IsNull { expr, negated } => Pred::IsNull {
            expr,
            negated: !negated,
        },
        Pred::Between {
            expr,
            low,
            high,
            negated,
        } => Pred::Between {
            expr,
            low,
            high,
            negated: !negated,
        },
        Pred::InList {
            expr,
            list,
            negated,
        } => Pred::InList {
            expr,
            list,
            negated: !negated,
        },
        Pred::InSubquery {
            expr,
            query,
            negated,
        } => Pred::InSubquery {
            expr,
            query,
            negated: !negated,
        },
        Pred::Quantified {
            left,
            op,
            all,
            query,
        } => Pred::Quantified {
            left,
            op: op.negate(),
            all: !all,
            query,
        },
        Pred::Exists { query, negated } => Pred::Exists {
            query,
            negated: !negated,
        },
        Pred::And(ps) => Pred::Or(ps.into_iter().map(negate).collect()),
        Pred::Or(ps) => Pred::And(ps.into_iter().map(negate).collect()),
        Pred::Not(p) => *p,
        Pred::Bool(b) => Pred::Bool(!b),
    }
}

pub(super) fn push_not(q: &mut Query) -> bool {
    rewrite_preds(q, &mut |p| {
        let Pred::Not(inner) = p else {
            return false;
        };
        let inner = std::mem::replace(&mut **inner, Pred::Bool(true));
        *p = negate(inner);
        true
    })
}

/// `>`/`>=` become `<`/`<=`; operands of `=`/`<>` are put in key order.
pub(super) fn direction(q: &mut Query) -> bool {
    rewrite_preds(q, &mut |p| {
        let Pred::Cmp { op, left, right } = p else {
            return false;
        };
        let swap = match op {
            CmpOp::Gt | CmpOp::Ge => true,
            CmpOp::Eq | CmpOp::Ne => expr_key(left) > expr_key(right),
            CmpOp::Lt | CmpOp::Le => false,
        };
        if swap {
            *op = op.flip();
            std::mem::swap(left, right);
        }
        swap
    })
}

/// A subquery whose single output column can be moved into a correlation predicate.
fn single_column(q: &Query) -> Option<&Expr> {
    match q {
        Query::Select(s) if s.limit.is_none() && s.projection.len() == 1 => {
            match &s.projection[0] {
                Expr::Star => None,
                e => Some(e),
            }
        }
        _ => None,
    }
}

/// Attach a correlation predicate: WHERE for plain blocks, HAVING when the
/// projected column is computed per group.
fn correlate(mut q: Query, pred: Pred) -> Box<Query> {
    if let Query::Select(s) = &mut q {
        if s.is_grouped() {
            s.having.push(pred);
        } else {
            s.where_preds_mut().push(pred);
        }
    }
    Box::new(q)
}

/// IN / SOME subqueries and IN lists.
pub(super) fn in_to_exists(q: &mut Query) -> bool {
    rewrite_preds(q, &mut |p| match p {
        Pred::InSubquery {
            expr,
            query,
            negated: false,
        } => {
            let Some(col) = single_column(query).cloned() else {
                return false;
            };
            let cond = Pred::cmp(CmpOp::Eq, expr.clone(), col);
            let query = std::mem::replace(&mut **query, dummy_query());
            *p = Pred::Exists {
                query: correlate(query, cond),
                negated: false,
            };
            true
        }
        Pred::Quantified {
            left,
            op,
            all: false,
            query,
        } => {
            let Some(col) = single_column(query).cloned() else {
                return false;
            };
            let cond = Pred::cmp(*op, left.clone(), col);
            let query = std::mem::replace(&mut **query, dummy_query());
            *p = Pred::Exists {
                query: correlate(query, cond),
                negated: false,
            };
            true
        }
        Pred::InList {
            expr,
            list,
            negated: false,
        } if !list.is_empty() => {
            let mut alts: Vec<Pred> = list
                .iter()
                .map(|v| Pred::cmp(CmpOp::Eq, expr.clone(), v.clone()))
                .collect();
            *p = if alts.len() == 1 {
                alts.pop().unwrap()
            } else {
                Pred::Or(alts)
            };
            true
        }
        _ => false,
    })
}

/// NOT IN / ALL subqueries and NOT IN lists. `x NOT IN (SELECT p ...)` keeps
/// a row only when no `p` equals `x` and none of the comparisons is unknown,
/// hence the IS NULL guards inside the NOT EXISTS.
pub(super) fn not_in_to_not_exists(q: &mut Query, schema: &Schema) -> bool {
    let padded = all_padded(q);
    rewrite_preds(q, &mut |p| {
        let (x, op, query) = match p {
            Pred::InSubquery {
                expr,
                query,
                negated: true,
            } => (expr.clone(), CmpOp::Ne, query),
            Pred::Quantified {
                left,
                op,
                all: true,
                query,
            } => (left.clone(), *op, query),
            Pred::InList {
                expr,
                list,
                negated: true,
            } if !list.is_empty() => {
                let mut conj: Vec<Pred> = list
                    .iter()
                    .map(|v| Pred::cmp(CmpOp::Ne, expr.clone(), v.clone()))
                    .collect();
                *p = if conj.len() == 1 {
                    conj.pop().unwrap()
                } else {
                    Pred::And(conj)
                };
                return true;
            }
            _ => return false,
        };
        let Some(col) = single_column(query).cloned() else {
            return false;
        };
        let mut padded = padded.clone();
        if let Query::Select(s) = &**query {
            padded.extend(s.from.padded_instances());
        }
        let mut alts = vec![Pred::cmp(op.negate(), x.clone(), col.clone())];
        for e in [&x, &col] {
            if may_be_null(e, schema, &padded) {
                alts.push(Pred::IsNull {
                    expr: e.clone(),
                    negated: false,
                });
            }
        }
        let cond = if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            Pred::Or(alts)
        };
        let query = std::mem::replace(&mut **query, dummy_query());
        *p = Pred::Exists {
            query: correlate(query, cond),
            negated: true,
        };
        true
    })
}

fn dummy_query() -> Query {
    Query::SetOp {
        kind: SetKind::Union,
        all: false,
        inputs: Vec::new(),
    }
}

/// DISTINCT cannot change the outcome of EXISTS / IN / ALL / SOME, and the
/// projection of an EXISTS subquery is irrelevant unless it makes the block an
/// aggregate (which always yields one row).
pub(super) fn subquery_distinct(q: &mut Query) -> bool {
    rewrite_preds(q, &mut |p| {
        let (query, exists) = match p {
            Pred::Exists { query, .. } => (query, true),
            Pred::InSubquery { query, .. } | Pred::Quantified { query, .. } => (query, false),
            _ => return false,
        };
        let Query::Select(s) = &mut **query else {
            return false;
        };
        if s.limit.is_some() {
            return false;
        }
        let mut changed = std::mem::take(&mut s.distinct);
        let aggregate_row = s.projection.iter().any(Expr::contains_agg)
            && s.group_by.is_empty()
            && s.having.is_empty();
        if exists && !aggregate_row && !s.projection.is_empty() {
            s.projection.clear();
            changed = true;
        }
        changed
    })
}

pub(super) fn right_to_left(q: &mut Query) -> bool {
    rewrite_trees(q, &mut |t| match t {
        JoinTree::Outer {
            kind: kind @ OuterKind::Right,
            left,
            right,
            ..
        } => {
            *kind = OuterKind::Left;
            std::mem::swap(left, right);
            true
        }
        _ => false,
    })
}

/// ORDER BY only matters at the top or together with LIMIT.
pub(super) fn subquery_order(q: &mut Query) -> bool {
    let mut changed = false;
    let mut clear = |s: &mut Select| {
        if s.limit.is_none() && !s.order_by.is_empty() {
            s.order_by.clear();
            changed = true;
        }
    };
    match q {
        Query::Select(s) => for_each_nested_query_mut(s, &mut |n| n.for_each_select_mut(&mut clear)),
        Query::SetOp { .. } => q.for_each_select_mut(&mut clear),
    }
    changed
}

// ---- flattening ----

pub(super) fn flatten(q: &mut Query, schema: &Schema) -> bool {
    let mut changed = flatten_set_ops(q);
    changed |= merge_derived(q, schema);
    q.for_each_select_mut(&mut |s| {
        changed |= flatten_tree(&mut s.from);
        if !matches!(s.from, JoinTree::Inner { .. }) {
            s.where_preds_mut();
            changed = true;
        }
        s.from.pred_lists_mut(&mut |ps| changed |= normalize_list(ps));
        changed |= normalize_list(&mut s.having);
        changed |= fold_star(s, schema, &HashMap::new());
    });
    changed
}

fn flatten_set_ops(q: &mut Query) -> bool {
    let mut changed = false;
    q.for_each_query_mut(&mut |q| {
        let Query::SetOp { kind, all, inputs } = q else {
            return;
        };
        if *kind == SetKind::Except {
            return;
        }
        let mut out = Vec::with_capacity(inputs.len());
        for i in inputs.drain(..) {
            match i {
                Query::SetOp {
                    kind: k,
                    all: a,
                    inputs: inner,
                } if k == *kind && a == *all => {
                    out.extend(inner);
                    changed = true;
                }
                i => out.push(i),
            }
        }
        *inputs = out;
    });
    changed
}

/// A FROM subquery that is a plain select-project-join block.
fn mergeable(q: &Query) -> Option<&Select> {
    let s = q.as_select()?;
    let plain = !s.distinct
        && s.group_by.is_empty()
        && s.having.is_empty()
        && s.order_by.is_empty()
        && s.limit.is_none()
        && !s.has_aggregates()
        && s
            .projection
            .iter()
            .all(|e| matches!(e, Expr::Attr(_) | Expr::Col { .. } | Expr::Star));
    plain.then_some(s)
}

/// Inline plain FROM subqueries into the enclosing join.
fn merge_derived(q: &mut Query, schema: &Schema) -> bool {
    let mut columns: BTreeMap<InstanceId, Vec<Expr>> = BTreeMap::new();
    q.for_each_select_mut(&mut |s| {
        inline_in_tree(&mut s.from, schema, &mut columns);
    });
    if columns.is_empty() {
        return false;
    }
    substitute(q, &|e| match e {
        Expr::Col { instance, index } => columns.get(instance).map(|c| c[*index].clone()),
        _ => None,
    });
    true
}

fn inline_in_tree(
    t: &mut JoinTree,
    schema: &Schema,
    columns: &mut BTreeMap<InstanceId, Vec<Expr>>,
) {
    match t {
        JoinTree::Inner { inputs, .. } => inputs
            .iter_mut()
            .for_each(|i| inline_in_tree(i, schema, columns)),
        JoinTree::Outer { left, right, .. } => {
            inline_in_tree(left, schema, columns);
            inline_in_tree(right, schema, columns);
        }
        JoinTree::Derived { instance, query } => {
            let Some(s) = mergeable(query) else {
                return;
            };
            let Some(out) = output_exprs(s, schema) else {
                return;
            };
            columns.insert(instance.clone(), out);
            let Query::Select(s) = std::mem::replace(&mut **query, dummy_query()) else {
                unreachable!()
            };
            *t = s.from;
        }
        JoinTree::Relation(_) => {}
    }
}

fn flatten_tree(t: &mut JoinTree) -> bool {
    let mut changed = false;
    match t {
        JoinTree::Inner { inputs, preds } => {
            let mut out = Vec::with_capacity(inputs.len());
            for mut i in inputs.drain(..) {
                changed |= flatten_tree(&mut i);
                match i {
                    JoinTree::Inner {
                        inputs: ii,
                        preds: pp,
                    } => {
                        out.extend(ii);
                        preds.extend(pp);
                        changed = true;
                    }
                    i => out.push(i),
                }
            }
            *inputs = out;
        }
        JoinTree::Outer { left, right, .. } => {
            for side in [left, right] {
                changed |= flatten_tree(side);
                if let JoinTree::Inner { inputs, preds } = &mut **side {
                    if inputs.len() == 1 && preds.is_empty() {
                        let only = inputs.pop().unwrap();
                        **side = only;
                        changed = true;
                    }
                }
            }
        }
        _ => {}
    }
    changed
}

/// Flatten a conjunct list: splice AND, drop TRUE, flatten nested AND/OR and
/// gather equalities into classes.
pub(crate) fn normalize_list(list: &mut Vec<Pred>) -> bool {
    let before = list.clone();
    let mut flat = Vec::with_capacity(list.len());
    for mut p in list.drain(..) {
        normalize_pred(&mut p);
        match p {
            Pred::And(ps) => flat.extend(ps),
            Pred::Bool(true) => {}
            p => flat.push(p),
        }
    }
    form_classes(&mut flat);
    *list = flat;
    *list != before
}

fn normalize_pred(p: &mut Pred) {
    match p {
        Pred::And(ps) => {
            let mut out = Vec::with_capacity(ps.len());
            for mut c in ps.drain(..) {
                normalize_pred(&mut c);
                match c {
                    Pred::And(inner) => out.extend(inner),
                    Pred::Bool(true) => {}
                    c => out.push(c),
                }
            }
            form_classes(&mut out);
            *p = match out.len() {
                0 => Pred::Bool(true),
                1 => out.pop().unwrap(),
                _ => Pred::And(out),
            };
        }
        Pred::Or(ps) => {
            let mut out = Vec::with_capacity(ps.len());
            for mut c in ps.drain(..) {
                normalize_pred(&mut c);
                match c {
                    Pred::Or(inner) => out.extend(inner),
                    Pred::Bool(false) => {}
                    Pred::And(_) | Pred::Not(_) => out.push(c),
                    // A lone equality in a branch is a one-conjunct list.
                    c => {
                        let mut one = vec![c];
                        form_classes(&mut one);
                        out.push(match one.len() {
                            1 => one.pop().unwrap(),
                            _ => Pred::And(one),
                        });
                    }
                }
            }
            *p = match out.len() {
                0 => Pred::Bool(false),
                1 => out.pop().unwrap(),
                _ => Pred::Or(out),
            };
        }
        Pred::Not(c) => normalize_pred(c),
        _ => {}
    }
}

fn class_member(e: &Expr) -> bool {
    match e {
        Expr::Attr(_) | Expr::Col { .. } => true,
        Expr::Lit(v) => *v != Value::Null,
        _ => false,
    }
}

/// Merge equality conjuncts over attributes and literals into classes.
/// A class never holds two literals; extra ones stay as comparisons against
/// the least attribute, and `a = a` becomes `a IS NOT NULL`.
fn form_classes(list: &mut Vec<Pred>) {
    let mut groups = Vec::new();
    let mut rest = Vec::with_capacity(list.len());
    for p in list.drain(..) {
        match p {
            Pred::EqClass(ms) if ms.iter().all(class_member) => groups.push(ms),
            Pred::Cmp {
                op: CmpOp::Eq,
                left,
                right,
            } if class_member(&left)
                && class_member(&right)
                && !(matches!(left, Expr::Lit(_)) && matches!(right, Expr::Lit(_))) =>
            {
                groups.push(vec![left, right])
            }
            p => rest.push(p),
        }
    }
    let mut singles: Vec<Expr> = Vec::new();
    for g in &groups {
        let mut g = g.clone();
        g.dedup();
        if g.iter().all(|m| *m == g[0]) && !singles.contains(&g[0]) {
            singles.push(g[0].clone());
        }
    }
    let mut classes: Vec<Pred> = Vec::new();
    let merged = merge_classes(groups);
    for s in singles {
        if !merged.iter().any(|c| c.contains(&s)) {
            classes.push(Pred::IsNull {
                expr: s,
                negated: true,
            });
        }
    }
    for mut c in merged {
        let lits = c.iter().take_while(|m| matches!(m, Expr::Lit(_))).count();
        if lits == c.len() {
            // Only constants: `'a' = 'a'` holds, distinct literals compare.
            let first = c[0].clone();
            for l in c.drain(1..) {
                classes.push(Pred::cmp(CmpOp::Eq, first.clone(), l));
            }
            continue;
        }
        if lits > 1 {
            let extra: Vec<Expr> = c.drain(1..lits).collect();
            let anchor = c[1].clone();
            for l in extra {
                // Operands in the order the direction rule would give them.
                let (a, b) = if expr_key(&anchor) > expr_key(&l) {
                    (l, anchor.clone())
                } else {
                    (anchor.clone(), l)
                };
                classes.push(Pred::cmp(CmpOp::Eq, a, b));
            }
        }
        classes.push(Pred::EqClass(c));
    }
    classes.sort_by_key(pred_key);
    rest.extend(classes);
    *list = rest;
}

/// Replace a projection that lists every column in lexicographic instance
/// order with `*`. `reps` maps attributes to their class representatives so
/// that an equivalent listing also folds.
pub(super) fn fold_star(s: &mut Select, schema: &Schema, reps: &HashMap<Expr, Expr>) -> bool {
    if !all_base(s) || s.projection.iter().any(|e| matches!(e, Expr::Star)) {
        return false;
    }
    let Some(full) = star_expansion(s, schema) else {
        return false;
    };
    let canon = |e: &Expr| reps.get(e).cloned().unwrap_or_else(|| e.clone());
    let same = full.len() == s.projection.len()
        && full
            .iter()
            .zip(&s.projection)
            .all(|(a, b)| canon(a) == canon(b));
    if same {
        s.projection = vec![Expr::Star];
    }
    same
}
