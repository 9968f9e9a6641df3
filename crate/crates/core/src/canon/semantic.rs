//! Rewrites justified by keys, foreign keys, functional dependencies and
//! equivalence classes.

use std::collections::{BTreeSet, HashMap};

use super::common::*;
use super::syntactic::fold_star;
use crate::ir::*;
use crate::schema::{DerivedFd, Schema};

/// Candidate keys of an instance as attribute sets. A FROM subquery has the
/// set of all its columns as key when its result is duplicate-free.
fn instance_keys(inst: &InstanceId, derived: Option<&Query>, schema: &Schema) -> Vec<BTreeSet<AttrRef>> {
    match derived {
        Some(q) => {
            if !dup_free(q, schema) {
                return Vec::new();
            }
            match arity(q, schema) {
                Some(n) => vec![(0..n).map(|i| col_ref(inst, i)).collect()],
                None => Vec::new(),
            }
        }
        None => match schema.relation(&inst.relation) {
            Ok(rel) => rel
                .keys()
                .into_iter()
                .map(|k| k.iter().map(|a| AttrRef::new(inst.clone(), a.as_str())).collect())
                .collect(),
            Err(_) => Vec::new(),
        },
    }
}

fn derived_queries(s: &Select) -> HashMap<InstanceId, Query> {
    let mut out = HashMap::new();
    s.from.derived(&mut |id, q| {
        out.insert(id.clone(), q.clone());
    });
    out
}

fn output_closure(s: &Select, schema: &Schema, fds: &[DerivedFd]) -> Option<BTreeSet<AttrRef>> {
    let out = output_exprs(s, schema)?;
    let seed = out.iter().filter_map(as_attr).collect();
    Some(closure(&seed, fds))
}

/// Whether the block yields distinct rows even without DISTINCT. `assume`
/// names a FROM subquery to be treated as duplicate-free.
fn rows_unique(s: &Select, schema: &Schema, assume: Option<&InstanceId>) -> bool {
    let fds = block_fds(s, schema);
    let Some(cl) = output_closure(s, schema, &fds) else {
        return false;
    };
    if s.is_grouped() {
        return s.group_by.is_empty()
            || s
                .group_by
                .iter()
                .all(|g| as_attr(g).is_some_and(|a| cl.contains(&a)));
    }
    let derived = derived_queries(s);
    s.from.instances().iter().all(|i| {
        if Some(i) == assume {
            let Some(n) = derived.get(i).and_then(|q| arity(q, schema)) else {
                return false;
            };
            return (0..n).all(|k| cl.contains(&col_ref(i, k)));
        }
        instance_keys(i, derived.get(i), schema)
            .iter()
            .any(|k| k.is_subset(&cl))
    })
}

pub(crate) fn dup_free(q: &Query, schema: &Schema) -> bool {
    match q {
        Query::Select(s) => s.distinct || rows_unique(s, schema, None),
        Query::SetOp { all: false, .. } => true,
        Query::SetOp {
            kind: SetKind::Intersect,
            inputs,
            ..
        } => inputs.iter().any(|i| dup_free(i, schema)),
        Query::SetOp {
            kind: SetKind::Except,
            inputs,
            ..
        } => inputs.first().is_some_and(|i| dup_free(i, schema)),
        Query::SetOp { .. } => false,
    }
}

/// Drop DISTINCT (and ALL on INTERSECT / EXCEPT) when it cannot remove anything.
pub(super) fn distinct_removal(q: &mut Query, schema: &Schema) -> bool {
    let mut changed = false;
    q.for_each_query_mut(&mut |q| match q {
        Query::Select(s) => {
            if s.distinct && rows_unique(s, schema, None) {
                s.distinct = false;
                changed = true;
            }
        }
        Query::SetOp {
            kind: SetKind::Intersect,
            all: all @ true,
            inputs,
        } => {
            if inputs.iter().any(|i| dup_free(i, schema)) {
                *all = false;
                changed = true;
            }
        }
        Query::SetOp {
            kind: SetKind::Except,
            all: all @ true,
            inputs,
        } => {
            if inputs.first().is_some_and(|i| dup_free(i, schema)) {
                *all = false;
                changed = true;
            }
        }
        _ => {}
    });
    changed
}

/// Move DISTINCT from a FROM subquery to the enclosing block, or drop it when
/// the enclosing block is already DISTINCT.
pub(super) fn distinct_pullup(q: &mut Query, schema: &Schema) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| {
        if s.is_grouped() {
            return;
        }
        let Some(out) = output_exprs(s, schema) else {
            return;
        };
        if !out.iter().all(|e| matches!(e, Expr::Attr(_) | Expr::Col { .. })) {
            return;
        }
        let JoinTree::Inner { inputs, .. } = &s.from else {
            return;
        };
        let candidates: Vec<InstanceId> = inputs
            .iter()
            .filter_map(|i| match i {
                JoinTree::Derived { instance, query } => match &**query {
                    Query::Select(d) if d.distinct && !d.is_grouped() && d.limit.is_none() => {
                        Some(instance.clone())
                    }
                    _ => None,
                },
                _ => None,
            })
            .collect();
        for id in candidates {
            let pull = !s.distinct && rows_unique(s, schema, Some(&id));
            if !(s.distinct || pull) {
                continue;
            }
            s.from.derived_mut(&mut |d, q| {
                if *d == id {
                    if let Query::Select(inner) = q {
                        inner.distinct = false;
                    }
                }
            });
            s.distinct = true;
            changed = true;
        }
    });
    changed
}

fn direct_relations(s: &Select) -> Vec<InstanceId> {
    match &s.from {
        JoinTree::Inner { inputs, .. } => inputs
            .iter()
            .filter_map(|i| match i {
                JoinTree::Relation(id) => Some(id.clone()),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn is_key_of(schema: &Schema, relation: &str, attrs: &[String]) -> bool {
    let want: BTreeSet<&String> = attrs.iter().collect();
    schema.relation(relation).is_ok_and(|r| {
        r.keys()
            .iter()
            .any(|k| k.iter().collect::<BTreeSet<_>>() == want)
    })
}

/// Pairs `(R.f_i, D.k_i)` of a non-nullable foreign key from `r` to `d`.
fn fk_pairs(schema: &Schema, r: &InstanceId, d: &InstanceId) -> Vec<Vec<(Expr, Expr)>> {
    let Ok(rel) = schema.relation(&r.relation) else {
        return Vec::new();
    };
    rel.foreign_keys
        .iter()
        .filter(|fk| {
            fk.ref_relation == d.relation
                && fk.all_non_nullable
                && is_key_of(schema, &d.relation, &fk.ref_attrs)
        })
        .map(|fk| {
            fk.attrs
                .iter()
                .zip(&fk.ref_attrs)
                .map(|(f, k)| (Expr::attr(r.clone(), f), Expr::attr(d.clone(), k)))
                .collect()
        })
        .collect()
}

/// Whether GROUP BY completion would pull non-key attributes of `d` into the
/// grouping. Eliminating `d` first would then depend on rule order.
fn groups_beyond_key(s: &Select, schema: &Schema, d: &InstanceId, keys: &BTreeSet<String>) -> bool {
    let Some(seed) = s.group_by.iter().map(as_attr).collect::<Option<BTreeSet<_>>>() else {
        return false;
    };
    closure(&seed, &block_fds(s, schema))
        .iter()
        .any(|a| a.instance == *d && !keys.contains(&a.attr))
}

/// Remove a join with the referenced side of a non-nullable foreign key when
/// that side contributes nothing but its key, which equals the referencing
/// attributes anyway.
pub(super) fn join_elimination(q: &mut Query, schema: &Schema) -> bool {
    // Attribute references anywhere, for the "only the key is used" test.
    let mut used: HashMap<InstanceId, BTreeSet<String>> = HashMap::new();
    q.for_each_expr(&mut |e| {
        if let Expr::Attr(a) = e {
            used.entry(a.instance.clone()).or_default().insert(a.attr.clone());
        }
    });
    let mut found: Option<(InstanceId, Vec<(Expr, Expr)>)> = None;
    q.for_each_select(&mut |s| {
        if found.is_some() || s.projection.iter().any(|e| matches!(e, Expr::Star)) {
            return;
        }
        let direct = direct_relations(s);
        let env = tree_env(&s.from);
        for d in &direct {
            for r in direct.iter().filter(|r| *r != d) {
                for pairs in fk_pairs(schema, r, d) {
                    let joined = pairs
                        .iter()
                        .all(|(f, k)| env.iter().any(|c| c.contains(f) && c.contains(k)));
                    let keys: BTreeSet<String> = pairs
                        .iter()
                        .map(|(_, k)| match k {
                            Expr::Attr(a) => a.attr.clone(),
                            _ => unreachable!(),
                        })
                        .collect();
                    let only_key = used.get(d).is_none_or(|u| u.is_subset(&keys))
                        && !groups_beyond_key(s, schema, d, &keys);
                    if joined && only_key {
                        found = Some((d.clone(), pairs));
                        return;
                    }
                }
            }
        }
    });
    let Some((d, pairs)) = found else {
        return false;
    };
    q.for_each_select_mut(&mut |s| {
        let JoinTree::Inner { inputs, preds } = &mut s.from else {
            return;
        };
        let before = inputs.len();
        inputs.retain(|i| !matches!(i, JoinTree::Relation(id) if *id == d));
        if inputs.len() == before {
            return;
        }
        for p in preds.iter_mut() {
            if let Pred::EqClass(ms) = p {
                ms.retain(|m| !matches!(m, Expr::Attr(a) if a.instance == d));
            }
        }
        preds.retain(|p| !matches!(p, Pred::EqClass(ms) if ms.len() < 2));
    });
    let map: HashMap<Expr, Expr> = pairs.into_iter().map(|(f, k)| (k, f)).collect();
    substitute(q, &|e| map.get(e).cloned());
    true
}

/// Expressions whose NULL makes the operand position unknown.
fn null_sensitive(e: &Expr, out: &mut BTreeSet<InstanceId>) {
    match e {
        Expr::Attr(a) => {
            out.insert(a.instance.clone());
        }
        Expr::Col { instance, .. } => {
            out.insert(instance.clone());
        }
        Expr::Plus(x, _) => null_sensitive(x, out),
        _ => {}
    }
}

/// Instances on which some conjunct of the list is null-rejecting.
fn rejecting(preds: &[Pred]) -> BTreeSet<InstanceId> {
    let mut out = BTreeSet::new();
    for p in preds {
        match p {
            Pred::Cmp { left, right, .. } => {
                null_sensitive(left, &mut out);
                null_sensitive(right, &mut out);
            }
            Pred::EqClass(ms) => ms.iter().for_each(|m| null_sensitive(m, &mut out)),
            Pred::Like { expr, pattern, .. } => {
                null_sensitive(expr, &mut out);
                null_sensitive(pattern, &mut out);
            }
            Pred::IsNull {
                expr,
                negated: true,
            } => null_sensitive(expr, &mut out),
            _ => {}
        }
    }
    out
}

fn reject_outer(t: &mut JoinTree, above: &BTreeSet<InstanceId>) -> bool {
    match t {
        JoinTree::Inner { inputs, preds } => {
            let mut r = above.clone();
            r.extend(rejecting(preds));
            let mut changed = false;
            for i in inputs {
                changed |= reject_outer(i, &r);
            }
            changed
        }
        JoinTree::Outer {
            kind: OuterKind::Left,
            left,
            right,
            on,
        } => {
            if right.instances().iter().any(|i| above.contains(i)) {
                let (l, r, on) = (
                    std::mem::replace(&mut **left, JoinTree::inner(vec![], vec![])),
                    std::mem::replace(&mut **right, JoinTree::inner(vec![], vec![])),
                    std::mem::take(on),
                );
                *t = JoinTree::inner(vec![l, r], on);
                reject_outer(t, above);
                return true;
            }
            let mut changed = reject_outer(left, above);
            let mut r = above.clone();
            r.extend(rejecting(on));
            changed |= reject_outer(right, &r);
            changed
        }
        JoinTree::Outer { left, right, .. } => {
            let none = BTreeSet::new();
            reject_outer(left, &none) | reject_outer(right, &none)
        }
        _ => false,
    }
}

/// LEFT OUTER JOIN under a condition that rejects nulls from its right side.
pub(super) fn null_rejection(q: &mut Query) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| changed |= reject_outer(&mut s.from, &BTreeSet::new()));
    changed
}

/// LEFT OUTER JOIN whose ON clause is exactly a non-nullable foreign key into
/// a single relation: every left row finds exactly one partner.
pub(super) fn fk_outer_join(q: &mut Query, schema: &Schema) -> bool {
    rewrite_trees(q, &mut |t| {
        let JoinTree::Outer {
            kind: OuterKind::Left,
            left,
            right,
            on,
        } = t
        else {
            return false;
        };
        let JoinTree::Relation(d) = &**right else {
            return false;
        };
        let padded = left.padded_instances();
        let mut ok = false;
        for r in left.instances() {
            if r.is_derived() || padded.contains(&r) {
                continue;
            }
            for pairs in fk_pairs(schema, &r, d) {
                let covered = on.len() == pairs.len()
                    && pairs.iter().all(|(f, k)| {
                        on.iter().any(|p| match p {
                            Pred::EqClass(ms) => ms.len() == 2 && ms.contains(f) && ms.contains(k),
                            _ => false,
                        })
                    });
                ok |= covered;
            }
        }
        if !ok {
            return false;
        }
        let (l, r, on) = (
            std::mem::replace(&mut **left, JoinTree::inner(vec![], vec![])),
            std::mem::replace(&mut **right, JoinTree::inner(vec![], vec![])),
            std::mem::take(on),
        );
        *t = JoinTree::inner(vec![l, r], on);
        true
    })
}

fn push_into(side: &mut JoinTree, p: Pred) {
    match side {
        JoinTree::Inner { preds, .. } => preds.push(p),
        other => {
            let old = std::mem::replace(other, JoinTree::inner(vec![], vec![]));
            *other = JoinTree::inner(vec![old], vec![p]);
        }
    }
}

fn push_down(t: &mut JoinTree) -> bool {
    let mut changed = false;
    let local = t.instance_set();
    match t {
        JoinTree::Inner { inputs, preds } => {
            let mut keep = Vec::with_capacity(preds.len());
            for p in preds.drain(..) {
                let refs = local_refs(&p, &local);
                let target = inputs.iter().position(|i| match i {
                    JoinTree::Outer {
                        kind: OuterKind::Left,
                        left,
                        ..
                    } => !refs.is_empty() && refs.is_subset(&left.instance_set()),
                    _ => false,
                });
                match target {
                    Some(i) => {
                        let JoinTree::Outer { left, .. } = &mut inputs[i] else {
                            unreachable!()
                        };
                        push_into(left, p);
                        changed = true;
                    }
                    None => keep.push(p),
                }
            }
            *preds = keep;
            for i in inputs {
                changed |= push_down(i);
            }
        }
        JoinTree::Outer {
            kind,
            left,
            right,
            on,
        } => {
            if *kind == OuterKind::Left {
                let rset = right.instance_set();
                let mut keep = Vec::with_capacity(on.len());
                for p in on.drain(..) {
                    let refs = local_refs(&p, &local);
                    if !refs.is_empty() && refs.is_subset(&rset) {
                        push_into(right, p);
                        changed = true;
                    } else {
                        keep.push(p);
                    }
                }
                *on = keep;
            }
            changed |= push_down(left);
            changed |= push_down(right);
        }
        _ => {}
    }
    changed
}

/// Move predicates below outer joins where that does not change the result:
/// filters on the preserved side of a LEFT OUTER JOIN, and ON conditions
/// that only look at its right side.
pub(super) fn pushdown(q: &mut Query) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| changed |= push_down(&mut s.from));
    changed
}

fn split_offset(e: &Expr) -> (Expr, i64) {
    match e {
        Expr::Plus(x, k) => ((**x).clone(), *k),
        e => (e.clone(), 0),
    }
}

fn with_offset(e: Expr, k: i64) -> Expr {
    match (e, k) {
        (e, 0) => e,
        (Expr::Lit(Value::Int(n)), k) => Expr::Lit(Value::Int(n + k)),
        (e, k) => Expr::Plus(Box::new(e), k),
    }
}

/// `l + a <= r + b` with the offsets collected on one side: on the attribute
/// side when the other is a literal, otherwise on the left.
fn settle_offsets(left: &Expr, right: &Expr) -> Option<(Expr, Expr)> {
    let ((l, a), (r, b)) = (split_offset(left), split_offset(right));
    let (a, b) = match (&l, &r) {
        (_, Expr::Lit(Value::Int(n))) if !matches!(l, Expr::Lit(_)) => {
            n.checked_add(b)?.checked_sub(a)?;
            (0, b.checked_sub(a)?)
        }
        (Expr::Lit(Value::Int(n)), _) => {
            n.checked_add(a)?.checked_sub(b)?;
            (a.checked_sub(b)?, 0)
        }
        _ => (a.checked_sub(b)?, 0),
    };
    Some((with_offset(l, a), with_offset(r, b)))
}

/// Integer comparisons: `a < b` as `a + 1 <= b`, offsets moved into literals
/// or onto the left operand.
pub(super) fn integer_lt(q: &mut Query, schema: &Schema) -> bool {
    rewrite_preds(q, &mut |p| {
        let Pred::Cmp { op, left, right } = p else {
            return false;
        };
        if !matches!(op, CmpOp::Lt | CmpOp::Le)
            || !is_int_expr(left, schema)
            || !is_int_expr(right, schema)
        {
            return false;
        }
        let (l, r) = match op {
            CmpOp::Lt => (Expr::Plus(Box::new(left.clone()), 1), right.clone()),
            _ => (left.clone(), right.clone()),
        };
        let l = match l {
            Expr::Plus(x, k) => match *x {
                Expr::Plus(y, j) => match j.checked_add(k) {
                    Some(s) => Expr::Plus(y, s),
                    None => return false,
                },
                x => Expr::Plus(Box::new(x), k),
            },
            l => l,
        };
        let Some((l, r)) = settle_offsets(&l, &r) else {
            return false;
        };
        if *op == CmpOp::Le && l == *left && r == *right {
            return false;
        }
        *op = CmpOp::Le;
        *left = l;
        *right = r;
        true
    })
}

fn subst_map(classes: &[Vec<Expr>]) -> impl Fn(&Expr) -> Option<Expr> {
    let map = rep_map(classes);
    move |e| map.get(e).cloned()
}

fn subst_list(preds: &mut [Pred], classes: &[Vec<Expr>]) -> bool {
    let f = subst_map(classes);
    let mut changed = false;
    for p in preds.iter_mut().filter(|p| !matches!(p, Pred::EqClass(_))) {
        changed |= substitute_pred(p, &f);
    }
    changed
}

fn subst_tree(t: &mut JoinTree) -> bool {
    match t {
        JoinTree::Inner { .. } => {
            let env = tree_env(t);
            let JoinTree::Inner { inputs, preds } = t else {
                unreachable!()
            };
            let mut changed = subst_list(preds, &env);
            for i in inputs {
                changed |= subst_tree(i);
            }
            changed
        }
        JoinTree::Outer {
            left, right, on, ..
        } => {
            let mut groups = list_classes(on);
            groups.extend(tree_env(left));
            groups.extend(tree_env(right));
            let env = merge_classes(groups);
            let mut changed = subst_list(on, &env);
            changed |= subst_tree(left);
            changed |= subst_tree(right);
            changed
        }
        _ => false,
    }
}

/// Replace attributes by the least member of their equivalence class
/// wherever the defining equalities are known to hold.
pub(super) fn class_representatives(q: &mut Query, schema: &Schema) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| {
        changed |= subst_tree(&mut s.from);
        let env = tree_env(&s.from);
        let f = subst_map(&env);
        for e in s
            .projection
            .iter_mut()
            .chain(s.group_by.iter_mut())
            .chain(s.order_by.iter_mut().map(|o| &mut o.expr))
        {
            changed |= substitute_expr(e, &f);
        }
        for p in &mut s.having {
            changed |= substitute_pred(p, &f);
        }
        changed |= fold_star(s, schema, &rep_map(&env));
    });
    changed
}

/// Drop ORDER BY items fixed by the items before them.
pub(super) fn order_by_pruning(q: &mut Query, schema: &Schema) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| {
        if s.order_by.is_empty() {
            return;
        }
        let fds = block_fds(s, schema);
        let mut seen: BTreeSet<AttrRef> = BTreeSet::new();
        let mut kept: Vec<OrderItem> = Vec::new();
        for o in std::mem::take(&mut s.order_by) {
            let determined = match as_attr(&o.expr) {
                Some(a) => closure(&seen, &fds).contains(&a),
                None => matches!(o.expr, Expr::Lit(_)),
            };
            if determined || kept.iter().any(|k| k.expr == o.expr) {
                changed = true;
                continue;
            }
            if let Some(a) = as_attr(&o.expr) {
                seen.insert(a);
            }
            kept.push(o);
        }
        s.order_by = kept;
    });
    changed
}

/// Extend GROUP BY with every attribute it determines, as class representatives.
pub(super) fn group_by_completion(q: &mut Query, schema: &Schema) -> bool {
    let mut changed = false;
    q.for_each_select_mut(&mut |s| {
        if s.group_by.is_empty() {
            return;
        }
        let Some(seed) = s.group_by.iter().map(as_attr).collect::<Option<BTreeSet<_>>>() else {
            return;
        };
        let fds = block_fds(s, schema);
        let reps = rep_map(&tree_env(&s.from));
        let mut full: Vec<Expr> = closure(&seed, &fds)
            .iter()
            .map(|a| {
                let e = from_attr(a);
                reps.get(&e).cloned().unwrap_or(e)
            })
            .filter(|e| !matches!(e, Expr::Lit(_)))
            .collect();
        full.sort_by_key(member_rank);
        full.dedup();
        if full.is_empty() {
            return;
        }
        let mut current = s.group_by.clone();
        current.sort_by_key(member_rank);
        current.dedup();
        if current != full || s.group_by.len() != full.len() {
            s.group_by = full;
            changed = true;
        }
    });
    changed
}
