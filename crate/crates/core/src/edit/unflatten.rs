//! Rebuild the typed query from a (possibly edited) tree view.
//!
//! Labels carry everything the view needs, so the conversion is driven by
//! the expected kind of each position. Nested inner joins are merged into
//! their parent and single-branch connectives collapse, which keeps the
//! result flat after structural edits.

use crate::error::{Error, Result};
use crate::flat::FlatNode;
use crate::ir::*;

fn bad(what: &str, n: &FlatNode) -> Error {
    Error::InconsistentEdit(format!("malformed {what} `{}`", n.label))
}

pub fn query(n: &FlatNode) -> Result<Query> {
    if n.label == "SELECT" && n.class.is_none() {
        return Ok(Query::Select(Box::new(select(n)?)));
    }
    let (name, all) = match n.label.strip_suffix(" ALL") {
        Some(k) => (k, true),
        None => (n.label.as_str(), false),
    };
    let kind = match name {
        "UNION" => SetKind::Union,
        "INTERSECT" => SetKind::Intersect,
        "EXCEPT" => SetKind::Except,
        _ => return Err(bad("query", n)),
    };
    let min = if kind == SetKind::Except { 2 } else { 1 };
    if n.children.len() < min || (kind == SetKind::Except && n.children.len() != 2) {
        return Err(bad("set operation", n));
    }
    let inputs = n.children.iter().map(query).collect::<Result<Vec<_>>>()?;
    if inputs.len() == 1 {
        return Ok(inputs.into_iter().next().unwrap());
    }
    Ok(Query::SetOp { kind, all, inputs })
}

fn select(n: &FlatNode) -> Result<Select> {
    let [distinct, proj, from, group, having, order, limit] = &n.children[..] else {
        return Err(bad("select block", n));
    };
    let from = match &from.children[..] {
        [j] => match join(j)? {
            t @ JoinTree::Inner { .. } => t,
            t => JoinTree::inner(vec![t], vec![]),
        },
        _ => return Err(bad("FROM clause", from)),
    };
    let limit = match &limit.children[..] {
        [] => None,
        [l] => Some(
            l.label
                .strip_prefix("LIMIT ")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("limit", l))?,
        ),
        _ => return Err(bad("limit", limit)),
    };
    Ok(Select {
        distinct: match distinct.children.len() {
            0 => false,
            1 => true,
            _ => return Err(bad("DISTINCT", distinct)),
        },
        projection: proj.children.iter().map(expr).collect::<Result<_>>()?,
        from,
        group_by: group.children.iter().map(expr).collect::<Result<_>>()?,
        having: preds(&having.children)?,
        order_by: order.children.iter().map(order_item).collect::<Result<_>>()?,
        limit,
    })
}

fn order_item(n: &FlatNode) -> Result<OrderItem> {
    match n.label.strip_suffix(" DESC") {
        Some(base) => {
            let plain = FlatNode {
                label: base.to_string(),
                ..n.clone()
            };
            Ok(OrderItem {
                expr: expr(&plain)?,
                desc: true,
            })
        }
        None => Ok(OrderItem {
            expr: expr(n)?,
            desc: false,
        }),
    }
}

pub fn instance(label: &str) -> Option<InstanceId> {
    let (rel, ord) = label.rsplit_once('#')?;
    if rel.is_empty() || rel.starts_with('\'') {
        return None;
    }
    Some(InstanceId::new(rel, ord.parse().ok()?))
}

pub fn join(n: &FlatNode) -> Result<JoinTree> {
    if n.class.is_none() && n.label == "JOIN" {
        let [inputs, ps] = &n.children[..] else {
            return Err(bad("join", n));
        };
        let mut items = Vec::new();
        let mut all_preds = preds(&ps.children)?;
        for c in &inputs.children {
            match join(c)? {
                JoinTree::Inner { inputs, preds } => {
                    items.extend(inputs);
                    all_preds.extend(preds);
                }
                t => items.push(t),
            }
        }
        if items.is_empty() {
            return Err(bad("join without inputs", n));
        }
        return Ok(JoinTree::inner(items, all_preds));
    }
    let kind = match n.label.as_str() {
        "LEFT OUTER JOIN" => Some(OuterKind::Left),
        "RIGHT OUTER JOIN" => Some(OuterKind::Right),
        "FULL OUTER JOIN" => Some(OuterKind::Full),
        _ => None,
    };
    if let Some(kind) = kind {
        let [l, r, on] = &n.children[..] else {
            return Err(bad("outer join", n));
        };
        return Ok(JoinTree::Outer {
            kind,
            left: Box::new(join(l)?),
            right: Box::new(join(r)?),
            on: preds(&on.children)?,
        });
    }
    let id = instance(&n.label).ok_or_else(|| bad("relation", n))?;
    match &n.children[..] {
        [] => Ok(JoinTree::Relation(id)),
        [q] => Ok(JoinTree::Derived {
            instance: id,
            query: Box::new(query(q)?),
        }),
        _ => Err(bad("relation", n)),
    }
}

fn preds(ns: &[FlatNode]) -> Result<Vec<Pred>> {
    ns.iter().map(pred).collect()
}

fn cmp_op(label: &str) -> Option<CmpOp> {
    [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]
        .into_iter()
        .find(|o| o.symbol() == label)
}

pub fn pred(n: &FlatNode) -> Result<Pred> {
    let c = &n.children;
    let ex = |i: usize| expr(&c[i]);
    let negated = n.label.starts_with("NOT ");
    let p = match (n.label.as_str(), c.len()) {
        ("=", k) if !n.ordered => {
            if k < 2 {
                return Err(bad("equality", n));
            }
            Pred::EqClass(c.iter().map(expr).collect::<Result<_>>()?)
        }
        (l, 2) if cmp_op(l).is_some() => Pred::cmp(cmp_op(l).unwrap(), ex(0)?, ex(1)?),
        ("LIKE" | "NOT LIKE", 2) => Pred::Like {
            expr: ex(0)?,
            pattern: ex(1)?,
            negated,
        },
        ("IS NULL" | "IS NOT NULL", 1) => Pred::IsNull {
            expr: ex(0)?,
            negated: n.label == "IS NOT NULL",
        },
        ("BETWEEN" | "NOT BETWEEN", 3) => Pred::Between {
            expr: ex(0)?,
            low: ex(1)?,
            high: ex(2)?,
            negated,
        },
        ("IN" | "NOT IN", 2) if c[1].class.is_none() && c[1].label == "list" => {
            if c[1].children.is_empty() {
                return Err(bad("IN list", n));
            }
            Pred::InList {
                expr: ex(0)?,
                list: c[1].children.iter().map(expr).collect::<Result<_>>()?,
                negated,
            }
        }
        ("IN" | "NOT IN", 2) => Pred::InSubquery {
            expr: ex(0)?,
            query: Box::new(query(&c[1])?),
            negated,
        },
        ("EXISTS" | "NOT EXISTS", 1) => Pred::Exists {
            query: Box::new(query(&c[0])?),
            negated,
        },
        ("AND" | "OR", _) => {
            let mut ps = preds(c)?;
            match ps.len() {
                0 => return Err(bad("connective", n)),
                1 => ps.pop().unwrap(),
                _ if n.label == "AND" => Pred::And(ps),
                _ => Pred::Or(ps),
            }
        }
        ("NOT", 1) => Pred::Not(Box::new(pred(&c[0])?)),
        ("TRUE", 0) => Pred::Bool(true),
        ("FALSE", 0) => Pred::Bool(false),
        (l, 2) => {
            let (op, q) = l.rsplit_once(' ').ok_or_else(|| bad("predicate", n))?;
            let all = match q {
                "ALL" => true,
                "SOME" => false,
                _ => return Err(bad("predicate", n)),
            };
            Pred::Quantified {
                left: ex(0)?,
                op: cmp_op(op).ok_or_else(|| bad("predicate", n))?,
                all,
                query: Box::new(query(&c[1])?),
            }
        }
        _ => return Err(bad("predicate", n)),
    };
    Ok(p)
}

pub fn expr(n: &FlatNode) -> Result<Expr> {
    let l = n.label.as_str();
    if let [child] = &n.children[..] {
        if l == "SUBQ" {
            return Ok(Expr::Subquery(Box::new(query(child)?)));
        }
        if let Some(k) = l.strip_prefix('+').or(l.starts_with('-').then_some(l)) {
            if let Ok(k) = k.parse::<i64>() {
                return Ok(Expr::Plus(Box::new(expr(child)?), k));
            }
        }
        let (name, distinct) = match l.strip_suffix(" DISTINCT") {
            Some(f) => (f, true),
            None => (l, false),
        };
        let func = AggFunc::from_name(name).ok_or_else(|| bad("expression", n))?;
        return Ok(Expr::Agg {
            func,
            distinct,
            arg: Some(Box::new(expr(child)?)),
        });
    }
    if !n.children.is_empty() {
        return Err(bad("expression", n));
    }
    if l == "*" {
        return Ok(Expr::Star);
    }
    if let Some(f) = l.strip_suffix("(*)") {
        let func = AggFunc::from_name(f).ok_or_else(|| bad("aggregate", n))?;
        return Ok(Expr::Agg {
            func,
            distinct: false,
            arg: None,
        });
    }
    if let Some(text) = l.strip_prefix('\'').and_then(|t| t.strip_suffix('\'')) {
        return Ok(Expr::Lit(Value::Text(text.replace("''", "'"))));
    }
    match l {
        "NULL" => return Ok(Expr::Lit(Value::Null)),
        "TRUE" => return Ok(Expr::Lit(Value::Bool(true))),
        "FALSE" => return Ok(Expr::Lit(Value::Bool(false))),
        _ => {}
    }
    if let Some(v) = Value::parse_number(l) {
        return Ok(Expr::Lit(v));
    }
    let (inst, attr) = l.rsplit_once('.').ok_or_else(|| bad("expression", n))?;
    let id = instance(inst).ok_or_else(|| bad("attribute", n))?;
    match attr.strip_prefix('$') {
        Some(k) => {
            let k: usize = k.parse().map_err(|_| bad("column", n))?;
            if k == 0 {
                return Err(bad("column", n));
            }
            Ok(Expr::Col {
                instance: id,
                index: k - 1,
            })
        }
        None => Ok(Expr::Attr(AttrRef::new(id, attr))),
    }
}
