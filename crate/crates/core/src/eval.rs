//! Small in-memory evaluator over the query IR.
//!
//! It exists to check that rewrites preserve results: queries run against
//! random databases that satisfy the schema's key, foreign-key and
//! nullability constraints, and results are compared as multisets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::canon::common::arity;
use crate::error::{Error, Result};
use crate::ir::{
    local_refs, AggFunc, CmpOp, Expr, InstanceId, JoinTree, OuterKind, Pred, Query, Select,
    SetKind, Value,
};
use crate::schema::{AttrType, Schema};

pub type Row = Vec<Value>;

/// Table contents keyed by relation name, rows in attribute declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    pub tables: BTreeMap<String, Vec<Row>>,
}

type Tuple = Option<Rc<[Value]>>;
type Binding = Vec<(InstanceId, Tuple)>;

struct Scope<'a> {
    vars: &'a [(InstanceId, Tuple)],
    parent: Option<&'a Scope<'a>>,
}

impl Scope<'_> {
    fn lookup(&self, id: &InstanceId) -> Option<&Tuple> {
        match self.vars.iter().rev().find(|(i, _)| i == id) {
            Some((_, t)) => Some(t),
            None => self.parent.and_then(|p| p.lookup(id)),
        }
    }
}

struct Evaluator<'a> {
    db: &'a Database,
    schema: &'a Schema,
    attr_index: HashMap<(String, String), usize>,
}

/// Run a query and return its rows in result order.
pub fn evaluate(q: &Query, db: &Database, schema: &Schema) -> Result<Vec<Row>> {
    let mut attr_index = HashMap::new();
    for (name, rel) in &schema.relations {
        for (i, a) in rel.attributes.iter().enumerate() {
            attr_index.insert((name.clone(), a.name.clone()), i);
        }
    }
    let ev = Evaluator {
        db,
        schema,
        attr_index,
    };
    let root = Scope {
        vars: &[],
        parent: None,
    };
    ev.query(q, &root)
}

/// Whether two results hold the same rows with the same multiplicities.
pub fn same_bag(a: &[Row], b: &[Row]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

fn err(msg: impl Into<String>) -> Error {
    Error::Evaluation(msg.into())
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// SQL comparison: `None` when either side is NULL.
pub fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => None,
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (x, y) if x.is_numeric() && y.is_numeric() => x.as_f64()?.partial_cmp(&y.as_f64()?),
        (x, y) => Some(x.cmp(y)),
    }
}

fn cmp_holds(op: CmpOp, a: &Value, b: &Value) -> Option<bool> {
    let o = compare(a, b)?;
    Some(match op {
        CmpOp::Eq => o == Ordering::Equal,
        CmpOp::Ne => o != Ordering::Equal,
        CmpOp::Lt => o == Ordering::Less,
        CmpOp::Le => o != Ordering::Greater,
        CmpOp::Gt => o == Ordering::Greater,
        CmpOp::Ge => o != Ordering::Less,
    })
}

fn like(text: &str, pattern: &str) -> bool {
    fn go(t: &[char], p: &[char]) -> bool {
        match p.split_first() {
            None => t.is_empty(),
            Some(('%', rest)) => (0..=t.len()).any(|i| go(&t[i..], rest)),
            Some(('_', rest)) => !t.is_empty() && go(&t[1..], rest),
            Some((c, rest)) => t.first() == Some(c) && go(&t[1..], rest),
        }
    }
    let t: Vec<char> = text.chars().collect();
    let p: Vec<char> = pattern.chars().collect();
    go(&t, &p)
}

fn number(f: f64) -> Value {
    Value::parse_number(&format!("{f}")).unwrap_or(Value::Null)
}

fn add(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => match x.checked_add(*y) {
            Some(v) => Value::Int(v),
            None => number(*x as f64 + *y as f64),
        },
        (x, y) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => number(x + y),
            _ => Value::Null,
        },
    }
}

/// Membership test with SQL NULL semantics.
fn member(x: &Value, items: impl Iterator<Item = Value>) -> Option<bool> {
    let mut acc = Some(false);
    for v in items {
        acc = or3(acc, cmp_holds(CmpOp::Eq, x, &v));
        if acc == Some(true) {
            break;
        }
    }
    acc
}

fn dedup(rows: Vec<Row>) -> Vec<Row> {
    let mut seen = BTreeSet::new();
    rows.into_iter().filter(|r| seen.insert(r.clone())).collect()
}

fn counts(rows: &[Row]) -> BTreeMap<&Row, usize> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry(r).or_insert(0) += 1;
    }
    m
}

fn single_column(rows: Vec<Row>) -> Result<impl Iterator<Item = Value>> {
    if rows.iter().any(|r| r.len() != 1) {
        return Err(err("subquery must return one column"));
    }
    Ok(rows.into_iter().map(|mut r| r.pop().unwrap_or(Value::Null)))
}

/// Evaluation context of one block: the current binding plus, in grouped
/// blocks, the bindings of the current group.
struct Ctx<'s> {
    scope: &'s Scope<'s>,
    group: Option<&'s [Binding]>,
}

impl Evaluator<'_> {
    fn query(&self, q: &Query, outer: &Scope) -> Result<Vec<Row>> {
        match q {
            Query::Select(s) => self.select(s, outer),
            Query::SetOp { kind, all, inputs } => {
                let mut parts = inputs.iter().map(|i| self.query(i, outer));
                let mut acc = parts.next().ok_or_else(|| err("empty set operation"))??;
                for next in parts {
                    let next = next?;
                    acc = match kind {
                        SetKind::Union => {
                            acc.extend(next);
                            acc
                        }
                        SetKind::Intersect => {
                            let mut right = counts(&next);
                            acc.into_iter()
                                .filter(|r| match right.get_mut(r) {
                                    Some(n) if *n > 0 => {
                                        *n -= 1;
                                        true
                                    }
                                    _ => false,
                                })
                                .collect()
                        }
                        SetKind::Except => {
                            if *all {
                                let mut right = counts(&next);
                                acc.into_iter()
                                    .filter(|r| match right.get_mut(r) {
                                        Some(n) if *n > 0 => {
                                            *n -= 1;
                                            false
                                        }
                                        _ => true,
                                    })
                                    .collect()
                            } else {
                                let right: BTreeSet<&Row> = next.iter().collect();
                                acc.into_iter().filter(|r| !right.contains(r)).collect()
                            }
                        }
                    };
                }
                Ok(if *all { acc } else { dedup(acc) })
            }
        }
    }

    fn table(&self, inst: &InstanceId) -> Result<Vec<Binding>> {
        let rows = self
            .db
            .tables
            .get(&inst.relation)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        Ok(rows
            .iter()
            .map(|r| vec![(inst.clone(), Some(Rc::from(r.as_slice())))])
            .collect())
    }

    fn padding(t: &JoinTree) -> Binding {
        t.instances().into_iter().map(|i| (i, None)).collect()
    }

    fn tree(&self, t: &JoinTree, outer: &Scope) -> Result<Vec<Binding>> {
        match t {
            JoinTree::Relation(inst) => self.table(inst),
            JoinTree::Derived { instance, query } => Ok(self
                .query(query, outer)?
                .into_iter()
                .map(|r| vec![(instance.clone(), Some(Rc::from(r)))])
                .collect()),
            JoinTree::Inner { inputs, preds } => {
                let local = t.instance_set();
                let needs: Vec<BTreeSet<InstanceId>> =
                    preds.iter().map(|p| local_refs(p, &local)).collect();
                let mut applied = vec![false; preds.len()];
                let mut bound: BTreeSet<InstanceId> = BTreeSet::new();
                let mut acc: Vec<Binding> = vec![Vec::new()];
                let mut inputs_left = inputs.iter().peekable();
                loop {
                    let ready: Vec<usize> = (0..preds.len())
                        .filter(|&i| !applied[i] && needs[i].is_subset(&bound))
                        .collect();
                    if !ready.is_empty() || inputs_left.peek().is_none() {
                        let mut kept = Vec::with_capacity(acc.len());
                        for b in acc {
                            let scope = Scope {
                                vars: &b,
                                parent: Some(outer),
                            };
                            let mut ok = true;
                            for &i in &ready {
                                if self.pred(&preds[i], &Ctx { scope: &scope, group: None })?
                                    != Some(true)
                                {
                                    ok = false;
                                    break;
                                }
                            }
                            if ok {
                                kept.push(b);
                            }
                        }
                        acc = kept;
                        ready.iter().for_each(|&i| applied[i] = true);
                    }
                    let Some(input) = inputs_left.next() else {
                        break;
                    };
                    let right = self.tree(input, outer)?;
                    bound.extend(input.instances());
                    let mut next = Vec::with_capacity(acc.len() * right.len());
                    for l in &acc {
                        for r in &right {
                            let mut b = l.clone();
                            b.extend(r.iter().cloned());
                            next.push(b);
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
            JoinTree::Outer {
                kind,
                left,
                right,
                on,
            } => {
                let ls = self.tree(left, outer)?;
                let rs = self.tree(right, outer)?;
                let mut matched_right = vec![false; rs.len()];
                let mut out = Vec::new();
                for l in &ls {
                    let mut any = false;
                    for (j, r) in rs.iter().enumerate() {
                        let mut b = l.clone();
                        b.extend(r.iter().cloned());
                        let scope = Scope {
                            vars: &b,
                            parent: Some(outer),
                        };
                        let ctx = Ctx {
                            scope: &scope,
                            group: None,
                        };
                        let mut ok = Some(true);
                        for p in on {
                            ok = and3(ok, self.pred(p, &ctx)?);
                        }
                        if ok == Some(true) {
                            any = true;
                            matched_right[j] = true;
                            out.push(b);
                        }
                    }
                    if !any && matches!(kind, OuterKind::Left | OuterKind::Full) {
                        let mut b = l.clone();
                        b.extend(Self::padding(right));
                        out.push(b);
                    }
                }
                if matches!(kind, OuterKind::Right | OuterKind::Full) {
                    for (j, r) in rs.iter().enumerate() {
                        if !matched_right[j] {
                            let mut b = Self::padding(left);
                            b.extend(r.iter().cloned());
                            out.push(b);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    fn star(&self, s: &Select, scope: &Scope) -> Result<Vec<Value>> {
        let mut derived = HashMap::new();
        s.from.derived(&mut |id, q| {
            derived.insert(id.clone(), arity(q, self.schema));
        });
        let mut insts = s.from.instances();
        insts.sort();
        let mut out = Vec::new();
        for i in &insts {
            let width = match derived.get(i) {
                Some(n) => n.ok_or_else(|| err("unknown arity"))?,
                None => self.schema.relation(&i.relation)?.attributes.len(),
            };
            match scope.lookup(i) {
                Some(Some(row)) => out.extend(row.iter().cloned()),
                _ => out.extend(std::iter::repeat_n(Value::Null, width)),
            }
        }
        Ok(out)
    }

    fn project(&self, s: &Select, ctx: &Ctx) -> Result<Row> {
        let mut row = Vec::with_capacity(s.projection.len());
        for e in &s.projection {
            match e {
                Expr::Star => row.extend(self.star(s, ctx.scope)?),
                e => row.push(self.expr(e, ctx)?),
            }
        }
        Ok(row)
    }

    fn order_key(&self, s: &Select, ctx: &Ctx) -> Result<Row> {
        s.order_by.iter().map(|o| self.expr(&o.expr, ctx)).collect()
    }

    fn select(&self, s: &Select, outer: &Scope) -> Result<Vec<Row>> {
        let bindings = self.tree(&s.from, outer)?;
        let mut rows: Vec<(Row, Row)> = Vec::new();
        if s.is_grouped() {
            let mut groups: BTreeMap<Row, Vec<Binding>> = BTreeMap::new();
            let mut order: Vec<Row> = Vec::new();
            for b in bindings {
                let scope = Scope {
                    vars: &b,
                    parent: Some(outer),
                };
                let ctx = Ctx {
                    scope: &scope,
                    group: None,
                };
                let key = s
                    .group_by
                    .iter()
                    .map(|e| self.expr(e, &ctx))
                    .collect::<Result<Row>>()?;
                if !groups.contains_key(&key) {
                    order.push(key.clone());
                }
                groups.entry(key).or_default().push(b);
            }
            if s.group_by.is_empty() && groups.is_empty() {
                groups.insert(Vec::new(), Vec::new());
                order.push(Vec::new());
            }
            for key in order {
                let members = &groups[&key];
                let first: Binding = match members.first() {
                    Some(b) => b.clone(),
                    None => Self::padding(&s.from),
                };
                let scope = Scope {
                    vars: &first,
                    parent: Some(outer),
                };
                let ctx = Ctx {
                    scope: &scope,
                    group: Some(members),
                };
                let mut keep = Some(true);
                for p in &s.having {
                    keep = and3(keep, self.pred(p, &ctx)?);
                }
                if keep == Some(true) {
                    rows.push((self.project(s, &ctx)?, self.order_key(s, &ctx)?));
                }
            }
        } else {
            for b in &bindings {
                let scope = Scope {
                    vars: b,
                    parent: Some(outer),
                };
                let ctx = Ctx {
                    scope: &scope,
                    group: None,
                };
                rows.push((self.project(s, &ctx)?, self.order_key(s, &ctx)?));
            }
        }
        if s.distinct {
            let mut seen = BTreeSet::new();
            rows.retain(|(r, _)| seen.insert(r.clone()));
        }
        if !s.order_by.is_empty() {
            rows.sort_by(|(_, a), (_, b)| {
                for (i, item) in s.order_by.iter().enumerate() {
                    // NULLs sort first in ascending order.
                    let o = match (&a[i], &b[i]) {
                        (Value::Null, Value::Null) => Ordering::Equal,
                        (Value::Null, _) => Ordering::Less,
                        (_, Value::Null) => Ordering::Greater,
                        (x, y) => compare(x, y).unwrap_or(Ordering::Equal),
                    };
                    let o = if item.desc { o.reverse() } else { o };
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            });
        }
        let mut out: Vec<Row> = rows.into_iter().map(|(r, _)| r).collect();
        if let Some(n) = s.limit {
            out.truncate(n as usize);
        }
        Ok(out)
    }

    fn aggregate(&self, func: AggFunc, distinct: bool, arg: Option<&Expr>, ctx: &Ctx) -> Result<Value> {
        let group = ctx
            .group
            .ok_or_else(|| err("aggregate outside a grouped block"))?;
        let Some(arg) = arg else {
            return Ok(Value::Int(group.len() as i64));
        };
        let mut vals = Vec::new();
        for b in group {
            let scope = Scope {
                vars: b,
                parent: ctx.scope.parent,
            };
            let v = self.expr(
                arg,
                &Ctx {
                    scope: &scope,
                    group: None,
                },
            )?;
            if v != Value::Null {
                vals.push(v);
            }
        }
        if distinct {
            let mut seen = BTreeSet::new();
            vals.retain(|v| seen.insert(v.clone()));
        }
        Ok(match func {
            AggFunc::Count => Value::Int(vals.len() as i64),
            _ if vals.is_empty() => Value::Null,
            AggFunc::Sum => vals.iter().skip(1).fold(vals[0].clone(), |a, v| add(&a, v)),
            AggFunc::Avg => {
                let total: f64 = vals.iter().filter_map(Value::as_f64).sum();
                number(total / vals.len() as f64)
            }
            AggFunc::Min | AggFunc::Max => {
                let want = if func == AggFunc::Min {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
                let mut best = vals[0].clone();
                for v in &vals[1..] {
                    if compare(v, &best) == Some(want) {
                        best = v.clone();
                    }
                }
                best
            }
        })
    }

    fn expr(&self, e: &Expr, ctx: &Ctx) -> Result<Value> {
        match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Attr(a) => match ctx.scope.lookup(&a.instance) {
                Some(Some(row)) => {
                    let i = self
                        .attr_index
                        .get(&(a.instance.relation.clone(), a.attr.clone()))
                        .ok_or_else(|| Error::UnknownAttribute(a.attr.clone()))?;
                    Ok(row[*i].clone())
                }
                Some(None) => Ok(Value::Null),
                None => Err(err(format!("unbound instance {}", a.instance))),
            },
            Expr::Col { instance, index } => match ctx.scope.lookup(instance) {
                Some(Some(row)) => row
                    .get(*index)
                    .cloned()
                    .ok_or_else(|| err("column index out of range")),
                Some(None) => Ok(Value::Null),
                None => Err(err(format!("unbound instance {instance}"))),
            },
            Expr::Agg {
                func,
                distinct,
                arg,
            } => self.aggregate(*func, *distinct, arg.as_deref(), ctx),
            Expr::Plus(x, k) => {
                let v = self.expr(x, ctx)?;
                Ok(if v == Value::Null {
                    v
                } else {
                    add(&v, &Value::Int(*k))
                })
            }
            Expr::Subquery(q) => {
                let rows = self.query(q, ctx.scope)?;
                match rows.len() {
                    0 => Ok(Value::Null),
                    1 => single_column(rows)?.next().ok_or_else(|| err("empty row")),
                    _ => Err(err("scalar subquery returned more than one row")),
                }
            }
            Expr::Star => Err(err("`*` outside a projection")),
        }
    }

    fn pred(&self, p: &Pred, ctx: &Ctx) -> Result<Option<bool>> {
        let neg = |negated: bool, v: Option<bool>| if negated { v.map(|b| !b) } else { v };
        Ok(match p {
            Pred::Bool(b) => Some(*b),
            Pred::Cmp { op, left, right } => {
                cmp_holds(*op, &self.expr(left, ctx)?, &self.expr(right, ctx)?)
            }
            Pred::EqClass(members) => {
                let vals = members
                    .iter()
                    .map(|m| self.expr(m, ctx))
                    .collect::<Result<Vec<_>>>()?;
                vals.windows(2)
                    .fold(Some(true), |acc, w| and3(acc, cmp_holds(CmpOp::Eq, &w[0], &w[1])))
            }
            Pred::Like {
                expr,
                pattern,
                negated,
            } => match (self.expr(expr, ctx)?, self.expr(pattern, ctx)?) {
                (Value::Text(t), Value::Text(p)) => neg(*negated, Some(like(&t, &p))),
                (Value::Null, _) | (_, Value::Null) => None,
                (t, p) => neg(*negated, Some(like(&t.to_string(), &p.to_string()))),
            },
            Pred::IsNull { expr, negated } => {
                neg(*negated, Some(self.expr(expr, ctx)? == Value::Null))
            }
            Pred::Between {
                expr,
                low,
                high,
                negated,
            } => {
                let v = self.expr(expr, ctx)?;
                let lo = cmp_holds(CmpOp::Ge, &v, &self.expr(low, ctx)?);
                let hi = cmp_holds(CmpOp::Le, &v, &self.expr(high, ctx)?);
                neg(*negated, and3(lo, hi))
            }
            Pred::InList {
                expr,
                list,
                negated,
            } => {
                let v = self.expr(expr, ctx)?;
                let items = list
                    .iter()
                    .map(|e| self.expr(e, ctx))
                    .collect::<Result<Vec<_>>>()?;
                neg(*negated, member(&v, items.into_iter()))
            }
            Pred::InSubquery {
                expr,
                query,
                negated,
            } => {
                let v = self.expr(expr, ctx)?;
                let rows = self.query(query, ctx.scope)?;
                neg(*negated, member(&v, single_column(rows)?))
            }
            Pred::Quantified {
                left,
                op,
                all,
                query,
            } => {
                let v = self.expr(left, ctx)?;
                let rows = self.query(query, ctx.scope)?;
                let mut acc = Some(*all);
                for x in single_column(rows)? {
                    let t = cmp_holds(*op, &v, &x);
                    acc = if *all { and3(acc, t) } else { or3(acc, t) };
                }
                acc
            }
            Pred::Exists { query, negated } => {
                let rows = self.query(query, ctx.scope)?;
                neg(*negated, Some(!rows.is_empty()))
            }
            Pred::And(ps) => {
                let mut acc = Some(true);
                for p in ps {
                    acc = and3(acc, self.pred(p, ctx)?);
                    if acc == Some(false) {
                        break;
                    }
                }
                acc
            }
            Pred::Or(ps) => {
                let mut acc = Some(false);
                for p in ps {
                    acc = or3(acc, self.pred(p, ctx)?);
                    if acc == Some(true) {
                        break;
                    }
                }
                acc
            }
            Pred::Not(p) => self.pred(p, ctx)?.map(|b| !b),
        })
    }
}

/// Settings for [`random_database`].
#[derive(Clone, Debug)]
pub struct Generator {
    /// Rows attempted per relation. Key collisions may leave fewer.
    pub rows: usize,
    /// Probability that a nullable attribute is NULL.
    pub null_rate: f64,
    /// Extra values, typically the literals of the queries under test, mixed
    /// into the per-type pools so predicates have a chance to match.
    pub extra: Vec<Value>,
}

impl Default for Generator {
    fn default() -> Self {
        Generator {
            rows: 4,
            null_rate: 0.15,
            extra: Vec::new(),
        }
    }
}

fn pool(ty: AttrType, extra: &[Value]) -> Vec<Value> {
    let mut out: Vec<Value> = match ty {
        AttrType::Int | AttrType::Numeric => (1..=3).map(Value::Int).collect(),
        AttrType::Text | AttrType::Date => ["a", "b", "c"]
            .iter()
            .map(|s| Value::Text((*s).to_string()))
            .collect(),
        AttrType::Bool => vec![Value::Bool(true), Value::Bool(false)],
    };
    for v in extra {
        let fits = match ty {
            AttrType::Int => matches!(v, Value::Int(_)),
            AttrType::Numeric => v.is_numeric(),
            AttrType::Text | AttrType::Date => matches!(v, Value::Text(_)),
            AttrType::Bool => matches!(v, Value::Bool(_)),
        };
        if fits && !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

/// Relations ordered so that every referenced relation comes first. Foreign
/// keys that close a cycle are reported in the second result and ignored.
fn fk_order(schema: &Schema) -> (Vec<String>, BTreeSet<(String, usize)>) {
    let mut done: Vec<String> = Vec::new();
    let mut skipped = BTreeSet::new();
    let mut visiting = BTreeSet::new();
    fn visit(
        name: &str,
        schema: &Schema,
        done: &mut Vec<String>,
        visiting: &mut BTreeSet<String>,
        skipped: &mut BTreeSet<(String, usize)>,
    ) {
        if done.iter().any(|d| d == name) || visiting.contains(name) {
            return;
        }
        visiting.insert(name.to_string());
        if let Some(rel) = schema.relations.get(name) {
            for (i, fk) in rel.foreign_keys.iter().enumerate() {
                if visiting.contains(&fk.ref_relation) {
                    skipped.insert((name.to_string(), i));
                } else {
                    visit(&fk.ref_relation, schema, done, visiting, skipped);
                }
            }
        }
        visiting.remove(name);
        done.push(name.to_string());
    }
    for name in schema.relations.keys() {
        visit(name, schema, &mut done, &mut visiting, &mut skipped);
    }
    (done, skipped)
}

/// Build a random database that satisfies primary keys, unique keys,
/// NOT NULL constraints and foreign keys.
pub fn random_database(schema: &Schema, gen: &Generator, rng: &mut impl Rng) -> Database {
    let (order, skipped) = fk_order(schema);
    let mut db = Database::default();
    for name in order {
        let rel = &schema.relations[&name];
        let idx = |a: &str| rel.attributes.iter().position(|x| x.name == a);
        let mut keys: Vec<Vec<usize>> = Vec::new();
        if !rel.primary_key.is_empty() {
            keys.push(rel.primary_key.iter().filter_map(|a| idx(a)).collect());
        }
        keys.extend(
            rel.unique_keys
                .iter()
                .map(|u| u.iter().filter_map(|a| idx(a)).collect()),
        );
        let mut seen: Vec<BTreeSet<Row>> = vec![BTreeSet::new(); keys.len()];
        let mut rows: Vec<Row> = Vec::new();
        'row: for _ in 0..gen.rows * 3 {
            if rows.len() >= gen.rows {
                break;
            }
            let mut row: Row = rel
                .attributes
                .iter()
                .map(|a| {
                    if a.nullable && rng.gen_bool(gen.null_rate) {
                        Value::Null
                    } else {
                        pool(a.ty, &gen.extra)
                            .choose(rng)
                            .cloned()
                            .unwrap_or(Value::Null)
                    }
                })
                .collect();
            for (i, fk) in rel.foreign_keys.iter().enumerate() {
                if skipped.contains(&(name.clone(), i)) {
                    continue;
                }
                let cols: Vec<usize> = fk.attrs.iter().filter_map(|a| idx(a)).collect();
                let nullable = cols.iter().all(|&c| rel.attributes[c].nullable);
                if nullable && rng.gen_bool(gen.null_rate) {
                    cols.iter().for_each(|&c| row[c] = Value::Null);
                    continue;
                }
                let target = &schema.relations[&fk.ref_relation];
                let tcols: Vec<usize> = fk
                    .ref_attrs
                    .iter()
                    .filter_map(|a| target.attributes.iter().position(|x| &x.name == a))
                    .collect();
                let candidates: Vec<&Row> = db.tables[&fk.ref_relation]
                    .iter()
                    .filter(|r| tcols.iter().all(|&c| r[c] != Value::Null))
                    .collect();
                match candidates.choose(rng) {
                    Some(r) => cols
                        .iter()
                        .zip(&tcols)
                        .for_each(|(&c, &t)| row[c] = r[t].clone()),
                    None if nullable => cols.iter().for_each(|&c| row[c] = Value::Null),
                    None => continue 'row,
                }
            }
            for (k, cols) in keys.iter().enumerate() {
                let key: Row = cols.iter().map(|&c| row[c].clone()).collect();
                // NULLs in a unique key never collide.
                if k > 0 && key.contains(&Value::Null) {
                    continue;
                }
                if key.contains(&Value::Null) || seen[k].contains(&key) {
                    continue 'row;
                }
            }
            for (k, cols) in keys.iter().enumerate() {
                seen[k].insert(cols.iter().map(|&c| row[c].clone()).collect());
            }
            rows.push(row);
        }
        db.tables.insert(name, rows);
    }
    db
}

/// Literals appearing anywhere in a query.
pub fn literals(q: &Query) -> Vec<Value> {
    let mut out = Vec::new();
    q.for_each_expr(&mut |e| {
        if let Expr::Lit(v) = e {
            if *v != Value::Null && !out.contains(v) {
                out.push(v.clone());
            }
        }
    });
    out
}
