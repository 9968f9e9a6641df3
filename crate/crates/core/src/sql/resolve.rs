//! Name resolution: binds every attribute reference to a relation instance,
//! inlines WITH bindings and turns NATURAL/USING joins into ON predicates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::*;
use crate::error::{Error, Result};
use crate::ir::*;
use crate::schema::{AttrType, Schema};

/// Where an inlined instance came from: the WITH binding, which reference to
/// it (1-based), and the instance's per-relation ordinal inside that expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WithOrigin {
    pub binding: String,
    pub occurrence: u32,
    pub local: u32,
}

#[derive(Clone, Debug)]
pub struct ResolvedQuery {
    pub ast: QueryAst,
    pub query: Query,
    /// Instance id to relation name (`derived` for FROM-clause subqueries).
    pub instance_table: BTreeMap<InstanceId, String>,
    pub with_origin: BTreeMap<InstanceId, WithOrigin>,
}

pub fn resolve(ast: &QueryAst, schema: &Schema) -> Result<ResolvedQuery> {
    let mut r = Resolver {
        schema,
        counters: BTreeMap::new(),
        instance_table: BTreeMap::new(),
        with_origin: BTreeMap::new(),
        ctes: Vec::new(),
        next_cte_id: 0,
        occurrences: BTreeMap::new(),
        origins: Vec::new(),
        scopes: Vec::new(),
    };
    let (query, _) = r.query(ast)?;
    Ok(ResolvedQuery {
        ast: ast.clone(),
        query,
        instance_table: r.instance_table,
        with_origin: r.with_origin,
    })
}

#[derive(Clone)]
struct CteDef {
    id: usize,
    name: String,
    columns: Vec<String>,
    query: QueryAst,
    /// Bindings visible to this one (outer frames plus earlier siblings).
    visible: Vec<CteDef>,
}

struct OriginFrame {
    binding: String,
    occurrence: u32,
    local: BTreeMap<String, u32>,
}

#[derive(Clone, Debug)]
struct Column {
    name: String,
    expr: Expr,
}

#[derive(Clone, Debug)]
struct Entry {
    name: String,
    base: bool,
    columns: Vec<Column>,
}

#[derive(Clone, Debug, Default)]
struct Scope {
    entries: Vec<Entry>,
    /// USING/NATURAL columns: unqualified name resolves to the designated side.
    coalesced: Vec<Column>,
}

struct Resolver<'a> {
    schema: &'a Schema,
    counters: BTreeMap<String, u32>,
    instance_table: BTreeMap<InstanceId, String>,
    with_origin: BTreeMap<InstanceId, WithOrigin>,
    ctes: Vec<CteDef>,
    next_cte_id: usize,
    occurrences: BTreeMap<usize, u32>,
    origins: Vec<OriginFrame>,
    scopes: Vec<Scope>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Clause {
    Where,
    Other,
}

impl<'a> Resolver<'a> {
    fn new_instance(&mut self, relation: &str) -> InstanceId {
        let n = self.counters.entry(relation.to_string()).or_insert(0);
        *n += 1;
        let id = InstanceId::new(relation, *n);
        self.instance_table.insert(id.clone(), relation.to_string());
        if let Some(frame) = self.origins.last_mut() {
            let local = frame.local.entry(relation.to_string()).or_insert(0);
            *local += 1;
            self.with_origin.insert(
                id.clone(),
                WithOrigin {
                    binding: frame.binding.clone(),
                    occurrence: frame.occurrence,
                    local: *local,
                },
            );
        }
        id
    }

    /// Resolve a query; returns it with its output column names.
    fn query(&mut self, q: &QueryAst) -> Result<(Query, Vec<String>)> {
        match q {
            QueryAst::Select(b) => {
                let (s, names) = self.select(b)?;
                Ok((Query::Select(Box::new(s)), names))
            }
            QueryAst::SetOp {
                kind,
                all,
                left,
                right,
            } => {
                let (l, names) = self.query(left)?;
                let (r, rnames) = self.query(right)?;
                if names.len() != rnames.len() {
                    return Err(Error::Scope(format!(
                        "{} inputs have {} and {} columns",
                        kind.name(),
                        names.len(),
                        rnames.len()
                    )));
                }
                Ok((
                    Query::SetOp {
                        kind: *kind,
                        all: *all,
                        inputs: vec![l, r],
                    },
                    names,
                ))
            }
            QueryAst::With { bindings, body } => {
                let depth = self.ctes.len();
                for b in bindings {
                    if bindings.iter().filter(|x| x.name == b.name).count() > 1 {
                        return Err(Error::Scope(format!("WITH binding `{}` defined twice", b.name)));
                    }
                    let def = CteDef {
                        id: self.next_cte_id,
                        name: b.name.clone(),
                        columns: b.columns.clone(),
                        query: b.query.clone(),
                        visible: self.ctes.clone(),
                    };
                    self.next_cte_id += 1;
                    self.ctes.push(def);
                }
                let out = self.query(body);
                self.ctes.truncate(depth);
                out
            }
        }
    }

    fn select(&mut self, b: &SelectBlock) -> Result<(Select, Vec<String>)> {
        if b.from.is_empty() {
            return Err(Error::Unsupported("SELECT without FROM".into()));
        }
        let mut inputs = Vec::new();
        let mut scope = Scope::default();
        for item in &b.from {
            let (tree, entries, coalesced) = self.from_item(item)?;
            inputs.push(tree);
            scope.entries.extend(entries);
            scope.coalesced.extend(coalesced);
        }
        check_duplicate_names(&scope.entries)?;
        self.scopes.push(scope);
        let result = self.select_body(b, inputs);
        self.scopes.pop();
        result
    }

    fn select_body(&mut self, b: &SelectBlock, inputs: Vec<JoinTree>) -> Result<(Select, Vec<String>)> {
        let mut preds = Vec::new();
        if let Some(w) = &b.where_pred {
            preds.push(self.pred(w, Clause::Where)?);
        }
        // GROUP BY may use output ordinals or aliases; those are patched in later.
        let mut group_by: Vec<Option<Expr>> = Vec::new();
        let mut pending_group: Vec<(usize, &AstExpr)> = Vec::new();
        for (i, g) in b.group_by.iter().enumerate() {
            match g {
                AstExpr::Number(_) => {
                    pending_group.push((i, g));
                    group_by.push(None);
                }
                AstExpr::Column { qualifier: None, name }
                    if self.lookup(None, name).is_err() && output_alias(b, name).is_some() =>
                {
                    pending_group.push((i, g));
                    group_by.push(None);
                }
                _ => group_by.push(Some(self.expr(g, Clause::Other)?)),
            }
        }
        let mut having = Vec::new();
        if let Some(h) = &b.having {
            having.push(self.pred(h, Clause::Other)?);
        }
        let single_base = {
            let scope = self.scopes.last().expect("block scope");
            scope.entries.len() == 1 && scope.entries[0].base && inputs.len() == 1
                && matches!(inputs[0], JoinTree::Relation(_))
        };
        let mut projection = Vec::new();
        let mut names = Vec::new();
        for item in &b.projections {
            match item {
                SelectItem::Wildcard => {
                    if single_base && b.projections.len() == 1 {
                        projection.push(Expr::Star);
                        let scope = self.scopes.last().expect("block scope");
                        names.extend(scope.entries[0].columns.iter().map(|c| c.name.clone()));
                    } else {
                        for c in self.wildcard_columns() {
                            names.push(c.name);
                            projection.push(c.expr);
                        }
                    }
                }
                SelectItem::QualifiedWildcard(q) => {
                    let scope = self.scopes.last().expect("block scope");
                    let entry = scope
                        .entries
                        .iter()
                        .find(|e| &e.name == q)
                        .ok_or_else(|| Error::Scope(format!("unknown table or alias `{q}`")))?;
                    for c in entry.columns.clone() {
                        names.push(c.name);
                        projection.push(c.expr);
                    }
                }
                SelectItem::Expr { expr, alias } => {
                    let e = self.expr(expr, Clause::Other)?;
                    names.push(match (alias, &e) {
                        (Some(a), _) => a.clone(),
                        (None, _) => match expr {
                            AstExpr::Column { name, .. } => name.clone(),
                            AstExpr::Agg { func, .. } => func.name().to_ascii_lowercase(),
                            _ => "?column?".into(),
                        },
                    });
                    projection.push(e);
                }
            }
        }
        for (i, g) in pending_group {
            group_by[i] = Some(self.output_ref(g, b, &projection)?);
        }
        let mut order_by = Vec::new();
        for o in &b.order_by {
            let expr = match &o.expr {
                AstExpr::Number(_) => self.output_ref(&o.expr, b, &projection)?,
                AstExpr::Column { qualifier: None, name } if output_alias(b, name).is_some() => {
                    self.output_ref(&o.expr, b, &projection)?
                }
                other => self.expr(other, Clause::Other)?,
            };
            order_by.push(OrderItem { expr, desc: o.desc });
        }
        Ok((
            Select {
                distinct: b.distinct,
                projection,
                from: JoinTree::Inner { inputs, preds },
                group_by: group_by.into_iter().map(|g| g.expect("patched")).collect(),
                having,
                order_by,
                limit: b.limit,
            },
            names,
        ))
    }

    /// Expression for an output ordinal (`1`) or an output alias.
    fn output_ref(&self, e: &AstExpr, b: &SelectBlock, projection: &[Expr]) -> Result<Expr> {
        let index = match e {
            AstExpr::Number(n) => {
                let k: usize = n
                    .parse()
                    .map_err(|_| Error::Scope(format!("invalid output position {n}")))?;
                if k == 0 || k > projection.len() {
                    return Err(Error::Scope(format!("output position {k} is out of range")));
                }
                k - 1
            }
            AstExpr::Column { name, .. } => {
                let i = output_alias(b, name).ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
                // Output aliases index select items; wildcards are not aliased.
                if b.projections.iter().take(i).any(|p| !matches!(p, SelectItem::Expr { .. })) {
                    return Err(Error::Unsupported("output alias after a wildcard".into()));
                }
                i
            }
            _ => unreachable!("only ordinals and aliases are deferred"),
        };
        let e = projection[index].clone();
        if matches!(e, Expr::Star) {
            return Err(Error::Unsupported("ordinal reference to `*`".into()));
        }
        Ok(e)
    }

    /// Columns produced by `*` in the current block, in FROM order with
    /// USING/NATURAL columns emitted once.
    fn wildcard_columns(&self) -> Vec<Column> {
        let scope = self.scopes.last().expect("block scope");
        let mut out: Vec<Column> = Vec::new();
        let mut emitted = Vec::new();
        for c in &scope.coalesced {
            if !emitted.contains(&c.name) {
                emitted.push(c.name.clone());
                out.push(c.clone());
            }
        }
        for e in &scope.entries {
            for c in &e.columns {
                if scope.coalesced.iter().any(|k| k.name == c.name) {
                    continue;
                }
                out.push(c.clone());
            }
        }
        out
    }

    fn from_item(&mut self, item: &FromItem) -> Result<(JoinTree, Vec<Entry>, Vec<Column>)> {
        match item {
            FromItem::Table { name, alias } => {
                if let Some(def) = self.ctes.iter().rev().find(|c| &c.name == name).cloned() {
                    return self.expand_cte(&def, alias.as_deref());
                }
                let rel = self.schema.relation(name)?;
                let columns: Vec<(String, String)> = rel
                    .attr_names()
                    .map(|a| (a.to_string(), a.to_string()))
                    .collect();
                let id = self.new_instance(name);
                let entry = Entry {
                    name: alias.clone().unwrap_or_else(|| name.clone()),
                    base: true,
                    columns: columns
                        .into_iter()
                        .map(|(n, a)| Column {
                            name: n,
                            expr: Expr::attr(id.clone(), &a),
                        })
                        .collect(),
                };
                Ok((JoinTree::Relation(id), vec![entry], vec![]))
            }
            FromItem::Subquery {
                query,
                alias,
                columns,
            } => {
                let id = self.new_instance(DERIVED);
                // FROM subqueries cannot see sibling FROM items.
                let saved = std::mem::take(&mut self.scopes);
                let res = self.query(query);
                self.scopes = saved;
                let (q, names) = res?;
                let names = rename(names, columns)?;
                let entry = Entry {
                    name: alias.clone().unwrap_or_default(),
                    base: false,
                    columns: derived_columns(&id, names),
                };
                Ok((
                    JoinTree::Derived {
                        instance: id,
                        query: Box::new(q),
                    },
                    vec![entry],
                    vec![],
                ))
            }
            FromItem::Nested { item, alias } => {
                let (tree, entries, coalesced) = self.from_item(item)?;
                match alias {
                    None => Ok((tree, entries, coalesced)),
                    Some(a) => {
                        self.scopes.push(Scope {
                            entries: entries.clone(),
                            coalesced: coalesced.clone(),
                        });
                        let cols = self.wildcard_columns();
                        self.scopes.pop();
                        let entry = Entry {
                            name: a.clone(),
                            base: false,
                            columns: cols,
                        };
                        Ok((tree, vec![entry], vec![]))
                    }
                }
            }
            FromItem::Join {
                left,
                right,
                op,
                natural,
                constraint,
            } => {
                let (lt, le, lc) = self.from_item(left)?;
                let (rt, re, rc) = self.from_item(right)?;
                let mut entries = le.clone();
                entries.extend(re.clone());
                check_duplicate_names(&entries)?;
                let mut coalesced = lc.clone();
                coalesced.extend(rc.clone());
                let mut preds = Vec::new();
                let using: Option<Vec<String>> = if *natural {
                    let lnames = visible_names(&le, &lc);
                    let rnames = visible_names(&re, &rc);
                    Some(lnames.into_iter().filter(|n| rnames.contains(n)).collect())
                } else if let JoinConstraint::Using(cols) = constraint {
                    Some(cols.clone())
                } else {
                    None
                };
                if let Some(cols) = using {
                    for c in cols {
                        let l = lookup_in(&le, &lc, &c)?;
                        let r = lookup_in(&re, &rc, &c)?;
                        let designated = if *op == JoinOp::Right { r.clone() } else { l.clone() };
                        coalesced.retain(|k| k.name != c);
                        coalesced.push(Column {
                            name: c.clone(),
                            expr: designated,
                        });
                        preds.push(Pred::cmp(CmpOp::Eq, l, r));
                    }
                }
                if let JoinConstraint::On(e) = constraint {
                    self.scopes.push(Scope {
                        entries: entries.clone(),
                        coalesced: coalesced.clone(),
                    });
                    let p = self.pred(e, Clause::Where);
                    self.scopes.pop();
                    preds.push(p?);
                }
                let tree = match op {
                    JoinOp::Inner | JoinOp::Cross => JoinTree::Inner {
                        inputs: vec![lt, rt],
                        preds,
                    },
                    JoinOp::Left | JoinOp::Right | JoinOp::Full => JoinTree::Outer {
                        kind: match op {
                            JoinOp::Left => OuterKind::Left,
                            JoinOp::Right => OuterKind::Right,
                            _ => OuterKind::Full,
                        },
                        left: Box::new(lt),
                        right: Box::new(rt),
                        on: preds,
                    },
                };
                Ok((tree, entries, coalesced))
            }
        }
    }

    fn expand_cte(&mut self, def: &CteDef, alias: Option<&str>) -> Result<(JoinTree, Vec<Entry>, Vec<Column>)> {
        let occ = self.occurrences.entry(def.id).or_insert(0);
        *occ += 1;
        let occurrence = *occ;
        self.origins.push(OriginFrame {
            binding: def.name.clone(),
            occurrence,
            local: BTreeMap::new(),
        });
        let id = self.new_instance(DERIVED);
        let saved_ctes = std::mem::replace(&mut self.ctes, def.visible.clone());
        let saved_scopes = std::mem::take(&mut self.scopes);
        let res = self.query(&def.query);
        self.ctes = saved_ctes;
        self.scopes = saved_scopes;
        self.origins.pop();
        let (q, names) = res?;
        let names = rename(names, &def.columns)?;
        let entry = Entry {
            name: alias.unwrap_or(&def.name).to_string(),
            base: false,
            columns: derived_columns(&id, names),
        };
        Ok((
            JoinTree::Derived {
                instance: id,
                query: Box::new(q),
            },
            vec![entry],
            vec![],
        ))
    }

    fn lookup(&self, qualifier: Option<&str>, name: &str) -> Result<Expr> {
        for scope in self.scopes.iter().rev() {
            if let Some(q) = qualifier {
                if let Some(entry) = scope.entries.iter().find(|e| e.name == q) {
                    let hits: Vec<&Column> = entry.columns.iter().filter(|c| c.name == name).collect();
                    return match hits.len() {
                        1 => Ok(hits[0].expr.clone()),
                        0 => Err(Error::UnknownAttribute(format!("{q}.{name}"))),
                        _ => Err(Error::AmbiguousAttribute(format!("{q}.{name}"))),
                    };
                }
            } else {
                if let Some(c) = scope.coalesced.iter().find(|c| c.name == name) {
                    return Ok(c.expr.clone());
                }
                let hits: Vec<&Column> = scope
                    .entries
                    .iter()
                    .flat_map(|e| e.columns.iter())
                    .filter(|c| c.name == name)
                    .collect();
                match hits.len() {
                    0 => continue,
                    1 => return Ok(hits[0].expr.clone()),
                    _ => return Err(Error::AmbiguousAttribute(name.to_string())),
                }
            }
        }
        match qualifier {
            Some(q) => Err(Error::Scope(format!("unknown table or alias `{q}`"))),
            None => Err(Error::UnknownAttribute(name.to_string())),
        }
    }

    fn expr(&mut self, e: &AstExpr, clause: Clause) -> Result<Expr> {
        Ok(match e {
            AstExpr::Column { qualifier, name } => self.lookup(qualifier.as_deref(), name)?,
            AstExpr::Number(n) => Expr::Lit(
                Value::parse_number(n).ok_or_else(|| Error::Unsupported(format!("number {n}")))?,
            ),
            AstExpr::Str(s) => Expr::Lit(Value::Text(s.clone())),
            AstExpr::Bool(b) => Expr::Lit(Value::Bool(*b)),
            AstExpr::Null => Expr::Lit(Value::Null),
            AstExpr::Agg {
                func,
                distinct,
                arg,
            } => {
                if clause == Clause::Where {
                    return Err(Error::Scope(format!(
                        "aggregate {} is not allowed in WHERE or ON",
                        func.name()
                    )));
                }
                let arg = match arg {
                    None => None,
                    Some(a) => {
                        let x = self.expr(a, Clause::Where).map_err(|err| match err {
                            Error::Scope(m) if m.starts_with("aggregate") => {
                                Error::Scope("nested aggregates are not allowed".into())
                            }
                            other => other,
                        })?;
                        Some(Box::new(x))
                    }
                };
                Expr::Agg {
                    func: *func,
                    distinct: *distinct,
                    arg,
                }
            }
            AstExpr::Subquery(q) => {
                let (q, names) = self.query(q)?;
                if names.len() != 1 {
                    return Err(Error::Scope("scalar subquery must return one column".into()));
                }
                Expr::Subquery(Box::new(q))
            }
            AstExpr::Func { name, .. } => {
                return Err(Error::Unsupported(format!("function {name}()")))
            }
            AstExpr::Binary {
                op: BinOp::Plus | BinOp::Minus | BinOp::Mul | BinOp::Div,
                ..
            }
            | AstExpr::Neg(_) => return Err(Error::Unsupported("arithmetic expressions".into())),
            _ => {
                return Err(Error::Unsupported(
                    "boolean expression used as a value".into(),
                ))
            }
        })
    }

    /// Attribute type of a resolved expression, when known.
    fn expr_type(&self, e: &Expr) -> Option<AttrType> {
        match e {
            Expr::Attr(a) => self.schema.attr_type(a),
            _ => None,
        }
    }

    /// Text literals compared with numeric attributes are read as numbers.
    fn coerce(&self, target: &Expr, lit: Expr) -> Expr {
        match (self.expr_type(target), &lit) {
            (Some(AttrType::Int | AttrType::Numeric), Expr::Lit(Value::Text(s))) => {
                match Value::parse_number(s.trim()) {
                    Some(v) => Expr::Lit(v),
                    None => lit,
                }
            }
            _ => lit,
        }
    }

    fn pred(&mut self, e: &AstExpr, clause: Clause) -> Result<Pred> {
        Ok(match e {
            AstExpr::Binary {
                op: BinOp::And,
                left,
                right,
            } => Pred::And(vec![self.pred(left, clause)?, self.pred(right, clause)?]),
            AstExpr::Binary {
                op: BinOp::Or,
                left,
                right,
            } => Pred::Or(vec![self.pred(left, clause)?, self.pred(right, clause)?]),
            AstExpr::Binary {
                op: BinOp::Cmp(op),
                left,
                right,
            } => {
                let l = self.expr(left, clause)?;
                let r = self.expr(right, clause)?;
                let r = self.coerce(&l, r);
                let l = self.coerce(&r, l);
                Pred::Cmp { op: *op, left: l, right: r }
            }
            AstExpr::Not(inner) => Pred::Not(Box::new(self.pred(inner, clause)?)),
            AstExpr::Bool(b) => Pred::Bool(*b),
            AstExpr::IsNull { expr, negated } => Pred::IsNull {
                expr: self.expr(expr, clause)?,
                negated: *negated,
            },
            AstExpr::Between {
                expr,
                low,
                high,
                negated,
            } => {
                let x = self.expr(expr, clause)?;
                let low = self.expr(low, clause)?;
                let high = self.expr(high, clause)?;
                Pred::Between {
                    low: self.coerce(&x, low),
                    high: self.coerce(&x, high),
                    expr: x,
                    negated: *negated,
                }
            }
            AstExpr::InList {
                expr,
                list,
                negated,
            } => {
                let x = self.expr(expr, clause)?;
                let mut items = Vec::new();
                for i in list {
                    let v = self.expr(i, clause)?;
                    items.push(self.coerce(&x, v));
                }
                Pred::InList {
                    expr: x,
                    list: items,
                    negated: *negated,
                }
            }
            AstExpr::InSubquery {
                expr,
                query,
                negated,
            } => {
                let x = self.expr(expr, clause)?;
                let (q, names) = self.query(query)?;
                if names.len() != 1 {
                    return Err(Error::Scope("IN subquery must return one column".into()));
                }
                Pred::InSubquery {
                    expr: x,
                    query: Box::new(q),
                    negated: *negated,
                }
            }
            AstExpr::Like {
                expr,
                pattern,
                negated,
            } => Pred::Like {
                expr: self.expr(expr, clause)?,
                pattern: self.expr(pattern, clause)?,
                negated: *negated,
            },
            AstExpr::Exists { query, negated } => {
                let (q, _) = self.query(query)?;
                Pred::Exists {
                    query: Box::new(q),
                    negated: *negated,
                }
            }
            AstExpr::Quantified {
                left,
                op,
                all,
                query,
            } => {
                let l = self.expr(left, clause)?;
                let (q, names) = self.query(query)?;
                if names.len() != 1 {
                    return Err(Error::Scope("quantified subquery must return one column".into()));
                }
                Pred::Quantified {
                    left: l,
                    op: *op,
                    all: *all,
                    query: Box::new(q),
                }
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "non-boolean expression used as a condition: {}",
                    describe(other)
                )))
            }
        })
    }
}

fn describe(e: &AstExpr) -> String {
    match e {
        AstExpr::Column { qualifier: Some(q), name } => format!("{q}.{name}"),
        AstExpr::Column { name, .. } => name.clone(),
        AstExpr::Number(n) => n.clone(),
        AstExpr::Str(s) => format!("'{s}'"),
        _ => "expression".into(),
    }
}

fn output_alias(b: &SelectBlock, name: &str) -> Option<usize> {
    b.projections.iter().position(|p| {
        matches!(p, SelectItem::Expr { alias: Some(a), .. } if a == name)
    })
}

fn rename(names: Vec<String>, columns: &[String]) -> Result<Vec<String>> {
    if columns.is_empty() {
        return Ok(names);
    }
    if columns.len() > names.len() {
        return Err(Error::Scope(format!(
            "{} column names given for a query with {} columns",
            columns.len(),
            names.len()
        )));
    }
    let mut out = columns.to_vec();
    out.extend(names.into_iter().skip(columns.len()));
    Ok(out)
}

fn derived_columns(id: &InstanceId, names: Vec<String>) -> Vec<Column> {
    names
        .into_iter()
        .enumerate()
        .map(|(index, name)| Column {
            name,
            expr: Expr::Col {
                instance: id.clone(),
                index,
            },
        })
        .collect()
}

fn visible_names(entries: &[Entry], coalesced: &[Column]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in coalesced.iter().chain(entries.iter().flat_map(|e| e.columns.iter())) {
        if !out.contains(&c.name) {
            out.push(c.name.clone());
        }
    }
    out
}

fn lookup_in(entries: &[Entry], coalesced: &[Column], name: &str) -> Result<Expr> {
    if let Some(c) = coalesced.iter().find(|c| c.name == name) {
        return Ok(c.expr.clone());
    }
    let hits: Vec<&Column> = entries
        .iter()
        .flat_map(|e| e.columns.iter())
        .filter(|c| c.name == name)
        .collect();
    match hits.len() {
        1 => Ok(hits[0].expr.clone()),
        0 => Err(Error::UnknownAttribute(format!("join column {name}"))),
        _ => Err(Error::AmbiguousAttribute(format!("join column {name}"))),
    }
}

fn check_duplicate_names(entries: &[Entry]) -> Result<()> {
    for (i, e) in entries.iter().enumerate() {
        if e.name.is_empty() {
            continue;
        }
        if entries[..i].iter().any(|x| x.name == e.name) {
            return Err(Error::Scope(format!(
                "table name or alias `{}` used twice in FROM",
                e.name
            )));
        }
    }
    Ok(())
}
