//! Pretty-printer for the syntax tree. Output re-parses to the same tree.

use super::ast::*;
use crate::ir::Value;

pub fn render(q: &QueryAst) -> String {
    let mut out = String::new();
    query(q, &mut out);
    out
}

fn ident(name: &str, out: &mut String) {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '$')
        && !super::is_reserved(name);
    if plain {
        out.push_str(name);
    } else {
        out.push('"');
        out.push_str(&name.replace('"', "\"\""));
        out.push('"');
    }
}

fn query(q: &QueryAst, out: &mut String) {
    match q {
        QueryAst::Select(s) => select(s, out),
        QueryAst::SetOp {
            kind,
            all,
            left,
            right,
        } => {
            out.push('(');
            query(left, out);
            out.push_str(") ");
            out.push_str(kind.name());
            if *all {
                out.push_str(" ALL");
            }
            out.push_str(" (");
            query(right, out);
            out.push(')');
        }
        QueryAst::With { bindings, body } => {
            out.push_str("WITH ");
            for (i, b) in bindings.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                ident(&b.name, out);
                if !b.columns.is_empty() {
                    out.push('(');
                    list(&b.columns, out, |c, o| ident(c, o));
                    out.push(')');
                }
                out.push_str(" AS (");
                query(&b.query, out);
                out.push(')');
            }
            out.push(' ');
            query(body, out);
        }
    }
}

fn list<T>(items: &[T], out: &mut String, mut f: impl FnMut(&T, &mut String)) {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        f(x, out);
    }
}

fn select(s: &SelectBlock, out: &mut String) {
    out.push_str("SELECT ");
    if s.distinct {
        out.push_str("DISTINCT ");
    }
    list(&s.projections, out, |p, o| match p {
        SelectItem::Wildcard => o.push('*'),
        SelectItem::QualifiedWildcard(q) => {
            ident(q, o);
            o.push_str(".*");
        }
        SelectItem::Expr { expr: e, alias } => {
            expr(e, o);
            if let Some(a) = alias {
                o.push_str(" AS ");
                ident(a, o);
            }
        }
    });
    if !s.from.is_empty() {
        out.push_str(" FROM ");
        list(&s.from, out, from_item);
    }
    if let Some(w) = &s.where_pred {
        out.push_str(" WHERE ");
        expr(w, out);
    }
    if !s.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        list(&s.group_by, out, expr);
    }
    if let Some(h) = &s.having {
        out.push_str(" HAVING ");
        expr(h, out);
    }
    if !s.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        list(&s.order_by, out, |o, out| {
            expr(&o.expr, out);
            if o.desc {
                out.push_str(" DESC");
            }
        });
    }
    if let Some(l) = s.limit {
        out.push_str(&format!(" LIMIT {l}"));
    }
}

fn alias(a: &Option<String>, out: &mut String) {
    if let Some(a) = a {
        out.push_str(" AS ");
        ident(a, out);
    }
}

fn from_item(f: &FromItem, out: &mut String) {
    match f {
        FromItem::Table { name, alias: a } => {
            ident(name, out);
            alias(a, out);
        }
        FromItem::Subquery {
            query: q,
            alias: a,
            columns,
        } => {
            out.push('(');
            query(q, out);
            out.push(')');
            alias(a, out);
            if !columns.is_empty() {
                out.push('(');
                list(columns, out, |c, o| ident(c, o));
                out.push(')');
            }
        }
        FromItem::Join {
            left,
            right,
            op,
            natural,
            constraint,
        } => {
            from_item(left, out);
            out.push(' ');
            if *natural {
                out.push_str("NATURAL ");
            }
            out.push_str(match op {
                JoinOp::Inner => "INNER JOIN ",
                JoinOp::Left => "LEFT OUTER JOIN ",
                JoinOp::Right => "RIGHT OUTER JOIN ",
                JoinOp::Full => "FULL OUTER JOIN ",
                JoinOp::Cross => "CROSS JOIN ",
            });
            // A join as the right operand must be parenthesized to keep its shape.
            if matches!(**right, FromItem::Join { .. }) {
                out.push('(');
                from_item(right, out);
                out.push(')');
            } else {
                from_item(right, out);
            }
            match constraint {
                JoinConstraint::On(e) => {
                    out.push_str(" ON ");
                    expr(e, out);
                }
                JoinConstraint::Using(cols) => {
                    out.push_str(" USING (");
                    list(cols, out, |c, o| ident(c, o));
                    out.push(')');
                }
                JoinConstraint::None => {}
            }
        }
        FromItem::Nested { item, alias: a } => {
            out.push('(');
            from_item(item, out);
            out.push(')');
            alias(a, out);
        }
    }
}

fn atomic(e: &AstExpr) -> bool {
    matches!(
        e,
        AstExpr::Column { .. }
            | AstExpr::Str(_)
            | AstExpr::Bool(_)
            | AstExpr::Null
            | AstExpr::Agg { .. }
            | AstExpr::Func { .. }
            | AstExpr::Subquery(_)
            | AstExpr::Exists { .. }
    ) || matches!(e, AstExpr::Number(n) if !n.starts_with('-'))
}

fn operand(e: &AstExpr, out: &mut String) {
    if atomic(e) {
        expr(e, out);
    } else {
        out.push('(');
        expr(e, out);
        out.push(')');
    }
}

fn expr(e: &AstExpr, out: &mut String) {
    match e {
        AstExpr::Column { qualifier, name } => {
            if let Some(q) = qualifier {
                ident(q, out);
                out.push('.');
            }
            ident(name, out);
        }
        AstExpr::Number(n) => out.push_str(n),
        AstExpr::Str(s) => out.push_str(&Value::Text(s.clone()).to_string()),
        AstExpr::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        AstExpr::Null => out.push_str("NULL"),
        AstExpr::Agg {
            func,
            distinct,
            arg,
        } => {
            out.push_str(func.name());
            out.push('(');
            match arg {
                None => out.push('*'),
                Some(a) => {
                    if *distinct {
                        out.push_str("DISTINCT ");
                    }
                    expr(a, out);
                }
            }
            out.push(')');
        }
        AstExpr::Func { name, args } => {
            ident(name, out);
            out.push('(');
            list(args, out, expr);
            out.push(')');
        }
        AstExpr::Binary { op, left, right } => {
            operand(left, out);
            out.push_str(match op {
                BinOp::And => " AND ",
                BinOp::Or => " OR ",
                BinOp::Cmp(c) => match c {
                    crate::ir::CmpOp::Eq => " = ",
                    crate::ir::CmpOp::Ne => " <> ",
                    crate::ir::CmpOp::Lt => " < ",
                    crate::ir::CmpOp::Le => " <= ",
                    crate::ir::CmpOp::Gt => " > ",
                    crate::ir::CmpOp::Ge => " >= ",
                },
                BinOp::Plus => " + ",
                BinOp::Minus => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
            });
            operand(right, out);
        }
        AstExpr::Neg(inner) => {
            out.push('-');
            operand(inner, out);
        }
        AstExpr::Not(inner) => {
            out.push_str("NOT ");
            if matches!(**inner, AstExpr::Exists { .. }) {
                out.push('(');
                expr(inner, out);
                out.push(')');
            } else {
                operand(inner, out);
            }
        }
        AstExpr::IsNull { expr: x, negated } => {
            operand(x, out);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        AstExpr::Between {
            expr: x,
            low,
            high,
            negated,
        } => {
            operand(x, out);
            out.push_str(if *negated { " NOT BETWEEN " } else { " BETWEEN " });
            operand(low, out);
            out.push_str(" AND ");
            operand(high, out);
        }
        AstExpr::InList {
            expr: x,
            list: items,
            negated,
        } => {
            operand(x, out);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            list(items, out, operand);
            out.push(')');
        }
        AstExpr::InSubquery {
            expr: x,
            query: q,
            negated,
        } => {
            operand(x, out);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            query(q, out);
            out.push(')');
        }
        AstExpr::Like {
            expr: x,
            pattern,
            negated,
        } => {
            operand(x, out);
            out.push_str(if *negated { " NOT LIKE " } else { " LIKE " });
            operand(pattern, out);
        }
        AstExpr::Exists { query: q, negated } => {
            out.push_str(if *negated { "NOT EXISTS (" } else { "EXISTS (" });
            query(q, out);
            out.push(')');
        }
        AstExpr::Quantified {
            left,
            op,
            all,
            query: q,
        } => {
            operand(left, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push_str(if *all { " ALL (" } else { " SOME (" });
            query(q, out);
            out.push(')');
        }
        AstExpr::Subquery(q) => {
            out.push('(');
            query(q, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse;

    fn round_trip(sql: &str) {
        let a = parse(sql).unwrap();
        let text = render(&a);
        let b = parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(a, b, "{text}");
    }

    #[test]
    fn round_trips() {
        round_trip("SELECT DISTINCT s.id, s.name FROM student s, takes t WHERE s.id = t.id AND t.grade = 'F'");
        round_trip("SELECT a FROM r WHERE NOT (a > 1 OR b < -2) AND c BETWEEN 1 AND 5");
        round_trip("SELECT a FROM r WHERE NOT EXISTS (SELECT * FROM s WHERE s.a = r.a)");
        round_trip("(SELECT a FROM r) EXCEPT ALL (SELECT a FROM s)");
        round_trip("WITH x(c) AS (SELECT a FROM r) SELECT c FROM x ORDER BY c DESC LIMIT 2");
        round_trip("SELECT COUNT(*), SUM(DISTINCT b) FROM r GROUP BY a HAVING COUNT(*) > 2");
        round_trip("SELECT a FROM r LEFT OUTER JOIN (s NATURAL JOIN t) ON r.a = s.a");
        round_trip("SELECT x.a FROM (SELECT a FROM r) AS x(a) WHERE x.a IN (1, 2, 3)");
        round_trip("SELECT a FROM r WHERE a >= ALL (SELECT b FROM s) AND b LIKE 'x%'");
        round_trip("SELECT \"Select\" FROM r WHERE name = 'O''Neil'");
    }
}
