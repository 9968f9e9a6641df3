//! SQL-like text for tree-view nodes, used in edit descriptions.
//!
//! Instances print as the relation name, with `#k` appended for the second
//! and later occurrences of the same relation.

use super::unflatten::instance;
use crate::flat::FlatNode;

pub fn instance_text(label: &str) -> String {
    match instance(label) {
        Some(id) if id.ordinal == 1 => id.relation,
        _ => label.to_string(),
    }
}

fn leaf(label: &str) -> String {
    if label.starts_with('\'') {
        return label.to_string();
    }
    if instance(label).is_some() {
        return instance_text(label);
    }
    match label.rsplit_once('.') {
        Some((inst, attr)) if instance(inst).is_some() => format!("{}.{attr}", instance_text(inst)),
        _ => label.to_string(),
    }
}

fn is_literal(n: &FlatNode) -> bool {
    n.children.is_empty() && (n.label.starts_with('\'') || crate::ir::Value::parse_number(&n.label).is_some())
}

fn list(ns: &[FlatNode], sep: &str) -> String {
    ns.iter().map(text).collect::<Vec<_>>().join(sep)
}

fn is_query(n: &FlatNode) -> bool {
    (n.class.is_none() && n.label == "SELECT")
        || matches!(n.class, Some(crate::flat::Component::SetOperator))
}

fn select(n: &FlatNode) -> String {
    let slot = |i: usize| &n.children[i].children;
    let mut out = String::from("SELECT ");
    if !slot(0).is_empty() {
        out.push_str("DISTINCT ");
    }
    if slot(1).is_empty() {
        out.push('*');
    } else {
        out.push_str(&list(slot(1), ", "));
    }
    if let [j] = &slot(2)[..] {
        out.push_str(" FROM ");
        out.push_str(&list(&j.children[0].children, ", "));
        if !j.children[1].children.is_empty() {
            out.push_str(" WHERE ");
            out.push_str(&list(&j.children[1].children, " AND "));
        }
    }
    if !slot(3).is_empty() {
        out.push_str(" GROUP BY ");
        out.push_str(&list(slot(3), ", "));
    }
    if !slot(4).is_empty() {
        out.push_str(" HAVING ");
        out.push_str(&list(slot(4), " AND "));
    }
    if !slot(5).is_empty() {
        out.push_str(" ORDER BY ");
        out.push_str(&list(slot(5), ", "));
    }
    if let Some(l) = slot(6).first() {
        out.push(' ');
        out.push_str(&l.label);
    }
    out
}

/// Render a node of any kind.
pub fn text(n: &FlatNode) -> String {
    let c = &n.children;
    let l = n.label.as_str();
    if n.class.is_none() {
        return match l {
            "SELECT" => select(n),
            "JOIN" => {
                let mut s = format!("({}", list(&c[0].children, " JOIN "));
                if !c[1].children.is_empty() {
                    s.push_str(" ON ");
                    s.push_str(&list(&c[1].children, " AND "));
                }
                s + ")"
            }
            _ => list(c, ", "),
        };
    }
    if is_query(n) {
        return c.iter().map(|q| format!("({})", text(q))).collect::<Vec<_>>().join(&format!(" {l} "));
    }
    if let Some(base) = l.strip_suffix(" DESC") {
        let plain = FlatNode {
            label: base.to_string(),
            ..n.clone()
        };
        return format!("{} DESC", text(&plain));
    }
    match (l, c.len()) {
        (_, 0) => leaf(l),
        ("LEFT OUTER JOIN" | "RIGHT OUTER JOIN" | "FULL OUTER JOIN", 3) => {
            let mut s = format!("{} {l} {}", text(&c[0]), text(&c[1]));
            if !c[2].children.is_empty() {
                s.push_str(" ON ");
                s.push_str(&list(&c[2].children, " AND "));
            }
            s
        }
        ("=", _) if !n.ordered => {
            let (lits, cols): (Vec<&FlatNode>, Vec<&FlatNode>) = c.iter().partition(|m| is_literal(m));
            cols.into_iter().chain(lits).map(text).collect::<Vec<_>>().join(" = ")
        }
        ("AND" | "OR", _) => format!("({})", list(c, &format!(" {l} "))),
        ("NOT", 1) => format!("NOT ({})", text(&c[0])),
        ("EXISTS" | "NOT EXISTS" | "SUBQ", 1) => {
            let kw = if l == "SUBQ" { String::new() } else { format!("{l} ") };
            format!("{kw}({})", text(&c[0]))
        }
        ("IS NULL" | "IS NOT NULL", 1) => format!("{} {l}", text(&c[0])),
        ("BETWEEN" | "NOT BETWEEN", 3) => format!("{} {l} {} AND {}", text(&c[0]), text(&c[1]), text(&c[2])),
        ("IN" | "NOT IN", 2) => format!("{} {l} ({})", text(&c[0]), text(&c[1])),
        (_, 1) if l.starts_with('+') || l.starts_with('-') => {
            let (sign, k) = l.split_at(1);
            format!("{} {sign} {k}", text(&c[0]))
        }
        (_, 1) if n.class == Some(crate::flat::Component::Relation) => {
            format!("({}) AS {}", text(&c[0]), instance_text(l))
        }
        (_, 1) => match l.strip_suffix(" DISTINCT") {
            Some(f) => format!("{f}(DISTINCT {})", text(&c[0])),
            None => format!("{l}({})", text(&c[0])),
        },
        (_, 2) if is_query(&c[1]) => format!("{} {l} ({})", text(&c[0]), text(&c[1])),
        ("<" | "<=" | ">" | ">=" | "=" | "<>", 2) if is_literal(&c[0]) && !is_literal(&c[1]) => {
            let flipped = match l {
                "<" => ">",
                "<=" => ">=",
                ">" => "<",
                ">=" => "<=",
                other => other,
            };
            format!("{} {flipped} {}", text(&c[1]), text(&c[0]))
        }
        (_, 2) => format!("{} {l} {}", text(&c[0]), text(&c[1])),
        _ => format!("{l}({})", list(c, ", ")),
    }
}
