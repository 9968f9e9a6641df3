//! Candidate edits from a clause-by-clause comparison of two tree views.

use std::collections::{BTreeMap, BTreeSet};

use super::render::{instance_text, text};
use super::unflatten::instance;
use super::{Edit, EditKind, Op};
use crate::distance::{subtree_weight, ComponentWeights};
use crate::flat::{slot, Component, FlatNode};
use crate::rational::Rational;

pub(super) fn candidates(s: &FlatNode, c: &FlatNode, w: &ComponentWeights) -> Vec<Edit> {
    let mut g = Gen { w, out: Vec::new() };
    g.query(s, c, &[], false, 0);
    g.out
}

/// The top-level item an edit happens inside, with its path.
#[derive(Clone, Copy)]
struct Item<'a> {
    node: &'a FlatNode,
    path: &'a [usize],
}

struct Gen<'a> {
    w: &'a ComponentWeights,
    out: Vec<Edit>,
}

fn join(path: &[usize], i: usize) -> Vec<usize> {
    let mut p = path.to_vec();
    p.push(i);
    p
}

fn is_query(n: &FlatNode) -> bool {
    (n.class.is_none() && n.label == "SELECT") || n.class == Some(Component::SetOperator)
}

fn is_outer(n: &FlatNode) -> bool {
    n.class == Some(Component::JoinOperator)
}

fn is_join(n: &FlatNode) -> bool {
    n.class.is_none() && n.label == "JOIN"
}

/// Component a subtree is billed to: its own class or that of its first billed node.
fn class_of(n: &FlatNode) -> Component {
    let mut found = None;
    n.walk(&mut |x| {
        if found.is_none() {
            found = x.class;
        }
    });
    found.unwrap_or(Component::Relation)
}

fn comp_name(c: Component) -> String {
    c.name().replace('_', " ")
}

/// Node kinds whose children can be edited in place of a full replacement.
fn family(n: &FlatNode) -> Option<&'static str> {
    let class = n.class?;
    if n.children.is_empty() {
        return Some("leaf");
    }
    let l = n.label.as_str();
    Some(match class {
        Component::JoinOperator => "outer",
        Component::SetOperator => "setop",
        Component::Relation => "derived",
        Component::SubqueryConnective => match l {
            "EXISTS" | "NOT EXISTS" => "exists",
            "IN" | "NOT IN" => "in",
            "SUBQ" => "subq",
            _ => "quantified",
        },
        Component::Aggregate => "aggregate",
        _ => match l {
            "=" if !n.ordered => "class",
            "=" | "<>" | "<" | "<=" | ">" | ">=" => "compare",
            "LIKE" | "NOT LIKE" => "like",
            "IS NULL" | "IS NOT NULL" => "null",
            "BETWEEN" | "NOT BETWEEN" => "between",
            "IN" | "NOT IN" => "list",
            "AND" => "and",
            "OR" => "or",
            "NOT" => "not",
            _ if l.ends_with(" DESC") => "desc",
            _ => "arith",
        },
    })
}

/// Instances bound by a FROM subtree, not looking into subqueries.
fn declared(n: &FlatNode, out: &mut BTreeSet<String>) {
    if n.class == Some(Component::Relation) {
        out.insert(n.label.clone());
    } else if is_join(n) {
        n.children[0].children.iter().for_each(|c| declared(c, out));
    } else if is_outer(n) {
        declared(&n.children[0], out);
        declared(&n.children[1], out);
    }
}

fn decl(n: &FlatNode) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    declared(n, &mut out);
    out
}

/// Instances a subtree refers to without binding them itself.
fn refs(n: &FlatNode) -> BTreeSet<String> {
    let mut used = BTreeSet::new();
    let mut bound = BTreeSet::new();
    n.walk(&mut |x| {
        if x.class == Some(Component::Relation) {
            bound.insert(x.label.clone());
        } else if x.children.is_empty() {
            if let Some((inst, _)) = x.label.rsplit_once('.') {
                if instance(inst).is_some() {
                    used.insert(inst.to_string());
                }
            }
        }
    });
    used.difference(&bound).cloned().collect()
}

/// Occurrence-wise multiset comparison of two child lists.
struct Diff {
    excess: Vec<usize>,
    missing: Vec<usize>,
    /// Partner in the correct list for every matched student item.
    partner: Vec<Option<usize>>,
}

fn diff(s: &[FlatNode], c: &[FlatNode]) -> Diff {
    let mut pool: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (j, n) in c.iter().enumerate().rev() {
        pool.entry(n.key.as_str()).or_default().push(j);
    }
    let mut partner = vec![None; s.len()];
    let mut taken = vec![false; c.len()];
    for (i, n) in s.iter().enumerate() {
        if let Some(j) = pool.get_mut(n.key.as_str()).and_then(Vec::pop) {
            partner[i] = Some(j);
            taken[j] = true;
        }
    }
    Diff {
        excess: (0..s.len()).filter(|&i| partner[i].is_none()).collect(),
        missing: (0..c.len()).filter(|&j| !taken[j]).collect(),
        partner,
    }
}

fn inversions(seq: &[usize]) -> usize {
    let mut n = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                n += 1;
            }
        }
    }
    n
}

/// Render `item` with `f` applied to the node at `rel` (relative to the item).
fn edited(item: Item, path: &[usize], f: impl FnOnce(&mut FlatNode)) -> String {
    let mut copy = item.node.clone();
    let mut n = &mut copy;
    for &i in &path[item.path.len()..] {
        n = &mut n.children[i];
    }
    f(n);
    text(&copy)
}

fn location(container: &FlatNode, depth: usize) -> String {
    let mut s = match container.label.as_str() {
        "on" => " in the ON clause".to_string(),
        _ => String::new(),
    };
    if depth > 0 {
        s.push_str(" in the subquery");
    }
    s
}

impl Gen<'_> {
    fn weight(&self, n: &FlatNode) -> Rational {
        subtree_weight(n, self.w)
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        kind: EditKind,
        component: Component,
        target_path: Vec<usize>,
        target: Option<&FlatNode>,
        payload: Option<&FlatNode>,
        cost: Rational,
        description: String,
        op: Op,
    ) {
        self.out.push(Edit {
            kind,
            component,
            target_path,
            target: target.map(|n| n.key.clone()),
            payload: payload.map(|n| n.key.clone()),
            context: None,
            cost,
            description,
            op,
        });
    }

    fn query(&mut self, s: &FlatNode, c: &FlatNode, path: &[usize], exists: bool, depth: usize) {
        if s.key == c.key {
            return;
        }
        let select = |n: &FlatNode| n.class.is_none() && n.label == "SELECT";
        if select(s) && select(c) {
            for i in [slot::DISTINCT, slot::PROJ, slot::GROUP, slot::HAVING, slot::ORDER, slot::LIMIT] {
                if i == slot::PROJ && exists {
                    continue;
                }
                self.list(&s.children[i], &c.children[i], &join(path, i), depth, None);
            }
            let from = join(&join(path, slot::FROM), 0);
            let (sj, cj) = (&s.children[slot::FROM].children[0], &c.children[slot::FROM].children[0]);
            self.join_node(sj, cj, &from, depth);
            self.moves(sj, cj, &from, depth);
        } else if s.class == Some(Component::SetOperator) && c.class == Some(Component::SetOperator) {
            if s.label != c.label {
                self.relabel(s, c, path, None);
            }
            if s.ordered && c.ordered && s.children.len() == c.children.len() {
                for (i, (x, y)) in s.children.iter().zip(&c.children).enumerate() {
                    self.query(x, y, &join(path, i), false, depth);
                }
            } else {
                self.list(s, c, path, depth, None);
            }
        }
    }

    /// Insert, delete, replace and reorder the children of `s` towards those of `c`.
    fn list(&mut self, s: &FlatNode, c: &FlatNode, path: &[usize], depth: usize, item: Option<Item>) {
        if s.key == c.key {
            return;
        }
        let d = diff(&s.children, &c.children);
        let w = self.w;
        for &i in &d.excess {
            let x = &s.children[i];
            let p = join(path, i);
            let comp = class_of(x);
            let desc = match item {
                Some(it) => format!(
                    "change {} {} to {}",
                    comp_name(class_of(it.node)),
                    text(it.node),
                    edited(it, path, |n| {
                        n.children.remove(i);
                    })
                ),
                None if matches!(comp, Component::Distinct | Component::Limit) => {
                    format!("remove {}{}", text(x), location(s, depth))
                }
                None => format!("delete {} {}{}", comp_name(comp), text(x), location(s, depth)),
            };
            self.push(
                EditKind::Delete,
                comp,
                p.clone(),
                Some(x),
                None,
                subtree_weight(x, w),
                desc,
                Op::Delete { path: p },
            );
        }
        for &j in &d.missing {
            let y = &c.children[j];
            let index = if s.ordered {
                (0..j)
                    .rev()
                    .find_map(|k| d.partner.iter().position(|p| *p == Some(k)))
                    .map_or(0, |m| m + 1)
            } else {
                s.children.len()
            };
            let comp = class_of(y);
            let desc = match item {
                Some(it) => format!(
                    "change {} {} to {}",
                    comp_name(class_of(it.node)),
                    text(it.node),
                    edited(it, path, |n| n.children.insert(index, y.clone()))
                ),
                None if matches!(comp, Component::Distinct | Component::Limit) => {
                    format!("add {}{}", text(y), location(s, depth))
                }
                None => format!("insert {} {}{}", comp_name(comp), text(y), location(s, depth)),
            };
            self.push(
                EditKind::Insert,
                comp,
                path.to_vec(),
                None,
                Some(y),
                subtree_weight(y, w),
                desc,
                Op::Insert {
                    container: path.to_vec(),
                    index,
                    node: y.clone(),
                },
            );
        }
        for &i in &d.excess {
            for &j in &d.missing {
                let (x, y) = (&s.children[i], &c.children[j]);
                let p = join(path, i);
                self.replace(x, y, &p, item);
                let inner = item.or(Some(Item { node: x, path: &p }));
                self.pair(x, y, &p, depth, inner);
            }
        }
        if s.ordered {
            self.reorders(s, path, &d, depth);
        }
    }

    fn replace(&mut self, x: &FlatNode, y: &FlatNode, path: &[usize], item: Option<Item>) {
        let comp = class_of(y);
        let desc = match item {
            Some(it) => format!(
                "replace {} {} with {}",
                comp_name(class_of(it.node)),
                text(it.node),
                edited(it, path, |n| *n = y.clone())
            ),
            None => format!("replace {} {} with {}", comp_name(class_of(x)), text(x), text(y)),
        };
        self.push(
            EditKind::Replace,
            comp,
            path.to_vec(),
            Some(x),
            Some(y),
            self.weight(y),
            desc,
            Op::Replace {
                path: path.to_vec(),
                node: y.clone(),
            },
        );
    }

    fn reorders(&mut self, s: &FlatNode, path: &[usize], d: &Diff, depth: usize) {
        let n = s.children.len();
        let order = |seq: &[usize]| -> Vec<usize> { seq.iter().filter_map(|&i| d.partner[i]).collect() };
        let now = inversions(&order(&(0..n).collect::<Vec<_>>()));
        if now == 0 {
            return;
        }
        for i in 0..n {
            if d.partner[i].is_none() {
                continue;
            }
            for to in 0..n {
                if to == i {
                    continue;
                }
                let mut seq: Vec<usize> = (0..n).filter(|&k| k != i).collect();
                seq.insert(to, i);
                if inversions(&order(&seq)) >= now {
                    continue;
                }
                let x = &s.children[i];
                let comp = class_of(x);
                self.push(
                    EditKind::Reorder,
                    comp,
                    join(path, i),
                    Some(x),
                    None,
                    self.weight(x) / Rational::from_integer(2),
                    format!("move {} {} to position {}{}", comp_name(comp), text(x), to + 1, location(s, depth)),
                    Op::Reorder {
                        path: join(path, i),
                        index: to,
                    },
                );
            }
        }
    }

    /// Edits inside a matched-up pair of children.
    fn pair(&mut self, x: &FlatNode, y: &FlatNode, path: &[usize], depth: usize, item: Option<Item>) {
        if is_query(x) && is_query(y) {
            self.query(x, y, path, false, depth);
        } else if x.class.is_none() && y.class.is_none() && x.label == y.label {
            if is_join(x) {
                self.join_node(x, y, path, depth);
            } else {
                self.list(x, y, path, depth, item);
            }
        } else if x.class.is_some() && y.class.is_some() {
            self.node(x, y, path, depth, item);
        } else if is_outer(x) {
            self.to_inner(x, path);
        } else if is_join(x) && is_outer(y) {
            self.to_outer(x, y, path);
        }
    }

    fn relabel(&mut self, a: &FlatNode, b: &FlatNode, path: &[usize], item: Option<Item>) {
        let fam = family(a);
        let (kind, comp) = match fam {
            Some("outer") => (EditKind::JoinTypeFlip, Component::JoinOperator),
            Some("exists" | "in" | "quantified") => (EditKind::ConnectiveFlip, Component::SubqueryConnective),
            _ => (EditKind::Replace, b.class.unwrap_or(Component::SetOperator)),
        };
        let desc = match (fam, item) {
            (Some("outer"), _) => format!(
                "change the {} of {} and {} to {}",
                a.label,
                text(&a.children[0]),
                text(&a.children[1]),
                b.label
            ),
            (_, Some(it)) => format!(
                "change {} {} to {}",
                comp_name(class_of(it.node)),
                text(it.node),
                edited(it, path, |n| n.label = b.label.clone())
            ),
            (_, None) => format!("change {} to {}", a.label, b.label),
        };
        self.push(
            kind,
            comp,
            path.to_vec(),
            Some(a),
            None,
            self.w.get(comp),
            desc,
            Op::Relabel {
                path: path.to_vec(),
                label: b.label.clone(),
            },
        );
    }

    /// Edits turning billed node `a` into `b` short of replacing it whole.
    fn node(&mut self, a: &FlatNode, b: &FlatNode, path: &[usize], depth: usize, item: Option<Item>) {
        if a.key == b.key || family(a).is_none() || family(a) != family(b) || family(a) == Some("leaf") {
            return;
        }
        if a.label != b.label {
            self.relabel(a, b, path, item);
        }
        if a.ordered && b.ordered && a.children.len() == b.children.len() {
            let exists = a.label.ends_with("EXISTS");
            for (i, (x, y)) in a.children.iter().zip(&b.children).enumerate() {
                if x.key == y.key {
                    continue;
                }
                let p = join(path, i);
                if is_query(x) && is_query(y) {
                    self.query(x, y, &p, exists, depth + 1);
                    continue;
                }
                if x.class.is_some() && y.class.is_some() {
                    self.replace(x, y, &p, item);
                    self.node(x, y, &p, depth, item);
                } else {
                    if !(x.class.is_none() && y.class.is_none() && x.label == y.label) {
                        self.replace(x, y, &p, item);
                    }
                    let side = if is_outer(a) { None } else { item };
                    self.pair(x, y, &p, depth, side);
                }
            }
        } else if !a.ordered && !b.ordered {
            self.list(a, b, path, depth, item);
        }
    }

    fn join_node(&mut self, s: &FlatNode, c: &FlatNode, path: &[usize], depth: usize) {
        if s.key == c.key {
            return;
        }
        self.list(&s.children[0], &c.children[0], &join(path, 0), depth, None);
        self.list(&s.children[1], &c.children[1], &join(path, 1), depth, None);
        let present: BTreeSet<&str> = s.children[0].children.iter().map(|n| n.key.as_str()).collect();
        for o in &c.children[0].children {
            if is_outer(o) && !present.contains(o.key.as_str()) {
                self.to_outer(s, o, path);
            }
        }
        let sides = |n: &FlatNode| (decl(&n.children[0]), decl(&n.children[1]));
        let wanted: Vec<_> = c.children[0].children.iter().filter(|n| is_outer(n)).map(sides).collect();
        let wanted_keys: BTreeSet<&str> = c.children[0].children.iter().map(|n| n.key.as_str()).collect();
        for (i, o) in s.children[0].children.iter().enumerate() {
            if is_outer(o) && !wanted_keys.contains(o.key.as_str()) && !wanted.contains(&sides(o)) {
                self.to_inner(o, &join(&join(path, 0), i));
            }
        }
    }

    fn to_inner(&mut self, o: &FlatNode, path: &[usize]) {
        self.push(
            EditKind::JoinTypeFlip,
            Component::JoinOperator,
            path.to_vec(),
            Some(o),
            None,
            self.w.get(Component::JoinOperator),
            format!(
                "change the {} of {} and {} to an inner join",
                o.label,
                text(&o.children[0]),
                text(&o.children[1])
            ),
            Op::ToInner { path: path.to_vec() },
        );
    }

    /// Group inputs of the inner join `s` as the sides of the correct outer join `o`.
    fn to_outer(&mut self, s: &FlatNode, o: &FlatNode, path: &[usize]) {
        let (l, r) = (decl(&o.children[0]), decl(&o.children[1]));
        let (mut left, mut right) = (Vec::new(), Vec::new());
        let (mut got_l, mut got_r) = (BTreeSet::new(), BTreeSet::new());
        for (i, item) in s.children[0].children.iter().enumerate() {
            let d = decl(item);
            if d.is_subset(&l) {
                got_l.extend(d);
                left.push(i);
            } else if d.is_subset(&r) {
                got_r.extend(d);
                right.push(i);
            } else if !d.is_disjoint(&l) || !d.is_disjoint(&r) {
                return;
            }
        }
        if got_l != l || got_r != r {
            return;
        }
        let local = decl(s);
        let on: BTreeSet<&str> = o.children[2].children.iter().map(|n| n.key.as_str()).collect();
        let preds = s.children[1]
            .children
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                let rf: BTreeSet<String> = refs(p).intersection(&local).cloned().collect();
                rf.iter().all(|x| l.contains(x) || r.contains(x))
                    && !rf.is_disjoint(&r)
                    && (!rf.is_disjoint(&l) || on.contains(p.key.as_str()))
            })
            .map(|(k, _)| k)
            .collect();
        let names = |ids: &BTreeSet<String>| ids.iter().map(|i| instance_text(i)).collect::<Vec<_>>().join(", ");
        self.push(
            EditKind::JoinTypeFlip,
            Component::JoinOperator,
            path.to_vec(),
            None,
            None,
            self.w.get(Component::JoinOperator),
            format!("change the inner join of {} and {} to a {}", names(&l), names(&r), o.label),
            Op::ToOuter {
                join: path.to_vec(),
                left,
                right,
                preds,
                label: o.label.clone(),
            },
        );
    }

    /// Conditions sitting in the wrong predicate list of the same FROM clause.
    fn moves(&mut self, s: &FlatNode, c: &FlatNode, path: &[usize], depth: usize) {
        let (mut sl, mut cl) = (Vec::new(), Vec::new());
        pred_lists(s, path, true, &mut sl);
        pred_lists(c, &[], true, &mut cl);
        let cmap: BTreeMap<&str, &FlatNode> = cl.iter().map(|(sig, _, n)| (sig.as_str(), *n)).collect();
        let empty = FlatNode {
            label: String::new(),
            class: None,
            ordered: false,
            children: vec![],
            key: String::new(),
        };
        let diffs: Vec<Diff> = sl
            .iter()
            .map(|(sig, _, n)| diff(&n.children, &cmap.get(sig.as_str()).copied().unwrap_or(&empty).children))
            .collect();
        for (x, (_, xpath, xn)) in sl.iter().enumerate() {
            for &i in &diffs[x].excess {
                let p = &xn.children[i];
                for (y, (sig, ypath, yn)) in sl.iter().enumerate() {
                    let Some(target) = cmap.get(sig.as_str()) else {
                        continue;
                    };
                    if x == y || !diffs[y].missing.iter().any(|&j| target.children[j].key == p.key) {
                        continue;
                    }
                    let comp = class_of(p);
                    let to = if yn.label == "on" { "the ON clause" } else { "the WHERE clause" };
                    self.push(
                        EditKind::Move,
                        comp,
                        join(xpath, i),
                        Some(p),
                        None,
                        self.weight(p) / Rational::from_integer(2),
                        format!(
                            "move {} {} to {to}{}",
                            comp_name(comp),
                            text(p),
                            if depth > 0 { " in the subquery" } else { "" }
                        ),
                        Op::Move {
                            from: join(xpath, i),
                            to: ypath.clone(),
                        },
                    );
                }
            }
        }
    }
}

/// Predicate containers of a FROM tree with a position-independent signature.
fn pred_lists<'a>(n: &'a FlatNode, path: &[usize], root: bool, out: &mut Vec<(String, Vec<usize>, &'a FlatNode)>) {
    let names = |d: BTreeSet<String>| d.into_iter().collect::<Vec<_>>().join(",");
    if is_join(n) {
        let sig = if root { "where".to_string() } else { format!("inner:{}", names(decl(n))) };
        out.push((sig, join(path, 1), &n.children[1]));
        for (i, c) in n.children[0].children.iter().enumerate() {
            pred_lists(c, &join(&join(path, 0), i), false, out);
        }
    } else if is_outer(n) {
        let sig = format!("on:{}:{}|{}", n.label, names(decl(&n.children[0])), names(decl(&n.children[1])));
        out.push((sig, join(path, 2), &n.children[2]));
        pred_lists(&n.children[0], &join(path, 0), false, out);
        pred_lists(&n.children[1], &join(path, 1), false, out);
    }
}
