//! Guided edits that move a student query towards a correct one.
//!
//! Candidates come from comparing the two tree views clause by clause:
//! subtrees only the correct query has become inserts, subtrees only the
//! student query has become deletes, unmatched pairs become replacements,
//! and misplaced subtrees become moves. Every candidate is applied and the
//! result rebuilt and scope-checked, so inconsistent edits never surface.

mod generate;
pub mod render;
mod scope;
mod unflatten;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distance::ComponentWeights;
use crate::error::{Error, Result};
use crate::flat::{Component, FlatNode, FlatTree};
use crate::ir::Query;
use crate::rational::{self, Rational};
use crate::schema::Schema;
use crate::sql::WithOrigin;

pub use scope::validate;
pub use unflatten::query as unflatten;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Insert,
    Delete,
    Replace,
    Move,
    Reorder,
    JoinTypeFlip,
    ConnectiveFlip,
}

impl EditKind {
    pub fn name(self) -> &'static str {
        match self {
            EditKind::Insert => "insert",
            EditKind::Delete => "delete",
            EditKind::Replace => "replace",
            EditKind::Move => "move",
            EditKind::Reorder => "reorder",
            EditKind::JoinTypeFlip => "join_type_flip",
            EditKind::ConnectiveFlip => "connective_flip",
        }
    }
}

impl fmt::Display for EditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tree surgery on the student view. Paths are child-index paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    Insert {
        container: Vec<usize>,
        index: usize,
        node: FlatNode,
    },
    Delete {
        path: Vec<usize>,
    },
    Replace {
        path: Vec<usize>,
        node: FlatNode,
    },
    Relabel {
        path: Vec<usize>,
        label: String,
    },
    /// Take the subtree at `from` and add it to the unordered container `to`.
    Move {
        from: Vec<usize>,
        to: Vec<usize>,
    },
    /// Move an item of an ordered container to `index` (counted after removal).
    Reorder {
        path: Vec<usize>,
        index: usize,
    },
    /// Regroup some inputs of an inner join under an outer join.
    ToOuter {
        join: Vec<usize>,
        left: Vec<usize>,
        right: Vec<usize>,
        preds: Vec<usize>,
        label: String,
    },
    /// Dissolve the outer join at `path` into an inner join.
    ToInner {
        path: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edit {
    pub kind: EditKind,
    /// Component the edit is billed to.
    pub component: Component,
    /// Affected node in the student tree view (the container for inserts).
    pub target_path: Vec<usize>,
    /// Serialization of the replaced or removed subtree.
    pub target: Option<String>,
    /// Serialization of the subtree taken from the correct query.
    pub payload: Option<String>,
    /// For edits whose target and payload name no relation instance (a
    /// constant, an operator), the nearest enclosing student subtree that
    /// does. Tells apart the copies of an expanded WITH binding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(with = "rational::serde_str")]
    pub cost: Rational,
    pub description: String,
    #[serde(skip)]
    pub(crate) op: Op,
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (cost {})", self.description, rational::to_string(&self.cost))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EditSequence {
    pub edits: Vec<Edit>,
    #[serde(with = "rational::serde_str")]
    pub total_cost: Rational,
}

impl EditSequence {
    pub fn new() -> EditSequence {
        EditSequence::default()
    }

    pub fn with(&self, e: Edit) -> EditSequence {
        let mut out = self.clone();
        out.total_cost += e.cost;
        out.edits.push(e);
        out
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn descriptions(&self) -> Vec<String> {
        self.edits.iter().map(|e| e.description.clone()).collect()
    }

    /// Apply every edit in order, starting from `t`. As in the search, each
    /// intermediate tree is brought back to syntactic canonical form, which
    /// is what the next edit's target path refers to.
    pub fn replay(&self, t: &FlatTree, schema: &Schema) -> Result<FlatTree> {
        self.edits.iter().try_fold(t.clone(), |t, e| {
            Ok(crate::canon::canonicalize_syntactic(&apply_edit(&t, e)?, schema)?.0)
        })
    }
}

/// Guided edits of `sq` towards `cq`, each paired with the edited tree.
pub fn enumerate_edits(sq: &FlatTree, cq: &FlatTree, w: &ComponentWeights) -> Vec<(Edit, FlatTree)> {
    let mut best: BTreeMap<(EditKind, String), (Edit, FlatTree)> = BTreeMap::new();
    for mut e in generate::candidates(sq.root(), cq.root(), w) {
        e.context = context(sq, &e);
        let Ok(t) = apply_edit(sq, &e) else {
            continue;
        };
        if t.serialize() == sq.serialize() {
            continue;
        }
        let slot = (e.kind, t.serialize().to_string());
        let better = best
            .get(&slot)
            .is_none_or(|(old, _)| (e.cost, &e.description) < (old.cost, &old.description));
        if better {
            best.insert(slot, (e, t));
        }
    }
    let mut out: Vec<(Edit, FlatTree)> = best.into_values().collect();
    out.sort_by(|(a, _), (b, _)| (a.cost, &a.description).cmp(&(b.cost, &b.description)));
    out
}

fn mentions_instance(text: &str) -> bool {
    let found = std::cell::Cell::new(false);
    map_instances(text, &|_| {
        found.set(true);
        None
    });
    found.get()
}

fn context(sq: &FlatTree, e: &Edit) -> Option<String> {
    let named = |s: &Option<String>| s.as_deref().is_some_and(mentions_instance);
    if named(&e.target) || named(&e.payload) {
        return None;
    }
    (0..=e.target_path.len())
        .rev()
        .filter_map(|n| sq.root().at(&e.target_path[..n]))
        .map(|node| node.key.clone())
        .find(|k| mentions_instance(k))
}

pub fn check_consistency(t: &FlatTree, e: &Edit) -> bool {
    apply_edit(t, e).is_ok()
}

fn node_mut<'a>(root: &'a mut FlatNode, path: &[usize]) -> Result<&'a mut FlatNode> {
    let mut n = root;
    for &i in path {
        n = n
            .children
            .get_mut(i)
            .ok_or_else(|| Error::InconsistentEdit(format!("no node at {path:?}")))?;
    }
    Ok(n)
}

fn split(path: &[usize]) -> Result<(&[usize], usize)> {
    match path.split_last() {
        Some((last, parent)) => Ok((parent, *last)),
        None => Err(Error::InconsistentEdit("the root cannot be removed".into())),
    }
}

fn take(root: &mut FlatNode, path: &[usize]) -> Result<FlatNode> {
    let (parent, i) = split(path)?;
    let p = node_mut(root, parent)?;
    if i >= p.children.len() {
        return Err(Error::InconsistentEdit(format!("no node at {path:?}")));
    }
    Ok(p.children.remove(i))
}

pub(crate) fn container(label: &str, ordered: bool, children: Vec<FlatNode>) -> FlatNode {
    FlatNode {
        label: label.into(),
        class: None,
        ordered,
        children,
        key: String::new(),
    }
}

fn is_join_container(n: &FlatNode) -> bool {
    n.class.is_none() && n.label == "JOIN"
}

fn apply_op(root: &mut FlatNode, op: &Op) -> Result<()> {
    match op {
        Op::Insert {
            container,
            index,
            node,
        } => {
            let c = node_mut(root, container)?;
            let at = (*index).min(c.children.len());
            c.children.insert(at, node.clone());
        }
        Op::Delete { path } => {
            take(root, path)?;
        }
        Op::Replace { path, node } => *node_mut(root, path)? = node.clone(),
        Op::Relabel { path, label } => node_mut(root, path)?.label = label.clone(),
        Op::Move { from, to } => {
            let moved = node_mut(root, from)?.clone();
            node_mut(root, to)?.children.push(moved);
            take(root, from)?;
        }
        Op::Reorder { path, index } => {
            let (parent, _) = split(path)?;
            let item = take(root, path)?;
            let p = node_mut(root, parent)?;
            let at = (*index).min(p.children.len());
            p.children.insert(at, item);
        }
        Op::ToOuter {
            join,
            left,
            right,
            preds,
            label,
        } => {
            let j = node_mut(root, join)?;
            if !is_join_container(j) {
                return Err(Error::InconsistentEdit("not an inner join".into()));
            }
            let pick = |items: &[FlatNode], idx: &[usize]| -> Result<Vec<FlatNode>> {
                idx.iter()
                    .map(|&i| items.get(i).cloned().ok_or_else(|| Error::InconsistentEdit("no such input".into())))
                    .collect()
            };
            let wrap = |mut items: Vec<FlatNode>| {
                if items.len() == 1 {
                    items.pop().unwrap()
                } else {
                    container("JOIN", true, vec![container("in", false, items), container("pred", false, vec![])])
                }
            };
            let l = wrap(pick(&j.children[0].children, left)?);
            let r = wrap(pick(&j.children[0].children, right)?);
            let on = pick(&j.children[1].children, preds)?;
            let mut gone: Vec<usize> = left.iter().chain(right).copied().collect();
            gone.sort_unstable_by(|a, b| b.cmp(a));
            for i in gone {
                j.children[0].children.remove(i);
            }
            let mut gone = preds.clone();
            gone.sort_unstable_by(|a, b| b.cmp(a));
            for i in gone {
                j.children[1].children.remove(i);
            }
            j.children[0].children.push(FlatNode {
                label: label.clone(),
                class: Some(Component::JoinOperator),
                ordered: true,
                children: vec![l, r, container("on", false, on)],
                key: String::new(),
            });
        }
        Op::ToInner { path } => {
            let outer = node_mut(root, path)?.clone();
            if outer.class != Some(Component::JoinOperator) || outer.children.len() != 3 {
                return Err(Error::InconsistentEdit("not an outer join".into()));
            }
            let [l, r, on] = <[FlatNode; 3]>::try_from(outer.children).unwrap();
            let (parent, _) = split(path)?;
            let p = node_mut(root, parent)?;
            if p.class.is_none() && p.label == "in" {
                take(root, path)?;
                let (join, _) = split(parent)?;
                let j = node_mut(root, join)?;
                j.children[0].children.extend([l, r]);
                j.children[1].children.extend(on.children);
            } else {
                *node_mut(root, path)? =
                    container("JOIN", true, vec![container("in", false, vec![l, r]), container("pred", false, on.children)]);
            }
        }
    }
    Ok(())
}

/// Apply `e` to `t`, rebuilding and scope-checking the result.
pub fn apply_edit(t: &FlatTree, e: &Edit) -> Result<FlatTree> {
    let mut root = t.root().clone();
    apply_op(&mut root, &e.op)?;
    let q: Query = unflatten::query(&root)?;
    scope::validate(&q)?;
    Ok(FlatTree::new(q))
}

/// Replace every instance id (`name#k`) in `text` through `f`.
fn map_instances(text: &str, f: &dyn Fn(&str) -> Option<String>) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    while i < bytes.len() {
        if ident(bytes[i]) && (i == 0 || !ident(bytes[i - 1])) {
            let start = i;
            while i < bytes.len() && ident(bytes[i]) {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'#' {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j > i + 1 {
                    let id = &text[start..j];
                    match f(id) {
                        Some(s) => out.push_str(&s),
                        None => out.push_str(id),
                    }
                    i = j;
                    continue;
                }
            }
            out.push_str(&text[start..i]);
            continue;
        }
        out.push(bytes[i] as char);
        i += 1;
    }
    out
}

/// Bill identical fixes made in different expansions of the same WITH
/// binding once. Later copies stay in the sequence at zero cost.
pub fn adjust_with_cost(seq: &EditSequence, origin: &BTreeMap<crate::ir::InstanceId, WithOrigin>) -> EditSequence {
    if origin.is_empty() {
        return seq.clone();
    }
    let by_label: BTreeMap<String, &WithOrigin> = origin.iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut seen: BTreeMap<String, BTreeSet<(String, u32)>> = BTreeMap::new();
    let mut out = EditSequence::new();
    for e in &seq.edits {
        let occurrences = std::cell::RefCell::new(BTreeSet::new());
        let normalize = |s: &str| {
            map_instances(s, &|id| {
                by_label.get(id).map(|o| {
                    occurrences.borrow_mut().insert((o.binding.clone(), o.occurrence));
                    format!("{}@{}", o.binding, o.local)
                })
            })
        };
        let sig = format!(
            "{}|{}|{}|{}",
            e.kind,
            normalize(e.target.as_deref().unwrap_or("")),
            normalize(e.payload.as_deref().unwrap_or("")),
            normalize(e.context.as_deref().unwrap_or(""))
        );
        let occ = occurrences.into_inner();
        let mut e = e.clone();
        if !occ.is_empty() {
            let prior = seen.entry(sig).or_default();
            if !prior.is_empty() && prior.is_disjoint(&occ) {
                e.cost = Rational::from_integer(0);
                e.description.push_str(" (same fix as in the other use of the WITH binding)");
            }
            prior.extend(occ);
        }
        out = out.with(e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_tree(sql: &str) -> FlatTree {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/toy.toml");
        let schema = crate::schema::Schema::load(&std::fs::read_to_string(path).unwrap()).unwrap();
        let r = crate::sql::resolve(&crate::sql::parse(sql).unwrap(), &schema).unwrap();
        let t = crate::canon::build_flat_tree(&r, &schema).unwrap();
        crate::canon::canonicalize_syntactic(&t, &schema).unwrap().0
    }

    fn op_edit(op: Op) -> Edit {
        Edit {
            kind: EditKind::Delete,
            component: Component::SelectionCondition,
            target_path: vec![],
            target: None,
            payload: None,
            context: None,
            cost: Rational::from_integer(1),
            description: String::new(),
            op,
        }
    }

    fn path_of(t: &FlatTree, label: &str) -> Vec<usize> {
        fn go(n: &FlatNode, label: &str, path: &mut Vec<usize>) -> bool {
            if n.label == label {
                return true;
            }
            for (i, c) in n.children.iter().enumerate() {
                path.push(i);
                if go(c, label, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        let mut path = vec![];
        assert!(go(t.root(), label, &mut path), "{label} not in {}", t.serialize());
        path
    }

    #[test]
    fn deleting_one_operand_is_inconsistent() {
        let t = toy_tree("SELECT r.b FROM r WHERE r.a > 10");
        let cmp = path_of(&t, "r#1.a");
        assert!(!check_consistency(&t, &op_edit(Op::Delete { path: cmp.clone() })));
        let whole = cmp[..cmp.len() - 1].to_vec();
        assert!(check_consistency(&t, &op_edit(Op::Delete { path: whole })));
    }

    #[test]
    fn deleting_a_referenced_relation_is_inconsistent() {
        let t = toy_tree("SELECT s.b FROM r, s WHERE r.a > 5");
        let r = path_of(&t, "r#1");
        assert!(!check_consistency(&t, &op_edit(Op::Delete { path: r })));
    }

    #[test]
    fn visible_selection_insert_is_consistent() {
        let t = toy_tree("SELECT s.b FROM r, s");
        let other = toy_tree("SELECT s.b FROM r, s WHERE r.a = s.b");
        let p = path_of(&other, "=");
        let node = other.root().at(&p).unwrap().clone();
        let container = p[..p.len() - 1].to_vec();
        let e = op_edit(Op::Insert { container, index: 0, node });
        assert_eq!(apply_edit(&t, &e).unwrap(), other);
    }

    #[test]
    fn instance_tokens_are_mapped_whole() {
        let s = map_instances("={r#1.a,r#12.b,'x#1'}", &|id| (id == "r#1").then(|| "T".to_string()));
        assert_eq!(s, "={T.a,r#12.b,'x#1'}");
    }
}
