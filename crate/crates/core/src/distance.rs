//! Component-weighted edit distance between flattened trees.
//!
//! Every billed node costs the weight of its component; a subtree costs the
//! sum over its nodes. Children are matched clause to clause: slot
//! containers only ever pair with the same slot, unordered children use a
//! minimum-cost assignment and ordered children a sequence alignment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat::{Component, FlatNode, FlatTree};
use crate::rational::{self, Rational};

/// Weight per component, 1 unless configured otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentWeights {
    weights: BTreeMap<Component, Rational>,
}

impl Default for ComponentWeights {
    fn default() -> Self {
        ComponentWeights {
            weights: Component::ALL.iter().map(|c| (*c, Rational::one())).collect(),
        }
    }
}

impl ComponentWeights {
    /// Defaults overridden by `overrides`. Weights must be non-negative and
    /// at least one must be positive.
    pub fn new(overrides: impl IntoIterator<Item = (Component, Rational)>) -> Result<Self> {
        let mut w = ComponentWeights::default();
        for (c, v) in overrides {
            if v < Rational::zero() {
                return Err(Error::Assignment(format!("weight of {c} is negative")));
            }
            w.weights.insert(c, v);
        }
        if w.weights.values().all(|v| v.is_zero()) {
            return Err(Error::Assignment("all component weights are zero".into()));
        }
        Ok(w)
    }

    pub fn get(&self, c: Component) -> Rational {
        self.weights.get(&c).copied().unwrap_or_else(Rational::one)
    }

    /// Every weight multiplied by `k`.
    pub fn scaled(&self, k: Rational) -> ComponentWeights {
        ComponentWeights {
            weights: self.weights.iter().map(|(c, v)| (*c, *v * k)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Component, Rational)> + '_ {
        self.weights.iter().map(|(c, v)| (*c, *v))
    }
}

impl Serialize for ComponentWeights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.weights.len()))?;
        for (c, v) in &self.weights {
            m.serialize_entry(c.name(), &rational::to_string(v))?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for ComponentWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "crate::rational::serde_str")] Rational);
        let raw = BTreeMap::<String, W>::deserialize(d)?;
        let mut pairs = Vec::new();
        for (k, W(v)) in raw {
            let c: Component = k.parse().map_err(serde::de::Error::custom)?;
            pairs.push((c, v));
        }
        ComponentWeights::new(pairs).map_err(serde::de::Error::custom)
    }
}

const N: usize = Component::ALL.len();

fn index(c: Component) -> usize {
    Component::ALL.iter().position(|x| *x == c).unwrap_or(0)
}

/// Weighted total with per-component edit counts.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Cost {
    total: Rational,
    counts: [u32; N],
}

impl Cost {
    fn zero() -> Cost {
        Cost {
            total: Rational::zero(),
            counts: [0; N],
        }
    }

    fn add(&mut self, other: &Cost) {
        self.total += other.total;
        for i in 0..N {
            self.counts[i] += other.counts[i];
        }
    }

    fn plus(mut self, other: &Cost) -> Cost {
        self.add(other);
        self
    }

    /// Total plus a signature of the counts for symmetric tie breaking.
    fn lex(&self) -> Lex {
        let sig = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as i64 * (1 + i as i64 * 37))
            .sum();
        Lex(self.total, sig)
    }

    fn rank(&self) -> (Rational, u32, [u32; N]) {
        (self.total, self.counts.iter().sum(), self.counts)
    }

    fn min(self, other: Cost) -> Cost {
        if other.rank() < self.rank() {
            other
        } else {
            self
        }
    }
}

/// Additive, totally ordered cost scalar for the matching algorithms.
pub trait Scalar:
    Copy + Ord + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::iter::Sum
{
    fn nil() -> Self;
    fn unit() -> Self;
}

impl Scalar for Rational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
}

/// Weighted total with a secondary key, ordered lexicographically. The
/// secondary key only separates candidates of equal total, which makes tie
/// breaking independent of argument order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lex(Rational, i64);

impl std::ops::Add for Lex {
    type Output = Lex;
    fn add(self, o: Lex) -> Lex {
        Lex(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Sub for Lex {
    type Output = Lex;
    fn sub(self, o: Lex) -> Lex {
        Lex(self.0 - o.0, self.1 - o.1)
    }
}

impl std::iter::Sum for Lex {
    fn sum<I: Iterator<Item = Lex>>(it: I) -> Lex {
        it.fold(Lex(Rational::zero(), 0), |a, b| a + b)
    }
}

impl Scalar for Lex {
    fn nil() -> Self {
        Lex(Rational::zero(), 0)
    }
    fn unit() -> Self {
        Lex(Rational::one(), 0)
    }
}

/// Minimum-cost assignment between `n` left and `m` right items. An
/// unmatched left item `i` costs `del(i)`, an unmatched right item `j` costs
/// `ins(j)`. Returns the total and, per left item, its partner.
pub fn unordered_match<T: Scalar>(
    n: usize,
    m: usize,
    pair: &dyn Fn(usize, usize) -> T,
    del: &dyn Fn(usize) -> T,
    ins: &dyn Fn(usize) -> T,
) -> (T, Vec<Option<usize>>) {
    if n == 0 || m == 0 {
        let total = (0..n).map(del).sum::<T>() + (0..m).map(ins).sum::<T>();
        return (total, vec![None; n]);
    }
    // Square (n+m) matrix: rows are left items then insertion slots, columns
    // are right items then deletion slots.
    let size = n + m;
    let mut big = T::unit();
    for i in 0..n {
        big = big + del(i);
        for j in 0..m {
            big = big + pair(i, j);
        }
    }
    for j in 0..m {
        big = big + ins(j);
    }
    let cost: Vec<Vec<T>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| match (i < n, j < m) {
                    (true, true) => pair(i, j),
                    (true, false) if j - m == i => del(i),
                    (false, true) if i - n == j => ins(j),
                    (false, false) => T::nil(),
                    _ => big,
                })
                .collect()
        })
        .collect();
    let assign = hungarian(&cost, big + big);
    let total = (0..size).map(|i| cost[i][assign[i]]).sum();
    let partners = (0..n).map(|i| (assign[i] < m).then_some(assign[i])).collect();
    (total, partners)
}

/// Square assignment problem, potentials formulation. Returns the column
/// assigned to each row. `inf` must exceed any reduced cost.
fn hungarian<T: Scalar>(a: &[Vec<T>], inf: T) -> Vec<usize> {
    let n = a.len();
    let inf = inf + a.iter().flatten().copied().sum::<T>();
    let mut u = vec![T::nil(); n + 1];
    let mut v = vec![T::nil(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// One step of a sequence alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Align {
    Pair(usize, usize),
    Delete(usize),
    Insert(usize),
    /// Left items `i`, `i + 1` equal right items `j + 1`, `j`.
    Swap(usize, usize),
}

/// Sequence edit distance with per-item costs and adjacent transpositions.
/// Two neighbours that each match exactly, but in the opposite order,
/// cost `swap(i)` instead of two substitutions. Returns the total and the
/// alignment in sequence order.
pub fn ordered_distance<T: Scalar>(
    n: usize,
    m: usize,
    pair: &dyn Fn(usize, usize) -> T,
    del: &dyn Fn(usize) -> T,
    ins: &dyn Fn(usize) -> T,
    swap: &dyn Fn(usize) -> T,
) -> (T, Vec<Align>) {
    let swappable = |i: usize, j: usize| {
        i >= 2 && j >= 2 && pair(i - 2, j - 1) == T::nil() && pair(i - 1, j - 2) == T::nil()
    };
    let mut d = vec![vec![T::nil(); m + 1]; n + 1];
    for i in 1..=n {
        d[i][0] = d[i - 1][0] + del(i - 1);
    }
    for j in 1..=m {
        d[0][j] = d[0][j - 1] + ins(j - 1);
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + pair(i - 1, j - 1);
            let dl = d[i - 1][j] + del(i - 1);
            let is = d[i][j - 1] + ins(j - 1);
            d[i][j] = sub.min(dl).min(is);
            if swappable(i, j) {
                d[i][j] = d[i][j].min(d[i - 2][j - 2] + swap(i - 2));
            }
        }
    }
    let mut steps = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + pair(i - 1, j - 1) {
            steps.push(Align::Pair(i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i][j] == d[i - 1][j] + del(i - 1) {
            steps.push(Align::Delete(i - 1));
            i -= 1;
        } else if j > 0 && d[i][j] == d[i][j - 1] + ins(j - 1) {
            steps.push(Align::Insert(j - 1));
            j -= 1;
        } else {
            steps.push(Align::Swap(i - 2, j - 2));
            i -= 2;
            j -= 2;
        }
    }
    steps.reverse();
    (d[n][m], steps)
}

/// Per-component edit counts `E_c` and correct-query node counts `N_c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLine {
    pub component: Component,
    pub nodes: u32,
    pub edits: u32,
    #[serde(with = "rational::serde_str")]
    pub weight: Rational,
}

impl ComponentLine {
    pub fn contribution(&self) -> Rational {
        self.weight * Rational::from_integer(self.edits as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceBreakdown {
    pub components: Vec<ComponentLine>,
    /// `Σ W_c·E_c`.
    #[serde(with = "rational::serde_str")]
    pub total: Rational,
}

impl DistanceBreakdown {
    fn line(&self, c: Component) -> Option<&ComponentLine> {
        self.components.iter().find(|l| l.component == c)
    }

    pub fn edits(&self, c: Component) -> u32 {
        self.line(c).map_or(0, |l| l.edits)
    }

    pub fn nodes(&self, c: Component) -> u32 {
        self.line(c).map_or(0, |l| l.nodes)
    }

    /// `Σ W_c·N_c` over the correct query.
    pub fn weighted_nodes(&self) -> Rational {
        self.components
            .iter()
            .map(|l| l.weight * Rational::from_integer(l.nodes as i64))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|l| l.edits == 0)
    }
}

impl fmt::Display for DistanceBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>5} {:>5} {:>7} {:>12}", "component", "N_c", "E_c", "W_c", "contribution")?;
        for l in &self.components {
            if l.nodes == 0 && l.edits == 0 {
                continue;
            }
            writeln!(
                f,
                "{:<20} {:>5} {:>5} {:>7} {:>12}",
                l.component.name(),
                l.nodes,
                l.edits,
                rational::to_string(&l.weight),
                rational::to_string(&l.contribution())
            )?;
        }
        write!(f, "{:<20} {:>5} {:>5} {:>7} {:>12}", "total", "", "", "", rational::to_string(&self.total))
    }
}

struct Ted<'a> {
    w: &'a ComponentWeights,
    full: HashMap<*const FlatNode, Cost>,
    memo: HashMap<(*const FlatNode, *const FlatNode), Cost>,
}

fn is_inner_join(n: &FlatNode) -> bool {
    n.class.is_none() && n.label == "JOIN" && n.children.len() == 2
}

fn is_outer_join(n: &FlatNode) -> bool {
    n.class == Some(Component::JoinOperator) && n.children.len() == 3
}

impl<'a> Ted<'a> {
    fn new(w: &'a ComponentWeights) -> Self {
        Ted {
            w,
            full: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn node(&self, c: Component) -> Cost {
        let mut counts = [0; N];
        counts[index(c)] = 1;
        Cost {
            total: self.w.get(c),
            counts,
        }
    }

    /// Cost of inserting or deleting the whole subtree.
    fn full(&mut self, n: &FlatNode) -> Cost {
        if let Some(c) = self.full.get(&(n as *const _)) {
            return c.clone();
        }
        let mut c = match n.class {
            Some(k) => self.node(k),
            None => Cost::zero(),
        };
        for ch in &n.children {
            let x = self.full(ch);
            c.add(&x);
        }
        self.full.insert(n as *const _, c.clone());
        c
    }

    fn replace(&mut self, a: &FlatNode, b: &FlatNode) -> Cost {
        let (x, y) = (self.full(a), self.full(b));
        // The larger side, chosen independently of argument order.
        if (x.total, x.counts) >= (y.total, y.counts) {
            x
        } else {
            y
        }
    }

    fn dist(&mut self, a: &FlatNode, b: &FlatNode) -> Cost {
        if a.key == b.key {
            return Cost::zero();
        }
        let k = (a as *const _, b as *const _);
        if let Some(c) = self.memo.get(&k) {
            return c.clone();
        }
        let c = self.dist_uncached(a, b);
        self.memo.insert(k, c.clone());
        c
    }

    fn dist_uncached(&mut self, a: &FlatNode, b: &FlatNode) -> Cost {
        let both = self.full(a).plus(&self.full(b));
        match (a.class, b.class) {
            (None, None) if a.label == b.label => self.align(a, b).min(both),
            (None, Some(_)) | (Some(_), None) if is_inner_join(a) && is_outer_join(b) => {
                self.join_kind(a, b).min(both)
            }
            (Some(_), None) if is_outer_join(a) && is_inner_join(b) => self.join_kind(a, b).min(both),
            (None, _) | (_, None) => both,
            (Some(ca), Some(cb)) => {
                let replace = self.replace(a, b);
                if a.label == b.label && ca == cb && a.ordered == b.ordered {
                    replace.min(self.align(a, b))
                } else if a.ordered == b.ordered && !(a.children.is_empty() && b.children.is_empty()) {
                    let head = if (self.w.get(ca), ca) > (self.w.get(cb), cb) {
                        self.node(ca)
                    } else {
                        self.node(cb)
                    };
                    replace.min(head.plus(&self.align(a, b)))
                } else {
                    replace
                }
            }
        }
    }

    /// Inner join of two inputs against an outer join: one operator edit plus
    /// the best pairing of inputs and conditions.
    fn join_kind(&mut self, a: &FlatNode, b: &FlatNode) -> Cost {
        let (inner, outer) = if is_inner_join(a) { (a, b) } else { (b, a) };
        let inputs = &inner.children[0].children;
        if inputs.len() != 2 {
            return self.full(a).plus(&self.full(b));
        }
        let ordered = |t: &mut Self, x: &FlatNode, y: &FlatNode| {
            if std::ptr::eq(inner, a) {
                t.dist(x, y)
            } else {
                t.dist(y, x)
            }
        };
        let straight = ordered(self, &inputs[0], &outer.children[0]).plus(&ordered(self, &inputs[1], &outer.children[1]));
        let crossed = ordered(self, &inputs[1], &outer.children[0]).plus(&ordered(self, &inputs[0], &outer.children[1]));
        let (preds, on) = (&inner.children[1], &outer.children[2]);
        let conds = if std::ptr::eq(inner, a) {
            self.match_lists(&preds.children, &on.children)
        } else {
            self.match_lists(&on.children, &preds.children)
        };
        self.node(Component::JoinOperator)
            .plus(&straight.min(crossed))
            .plus(&conds)
    }

    fn align(&mut self, a: &FlatNode, b: &FlatNode) -> Cost {
        let structural = |n: &FlatNode| n.children.iter().all(|c| c.class.is_none());
        if a.class.is_none() && a.children.len() == b.children.len() && structural(a) && structural(b) {
            let mut c = Cost::zero();
            for (x, y) in a.children.iter().zip(&b.children) {
                let d = self.dist(x, y);
                c.add(&d);
            }
            return c;
        }
        if a.ordered {
            self.sequence(&a.children, &b.children)
        } else {
            self.match_lists(&a.children, &b.children)
        }
    }

    fn tables(&mut self, xs: &[FlatNode], ys: &[FlatNode]) -> (Vec<Vec<Cost>>, Vec<Cost>, Vec<Cost>) {
        let pair = xs
            .iter()
            .map(|x| ys.iter().map(|y| self.dist(x, y)).collect())
            .collect();
        let del = xs.iter().map(|x| self.full(x)).collect();
        let ins = ys.iter().map(|y| self.full(y)).collect();
        (pair, del, ins)
    }

    fn match_lists(&mut self, xs: &[FlatNode], ys: &[FlatNode]) -> Cost {
        let (pair, del, ins) = self.tables(xs, ys);
        let (_, partners) = unordered_match(
            xs.len(),
            ys.len(),
            &|i, j| pair[i][j].lex(),
            &|i| del[i].lex(),
            &|j| ins[j].lex(),
        );
        let mut c = Cost::zero();
        let mut used = vec![false; ys.len()];
        for (i, p) in partners.iter().enumerate() {
            match p {
                Some(j) => {
                    used[*j] = true;
                    c.add(&pair[i][*j]);
                }
                None => c.add(&del[i]),
            }
        }
        for (j, u) in used.iter().enumerate() {
            if !u {
                c.add(&ins[j]);
            }
        }
        c
    }

    fn sequence(&mut self, xs: &[FlatNode], ys: &[FlatNode]) -> Cost {
        let (pair, del, ins) = self.tables(xs, ys);
        // Moving one of two neighbours past the other: one edit, billed to
        // the cheaper of the two.
        let head = |i: usize| match xs[i].class {
            Some(c) => self.node(c),
            None => del[i].clone(),
        };
        let swap: Vec<Cost> = (0..xs.len())
            .map(|i| {
                if i + 1 == xs.len() {
                    return Cost::zero();
                }
                let (a, b) = (head(i), head(i + 1));
                if a.lex() <= b.lex() { a } else { b }
            })
            .collect();
        let (_, steps) = ordered_distance(
            xs.len(),
            ys.len(),
            &|i, j| pair[i][j].lex(),
            &|i| del[i].lex(),
            &|j| ins[j].lex(),
            &|i| swap[i].lex(),
        );
        let mut c = Cost::zero();
        for s in steps {
            match s {
                Align::Pair(i, j) => c.add(&pair[i][j]),
                Align::Delete(i) => c.add(&del[i]),
                Align::Insert(j) => c.add(&ins[j]),
                Align::Swap(i, _) => c.add(&swap[i]),
            }
        }
        c
    }
}

/// Weighted size of a subtree: the sum of its billed nodes' weights.
pub fn subtree_weight(n: &FlatNode, w: &ComponentWeights) -> Rational {
    let mut total = Rational::zero();
    n.walk(&mut |x| {
        if let Some(c) = x.class {
            total += w.get(c);
        }
    });
    total
}

/// Billed nodes of the tree per component.
pub fn node_counts(t: &FlatTree) -> BTreeMap<Component, u32> {
    let mut out = BTreeMap::new();
    t.root().walk(&mut |n| {
        if let Some(c) = n.class {
            *out.entry(c).or_insert(0) += 1;
        }
    });
    out
}

/// `Σ W_c·E_c` between a student tree and a correct tree, with counts per
/// component. Both trees should already be canonicalized.
pub fn canonicalized_edit_distance(sq: &FlatTree, cq: &FlatTree, w: &ComponentWeights) -> DistanceBreakdown {
    let cost = Ted::new(w).dist(sq.root(), cq.root());
    let nodes = node_counts(cq);
    let components = Component::ALL
        .iter()
        .map(|&c| ComponentLine {
            component: c,
            nodes: nodes.get(&c).copied().unwrap_or(0),
            edits: cost.counts[index(c)],
            weight: w.get(c),
        })
        .collect();
    DistanceBreakdown {
        components,
        total: cost.total,
    }
}

/// Weighted size of a correct query, the denominator of every marks fraction.
pub fn total_marks(cq: &FlatTree, w: &ComponentWeights) -> Result<Rational> {
    let total: Rational = node_counts(cq)
        .into_iter()
        .map(|(c, n)| w.get(c) * Rational::from_integer(n as i64))
        .sum();
    if total.is_zero() {
        return Err(Error::DegenerateTotal);
    }
    Ok(total)
}

/// Marks awarded from the distance alone: `max(0, T − D) / T · max_marks`.
pub fn marks_from_distance(
    sq: &FlatTree,
    cq: &FlatTree,
    w: &ComponentWeights,
    max_marks: Rational,
) -> Result<Rational> {
    let t = total_marks(cq, w)?;
    let d = canonicalized_edit_distance(sq, cq, w).total;
    let left = if d >= t { Rational::zero() } else { t - d };
    Ok(left / t * max_marks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn hungarian_matches_permutation_search() {
        let cost = [[4, 1, 3], [2, 0, 5], [3, 2, 2]];
        let m: Vec<Vec<Rational>> = cost.iter().map(|row| row.iter().map(|&x| r(x)).collect()).collect();
        let a = hungarian(&m, r(100));
        let got: i64 = (0..3).map(|i| cost[i][a[i]]).sum();
        let best = (0..3)
            .permutations(3)
            .map(|p| (0..3).map(|i| cost[i][p[i]]).sum::<i64>())
            .min()
            .unwrap();
        assert_eq!(got, best);
    }

    #[test]
    fn unmatched_items_cost_their_full_size() {
        let (total, partners) = unordered_match(3, 2, &|i, j| if i == j { r(0) } else { r(9) }, &|_| r(4), &|_| r(4));
        assert_eq!(total, r(4));
        assert_eq!(partners, vec![Some(0), Some(1), None]);
    }

    #[test]
    fn sequence_distance_basics() {
        let (d, _) = ordered_distance(0, 3, &|_, _| r(1), &|_| r(1), &|_| r(2), &|_| r(1));
        assert_eq!(d, r(6));
        let xs = ["a", "b"];
        let ys = ["b", "a"];
        let (d, _) = ordered_distance(
            2,
            2,
            &|i, j| if xs[i] == ys[j] { r(0) } else { r(1) },
            &|_| r(1),
            &|_| r(1),
            &|_| r(1),
        );
        assert_eq!(d, r(1));
    }

    #[test]
    fn weights_reject_negative_and_all_zero() {
        assert!(ComponentWeights::new([(Component::Projection, r(-1))]).is_err());
        assert!(ComponentWeights::new(Component::ALL.map(|c| (c, r(0)))).is_err());
        let w: ComponentWeights = toml::from_str("projection = \"1/2\"\ndistinct = 3").unwrap();
        assert_eq!(w.get(Component::Projection), Rational::new(1, 2));
        assert_eq!(w.get(Component::Distinct), r(3));
        assert_eq!(w.get(Component::Relation), r(1));
    }
}
