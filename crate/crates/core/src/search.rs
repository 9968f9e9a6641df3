//! Minimum-cost edit sequences from a student query to a correct query.
//!
//! The exhaustive search is a best-first search on remaining marks: every
//! state starts with the correct query's total marks and each edit spends
//! its cost. Edit costs are non-negative, so the first state popped that is
//! equivalent to the correct query carries the cheapest sequence within the
//! guided edit space. The greedy search keeps a single state and moves to the
//! successor with the best benefit minus cost.
//!
//! Search states are kept syntactically canonical. Goal tests and distance
//! probes use the full canonical form.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::canon::{canonicalize_full, canonicalize_syntactic};
use crate::distance::{canonicalized_edit_distance, total_marks, ComponentWeights};
use crate::edit::{enumerate_edits, Edit, EditSequence};
use crate::error::Result;
use crate::flat::FlatTree;
use crate::rational::{self, Rational};
use crate::schema::Schema;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Greedy,
    Exhaustive,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "greedy" => Ok(Mode::Greedy),
            "exhaustive" => Ok(Mode::Exhaustive),
            other => Err(format!("unknown search mode `{other}` (expected greedy or exhaustive)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub time: Duration,
    /// Cap on distinct states discovered.
    pub max_states: usize,
}

impl Budget {
    pub const EXHAUSTIVE: Budget = Budget {
        time: Duration::from_secs(10),
        max_states: 200_000,
    };
    pub const GREEDY: Budget = Budget {
        time: Duration::from_secs(5),
        max_states: 200_000,
    };

    pub fn for_mode(mode: Mode) -> Budget {
        match mode {
            Mode::Greedy => Budget::GREEDY,
            Mode::Exhaustive => Budget::EXHAUSTIVE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Matched,
    ZeroMarks,
    BudgetExceeded,
    CycleDetected,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    #[serde(with = "rational::serde_str")]
    pub marks_fraction: Rational,
    pub edit_seq: EditSequence,
    pub explored_states: usize,
    #[serde(serialize_with = "millis")]
    pub elapsed: Duration,
    pub outcome: Outcome,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_millis() as u64)
}

/// Shared plumbing: syntactic normalization of successors and a cache of
/// full canonical forms keyed by serialization.
struct Space<'a> {
    cq: &'a FlatTree,
    schema: &'a Schema,
    w: &'a ComponentWeights,
    total: Rational,
    full: HashMap<String, Option<FlatTree>>,
}

impl<'a> Space<'a> {
    fn new(cq: &'a FlatTree, schema: &'a Schema, w: &'a ComponentWeights) -> Result<Self> {
        Ok(Space {
            cq,
            schema,
            w,
            total: total_marks(cq, w)?,
            full: HashMap::new(),
        })
    }

    fn full(&mut self, t: &FlatTree) -> Option<&FlatTree> {
        let schema = self.schema;
        self.full
            .entry(t.serialize().to_string())
            .or_insert_with(|| canonicalize_full(t, schema).ok().map(|r| r.0))
            .as_ref()
    }

    fn is_goal(&mut self, t: &FlatTree) -> bool {
        let cq = self.cq;
        self.full(t).is_some_and(|f| f == cq)
    }

    fn distance(&mut self, t: &FlatTree) -> Option<Rational> {
        let (cq, w) = (self.cq, self.w);
        self.full(t).map(|f| canonicalized_edit_distance(f, cq, w).total)
    }

    /// Edited successors, each brought back to syntactic canonical form.
    fn successors(&self, t: &FlatTree) -> Vec<(Edit, FlatTree)> {
        enumerate_edits(t, self.cq, self.w)
            .into_iter()
            .filter_map(|(e, s)| canonicalize_syntactic(&s, self.schema).ok().map(|(s, _)| (e, s)))
            .collect()
    }

    fn fraction(&self, marks: Rational) -> Rational {
        if marks <= Rational::zero() {
            Rational::zero()
        } else {
            marks / self.total
        }
    }

    /// Fallback when a search gives up: edits paid so far plus the distance
    /// that remains, at the best state seen.
    fn estimate(&mut self, t: &FlatTree, paid: Rational) -> Rational {
        match self.distance(t) {
            Some(d) => self.fraction(self.total - paid - d),
            None => Rational::zero(),
        }
    }
}

fn finish(
    start: Instant,
    explored: usize,
    outcome: Outcome,
    marks_fraction: Rational,
    edit_seq: EditSequence,
) -> SearchResult {
    SearchResult {
        marks_fraction,
        edit_seq,
        explored_states: explored,
        elapsed: start.elapsed(),
        outcome,
    }
}

/// Frontier entry: most marks first, then the smaller key.
#[derive(PartialEq, Eq)]
struct Entry {
    marks: Rational,
    key: Reverse<String>,
}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.marks, &self.key).cmp(&(o.marks, &o.key))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

pub fn exhaustive_search(
    sq: &FlatTree,
    cq: &FlatTree,
    schema: &Schema,
    w: &ComponentWeights,
    budget: Budget,
) -> Result<SearchResult> {
    exhaustive_search_observed(sq, cq, schema, w, budget, &mut |_| {})
}

/// As [`exhaustive_search`], reporting the marks of every popped state.
pub fn exhaustive_search_observed(
    sq: &FlatTree,
    cq: &FlatTree,
    schema: &Schema,
    w: &ComponentWeights,
    budget: Budget,
    on_pop: &mut dyn FnMut(Rational),
) -> Result<SearchResult> {
    let start = Instant::now();
    let mut space = Space::new(cq, schema, w)?;
    let mut states: BTreeMap<String, (FlatTree, Rational, EditSequence)> = BTreeMap::new();
    let mut closed: HashSet<String> = HashSet::new();
    let mut heap = BinaryHeap::new();
    let root = sq.serialize().to_string();
    states.insert(root.clone(), (sq.clone(), space.total, EditSequence::new()));
    heap.push(Entry {
        marks: space.total,
        key: Reverse(root),
    });
    let mut explored = 0;
    while let Some(Entry { marks, key: Reverse(key) }) = heap.pop() {
        if closed.contains(&key) || states[&key].1 != marks {
            continue;
        }
        if start.elapsed() > budget.time || states.len() > budget.max_states {
            let fallback = space.estimate(sq, Rational::zero());
            return Ok(finish(start, explored, Outcome::BudgetExceeded, fallback, EditSequence::new()));
        }
        closed.insert(key.clone());
        explored += 1;
        on_pop(marks);
        let (tree, _, seq) = states[&key].clone();
        if space.is_goal(&tree) {
            return Ok(finish(start, explored, Outcome::Matched, space.fraction(marks), seq));
        }
        for (e, next) in space.successors(&tree) {
            let left = marks - e.cost;
            if left <= Rational::zero() {
                continue;
            }
            let k = next.serialize().to_string();
            if closed.contains(&k) {
                continue;
            }
            if states.get(&k).is_some_and(|s| s.1 >= left) {
                continue;
            }
            states.insert(k.clone(), (next, left, seq.with(e)));
            heap.push(Entry {
                marks: left,
                key: Reverse(k),
            });
        }
    }
    Ok(finish(start, explored, Outcome::ZeroMarks, Rational::zero(), EditSequence::new()))
}

pub fn greedy_search(
    sq: &FlatTree,
    cq: &FlatTree,
    schema: &Schema,
    w: &ComponentWeights,
    budget: Budget,
) -> Result<SearchResult> {
    let start = Instant::now();
    let mut space = Space::new(cq, schema, w)?;
    let mut visited: HashSet<String> = HashSet::from([sq.serialize().to_string()]);
    let mut tree = sq.clone();
    let mut seq = EditSequence::new();
    let mut best = space.estimate(sq, Rational::zero());
    let mut explored = 0;
    loop {
        explored += 1;
        if space.is_goal(&tree) {
            let marks = space.total - seq.total_cost;
            return Ok(finish(start, explored, Outcome::Matched, space.fraction(marks), seq));
        }
        if start.elapsed() > budget.time || visited.len() > budget.max_states {
            return Ok(finish(start, explored, Outcome::BudgetExceeded, best, seq));
        }
        let marks = space.total - seq.total_cost;
        let Some(here) = space.distance(&tree) else {
            return Ok(finish(start, explored, Outcome::ZeroMarks, Rational::zero(), EditSequence::new()));
        };
        let mut choice: Option<(Rational, Edit, FlatTree)> = None;
        let mut revisits = false;
        for (e, next) in space.successors(&tree) {
            if marks - e.cost <= Rational::zero() {
                continue;
            }
            if visited.contains(next.serialize()) {
                revisits = true;
                continue;
            }
            let Some(there) = space.distance(&next) else {
                continue;
            };
            let score = here - there - e.cost;
            let better = match &choice {
                None => true,
                Some((s, c, _)) => (Reverse(score), e.cost, &e.description) < (Reverse(*s), c.cost, &c.description),
            };
            if better {
                choice = Some((score, e, next));
            }
        }
        let Some((_, e, next)) = choice else {
            if revisits {
                return Ok(finish(start, explored, Outcome::CycleDetected, best, seq));
            }
            return Ok(finish(start, explored, Outcome::ZeroMarks, Rational::zero(), EditSequence::new()));
        };
        seq = seq.with(e);
        visited.insert(next.serialize().to_string());
        tree = next;
        best = best.max(space.estimate(&tree, seq.total_cost));
    }
}

pub fn search(
    mode: Mode,
    sq: &FlatTree,
    cq: &FlatTree,
    schema: &Schema,
    w: &ComponentWeights,
    budget: Budget,
) -> Result<SearchResult> {
    match mode {
        Mode::Greedy => greedy_search(sq, cq, schema, w, budget),
        Mode::Exhaustive => exhaustive_search(sq, cq, schema, w, budget),
    }
}
