//! Mazurkiewicz traces: the trace partial order of a word, equivalence,
//! lexicographic normal forms, and brute-force class enumeration.

use std::collections::{BTreeSet, VecDeque};

use crate::alphabet::{ConcurrentAlphabet, Letter, Word};
use crate::error::{Error, Result};

/// Default length guard for [`enumerate_class`].
pub const DEFAULT_ENUMERATION_LIMIT: usize = 10;

/// The `i`-th occurrence (1-based) of a letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledIndex {
    pub letter: Letter,
    pub occurrence: u32,
}

impl LabeledIndex {
    pub fn new(letter: Letter, occurrence: u32) -> Self {
        LabeledIndex { letter, occurrence }
    }
}

/// Hasse diagram of the trace partial order of a word.
///
/// Two words are equivalent iff their diagrams are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraceOrderDag {
    /// Number of occurrences of each letter.
    pub counts: Vec<u32>,
    /// Covering edges `(x, y)` meaning `x` is an immediate predecessor of `y`.
    pub edges: BTreeSet<(LabeledIndex, LabeledIndex)>,
}

impl TraceOrderDag {
    pub fn vertex_count(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Immediate predecessors of `v`.
    pub fn predecessors(&self, v: LabeledIndex) -> impl Iterator<Item = LabeledIndex> + '_ {
        self.edges.iter().filter(move |(_, y)| *y == v).map(|(x, _)| *x)
    }
}

/// Dense bit rows, one per position of a word.
#[derive(Clone, Debug)]
pub(crate) struct BitRows {
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitRows {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64).max(1);
        BitRows {
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    #[inline]
    pub(crate) fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.words_per_row + col / 64] >> (col % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize) {
        self.bits[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    /// `row |= other_row`.
    pub(crate) fn or_row(&mut self, row: usize, other: usize) {
        let w = self.words_per_row;
        for k in 0..w {
            let v = self.bits[other * w + k];
            self.bits[row * w + k] |= v;
        }
    }
}

/// Strict ancestor sets by position: `anc.get(j, i)` iff position `i`
/// precedes position `j` in the trace order of `w`.
pub(crate) fn ancestor_rows(alpha: &ConcurrentAlphabet, w: &[Letter]) -> BitRows {
    let n = w.len();
    let mut anc = BitRows::new(n, n);
    let mut last: Vec<Option<usize>> = vec![None; alpha.len()];
    for j in 0..n {
        for b in alpha.letters() {
            if let Some(i) = last[b.index()] {
                if alpha.dependent(b, w[j]) {
                    anc.set(j, i);
                    anc.or_row(j, i);
                }
            }
        }
        last[w[j].index()] = Some(j);
    }
    anc
}

/// Labels each position with its letter occurrence index.
pub(crate) fn labels(alpha: &ConcurrentAlphabet, w: &[Letter]) -> Vec<LabeledIndex> {
    let mut seen = vec![0u32; alpha.len()];
    w.iter()
        .map(|&a| {
            seen[a.index()] += 1;
            LabeledIndex::new(a, seen[a.index()])
        })
        .collect()
}

/// Immediate-predecessor positions of every position.
///
/// Candidates are the last earlier occurrence of each dependent letter; a
/// candidate covers `j` unless it lies below another candidate.
pub(crate) fn covering_positions(alpha: &ConcurrentAlphabet, w: &[Letter]) -> Vec<Vec<usize>> {
    let anc = ancestor_rows(alpha, w);
    let mut last: Vec<Option<usize>> = vec![None; alpha.len()];
    let mut out = Vec::with_capacity(w.len());
    for (j, &b) in w.iter().enumerate() {
        let candidates: Vec<usize> = alpha
            .letters()
            .filter(|&c| alpha.dependent(b, c))
            .filter_map(|c| last[c.index()])
            .collect();
        let covers = candidates
            .iter()
            .copied()
            .filter(|&i| !candidates.iter().any(|&k| k != i && anc.get(k, i)))
            .collect();
        out.push(covers);
        last[b.index()] = Some(j);
    }
    out
}

pub fn trace_order(alpha: &ConcurrentAlphabet, w: &[Letter]) -> TraceOrderDag {
    let labels = labels(alpha, w);
    let mut counts = vec![0u32; alpha.len()];
    for &a in w {
        counts[a.index()] += 1;
    }
    let edges = covering_positions(alpha, w)
        .into_iter()
        .enumerate()
        .flat_map(|(j, preds)| {
            let labels = &labels;
            preds.into_iter().map(move |i| (labels[i], labels[j]))
        })
        .collect();
    TraceOrderDag { counts, edges }
}

pub fn equivalent(alpha: &ConcurrentAlphabet, w1: &[Letter], w2: &[Letter]) -> bool {
    if w1.len() != w2.len() {
        return false;
    }
    trace_order(alpha, w1) == trace_order(alpha, w2)
}

/// Inserts `a` into the normal form `nfw`, returning `nf(nfw · a)` and the
/// insertion index (number of letters of `nfw` left of `a`).
///
/// `a` can move left past a suffix of `nfw` only while it is independent of
/// every letter it passes. Among those positions the lexicographically least
/// result puts `a` at the leftmost one directly before a letter greater than
/// `a`; when there is none, `a` is appended.
pub fn insert_letter(alpha: &ConcurrentAlphabet, nfw: &[Letter], a: Letter) -> (Word, usize) {
    let pos = insertion_index(alpha, nfw, a);
    let mut out = Vec::with_capacity(nfw.len() + 1);
    out.extend_from_slice(&nfw[..pos]);
    out.push(a);
    out.extend_from_slice(&nfw[pos..]);
    (out, pos)
}

pub(crate) fn insertion_index(alpha: &ConcurrentAlphabet, nfw: &[Letter], a: Letter) -> usize {
    let mut pos = nfw.len();
    let mut leftmost = nfw.len();
    // Walk left while `a` commutes with the letter it would pass.
    while leftmost > 0 && alpha.independent(a, nfw[leftmost - 1]) {
        leftmost -= 1;
    }
    for (i, &l) in nfw.iter().enumerate().skip(leftmost) {
        if a < l {
            pos = i;
            break;
        }
    }
    pos
}

/// Lexicographic normal form of the trace of `w`.
pub fn normal_form(alpha: &ConcurrentAlphabet, w: &[Letter]) -> Word {
    let mut nf = Vec::with_capacity(w.len());
    for &a in w {
        let pos = insertion_index(alpha, &nf, a);
        nf.insert(pos, a);
    }
    nf
}

pub fn is_normal_form(alpha: &ConcurrentAlphabet, w: &[Letter]) -> bool {
    normal_form(alpha, w) == w
}

/// A trace given extensionally, as the full set of its words.
pub type TraceClass = BTreeSet<Word>;

/// All words equivalent to `w`, by closure under swaps of adjacent
/// independent letters. Refuses words longer than `limit`.
pub fn enumerate_class_with_limit(
    alpha: &ConcurrentAlphabet,
    w: &[Letter],
    limit: usize,
) -> Result<TraceClass> {
    if w.len() > limit {
        return Err(Error::Budget {
            what: "class enumeration word length",
            needed: w.len() as u128,
            budget: limit as u128,
        });
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(w.to_vec());
    queue.push_back(w.to_vec());
    while let Some(cur) = queue.pop_front() {
        for i in 1..cur.len() {
            if cur[i - 1] != cur[i] && alpha.independent(cur[i - 1], cur[i]) {
                let mut next = cur.clone();
                next.swap(i - 1, i);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(seen)
}

pub fn enumerate_class(alpha: &ConcurrentAlphabet, w: &[Letter]) -> Result<TraceClass> {
    enumerate_class_with_limit(alpha, w, DEFAULT_ENUMERATION_LIMIT)
}

/// Concatenation of two traces given extensionally.
pub fn concat_traces(alpha: &ConcurrentAlphabet, t1: &TraceClass, t2: &TraceClass) -> Result<TraceClass> {
    let w1 = t1
        .iter()
        .next()
        .ok_or_else(|| Error::Precondition("a trace is never empty".into()))?;
    let w2 = t2
        .iter()
        .next()
        .ok_or_else(|| Error::Precondition("a trace is never empty".into()))?;
    let mut w = w1.clone();
    w.extend_from_slice(w2);
    enumerate_class_with_limit(alpha, &w, DEFAULT_ENUMERATION_LIMIT.max(w.len()))
}
