//! Predictive membership: does some word equivalent to `w` reach a state?
//!
//! The search runs over pairs `(state, c)` where `c` counts the consumed
//! occurrences of each letter. Because equal letters are dependent, the
//! downward-closed sets of the trace order of `w` are exactly the count
//! vectors closed under covering predecessors.

use std::collections::HashSet;
use std::hash::Hash;

use crate::alphabet::{ConcurrentAlphabet, Letter};
use crate::automaton::{Nfa, StateId};
use crate::trace::{covering_positions, labels};

/// Step table of the trace order of one word.
#[derive(Clone, Debug)]
pub struct IdealSteps {
    counts: Vec<u32>,
    /// `requires[a][k]`: covering predecessors `(b, j)` of the `(k+1)`-th `a`.
    requires: Vec<Vec<Vec<(usize, u32)>>>,
}

impl IdealSteps {
    pub fn new(alpha: &ConcurrentAlphabet, w: &[Letter]) -> Self {
        let labels = labels(alpha, w);
        let covers = covering_positions(alpha, w);
        let mut counts = vec![0u32; alpha.len()];
        let mut requires = vec![Vec::new(); alpha.len()];
        for (j, preds) in covers.into_iter().enumerate() {
            let a = w[j].index();
            counts[a] += 1;
            requires[a].push(
                preds
                    .into_iter()
                    .map(|i| (labels[i].letter.index(), labels[i].occurrence))
                    .collect(),
            );
        }
        IdealSteps { counts, requires }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Whether the ideal `c` may be extended by the next occurrence of `a`.
    #[inline]
    pub fn can_step(&self, c: &[u32], a: usize) -> bool {
        let k = c[a] as usize;
        k < self.counts[a] as usize && self.requires[a][k].iter().all(|&(b, j)| j <= c[b])
    }
}

/// Outcome of a search, with the number of distinct configurations visited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchStats {
    pub member: bool,
    pub visited: usize,
}

/// Generic predictive membership over an implicit automaton.
///
/// `successors(p, a, out)` appends the `a`-successors of `p` to `out`.
pub fn member_by<S, A>(alpha: &ConcurrentAlphabet, w: &[Letter], start: StateId, successors: S, accept: A) -> bool
where
    S: FnMut(StateId, Letter, &mut Vec<StateId>),
    A: Fn(StateId) -> bool,
{
    search(alpha, w, start, successors, accept).member
}

pub fn search<S, A>(alpha: &ConcurrentAlphabet, w: &[Letter], start: StateId, successors: S, accept: A) -> SearchStats
where
    S: FnMut(StateId, Letter, &mut Vec<StateId>),
    A: Fn(StateId) -> bool,
{
    let steps = IdealSteps::new(alpha, w);
    // Mixed-radix code of a count vector; fall back to the vector itself.
    let mut strides = Vec::with_capacity(alpha.len());
    let mut total: Option<u128> = Some(1);
    for &c in &steps.counts {
        strides.push(total.unwrap_or(0));
        total = total.and_then(|t| t.checked_mul(c as u128 + 1));
    }
    if total.is_some() {
        run(alpha, w.len(), &steps, start, successors, accept, 0u128, |_, a, key| key + strides[a])
    } else {
        let zero = vec![0u32; alpha.len()];
        run(alpha, w.len(), &steps, start, successors, accept, zero, |c, _, _| c.to_vec())
    }
}

#[allow(clippy::too_many_arguments)]
fn run<K, S, A, N>(
    alpha: &ConcurrentAlphabet,
    len: usize,
    steps: &IdealSteps,
    start: StateId,
    mut successors: S,
    accept: A,
    start_key: K,
    next_key: N,
) -> SearchStats
where
    K: Hash + Eq + Clone,
    S: FnMut(StateId, Letter, &mut Vec<StateId>),
    A: Fn(StateId) -> bool,
    N: Fn(&[u32], usize, &K) -> K,
{
    let k = alpha.len();
    let zero = vec![0u32; k];
    // Frontier of one level: configurations with the same total count.
    let mut frontier: Vec<(StateId, K, Vec<u32>)> = vec![(start, start_key, zero)];
    let mut visited = 1;
    let mut buf = Vec::new();
    for _ in 0..len {
        let mut seen: HashSet<(StateId, K)> = HashSet::new();
        let mut next = Vec::new();
        for (p, key, c) in &frontier {
            for a in alpha.letters() {
                if !steps.can_step(c, a.index()) {
                    continue;
                }
                buf.clear();
                successors(*p, a, &mut buf);
                if buf.is_empty() {
                    continue;
                }
                let mut c2 = c.clone();
                c2[a.index()] += 1;
                let key2 = next_key(&c2, a.index(), key);
                for &p2 in &buf {
                    if seen.insert((p2, key2.clone())) {
                        next.push((p2, key2.clone(), c2.clone()));
                    }
                }
            }
        }
        visited += next.len();
        if next.is_empty() {
            return SearchStats {
                member: false,
                visited,
            };
        }
        frontier = next;
    }
    SearchStats {
        member: frontier.iter().any(|(p, _, _)| accept(*p)),
        visited,
    }
}

/// Whether some word equivalent to `w` leads from the initial state to `q`.
pub fn member(nfa: &Nfa, q: StateId, w: &[Letter]) -> bool {
    member_by(
        nfa.alphabet(),
        w,
        nfa.initial(),
        |p, a, out| out.extend(nfa.successors(p, a)),
        |p| p == q,
    )
}

/// Whether some word equivalent to `w` is accepted.
pub fn member_accepting(nfa: &Nfa, w: &[Letter]) -> bool {
    member_by(
        nfa.alphabet(),
        w,
        nfa.initial(),
        |p, a, out| out.extend(nfa.successors(p, a)),
        |p| nfa.is_final(p),
    )
}
