//! Union of the predecessor samples of a state, keeping only words built
//! through their canonical last transition.

use std::collections::HashMap;

use crate::alphabet::{Letter, Word};
use crate::automaton::{StateId, UnrolledNfa};
use crate::membership::member_by;

/// Decides, with caching, whether `w·s` arriving through the `k`-th incoming
/// transition of `q` is kept: it is unless a word equivalent to `w·s`
/// reaches `q` through an earlier incoming transition.
pub(crate) struct UnionOracle<'a> {
    u: &'a UnrolledNfa,
    q: StateId,
    /// Per word, per incoming rank: 0 unknown, 1 dropped, 2 kept.
    cache: HashMap<Word, Vec<u8>>,
}

impl<'a> UnionOracle<'a> {
    pub(crate) fn new(u: &'a UnrolledNfa, q: StateId) -> Self {
        UnionOracle {
            u,
            q,
            cache: HashMap::new(),
        }
    }

    pub(crate) fn keep(&mut self, k: usize, ws: &[Letter]) -> bool {
        // Nothing enters `q` before the first transition.
        if k == 0 {
            return true;
        }
        if let Some(&v) = self.cache.get(ws).and_then(|c| c.get(k)) {
            if v != 0 {
                return v == 2;
            }
        }
        let u = self.u;
        let q = self.q;
        let cutoff = u.incoming(q)[k];
        let reached = member_by(
            u.alphabet(),
            ws,
            u.initial(),
            |p, a, out| {
                for &t in u.outgoing(p) {
                    let tr = u.transitions()[t];
                    if tr.letter == a && !(tr.dst == q && t >= cutoff) {
                        out.push(tr.dst);
                    }
                }
            },
            |p| p == q,
        );
        let slots = self.cache.entry(ws.to_vec()).or_insert_with(|| vec![0; u.incoming(q).len()]);
        slots[k] = if reached { 1 } else { 2 };
        !reached
    }
}

/// Union of sample sets `S_i ⊆ L(p_i)` given per predecessor `p_i` of `q`.
/// Each incoming transition `(p_i, s, q)` contributes `w·s` for `w ∈ S_i`
/// unless an equivalent word reaches `q` through an earlier transition.
pub fn union_sets(u: &UnrolledNfa, q: StateId, sets: &[(StateId, Vec<Word>)]) -> Vec<Word> {
    let mut oracle = UnionOracle::new(u, q);
    let mut out = Vec::new();
    for (k, &t) in u.incoming(q).iter().enumerate() {
        let tr = u.transitions()[t];
        for (p, set) in sets {
            if *p != tr.src {
                continue;
            }
            for w in set {
                let mut ws = w.clone();
                ws.push(tr.letter);
                if oracle.keep(k, &ws) {
                    out.push(ws);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
