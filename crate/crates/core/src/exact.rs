//! Brute-force exact trace counting and canonical runs.
//!
//! [`count_exact_nf`] walks normal forms and asks predictive membership;
//! [`count_exact_enum`] walks accepted words and collects their normal
//! forms. The two share no code above the alphabet and trace modules, so
//! they are used to check each other.

use std::collections::{BTreeSet, HashMap};

use crate::alphabet::{ConcurrentAlphabet, Letter, LetterSet, Word};
use crate::automaton::{nf_dfa_step, Nfa, StateId, UnrolledNfa};
use crate::error::{Error, Result};
use crate::membership::member_accepting;
use crate::trace::{equivalent, normal_form};

/// Default work budget of the exact counters.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

fn power_budget(alpha: &ConcurrentAlphabet, n: usize, budget: u128) -> Result<()> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(alpha.len() as u128);
        if total > budget {
            return Err(Error::Budget {
                what: "words of the slice length",
                needed: (alpha.len() as u128).saturating_pow(n as u32),
                budget,
            });
        }
    }
    Ok(())
}

/// Normal forms of the traces that meet `L(nfa) ∩ Σ^n`, in increasing order.
pub fn trace_normal_forms(nfa: &Nfa, n: usize, budget: u128) -> Result<Vec<Word>> {
    let alpha = nfa.alphabet();
    power_budget(alpha, n, budget)?;
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(n);
    nf_words(alpha, n, LetterSet::EMPTY, &mut word, &mut |w| {
        if member_accepting(nfa, w) {
            out.push(w.to_vec());
        }
    });
    Ok(out)
}

fn nf_words(alpha: &ConcurrentAlphabet, n: usize, blocked: LetterSet, word: &mut Word, f: &mut impl FnMut(&[Letter])) {
    if word.len() == n {
        f(word);
        return;
    }
    for a in alpha.letters() {
        if !blocked.contains(a) {
            word.push(a);
            nf_words(alpha, n, nf_dfa_step(alpha, blocked, a), word, f);
            word.pop();
        }
    }
}

/// Counts traces meeting the slice by testing every normal form of length
/// `n` for predictive membership. Refuses when `|Σ|^n` exceeds `budget`.
pub fn count_exact_nf_with_budget(nfa: &Nfa, n: usize, budget: u128) -> Result<u64> {
    Ok(trace_normal_forms(nfa, n, budget)?.len() as u64)
}

pub fn count_exact_nf(nfa: &Nfa, n: usize) -> Result<u64> {
    count_exact_nf_with_budget(nfa, n, DEFAULT_BUDGET)
}

/// Every accepted word of length `n`, by subset simulation. Refuses after
/// visiting `budget` prefixes.
pub fn accepted_words(nfa: &Nfa, n: usize, budget: u128) -> Result<BTreeSet<Word>> {
    let mut out = BTreeSet::new();
    let mut visited: u128 = 0;
    let mut stack: Vec<(Word, BTreeSet<StateId>)> = vec![(Vec::new(), [nfa.initial()].into())];
    while let Some((w, states)) = stack.pop() {
        visited += 1;
        if visited > budget {
            return Err(Error::Budget {
                what: "word enumeration",
                needed: visited,
                budget,
            });
        }
        if w.len() == n {
            if states.iter().any(|&q| nfa.is_final(q)) {
                out.insert(w);
            }
            continue;
        }
        for a in nfa.alphabet().letters() {
            let next: BTreeSet<StateId> = states.iter().flat_map(|&q| nfa.successors(q, a)).collect();
            if !next.is_empty() {
                let mut w2 = w.clone();
                w2.push(a);
                stack.push((w2, next));
            }
        }
    }
    Ok(out)
}

/// Counts distinct normal forms of the accepted words of length `n`.
pub fn count_exact_enum_with_budget(nfa: &Nfa, n: usize, budget: u128) -> Result<u64> {
    let words = accepted_words(nfa, n, budget)?;
    let forms: BTreeSet<Word> = words.iter().map(|w| normal_form(nfa.alphabet(), w)).collect();
    Ok(forms.len() as u64)
}

pub fn count_exact_enum(nfa: &Nfa, n: usize) -> Result<u64> {
    count_exact_enum_with_budget(nfa, n, DEFAULT_BUDGET)
}

/// A canonical run as indices into [`UnrolledNfa::transitions`], with the
/// word it reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalRun {
    pub transitions: Vec<usize>,
    pub word: Word,
}

/// Computes canonical runs by enumerating `L(q)` for the states involved.
pub struct CanonicalOracle<'a> {
    unrolled: &'a UnrolledNfa,
    languages: HashMap<StateId, BTreeSet<Word>>,
}

impl<'a> CanonicalOracle<'a> {
    pub fn new(unrolled: &'a UnrolledNfa) -> Self {
        CanonicalOracle {
            unrolled,
            languages: HashMap::new(),
        }
    }

    /// `L(q)`, the words leading from the initial state to `q`.
    pub fn language(&mut self, q: StateId) -> &BTreeSet<Word> {
        if !self.languages.contains_key(&q) {
            let lang = if q == self.unrolled.initial() {
                [Vec::new()].into()
            } else {
                let mut lang = BTreeSet::new();
                for &k in self.unrolled.incoming(q) {
                    let t = self.unrolled.transitions()[k];
                    for w in self.language(t.src).clone() {
                        let mut w = w;
                        w.push(t.letter);
                        lang.insert(w);
                    }
                }
                lang
            };
            self.languages.insert(q, lang);
        }
        &self.languages[&q]
    }

    /// The canonical run of the trace of `t` to `q`: recursively, the first
    /// incoming transition `(p, s, q)` such that some `w ∈ L(p)` has
    /// `w·s ∼ t`.
    pub fn run(&mut self, t: &[Letter], q: StateId) -> Result<CanonicalRun> {
        let mut rev = Vec::new();
        let mut cur_t = t.to_vec();
        let mut cur_q = q;
        while cur_q != self.unrolled.initial() {
            let mut found = None;
            for &k in self.unrolled.incoming(cur_q) {
                let tr = self.unrolled.transitions()[k];
                let alpha = self.unrolled.alphabet_arc().clone();
                let hit = self.language(tr.src).iter().find(|w| {
                    let mut ws = (*w).clone();
                    ws.push(tr.letter);
                    equivalent(&alpha, &ws, &cur_t)
                });
                if let Some(w) = hit {
                    found = Some((k, w.clone()));
                    break;
                }
            }
            let (k, w) = found.ok_or_else(|| {
                Error::Precondition("the trace has no word in the language of the state".into())
            })?;
            rev.push(k);
            cur_t = w;
            cur_q = self.unrolled.transitions()[k].src;
        }
        if !cur_t.is_empty() {
            return Err(Error::Precondition("the trace has no word in the language of the state".into()));
        }
        rev.reverse();
        let word = rev.iter().map(|&k| self.unrolled.transitions()[k].letter).collect();
        Ok(CanonicalRun {
            transitions: rev,
            word,
        })
    }
}

/// One-shot form of [`CanonicalOracle::run`].
pub fn canonical_run(unrolled: &UnrolledNfa, t: &[Letter], q: StateId) -> Result<CanonicalRun> {
    CanonicalOracle::new(unrolled).run(t, q)
}
