//! The DFA accepting exactly the words whose normal form starts with a fixed
//! normal form `u`.
//!
//! A word `u'` is a DAG-prefix of `u` when its trace order is a downward
//! closed piece of the trace order of `u`, i.e. when `u'·v ∼ u` for some
//! `v`. The automaton tracks the longest such prefix of the normal form read
//! so far (the u-prefix), together with the first letter and the letter set
//! of the remainder (the u-residual).

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::alphabet::{ConcurrentAlphabet, Letter, LetterSet, Word};
use crate::automaton::{Nfa, StateId, Transition};
use crate::error::{Error, Result};
use crate::membership::IdealSteps;
use crate::trace::{insert_letter, is_normal_form, LabeledIndex};

/// Replays `u'` against the trace order of `u`; returns the consumed counts
/// if every step stays inside a downward closed set.
fn replay(steps: &IdealSteps, u_prime: &[Letter], k: usize) -> (usize, Vec<u32>) {
    let mut c = vec![0u32; k];
    for (i, &a) in u_prime.iter().enumerate() {
        if !steps.can_step(&c, a.index()) {
            return (i, c);
        }
        c[a.index()] += 1;
    }
    (u_prime.len(), c)
}

pub fn is_dag_prefix(alpha: &ConcurrentAlphabet, u_prime: &[Letter], u: &[Letter]) -> bool {
    let steps = IdealSteps::new(alpha, u);
    replay(&steps, u_prime, alpha.len()).0 == u_prime.len()
}

/// The labeled indices `(b, j)` of `u` such that `u'·b` is still a
/// DAG-prefix of `u`.
pub fn border(alpha: &ConcurrentAlphabet, u_prime: &[Letter], u: &[Letter]) -> Result<Vec<LabeledIndex>> {
    let steps = IdealSteps::new(alpha, u);
    let (len, c) = replay(&steps, u_prime, alpha.len());
    if len != u_prime.len() {
        return Err(Error::Precondition("not a DAG-prefix".into()));
    }
    Ok(alpha
        .letters()
        .filter(|b| steps.can_step(&c, b.index()))
        .map(|b| LabeledIndex::new(b, c[b.index()] + 1))
        .collect())
}

/// Splits `x` into its u-prefix (longest prefix that is a DAG-prefix of
/// `u`) and u-residual.
pub fn u_prefix_residual(alpha: &ConcurrentAlphabet, u: &[Letter], x: &[Letter]) -> (Word, Word) {
    let steps = IdealSteps::new(alpha, u);
    let (len, _) = replay(&steps, x, alpha.len());
    (x[..len].to_vec(), x[len..].to_vec())
}

/// State `(u', b, L)`: u-prefix, first letter of the u-residual (`None` for
/// an empty residual) and the letters of the u-residual.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PvState {
    pub u_prefix: Word,
    pub first_residual: Option<Letter>,
    pub residual_letters: LetterSet,
}

impl PvState {
    pub fn initial() -> Self {
        PvState {
            u_prefix: Vec::new(),
            first_residual: None,
            residual_letters: LetterSet::EMPTY,
        }
    }

    pub fn display<'a>(&'a self, alpha: &'a ConcurrentAlphabet) -> impl fmt::Display + 'a {
        DisplayState(self, alpha)
    }
}

struct DisplayState<'a>(&'a PvState, &'a ConcurrentAlphabet);

impl fmt::Display for DisplayState<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, alpha) = (self.0, self.1);
        let b = s.first_residual.map_or("λ", |b| alpha.symbol(b));
        let letters: Vec<&str> = s.residual_letters.iter().map(|a| alpha.symbol(a)).collect();
        write!(f, "({},{},{{{}}})", alpha.display(&s.u_prefix), b, letters.join(","))
    }
}

/// Work performed while building a validator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub states: usize,
    pub transitions: usize,
    /// Elementary steps: dependence checks, insertion scans and replay steps.
    pub steps: u64,
}

#[derive(Clone, Debug)]
pub struct PrefixValidator {
    pub dfa: Nfa,
    pub states: Vec<PvState>,
    pub stats: BuildStats,
}

impl PrefixValidator {
    /// State reached by `w`, by running the DFA.
    pub fn run(&self, w: &[Letter]) -> &PvState {
        let mut q = self.dfa.initial();
        for &a in w {
            q = self.dfa.successors(q, a).next().expect("validator is complete");
        }
        &self.states[q as usize]
    }
}

/// One transition of the validator.
pub fn step(alpha: &ConcurrentAlphabet, u: &[Letter], s: &PvState, a: Letter, stats: &mut BuildStats) -> PvState {
    stats.steps += s.residual_letters.iter().count() as u64;
    if s.residual_letters.iter().any(|c| alpha.dependent(a, c)) {
        return PvState {
            u_prefix: s.u_prefix.clone(),
            first_residual: s.first_residual,
            residual_letters: s.residual_letters.with(a),
        };
    }
    let (x, _) = insert_letter(alpha, &s.u_prefix, a);
    let (u2, v2) = u_prefix_residual(alpha, u, &x);
    stats.steps += (x.len() + u.len() * u.len()) as u64;
    let mut ua = s.u_prefix.clone();
    ua.push(a);
    let case_one = x != ua;
    let case_two = s.first_residual.is_none_or(|b| a < b);
    if case_one || case_two {
        PvState {
            first_residual: v2.first().copied().or(s.first_residual),
            residual_letters: s.residual_letters.union(LetterSet::of(&v2)),
            u_prefix: u2,
        }
    } else {
        PvState {
            u_prefix: s.u_prefix.clone(),
            first_residual: s.first_residual,
            residual_letters: s.residual_letters.with(a),
        }
    }
}

/// Builds the validator for the normal form `u` by exploring reachable
/// states from `(λ, λ, ∅)`.
pub fn build_prefix_validator(alpha: &Arc<ConcurrentAlphabet>, u: &[Letter]) -> Result<PrefixValidator> {
    if !is_normal_form(alpha, u) {
        return Err(Error::Invalid(format!("`{}` is not in normal form", alpha.display(u))));
    }
    let mut stats = BuildStats::default();
    let mut ids: HashMap<PvState, StateId> = HashMap::new();
    let mut states = vec![PvState::initial()];
    ids.insert(PvState::initial(), 0);
    let mut queue = VecDeque::from([0 as StateId]);
    let mut transitions = Vec::new();
    while let Some(src) = queue.pop_front() {
        for a in alpha.letters() {
            let next = step(alpha, u, &states[src as usize], a, &mut stats);
            let dst = match ids.get(&next) {
                Some(&d) => d,
                None => {
                    let d = states.len() as StateId;
                    ids.insert(next.clone(), d);
                    states.push(next);
                    queue.push_back(d);
                    d
                }
            };
            transitions.push(Transition { src, letter: a, dst });
        }
    }
    let finals: Vec<StateId> = (0..states.len() as StateId)
        .filter(|&q| states[q as usize].u_prefix == u)
        .collect();
    let names = states.iter().map(|s| s.display(alpha).to_string()).collect();
    stats.states = states.len();
    stats.transitions = transitions.len();
    let dfa = Nfa::new(alpha.clone(), names, 0, finals, transitions)?;
    Ok(PrefixValidator { dfa, states, stats })
}

/// `ω·|u|^ω·|Σ|·2^|Σ|`, saturating.
pub fn state_bound(alpha: &ConcurrentAlphabet, u_len: usize) -> Result<u128> {
    let w = alpha.width()? as u32;
    let k = alpha.len() as u32;
    Ok((w as u128)
        .saturating_mul((u_len as u128).saturating_pow(w))
        .saturating_mul(k as u128)
        .saturating_mul(1u128.checked_shl(k).unwrap_or(u128::MAX)))
}
