//! Finite automata over a concurrent alphabet: the NFA type and its JSON file
//! format, the leveled unrolling for a fixed word length, the DFA of
//! lexicographic normal forms, and the synchronous product.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alphabet::{ConcurrentAlphabet, Letter, LetterSet, Word};
use crate::error::{Error, Result};

pub type StateId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: StateId,
    pub letter: Letter,
    pub dst: StateId,
}

/// A nondeterministic finite automaton without ε-transitions.
#[derive(Clone, Debug)]
pub struct Nfa {
    alphabet: Arc<ConcurrentAlphabet>,
    names: Vec<String>,
    initial: StateId,
    finals: Vec<bool>,
    /// Sorted by `(src, letter, dst)`, no duplicates.
    transitions: Vec<Transition>,
    /// `out[q]` is the range of `transitions` leaving `q`.
    out: Vec<std::ops::Range<usize>>,
}

impl Nfa {
    pub fn new(
        alphabet: Arc<ConcurrentAlphabet>,
        names: Vec<String>,
        initial: StateId,
        finals: impl IntoIterator<Item = StateId>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self> {
        let m = names.len();
        if m == 0 {
            return Err(Error::Invalid("an automaton needs at least one state".into()));
        }
        if initial as usize >= m {
            return Err(Error::Invalid(format!("initial state {initial} out of range")));
        }
        let mut final_flags = vec![false; m];
        for f in finals {
            *final_flags
                .get_mut(f as usize)
                .ok_or_else(|| Error::Invalid(format!("final state {f} out of range")))? = true;
        }
        let set: BTreeSet<Transition> = transitions.into_iter().collect();
        for t in &set {
            if t.src as usize >= m || t.dst as usize >= m {
                return Err(Error::Invalid(format!("transition endpoint out of range: {t:?}")));
            }
            if t.letter.index() >= alphabet.len() {
                return Err(Error::Invalid(format!("transition letter out of range: {t:?}")));
            }
        }
        let transitions: Vec<Transition> = set.into_iter().collect();
        let mut out = vec![0..0; m];
        let mut start = 0;
        for q in 0..m {
            let mut end = start;
            while end < transitions.len() && transitions[end].src as usize == q {
                end += 1;
            }
            out[q] = start..end;
            start = end;
        }
        Ok(Nfa {
            alphabet,
            names,
            initial,
            finals: final_flags,
            transitions,
            out,
        })
    }

    pub fn alphabet(&self) -> &ConcurrentAlphabet {
        &self.alphabet
    }

    pub fn alphabet_arc(&self) -> &Arc<ConcurrentAlphabet> {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q as usize]
    }

    pub fn finals(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states() as StateId).filter(|&q| self.finals[q as usize])
    }

    pub fn name(&self, q: StateId) -> &str {
        &self.names[q as usize]
    }

    pub fn state(&self, name: &str) -> Result<StateId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as StateId)
            .ok_or_else(|| Error::Invalid(format!("unknown state `{name}`")))
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, q: StateId) -> &[Transition] {
        &self.transitions[self.out[q as usize].clone()]
    }

    pub fn successors(&self, q: StateId, a: Letter) -> impl Iterator<Item = StateId> + '_ {
        self.outgoing(q).iter().filter(move |t| t.letter == a).map(|t| t.dst)
    }

    pub fn is_deterministic(&self) -> bool {
        self.transitions
            .windows(2)
            .all(|p| (p[0].src, p[0].letter) != (p[1].src, p[1].letter))
    }

    /// States reached from the initial state by reading `w`.
    pub fn reach(&self, w: &[Letter]) -> BTreeSet<StateId> {
        let mut cur: BTreeSet<StateId> = [self.initial].into();
        for &a in w {
            cur = cur.iter().flat_map(|&q| self.successors(q, a)).collect();
            if cur.is_empty() {
                break;
            }
        }
        cur
    }

    pub fn accepts(&self, w: &[Letter]) -> bool {
        self.reach(w).iter().any(|&q| self.is_final(q))
    }

    /// Parses the JSON automaton format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: AutomatonFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("automaton JSON: {e}")))?;
        file.into_nfa()
    }

    pub fn to_file(&self) -> AutomatonFile {
        let alpha = &self.alphabet;
        AutomatonFile {
            alphabet: alpha.symbols().iter().cloned().map(Name::Str).collect(),
            independence: alpha
                .independent_pairs()
                .into_iter()
                .map(|(a, b)| [Name::Str(alpha.symbol(a).into()), Name::Str(alpha.symbol(b).into())])
                .collect(),
            states: self.names.iter().cloned().map(Name::Str).collect(),
            initial: Name::Str(self.name(self.initial).into()),
            finals: self.finals().map(|q| Name::Str(self.name(q).into())).collect(),
            transitions: self
                .transitions
                .iter()
                .map(|t| {
                    (
                        Name::Str(self.name(t.src).into()),
                        Name::Str(alpha.symbol(t.letter).into()),
                        Name::Str(self.name(t.dst).into()),
                    )
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("automaton serializes")
    }
}

/// State or symbol name in the JSON format; integers are accepted and read
/// as their decimal spelling.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Name {
    Str(String),
    Int(i64),
}

impl Name {
    fn into_string(self) -> String {
        match self {
            Name::Str(s) => s,
            Name::Int(i) => i.to_string(),
        }
    }
}

/// On-disk automaton: `{"alphabet", "independence", "states", "initial",
/// "finals", "transitions"}`. The order of `alphabet` is the letter order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonFile {
    pub alphabet: Vec<Name>,
    #[serde(default)]
    pub independence: Vec<[Name; 2]>,
    pub states: Vec<Name>,
    pub initial: Name,
    #[serde(default)]
    pub finals: Vec<Name>,
    #[serde(default)]
    pub transitions: Vec<(Name, Name, Name)>,
}

impl AutomatonFile {
    pub fn into_nfa(self) -> Result<Nfa> {
        let symbols: Vec<String> = self.alphabet.into_iter().map(Name::into_string).collect();
        let pairs: Vec<(String, String)> = self
            .independence
            .into_iter()
            .map(|[a, b]| (a.into_string(), b.into_string()))
            .collect();
        let alphabet = Arc::new(ConcurrentAlphabet::new(&symbols, &pairs)?);
        let names: Vec<String> = self.states.into_iter().map(Name::into_string).collect();
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i as StateId).is_some() {
                return Err(Error::Invalid(format!("duplicate state `{n}`")));
            }
        }
        let lookup = |n: Name| -> Result<StateId> {
            let n = n.into_string();
            index
                .get(&n)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("unknown state `{n}`")))
        };
        let initial = lookup(self.initial)?;
        let finals = self.finals.into_iter().map(lookup).collect::<Result<Vec<_>>>()?;
        let transitions = self
            .transitions
            .into_iter()
            .map(|(p, a, q)| {
                Ok(Transition {
                    src: lookup(p)?,
                    letter: alphabet.letter(&a.into_string())?,
                    dst: lookup(q)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Nfa::new(alphabet, names, initial, finals, transitions)
    }
}

/// Leveled acyclic copy of an NFA accepting exactly its words of length `n`.
///
/// State ids are assigned level by level; within a level in the order of
/// the original state ids. Every state is reachable and co-reachable. For
/// `n ≥ 1` the last level is a single merged final state. The total order on
/// transitions is the order of `(src, letter, dst)`, which is also the order
/// of [`UnrolledNfa::transitions`].
#[derive(Clone, Debug)]
pub struct UnrolledNfa {
    alphabet: Arc<ConcurrentAlphabet>,
    length: usize,
    levels: Vec<std::ops::Range<StateId>>,
    origin: Vec<Option<StateId>>,
    transitions: Vec<Transition>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    final_state: Option<StateId>,
}

impl UnrolledNfa {
    pub fn alphabet(&self) -> &ConcurrentAlphabet {
        &self.alphabet
    }

    pub fn alphabet_arc(&self) -> &Arc<ConcurrentAlphabet> {
        &self.alphabet
    }

    /// The word length `n`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.final_state.is_none()
    }

    pub fn num_states(&self) -> usize {
        self.origin.len()
    }

    pub fn initial(&self) -> StateId {
        0
    }

    /// The unique accepting state, or `None` when the slice is empty.
    pub fn final_state(&self) -> Option<StateId> {
        self.final_state
    }

    pub fn level(&self, i: usize) -> impl Iterator<Item = StateId> {
        self.levels.get(i).cloned().unwrap_or(0..0)
    }

    pub fn level_of(&self, q: StateId) -> usize {
        self.levels
            .iter()
            .position(|r| r.contains(&q))
            .expect("state belongs to a level")
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Original state, `None` for the merged final state.
    pub fn origin(&self, q: StateId) -> Option<StateId> {
        self.origin[q as usize]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Indices into [`Self::transitions`] entering `q`, in increasing order.
    pub fn incoming(&self, q: StateId) -> &[usize] {
        &self.incoming[q as usize]
    }

    pub fn outgoing(&self, q: StateId) -> &[usize] {
        &self.outgoing[q as usize]
    }

    /// Distinct predecessors of `q` in increasing order.
    pub fn predecessors(&self, q: StateId) -> Vec<StateId> {
        let mut p: Vec<StateId> = self.incoming(q).iter().map(|&t| self.transitions[t].src).collect();
        p.dedup();
        p
    }

    pub fn state_name(&self, q: StateId, original: &Nfa) -> String {
        match self.origin(q) {
            Some(o) => format!("{}@{}", original.name(o), self.level_of(q)),
            None => "F".to_string(),
        }
    }

    /// The unrolled automaton as a plain NFA (same state ids).
    pub fn to_nfa(&self) -> Nfa {
        let names = (0..self.num_states() as StateId)
            .map(|q| match self.origin(q) {
                Some(o) => format!("{o}@{}", self.level_of(q)),
                None => "F".to_string(),
            })
            .collect();
        Nfa::new(
            self.alphabet.clone(),
            names,
            0,
            self.final_state,
            self.transitions.iter().copied(),
        )
        .expect("unrolled automaton is well formed")
    }
}

/// Unrolls `nfa` for words of length `n`, pruning states that are not both
/// reachable and co-reachable within the slice.
pub fn unroll(nfa: &Nfa, n: usize) -> UnrolledNfa {
    let m = nfa.num_states();
    // forward[i][q]: q reachable by a word of length i.
    let mut forward = vec![vec![false; m]; n + 1];
    forward[0][nfa.initial() as usize] = true;
    for i in 0..n {
        for q in 0..m {
            if forward[i][q] {
                for t in nfa.outgoing(q as StateId) {
                    forward[i + 1][t.dst as usize] = true;
                }
            }
        }
    }
    // live[i][q]: forward and some word of length n - i leads to a final.
    let mut live = vec![vec![false; m]; n + 1];
    for q in 0..m {
        live[n][q] = forward[n][q] && nfa.is_final(q as StateId);
    }
    for i in (0..n).rev() {
        for q in 0..m {
            live[i][q] = forward[i][q]
                && nfa.outgoing(q as StateId).iter().any(|t| live[i + 1][t.dst as usize]);
        }
    }

    let alphabet = nfa.alphabet_arc().clone();
    if !live[0][nfa.initial() as usize] {
        return UnrolledNfa {
            alphabet,
            length: n,
            levels: vec![0..1],
            origin: vec![Some(nfa.initial())],
            transitions: Vec::new(),
            incoming: vec![Vec::new()],
            outgoing: vec![Vec::new()],
            final_state: None,
        };
    }

    let mut ids: Vec<HashMap<StateId, StateId>> = vec![HashMap::new(); n + 1];
    let mut origin = Vec::new();
    let mut levels = Vec::with_capacity(n + 1);
    let last_plain = if n == 0 { 0 } else { n - 1 };
    for (i, live_i) in live.iter().enumerate().take(last_plain + 1) {
        let start = origin.len() as StateId;
        for q in 0..m {
            if live_i[q] {
                ids[i].insert(q as StateId, origin.len() as StateId);
                origin.push(Some(q as StateId));
            }
        }
        levels.push(start..origin.len() as StateId);
    }
    let final_state = if n == 0 {
        0
    } else {
        let f = origin.len() as StateId;
        origin.push(None);
        levels.push(f..f + 1);
        for q in 0..m {
            if live[n][q] {
                ids[n].insert(q as StateId, f);
            }
        }
        f
    };

    let mut set = BTreeSet::new();
    for i in 0..n {
        for (&q, &uq) in &ids[i] {
            for t in nfa.outgoing(q) {
                if let Some(&ud) = ids[i + 1].get(&t.dst) {
                    set.insert(Transition {
                        src: uq,
                        letter: t.letter,
                        dst: ud,
                    });
                }
            }
        }
    }
    let transitions: Vec<Transition> = set.into_iter().collect();
    let mut incoming = vec![Vec::new(); origin.len()];
    let mut outgoing = vec![Vec::new(); origin.len()];
    for (k, t) in transitions.iter().enumerate() {
        incoming[t.dst as usize].push(k);
        outgoing[t.src as usize].push(k);
    }
    UnrolledNfa {
        alphabet,
        length: n,
        levels,
        origin,
        transitions,
        incoming,
        outgoing,
        final_state: Some(final_state),
    }
}

/// Deterministic automaton of lexicographic normal forms.
///
/// A state is the set of letters that may not be appended next. Reading `b`
/// clears every letter dependent on `b` and adds every letter independent of
/// `b` that is smaller than `b`. Every state accepts; a missing transition
/// rejects.
pub fn nf_dfa(alpha: &Arc<ConcurrentAlphabet>) -> Nfa {
    let mut ids: HashMap<LetterSet, StateId> = HashMap::new();
    let mut order = vec![LetterSet::EMPTY];
    ids.insert(LetterSet::EMPTY, 0);
    let mut queue = VecDeque::from([LetterSet::EMPTY]);
    let mut transitions = Vec::new();
    while let Some(blocked) = queue.pop_front() {
        let src = ids[&blocked];
        for b in alpha.letters() {
            if blocked.contains(b) {
                continue;
            }
            let next = nf_dfa_step(alpha, blocked, b);
            let dst = *ids.entry(next).or_insert_with(|| {
                order.push(next);
                queue.push_back(next);
                (order.len() - 1) as StateId
            });
            transitions.push(Transition { src, letter: b, dst });
        }
    }
    let names = order
        .iter()
        .map(|s| {
            let blocked: Vec<&str> = s.iter().map(|a| alpha.symbol(a)).collect();
            format!("{{{}}}", blocked.join(","))
        })
        .collect();
    let n = order.len() as StateId;
    Nfa::new(alpha.clone(), names, 0, 0..n, transitions).expect("nf automaton is well formed")
}

/// Blocked-letter update of [`nf_dfa`] after reading `b`.
#[inline]
pub(crate) fn nf_dfa_step(alpha: &ConcurrentAlphabet, blocked: LetterSet, b: Letter) -> LetterSet {
    let indep = alpha.independent_set(b);
    let smaller = LetterSet(b.bit() - 1);
    LetterSet((blocked.0 & indep.0) | (indep.0 & smaller.0))
}

/// Membership in the language of normal forms, by running [`nf_dfa`]'s
/// transition function directly.
pub fn in_nf_language(alpha: &ConcurrentAlphabet, w: &[Letter]) -> bool {
    let mut blocked = LetterSet::EMPTY;
    for &a in w {
        if blocked.contains(a) {
            return false;
        }
        blocked = nf_dfa_step(alpha, blocked, a);
    }
    true
}

/// Synchronous product; accepts `L(a) ∩ L(b)`. Only pairs reachable from
/// the initial pair are built.
pub fn product(a: &Nfa, b: &Nfa) -> Result<Nfa> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::Invalid("product of automata over different alphabets".into()));
    }
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut pairs = vec![(a.initial(), b.initial())];
    ids.insert(pairs[0], 0);
    let mut queue = VecDeque::from([pairs[0]]);
    let mut transitions = Vec::new();
    while let Some((p, q)) = queue.pop_front() {
        let src = ids[&(p, q)];
        for ta in a.outgoing(p) {
            for qd in b.successors(q, ta.letter) {
                let key = (ta.dst, qd);
                let dst = *ids.entry(key).or_insert_with(|| {
                    pairs.push(key);
                    queue.push_back(key);
                    (pairs.len() - 1) as StateId
                });
                transitions.push(Transition {
                    src,
                    letter: ta.letter,
                    dst,
                });
            }
        }
    }
    let finals: Vec<StateId> = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(p, q))| a.is_final(p) && b.is_final(q))
        .map(|(i, _)| i as StateId)
        .collect();
    let names = pairs
        .iter()
        .map(|&(p, q)| format!("({},{})", a.name(p), b.name(q)))
        .collect();
    Nfa::new(a.alphabet_arc().clone(), names, 0, finals, transitions)
}

/// Every word of length `n` accepted by `nfa`, sorted, refusing to visit more
/// than `budget` paths of the unrolled automaton.
pub fn words_of_length(nfa: &Nfa, n: usize, budget: u128) -> Result<BTreeSet<Word>> {
    let unrolled = unroll(nfa, n);
    let mut out = BTreeSet::new();
    let Some(fin) = unrolled.final_state() else {
        return Ok(out);
    };
    let mut visited: u128 = 0;
    let mut stack: Vec<(StateId, Word)> = vec![(unrolled.initial(), Vec::new())];
    while let Some((q, w)) = stack.pop() {
        visited += 1;
        if visited > budget {
            return Err(Error::Budget {
                what: "path enumeration",
                needed: visited,
                budget,
            });
        }
        if q == fin {
            out.insert(w);
            continue;
        }
        for &k in unrolled.outgoing(q) {
            let t = unrolled.transitions()[k];
            let mut next = w.clone();
            next.push(t.letter);
            stack.push((t.dst, next));
        }
    }
    Ok(out)
}
