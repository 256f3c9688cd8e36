//! Random instances and brute-force oracles shared by the integration tests.
//! The oracles here use only swaps of adjacent independent letters and
//! subset simulation, never the library's trace or membership code.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

use tracecount::automaton::{StateId, Transition};
use tracecount::{ConcurrentAlphabet, Letter, Nfa, Word};

pub type TestRng = Pcg64Mcg;

pub fn rng(seed: u64) -> TestRng {
    Pcg64Mcg::seed_from_u64(seed)
}

/// Alphabet `a, b, ...` of `k` letters, each pair independent with
/// probability `p`.
pub fn random_alphabet(rng: &mut TestRng, k: usize, p: f64) -> Arc<ConcurrentAlphabet> {
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen_bool(p) {
                pairs.push((i, j));
            }
        }
    }
    Arc::new(ConcurrentAlphabet::from_indices(k, &pairs).unwrap())
}

pub fn letters(alpha: &ConcurrentAlphabet) -> Vec<Letter> {
    alpha.letters().collect()
}

pub fn random_word(rng: &mut TestRng, alpha: &ConcurrentAlphabet, len: usize) -> Word {
    let ls = letters(alpha);
    (0..len).map(|_| *ls.choose(rng).unwrap()).collect()
}

/// NFA with `m` states; each (state, letter, state) triple is a transition
/// with probability `density`, each state final with probability 1/3.
pub fn random_nfa(rng: &mut TestRng, alpha: Arc<ConcurrentAlphabet>, m: usize, density: f64) -> Nfa {
    let ls = letters(&alpha);
    let mut transitions = Vec::new();
    for src in 0..m {
        for &letter in &ls {
            for dst in 0..m {
                if rng.gen_bool(density) {
                    transitions.push(Transition {
                        src: src as StateId,
                        letter,
                        dst: dst as StateId,
                    });
                }
            }
        }
    }
    let mut finals: Vec<StateId> = (0..m as StateId).filter(|_| rng.gen_bool(1.0 / 3.0)).collect();
    if finals.is_empty() {
        finals.push(rng.gen_range(0..m) as StateId);
    }
    let names = (0..m).map(|i| format!("s{i}")).collect();
    Nfa::new(alpha, names, 0, finals, transitions).unwrap()
}

/// Random instance with `|Q| ≤ 6`, `|Σ| ≤ 4`.
pub fn random_instance(rng: &mut TestRng) -> Nfa {
    let k = rng.gen_range(1..=4);
    let alpha = random_alphabet(rng, k, 0.5);
    let m = rng.gen_range(1..=6);
    let density = rng.gen_range(0.1..0.45);
    random_nfa(rng, alpha, m, density)
}

/// The class of `w`: closure under swapping adjacent independent letters.
pub fn brute_class(alpha: &ConcurrentAlphabet, w: &[Letter]) -> BTreeSet<Word> {
    let mut seen: HashSet<Word> = HashSet::from([w.to_vec()]);
    let mut queue = VecDeque::from([w.to_vec()]);
    while let Some(x) = queue.pop_front() {
        for i in 0..x.len().saturating_sub(1) {
            if x[i] != x[i + 1] && alpha.independent(x[i], x[i + 1]) {
                let mut y = x.clone();
                y.swap(i, i + 1);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
    }
    seen.into_iter().collect()
}

pub fn brute_nf(alpha: &ConcurrentAlphabet, w: &[Letter]) -> Word {
    brute_class(alpha, w).into_iter().next().unwrap()
}

/// States reached by `w`, by subset simulation.
pub fn reach(nfa: &Nfa, w: &[Letter]) -> BTreeSet<StateId> {
    let mut cur = BTreeSet::from([nfa.initial()]);
    for &a in w {
        let mut next = BTreeSet::new();
        for t in nfa.transitions() {
            if t.letter == a && cur.contains(&t.src) {
                next.insert(t.dst);
            }
        }
        cur = next;
    }
    cur
}

pub fn accepts(nfa: &Nfa, w: &[Letter]) -> bool {
    reach(nfa, w).iter().any(|&q| nfa.is_final(q))
}

pub fn all_words(alpha: &ConcurrentAlphabet, n: usize) -> Vec<Word> {
    let ls = letters(alpha);
    let mut words = vec![Vec::new()];
    for _ in 0..n {
        words = words
            .into_iter()
            .flat_map(|w| {
                ls.iter().map(move |&a| {
                    let mut x = w.clone();
                    x.push(a);
                    x
                })
            })
            .collect();
    }
    words
}

/// Normal forms of the traces of `L(nfa) ∩ Σ^n`, by brute force.
pub fn brute_traces(nfa: &Nfa, n: usize) -> BTreeSet<Word> {
    all_words(nfa.alphabet(), n)
        .into_iter()
        .filter(|w| accepts(nfa, w))
        .map(|w| brute_nf(nfa.alphabet(), &w))
        .collect()
}

pub fn from_json(text: &str) -> Nfa {
    Nfa::from_json(text).unwrap()
}

/// `{aaa, aab, bbb}` up to commuting a and b.
pub fn three_traces() -> Nfa {
    from_json(include_str!("../../../../data/three_traces.json"))
}

pub fn figure() -> Nfa {
    from_json(include_str!("../../../../data/figure.json"))
}

pub fn intro() -> Nfa {
    from_json(include_str!("../../../../data/intro.json"))
}

pub fn single_trace() -> Nfa {
    from_json(
        r#"{"alphabet":["a","b"],"independence":[["a","b"]],"states":[0,1,2],"initial":0,
            "finals":[2],"transitions":[[0,"b",1],[1,"a",2]]}"#,
    )
}

/// Empirical total variation distance to the uniform law on `support`;
/// outcomes outside the support (⊥ included) count fully.
pub fn tv_to_uniform(support: &BTreeSet<Word>, outcomes: &[Option<Word>]) -> f64 {
    let total = outcomes.len() as f64;
    let mut freq = std::collections::BTreeMap::<Option<&Word>, u64>::new();
    for o in outcomes {
        *freq.entry(o.as_ref()).or_insert(0) += 1;
    }
    let u = 1.0 / support.len() as f64;
    let mut tv = 0.0;
    for t in support {
        tv += (freq.get(&Some(t)).copied().unwrap_or(0) as f64 / total - u).abs();
    }
    for (k, c) in &freq {
        if !k.is_some_and(|w| support.contains(w)) {
            tv += *c as f64 / total;
        }
    }
    tv / 2.0
}
