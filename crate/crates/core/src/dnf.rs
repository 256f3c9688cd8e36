//! DNF formulas and their encoding as automata whose trace count equals the
//! number of satisfying assignments.
//!
//! Text format: one term per line, literals `x3` or `!x3` separated by
//! whitespace. Variables are numbered from 1. Blank lines and lines starting
//! with `#` are ignored.

use std::fmt;
use std::sync::Arc;

use crate::alphabet::{ConcurrentAlphabet, Letter};
use crate::automaton::{Nfa, StateId, Transition};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    /// 0-based variable index.
    pub var: usize,
    pub positive: bool,
}

/// A formula in disjunctive normal form. Every term is a nonempty,
/// consistent set of literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dnf {
    num_vars: usize,
    terms: Vec<Vec<Literal>>,
}

impl Dnf {
    pub fn new(num_vars: usize, terms: Vec<Vec<Literal>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid("a DNF needs at least one term".into()));
        }
        if num_vars == 0 {
            return Err(Error::Invalid("a DNF needs at least one variable".into()));
        }
        let mut normalized = Vec::with_capacity(terms.len());
        for (i, mut term) in terms.into_iter().enumerate() {
            if term.is_empty() {
                return Err(Error::Invalid(format!("term {} is empty", i + 1)));
            }
            term.sort();
            term.dedup();
            for pair in term.windows(2) {
                if pair[0].var == pair[1].var {
                    return Err(Error::Invalid(format!(
                        "term {} contains x{} and !x{}",
                        i + 1,
                        pair[0].var + 1,
                        pair[0].var + 1
                    )));
                }
            }
            if let Some(l) = term.iter().find(|l| l.var >= num_vars) {
                return Err(Error::Invalid(format!("variable x{} out of range", l.var + 1)));
            }
            normalized.push(term);
        }
        Ok(Dnf {
            num_vars,
            terms: normalized,
        })
    }

    /// Parses the line format. The variable count is the largest index used.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut num_vars = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut term = Vec::new();
            for tok in line.split_whitespace() {
                let (positive, rest) = match tok.strip_prefix('!') {
                    Some(r) => (false, r),
                    None => (true, tok),
                };
                let index: usize = rest
                    .strip_prefix('x')
                    .and_then(|d| d.parse().ok())
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| {
                        Error::Parse(format!("line {}: bad literal `{tok}`", lineno + 1))
                    })?;
                num_vars = num_vars.max(index);
                term.push(Literal {
                    var: index - 1,
                    positive,
                });
            }
            terms.push(term);
        }
        Dnf::new(num_vars, terms)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Vec<Literal>] {
        &self.terms
    }

    pub fn term_satisfied(&self, term: usize, assignment: &[bool]) -> bool {
        self.terms[term].iter().all(|l| assignment[l.var] == l.positive)
    }

    pub fn satisfied(&self, assignment: &[bool]) -> bool {
        (0..self.terms.len()).any(|i| self.term_satisfied(i, assignment))
    }

    /// Number of satisfying assignments, by trying all of them.
    pub fn model_count(&self) -> Result<u64> {
        if self.num_vars > 30 {
            return Err(Error::Budget {
                what: "assignments",
                needed: 1u128 << self.num_vars,
                budget: 1 << 30,
            });
        }
        let mut count = 0;
        let mut assignment = vec![false; self.num_vars];
        for bits in 0u64..(1u64 << self.num_vars) {
            for (v, slot) in assignment.iter_mut().enumerate() {
                *slot = bits >> v & 1 == 1;
            }
            if self.satisfied(&assignment) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Length of the accepted words of [`dnf_to_dfa`].
    pub fn slice_length(&self) -> usize {
        self.terms.len() + 1 + self.num_vars
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for term in &self.terms {
            let lits: Vec<String> = term
                .iter()
                .map(|l| format!("{}x{}", if l.positive { "" } else { "!" }, l.var + 1))
                .collect();
            writeln!(f, "{}", lits.join(" "))?;
        }
        Ok(())
    }
}

/// Alphabet `a ≺ b ≺ 0 ≺ 1 ≺ $` with `a` and `b` independent.
pub fn dnf_alphabet() -> ConcurrentAlphabet {
    ConcurrentAlphabet::new(&["a", "b", "0", "1", "$"], &[("a", "b")]).expect("fixed alphabet is valid")
}

/// DFA accepting `a^i b a^(k-i-1) $ α` whenever term `i+1` is satisfied by
/// the assignment `α ∈ {0,1}^vars`.
///
/// The `b` commutes with the `a`s, so all words for a fixed `α` form one
/// trace and the trace count of the slice is the model count.
pub fn dnf_to_dfa(phi: &Dnf) -> Nfa {
    let alpha = Arc::new(dnf_alphabet());
    let (a, b, zero, one, dollar) = (Letter(0), Letter(1), Letter(2), Letter(3), Letter(4));
    let k = phi.terms.len();
    let nv = phi.num_vars;
    let mut names = Vec::new();
    let mut new_state = |name: String| {
        names.push(name);
        (names.len() - 1) as StateId
    };
    // s[j]: read a^j, no b yet.
    let s: Vec<StateId> = (0..k).map(|j| new_state(format!("s{j}"))).collect();
    let mut transitions = Vec::new();
    let mut finals = Vec::new();
    for j in 0..k.saturating_sub(1) {
        transitions.push(Transition { src: s[j], letter: a, dst: s[j + 1] });
    }
    for (i, term) in phi.terms.iter().enumerate() {
        // t[m]: term i chosen, m letters `a` read after the `b`.
        let t: Vec<StateId> = (0..k - i).map(|m| new_state(format!("t{i}_{m}"))).collect();
        transitions.push(Transition { src: s[i], letter: b, dst: t[0] });
        for m in 0..k - i - 1 {
            transitions.push(Transition { src: t[m], letter: a, dst: t[m + 1] });
        }
        // v[l]: `$` read, l assignment bits read.
        let v: Vec<StateId> = (0..=nv).map(|l| new_state(format!("v{i}_{l}"))).collect();
        transitions.push(Transition { src: t[k - i - 1], letter: dollar, dst: v[0] });
        for l in 0..nv {
            let lit = term.iter().find(|x| x.var == l);
            if lit.is_none_or(|x| !x.positive) {
                transitions.push(Transition { src: v[l], letter: zero, dst: v[l + 1] });
            }
            if lit.is_none_or(|x| x.positive) {
                transitions.push(Transition { src: v[l], letter: one, dst: v[l + 1] });
            }
        }
        finals.push(v[nv]);
    }
    Nfa::new(alpha, names, s[0], finals, transitions).expect("reduction automaton is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::words_of_length;

    fn accepted(phi: &Dnf) -> Vec<String> {
        let dfa = dnf_to_dfa(phi);
        assert!(dfa.is_deterministic());
        words_of_length(&dfa, phi.slice_length(), 1 << 20)
            .unwrap()
            .iter()
            .map(|w| dfa.alphabet().format_word(w))
            .collect()
    }

    #[test]
    fn single_literal() {
        let phi = Dnf::parse("x1").unwrap();
        assert_eq!(accepted(&phi), ["b$1"]);
        assert_eq!(phi.model_count().unwrap(), 1);
    }

    #[test]
    fn tautology_over_one_variable() {
        let phi = Dnf::parse("x1\n!x1\n").unwrap();
        let mut words = accepted(&phi);
        words.sort();
        assert_eq!(words, ["ab$0", "ba$1"]);
        assert_eq!(phi.model_count().unwrap(), 2);
    }

    #[test]
    fn missing_variable_branches_on_both_bits() {
        let phi = Dnf::parse("x2").unwrap();
        assert_eq!(accepted(&phi), ["b$01", "b$11"]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Dnf::parse("x1 y2"), Err(Error::Parse(_))));
        assert!(matches!(Dnf::parse("x0"), Err(Error::Parse(_))));
        assert!(matches!(Dnf::parse("x1 !x1"), Err(Error::Invalid(_))));
        assert!(matches!(Dnf::parse("\n# nothing\n"), Err(Error::Invalid(_))));
    }

    #[test]
    fn display_round_trips() {
        let phi = Dnf::parse("x1 !x3\n  x2\n").unwrap();
        assert_eq!(Dnf::parse(&phi.to_string()).unwrap(), phi);
        assert_eq!(phi.num_vars(), 3);
    }
}
