//! Counting and sampling Mazurkiewicz traces of regular languages.
//!
//! Given an NFA over a concurrent alphabet and a length `n`, the crate
//! approximately counts the trace classes that meet the length-`n` slice of
//! the language ([`fpras::trace_mc`]) and samples them almost uniformly
//! ([`sampler::trace_sample`]). Brute-force exact counters in [`exact`]
//! serve as ground truth.

pub mod alphabet;
pub mod automaton;
pub mod dnf;
pub mod error;
pub mod exact;
pub mod fpras;
pub mod membership;
pub mod prefix_validator;
pub mod rational;
pub mod rng;
pub mod sampler;
pub mod trace;

pub use alphabet::{ConcurrentAlphabet, Letter, LetterSet, Word};
pub use automaton::{Nfa, StateId, Transition, UnrolledNfa};
pub use error::{Error, Result};
