//! Almost-uniform sampling of the traces of a length-`n` slice.
//!
//! A core run grows a normal form `u` one letter at a time. At each step it
//! estimates, for every letter `a` that keeps `u·a` a normal form, the number
//! `C(u·a)` of traces of the slice whose normal form starts with `u·a`, and
//! draws `a` proportionally. `C(u)` is the trace count of the slice of
//! `A × A_u`, where `A_u` is the prefix validator of `u`. The product of the
//! step probabilities `φ` is then corrected by a final rejection with
//! probability `1/(2·C̃(λ)·φ)`, which makes accepted outputs exactly uniform
//! whenever the estimates are exact and close to uniform when they are
//! within `1 ± ε′`.
//!
//! Streams below a core seed: `[STEP, i, a]` for the estimate of `C(u·a)` at
//! step `i`, `[DRAW, i]` for the letter draw, `[ACCEPT]` for the rejection
//! and `[START]` for `C̃(λ)`. Core run `k` of [`Sampler::sample`] uses
//! `[CORE, k]` below the user seed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::alphabet::{Letter, LetterSet, Word};
use crate::automaton::{nf_dfa_step, product, unroll, Nfa, UnrolledNfa};
use crate::error::{Error, Result};
use crate::exact::count_exact_nf_with_budget;
use crate::fpras::{trace_mc_unrolled, Engine, FprasConfig, Overrides};
use crate::prefix_validator::build_prefix_validator;
use crate::rational::{format_rational, from_u64, in_open_unit, Rational};
use crate::rng::{derive, stream, ExactProbability};

const TAG_CORE: u64 = 0x434f5245;
const TAG_START: u64 = 0x5354;
const TAG_STEP: u64 = 0x5354_4550;
const TAG_DRAW: u64 = 0x4452_4157;
const TAG_ACCEPT: u64 = 0x4143_4350;

/// Counting oracle used by the sampler: the number of traces of the slice
/// represented by an unrolled automaton, or an estimate of it.
pub trait Counter: Sync {
    fn count(&self, u: &UnrolledNfa, seed: u64) -> Result<Rational>;

    /// Whether `count` ignores its seed; results are then cached per prefix.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Exact counting by normal-form enumeration.
#[derive(Clone, Debug)]
pub struct ExactCounter {
    pub budget: u128,
}

impl Default for ExactCounter {
    fn default() -> Self {
        ExactCounter {
            budget: crate::exact::DEFAULT_BUDGET,
        }
    }
}

impl Counter for ExactCounter {
    fn count(&self, u: &UnrolledNfa, _seed: u64) -> Result<Rational> {
        let c = count_exact_nf_with_budget(&u.to_nfa(), u.length(), self.budget)?;
        Ok(from_u64(c))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// The randomized counter run with `(ε′, δ′)`.
#[derive(Clone, Debug)]
pub struct FprasCounter {
    pub config: FprasConfig,
}

impl FprasCounter {
    pub fn new(params: &SamplerParams, engine: Engine, overrides: Overrides) -> Self {
        let mut config = FprasConfig::new(params.epsilon_prime.clone(), params.delta_prime.clone());
        config.engine = engine;
        config.overrides = overrides;
        FprasCounter { config }
    }
}

impl Counter for FprasCounter {
    fn count(&self, u: &UnrolledNfa, seed: u64) -> Result<Rational> {
        Ok(trace_mc_unrolled(u, &self.config, seed)?.estimate)
    }
}

/// Resolved sampler parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerParams {
    pub delta: Rational,
    pub epsilon_prime: Rational,
    pub delta_prime: Rational,
    /// Number `m` of core runs before giving up.
    pub outer_runs: u64,
}

impl SamplerParams {
    /// `ε′ = 1/(16n)`, `m = ⌈ln(1/δ)/ln(4/3)⌉`, `δ′ = δ/(2^(n-1)·m)`; for
    /// `n = 0` the length is taken as 1.
    pub fn defaults(delta: Rational, n: usize) -> Result<Self> {
        if !in_open_unit(&delta) {
            return Err(Error::Invalid(format!("delta must lie in (0,1), got {}", format_rational(&delta))));
        }
        let n1 = n.max(1);
        let epsilon_prime = Rational::new(BigInt::one(), BigInt::from(16 * n1 as u64));
        let inv = crate::rational::to_f64(&(Rational::one() / &delta));
        let mut m = (inv.ln() / (4.0f64 / 3.0).ln()).ceil().max(1.0) as u64;
        // Guard against rounding: (3/4)^m ≤ δ must hold exactly.
        let three_quarters = Rational::new(3.into(), 4.into());
        while num_traits::pow(three_quarters.clone(), m as usize) > delta {
            m += 1;
        }
        let scale = Rational::from_integer(num_traits::pow(BigInt::from(2), n1 - 1) * BigInt::from(m));
        let delta_prime = &delta / scale;
        Ok(SamplerParams {
            delta,
            epsilon_prime,
            delta_prime,
            outer_runs: m,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "delta": format_rational(&self.delta),
            "epsilon_prime": format_rational(&self.epsilon_prime),
            "delta_prime": format_rational(&self.delta_prime),
            "outer_runs": self.outer_runs,
        })
    }
}

/// Result of [`Sampler::sample`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleOutcome {
    /// Normal form of the sampled trace; `None` is the failure outcome ⊥.
    pub word: Option<Word>,
    /// Core runs performed.
    pub core_runs: u64,
}

/// Samples traces of `L(nfa) ∩ Σ^n` through a counting oracle.
pub struct Sampler<'a, C: Counter> {
    nfa: &'a Nfa,
    n: usize,
    counter: C,
    outer_runs: u64,
    slices: Mutex<HashMap<Word, Arc<UnrolledNfa>>>,
    counts: Mutex<HashMap<Word, Rational>>,
}

impl<'a, C: Counter> Sampler<'a, C> {
    pub fn new(nfa: &'a Nfa, n: usize, counter: C, outer_runs: u64) -> Self {
        Sampler {
            nfa,
            n,
            counter,
            outer_runs,
            slices: Mutex::new(HashMap::new()),
            counts: Mutex::new(HashMap::new()),
        }
    }

    pub fn length(&self) -> usize {
        self.n
    }

    pub fn counter(&self) -> &C {
        &self.counter
    }

    /// Slice of `A × A_u` at length `n`, built once per prefix.
    fn slice(&self, u: &[Letter]) -> Result<Arc<UnrolledNfa>> {
        if let Some(s) = self.slices.lock().expect("slice cache").get(u) {
            return Ok(s.clone());
        }
        let validator = build_prefix_validator(self.nfa.alphabet_arc(), u)?;
        let prod = product(self.nfa, &validator.dfa)?;
        let s = Arc::new(unroll(&prod, self.n));
        self.slices.lock().expect("slice cache").insert(u.to_vec(), s.clone());
        Ok(s)
    }

    /// `C̃(u)`: exactly 0 when no trace of the slice has a normal form
    /// starting with `u`, otherwise the counter's value on the product.
    pub fn estimate_c(&self, u: &[Letter], seed: u64) -> Result<Rational> {
        if u.len() > self.n {
            return Err(Error::Precondition("prefix longer than the slice".into()));
        }
        let deterministic = self.counter.is_deterministic();
        if deterministic {
            if let Some(c) = self.counts.lock().expect("count cache").get(u) {
                return Ok(c.clone());
            }
        }
        let slice = self.slice(u)?;
        let c = if slice.is_empty() {
            Rational::zero()
        } else {
            self.counter.count(&slice, seed)?
        };
        if deterministic {
            self.counts.lock().expect("count cache").insert(u.to_vec(), c.clone());
        }
        Ok(c)
    }

    /// One core run; `Ok(None)` is ⊥.
    pub fn sample_core(&self, seed: u64) -> Result<Option<Word>> {
        let alpha = self.nfa.alphabet();
        let c_lambda = self.estimate_c(&[], derive(seed, &[TAG_START]))?;
        if !c_lambda.is_positive() {
            return Ok(None);
        }
        let mut u: Word = Vec::with_capacity(self.n);
        let mut blocked = LetterSet::EMPTY;
        let mut phi = Rational::one();
        for i in 0..self.n {
            let letters: Vec<Letter> = alpha.letters().filter(|&a| !blocked.contains(a)).collect();
            let weights = letters
                .par_iter()
                .map(|&a| {
                    let mut ua = u.clone();
                    ua.push(a);
                    self.estimate_c(&ua, derive(seed, &[TAG_STEP, i as u64, a.index() as u64]))
                })
                .collect::<Result<Vec<Rational>>>()?;
            let total: Rational = weights.iter().sum();
            if !total.is_positive() {
                return Ok(None);
            }
            let mut rng = stream(seed, &[TAG_DRAW, i as u64]);
            let pick = draw_weighted(&weights, &mut rng);
            let a = letters[pick];
            phi *= &weights[pick] / &total;
            blocked = nf_dfa_step(alpha, blocked, a);
            u.push(a);
        }
        let two_c = from_u64(2) * &c_lambda;
        if phi < Rational::one() / &two_c {
            return Ok(None);
        }
        let accept = ExactProbability::new(&(Rational::one() / (two_c * phi))).expect("acceptance probability in [0,1]");
        let mut rng = stream(seed, &[TAG_ACCEPT]);
        Ok(if accept.sample(&mut rng) { Some(u) } else { None })
    }

    /// Up to `m` core runs; the first non-⊥ result is returned. An empty
    /// slice is an error, never ⊥.
    pub fn sample(&self, seed: u64) -> Result<SampleOutcome> {
        if self.slice(&[])?.is_empty() {
            return Err(Error::EmptyLanguage(self.n));
        }
        for k in 0..self.outer_runs {
            if let Some(w) = self.sample_core(derive(seed, &[TAG_CORE, k]))? {
                return Ok(SampleOutcome {
                    word: Some(w),
                    core_runs: k + 1,
                });
            }
        }
        Ok(SampleOutcome {
            word: None,
            core_runs: self.outer_runs,
        })
    }
}

/// Index drawn with probability proportional to the nonnegative rational
/// weights, exactly: weights are scaled to integers by the lcm of their
/// denominators.
fn draw_weighted<R: rand::Rng>(weights: &[Rational], rng: &mut R) -> usize {
    let lcm = weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let ints: Vec<BigInt> = weights.iter().map(|w| w.numer() * (&lcm / w.denom())).collect();
    let total: BigInt = ints.iter().sum();
    let total_u = total.to_biguint().expect("positive total");
    let mut x: BigInt = match total_u.to_u64() {
        Some(t) => BigInt::from(rng.gen_range(0..t)),
        None => rng.gen_biguint_below(&total_u).into(),
    };
    for (i, w) in ints.iter().enumerate() {
        if &x < w {
            return i;
        }
        x -= w;
    }
    unreachable!("draw below the total weight")
}

/// Convenience wrapper: one sample with the randomized counter and default
/// parameters.
pub fn trace_sample(nfa: &Nfa, n: usize, delta: Rational, seed: u64) -> Result<SampleOutcome> {
    let params = SamplerParams::defaults(delta, n)?;
    let counter = FprasCounter::new(&params, Engine::Auto, Overrides::default());
    Sampler::new(nfa, n, counter, params.outer_runs).sample(seed)
}
