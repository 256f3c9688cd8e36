//! Randomized approximate counting of the traces of a length-`n` slice.
//!
//! [`trace_mc`] unrolls the automaton, derives the parameters and returns
//! the median of `ξ` independent [`trace_mc_core`] runs. A core run walks
//! the unrolled automaton level by level; for each state it keeps an
//! estimate `N(q)` of the number of traces reaching `q` and, for every
//! replica `r`, a set `S^r(q)` of canonical words sampled so that each trace
//! is present with probability `1/N(q)`.
//!
//! Two interchangeable engines run a core pass. [`Engine::Replica`] keeps
//! every replica explicitly and draws each Bernoulli with exact rational
//! probability. [`Engine::Population`] keeps, per batch, a histogram of
//! identical replica configurations and splits groups with binomial draws;
//! since replicas of one batch are exchangeable and only batch sums enter
//! the estimator, its output has the same distribution. [`Engine::Auto`]
//! starts a large pass on the population engine and restarts it on the
//! replica engine once the histograms stop compressing.

mod population;
mod replica;
mod union;

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::alphabet::{Letter, Word};
use crate::automaton::{unroll, Nfa, StateId, UnrolledNfa};
use crate::error::{Error, Result};
use crate::rational::{format_rational, from_u64, in_open_unit, Rational};
use crate::rng::{derive, ExactProbability};
use union::UnionOracle;

pub use union::union_sets;

/// Tag of the outer runs in the stream tree.
const TAG_RUN: u64 = 0x52554e;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Replica when `α·|Q^u|` is small; otherwise population until the
    /// distinct configurations exceed `α / AUTO_FALLBACK_RATIO`, then replica.
    #[default]
    Auto,
    Replica,
    Population,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "replica" => Ok(Engine::Replica),
            "population" => Ok(Engine::Population),
            _ => Err(Error::Parse(format!("unknown engine `{s}`"))),
        }
    }
}

/// Largest `α·|Q^u|` for which [`Engine::Auto`] picks the replica engine.
pub const AUTO_REPLICA_LIMIT: u128 = 1 << 16;

/// Past `α / AUTO_FALLBACK_RATIO` distinct configurations the histograms
/// cost more than explicit replicas.
pub const AUTO_FALLBACK_RATIO: u64 = 16;

/// Replacements for the derived parameters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub beta: Option<u64>,
    pub gamma: Option<u64>,
    pub xi: Option<u64>,
    pub theta: Option<Rational>,
}

#[derive(Clone, Debug)]
pub struct FprasConfig {
    pub epsilon: Rational,
    pub delta: Rational,
    pub overrides: Overrides,
    pub engine: Engine,
}

impl FprasConfig {
    pub fn new(epsilon: Rational, delta: Rational) -> Self {
        FprasConfig {
            epsilon,
            delta,
            overrides: Overrides::default(),
            engine: Engine::Auto,
        }
    }
}

/// Resolved parameters of one counting call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FprasParams {
    pub epsilon: Rational,
    pub delta: Rational,
    pub n: usize,
    pub omega: usize,
    pub unrolled_states: usize,
    pub beta: u64,
    pub gamma: u64,
    pub alpha: u64,
    pub xi: u64,
    pub theta: Rational,
    /// Largest integer `ℓ` of an acceptable value.
    pub max_count: BigUint,
    pub engine: Engine,
}

#[derive(Serialize)]
struct ParamsJson {
    epsilon: String,
    delta: String,
    n: usize,
    omega: usize,
    unrolled_states: usize,
    beta: u64,
    gamma: u64,
    alpha: u64,
    xi: u64,
    theta: String,
    max_count: String,
    engine: Engine,
}

impl FprasParams {
    /// Derives `β, γ, α, ξ, θ` from `ε, δ, ω, n, |Q^u|`, then applies overrides.
    pub fn derive(config: &FprasConfig, n: usize, omega: usize, unrolled_states: usize, alphabet_len: usize) -> Result<Self> {
        let eps = &config.epsilon;
        let delta = &config.delta;
        if !in_open_unit(eps) {
            return Err(Error::Invalid(format!("epsilon must lie in (0,1), got {}", format_rational(eps))));
        }
        if !in_open_unit(delta) {
            return Err(Error::Invalid(format!("delta must lie in (0,1), got {}", format_rational(delta))));
        }
        let one = Rational::one();
        // β = ⌈8·ω·n^(ω+1)·(1+ε)/ε²⌉, at least 1.
        let n_pow = num_traits::pow(BigInt::from(n), omega + 1);
        let beta_exact = Rational::from_integer(BigInt::from(8 * omega as u64) * n_pow) * (&one + eps) / (eps * eps);
        let beta = match config.overrides.beta {
            Some(b) => b,
            None => beta_exact
                .ceil()
                .to_integer()
                .to_u64()
                .ok_or_else(|| Error::Invalid("beta does not fit in 64 bits".into()))?
                .max(1),
        };
        let gamma = match config.overrides.gamma {
            Some(g) => g,
            None => ((2.0 * (16.0 * unrolled_states as f64).ln()).ceil() as u64).max(1),
        };
        if beta == 0 || gamma == 0 {
            return Err(Error::Invalid("beta and gamma must be positive".into()));
        }
        let alpha = beta
            .checked_mul(gamma)
            .ok_or_else(|| Error::Invalid("alpha = beta*gamma overflows".into()))?;
        let xi = match config.overrides.xi {
            Some(x) => x,
            None => {
                let inv = crate::rational::to_f64(&(&one / delta));
                ((8.0 * inv.ln()).ceil() as u64).max(1)
            }
        };
        if xi == 0 {
            return Err(Error::Invalid("xi must be positive".into()));
        }
        let theta = match &config.overrides.theta {
            Some(t) => {
                if t.is_negative() {
                    return Err(Error::Invalid("theta must be nonnegative".into()));
                }
                t.clone()
            }
            None => from_u64(16) * from_u64(alpha) * from_u64(unrolled_states as u64) / (&one - eps),
        };
        let base = BigUint::from(alphabet_len.max(2) as u64);
        let max_count = num_traits::pow(base, n);
        let engine = match config.engine {
            Engine::Auto if (alpha as u128) * (unrolled_states as u128) <= AUTO_REPLICA_LIMIT => Engine::Replica,
            e => e,
        };
        Ok(FprasParams {
            epsilon: eps.clone(),
            delta: delta.clone(),
            n,
            omega,
            unrolled_states,
            beta,
            gamma,
            alpha,
            xi,
            theta,
            max_count,
            engine,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ParamsJson {
            epsilon: format_rational(&self.epsilon),
            delta: format_rational(&self.delta),
            n: self.n,
            omega: self.omega,
            unrolled_states: self.unrolled_states,
            beta: self.beta,
            gamma: self.gamma,
            alpha: self.alpha,
            xi: self.xi,
            theta: format_rational(&self.theta),
            max_count: self.max_count.to_string(),
            engine: self.engine,
        })
        .expect("params serialize")
    }
}

/// Median of the normalized means of consecutive batches of `beta` values.
/// The lower median is used when the number of batches is even.
pub fn median_of_means(beta: usize, xs: &[Rational]) -> Result<Rational> {
    if beta == 0 || xs.is_empty() || !xs.len().is_multiple_of(beta) {
        return Err(Error::Invalid(format!(
            "{} values cannot be split into batches of {beta}",
            xs.len()
        )));
    }
    let b = from_u64(beta as u64);
    let means: Vec<Rational> = xs
        .chunks(beta)
        .map(|c| c.iter().fold(Rational::zero(), |acc, x| acc + x) / &b)
        .collect();
    Ok(lower_median(means))
}

/// Median of means given the per-batch sums of nonnegative integers.
pub(crate) fn median_of_batch_sums(beta: u64, sums: &[u128]) -> Rational {
    let mut sorted = sums.to_vec();
    sorted.sort_unstable();
    let mid = sorted[(sorted.len() - 1) / 2];
    Rational::new(BigInt::from(mid), BigInt::from(beta))
}

pub(crate) fn lower_median(mut xs: Vec<Rational>) -> Rational {
    xs.sort();
    xs.swap_remove((xs.len() - 1) / 2)
}

/// Keeps each element independently with probability exactly `p`.
pub fn reduce_set<T: Clone, R: Rng + ?Sized>(set: &[T], p: &Rational, rng: &mut R) -> Result<Vec<T>> {
    let prob = ExactProbability::new(p)
        .ok_or_else(|| Error::Invalid(format!("probability {} outside [0,1]", format_rational(p))))?;
    Ok(set.iter().filter(|_| prob.sample(rng)).cloned().collect())
}

/// Least acceptable value `≥ v`: an integer `ℓ`, `(1-ε)ℓ` or `(1+ε)ℓ` with
/// `1 ≤ ℓ ≤ max_count`.
pub fn round_up(max_count: &BigUint, epsilon: &Rational, v: &Rational) -> Result<Rational> {
    let one = Rational::one();
    let max = Rational::from_integer(BigInt::from(max_count.clone()));
    let mut best: Option<Rational> = None;
    for factor in [one.clone(), &one - epsilon, &one + epsilon] {
        if !factor.is_positive() {
            continue;
        }
        let l = (v / &factor).ceil().max(one.clone());
        if l > max {
            continue;
        }
        let candidate = l * &factor;
        if best.as_ref().is_none_or(|b| &candidate < b) {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| {
        Error::Overflow(format!(
            "{} exceeds every acceptable value (max count {max_count})",
            format_rational(v)
        ))
    })
}

/// Per-state observations of an instrumented replica run.
pub trait Observer {
    /// Called once per processed state with its estimate and sample sets.
    fn state(&mut self, _report: &StateReport<'_>) {}
}

pub struct StateReport<'a> {
    pub state: StateId,
    pub level: usize,
    pub n_max: &'a Rational,
    pub n_hat: &'a Rational,
    pub n: &'a Rational,
    /// `Ŝ^r(q)` for every replica.
    pub hat: &'a [Vec<Word>],
    /// `S^r(q)` for every replica.
    pub samples: &'a [Vec<Word>],
}

/// Options used by tests to isolate parts of the estimator.
#[derive(Clone, Debug, Default)]
pub struct CoreOptions {
    /// Use these values for `N(q)` instead of the estimate (indexed by state).
    pub fixed_counts: Option<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreOutcome {
    pub estimate: Rational,
    pub interrupted: bool,
    pub number_samples: u128,
}

/// Interns the words of one state.
#[derive(Clone, Debug, Default)]
pub(crate) struct WordTable {
    words: Vec<Word>,
    index: HashMap<Word, u32>,
}

impl WordTable {
    pub(crate) fn intern(&mut self, w: Word) -> u32 {
        if let Some(&id) = self.index.get(&w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.index.insert(w.clone(), id);
        self.words.push(w);
        id
    }

    pub(crate) fn get(&self, id: u32) -> &Word {
        &self.words[id as usize]
    }

    pub(crate) fn len(&self) -> usize {
        self.words.len()
    }
}

/// Ids of the kept extensions `w·s` of each predecessor word, computed once
/// per `(predecessor, word)` however many replicas hold the word. Ids are
/// interned in first-use order, as an unmemoized pass would.
pub(crate) struct Extensions {
    memo: Vec<Vec<Option<Box<[u32]>>>>,
}

impl Extensions {
    pub(crate) fn new(plan: &StatePlan, prev_tables: &[WordTable]) -> Self {
        Extensions {
            memo: plan.preds.iter().map(|&p| vec![None; prev_tables[p].len()]).collect(),
        }
    }

    /// Kept extensions of word `x` of the `i`-th predecessor.
    pub(crate) fn get(
        &mut self,
        i: usize,
        x: u32,
        plan: &StatePlan,
        prev_tables: &[WordTable],
        oracle: &mut UnionOracle<'_>,
        table: &mut WordTable,
    ) -> &[u32] {
        self.memo[i][x as usize].get_or_insert_with(|| {
            let w = prev_tables[plan.preds[i]].get(x);
            let mut ids = Vec::new();
            for &(k, s) in &plan.edges[i] {
                let mut ws = w.clone();
                ws.push(s);
                if oracle.keep(k, &ws) {
                    ids.push(table.intern(ws));
                }
            }
            ids.into_boxed_slice()
        })
    }
}

/// Predecessors and incoming transitions of one state.
pub(crate) struct StatePlan {
    pub(crate) state: StateId,
    /// Distinct predecessors as positions in the previous level.
    pub(crate) preds: Vec<usize>,
    /// For each predecessor: `(k, letter)` with `k` the rank of the
    /// transition among the incoming transitions of the state.
    pub(crate) edges: Vec<Vec<(usize, Letter)>>,
}

pub(crate) fn plan_level(u: &UnrolledNfa, level: usize) -> Vec<StatePlan> {
    let prev_start = u.level(level - 1).next().unwrap_or(0);
    u.level(level)
        .map(|q| {
            let mut preds: Vec<usize> = Vec::new();
            let mut edges: Vec<Vec<(usize, Letter)>> = Vec::new();
            for (k, &t) in u.incoming(q).iter().enumerate() {
                let tr = u.transitions()[t];
                let pos = (tr.src - prev_start) as usize;
                match preds.iter().position(|&p| p == pos) {
                    Some(i) => edges[i].push((k, tr.letter)),
                    None => {
                        preds.push(pos);
                        edges.push(vec![(k, tr.letter)]);
                    }
                }
            }
            StatePlan { state: q, preds, edges }
        })
        .collect()
}

/// `N(q)` from `N_max(q)` and the batch sums of `|Ŝ^r(q)|`.
pub(crate) fn next_estimate(
    params: &FprasParams,
    n_max: &Rational,
    batch_sums: &[u128],
    fixed: Option<&Rational>,
) -> Result<(Rational, Rational)> {
    let n_hat = n_max * median_of_batch_sums(params.beta, batch_sums);
    let n = match fixed {
        Some(v) => v.clone(),
        None => round_up(&params.max_count, &params.epsilon, n_max.max(&n_hat))?,
    };
    Ok((n_hat, n))
}

/// One core pass with the engine named in `params`.
pub fn trace_mc_core(
    u: &UnrolledNfa,
    params: &FprasParams,
    seed: u64,
    options: &CoreOptions,
    observer: Option<&mut dyn Observer>,
) -> Result<CoreOutcome> {
    if u.is_empty() {
        return Err(Error::Precondition("core pass on an empty slice".into()));
    }
    match (params.engine, observer) {
        (Engine::Population, None) => Ok(population::run(u, params, seed, options, None)?.expect("no cap")),
        (Engine::Auto, None) => {
            let cap = params.alpha / AUTO_FALLBACK_RATIO;
            match population::run(u, params, seed, options, Some(cap))? {
                Some(out) => Ok(out),
                None => replica::run(u, params, seed, options, None),
            }
        }
        (Engine::Population, Some(_)) => Err(Error::Invalid(
            "instrumentation needs the replica engine".into(),
        )),
        (_, observer) => replica::run(u, params, seed, options, observer),
    }
}

#[derive(Clone, Debug)]
pub struct FprasOutcome {
    pub estimate: Rational,
    /// `None` when the slice is empty and nothing was run.
    pub params: Option<FprasParams>,
    pub runs: Vec<Rational>,
    pub interrupted_runs: usize,
}

/// Approximates the number of traces meeting `L(nfa) ∩ Σ^n`.
pub fn trace_mc(nfa: &Nfa, n: usize, config: &FprasConfig, seed: u64) -> Result<FprasOutcome> {
    let u = unroll(nfa, n);
    trace_mc_unrolled(&u, config, seed)
}

pub fn trace_mc_unrolled(u: &UnrolledNfa, config: &FprasConfig, seed: u64) -> Result<FprasOutcome> {
    // Validate parameters even when the slice is empty.
    let omega = u.alphabet().width()?;
    let params = FprasParams::derive(config, u.length(), omega, u.num_states(), u.alphabet().len())?;
    if u.is_empty() {
        return Ok(FprasOutcome {
            estimate: Rational::zero(),
            params: None,
            runs: Vec::new(),
            interrupted_runs: 0,
        });
    }
    let outcomes: Vec<Result<CoreOutcome>> = (0..params.xi)
        .into_par_iter()
        .map(|j| trace_mc_core(u, &params, derive(seed, &[TAG_RUN, j]), &CoreOptions::default(), None))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let interrupted_runs = outcomes.iter().filter(|o| o.interrupted).count();
    let runs: Vec<Rational> = outcomes.into_iter().map(|o| o.estimate).collect();
    Ok(FprasOutcome {
        estimate: lower_median(runs.clone()),
        params: Some(params),
        runs,
        interrupted_runs,
    })
}

/// [`trace_mc_unrolled`] run sequentially with the replica engine, reporting
/// every processed state of outer run `j` as `observer(j, report)`. Seeds
/// and results match the unobserved replica run.
pub fn trace_mc_observed(
    u: &UnrolledNfa,
    config: &FprasConfig,
    seed: u64,
    observer: &mut dyn FnMut(u64, &StateReport<'_>),
) -> Result<FprasOutcome> {
    struct Tagged<'o> {
        run: u64,
        inner: &'o mut dyn FnMut(u64, &StateReport<'_>),
    }
    impl Observer for Tagged<'_> {
        fn state(&mut self, report: &StateReport<'_>) {
            (self.inner)(self.run, report)
        }
    }
    let mut config = config.clone();
    match config.engine {
        Engine::Population => return Err(Error::Invalid("instrumentation needs the replica engine".into())),
        _ => config.engine = Engine::Replica,
    }
    let omega = u.alphabet().width()?;
    let params = FprasParams::derive(&config, u.length(), omega, u.num_states(), u.alphabet().len())?;
    if u.is_empty() {
        return Ok(FprasOutcome {
            estimate: Rational::zero(),
            params: None,
            runs: Vec::new(),
            interrupted_runs: 0,
        });
    }
    let mut runs = Vec::new();
    let mut interrupted_runs = 0;
    for j in 0..params.xi {
        let mut tagged = Tagged { run: j, inner: observer };
        let o = trace_mc_core(u, &params, derive(seed, &[TAG_RUN, j]), &CoreOptions::default(), Some(&mut tagged))?;
        interrupted_runs += o.interrupted as usize;
        runs.push(o.estimate);
    }
    Ok(FprasOutcome {
        estimate: lower_median(runs.clone()),
        params: Some(params),
        runs,
        interrupted_runs,
    })
}
