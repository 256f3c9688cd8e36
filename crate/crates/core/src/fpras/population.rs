//! Core pass over histograms of replica configurations.
//!
//! Within a batch, replicas are exchangeable: the joint state of a replica
//! at any point of a level is the tuple of its sets at the previous level
//! and at the states of the current level processed so far. Only the batch
//! sums of `|Ŝ^r(q)|` enter the estimator, so it suffices to track, per
//! batch, how many replicas share each tuple. A group of `m` replicas facing
//! an independent Bernoulli(`p`) decision splits into `Binomial(m, p)` and
//! `m - Binomial(m, p)` replicas.
//!
//! Streams: `[q, batch, 0]` for the predecessor reduction, `[q, batch, 1]`
//! for the final reduction.

use std::collections::BTreeMap;

use num_traits::One;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::union::UnionOracle;
use super::{next_estimate, Extensions, plan_level, CoreOptions, CoreOutcome, FprasParams, WordTable};
use crate::automaton::UnrolledNfa;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::rng::{stream, ExactProbability};

/// Sets of one replica: previous level first, then the current level.
type Config = Vec<Vec<u32>>;
type Histogram = BTreeMap<Config, u64>;

/// Splits `m` replicas over independent decisions taken with `probs`;
/// returns the kept-mask of every nonempty group with its size.
fn split<R: Rng>(m: u64, probs: &[&ExactProbability], rng: &mut R) -> Vec<(Vec<bool>, u64)> {
    let mut groups = vec![(Vec::with_capacity(probs.len()), m)];
    for p in probs {
        let mut next = Vec::with_capacity(groups.len() * 2);
        for (mask, c) in groups {
            let kept = if p.is_one() {
                c
            } else if p.is_zero() {
                0
            } else {
                Binomial::new(c, p.to_f64()).expect("probability in [0,1]").sample(rng)
            };
            if kept > 0 {
                let mut m1 = mask.clone();
                m1.push(true);
                next.push((m1, kept));
            }
            if c > kept {
                let mut m0 = mask;
                m0.push(false);
                next.push((m0, c - kept));
            }
        }
        groups = next;
    }
    groups
}

/// `Ok(None)` when more than `cap` distinct configurations appear.
pub(super) fn run(
    u: &UnrolledNfa,
    params: &FprasParams,
    seed: u64,
    options: &CoreOptions,
    cap: Option<u64>,
) -> Result<Option<CoreOutcome>> {
    let gamma = params.gamma as usize;

    let mut prev_tables = vec![WordTable::default()];
    let lambda = prev_tables[0].intern(Vec::new());
    let mut hists: Vec<Histogram> = (0..gamma)
        .map(|_| BTreeMap::from([(vec![vec![lambda]], params.beta)]))
        .collect();
    let mut prev_n: Vec<Rational> = vec![Rational::one()];
    let mut number_samples = params.alpha as u128;

    for level in 1..=u.length() {
        let plans = plan_level(u, level);
        let prev_len = prev_n.len();
        let mut cur_tables = Vec::with_capacity(plans.len());
        let mut cur_n = Vec::with_capacity(plans.len());
        for (pos, plan) in plans.iter().enumerate() {
            let q = plan.state;
            let n_max = plan.preds.iter().map(|&p| &prev_n[p]).max().expect("live state has a predecessor").clone();
            let probs: Vec<ExactProbability> = plan
                .preds
                .iter()
                .map(|&p| ExactProbability::new(&(&prev_n[p] / &n_max)).expect("N(p) ≤ N_max(q)"))
                .collect();
            let mut oracle = UnionOracle::new(u, q);
            let mut table = WordTable::default();
            let mut ext = Extensions::new(plan, &prev_tables);

            // Phase A: reduce predecessor sets and form Ŝ.
            let mut staged: Vec<BTreeMap<(Config, Vec<u32>), u64>> = Vec::with_capacity(gamma);
            let mut sums = vec![0u128; gamma];
            for (b, hist) in hists.iter().enumerate() {
                let mut rng = stream(seed, &[q as u64, b as u64, 0]);
                let mut out: BTreeMap<(Config, Vec<u32>), u64> = BTreeMap::new();
                for (config, &m) in hist {
                    let decisions: Vec<(usize, u32)> = plan
                        .preds
                        .iter()
                        .enumerate()
                        .flat_map(|(i, &p)| config[p].iter().map(move |&x| (i, x)))
                        .collect();
                    let dprobs: Vec<&ExactProbability> = decisions.iter().map(|&(i, _)| &probs[i]).collect();
                    for (mask, c) in split(m, &dprobs, &mut rng) {
                        let mut hat = Vec::new();
                        for (&(i, x), kept) in decisions.iter().zip(&mask) {
                            if !kept {
                                continue;
                            }
                            hat.extend_from_slice(ext.get(i, x, plan, &prev_tables, &mut oracle, &mut table));
                        }
                        hat.sort_unstable();
                        hat.dedup();
                        sums[b] += c as u128 * hat.len() as u128;
                        *out.entry((config.clone(), hat)).or_insert(0) += c;
                    }
                }
                staged.push(out);
            }

            let fixed = options.fixed_counts.as_ref().map(|v| &v[q as usize]);
            let (_, n_q) = next_estimate(params, &n_max, &sums, fixed)?;
            let keep = ExactProbability::new(&(&n_max / &n_q))
                .ok_or_else(|| Error::Precondition("N(q) below N_max(q)".into()))?;

            // Phase B: reduce Ŝ to S and append it to the configuration.
            for (b, out) in staged.into_iter().enumerate() {
                let mut rng = stream(seed, &[q as u64, b as u64, 1]);
                let mut next: Histogram = BTreeMap::new();
                for ((config, hat), m) in out {
                    let dprobs = vec![&keep; hat.len()];
                    for (mask, c) in split(m, &dprobs, &mut rng) {
                        let s: Vec<u32> = hat.iter().zip(&mask).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
                        number_samples += c as u128 * s.len() as u128;
                        let mut cfg = config.clone();
                        debug_assert_eq!(cfg.len(), prev_len + pos);
                        cfg.push(s);
                        *next.entry(cfg).or_insert(0) += c;
                    }
                }
                hists[b] = next;
            }

            cur_tables.push(table);
            cur_n.push(n_q);
            if Rational::from_integer(number_samples.into()) >= params.theta {
                return Ok(Some(CoreOutcome {
                    estimate: Rational::default(),
                    interrupted: true,
                    number_samples,
                }));
            }
            let distinct: usize = hists.iter().map(BTreeMap::len).sum();
            if cap.is_some_and(|c| distinct as u64 > c) {
                return Ok(None);
            }
        }
        // Forget the previous level.
        for hist in &mut hists {
            let mut next: Histogram = BTreeMap::new();
            for (config, m) in std::mem::take(hist) {
                *next.entry(config[prev_len..].to_vec()).or_insert(0) += m;
            }
            *hist = next;
        }
        prev_tables = cur_tables;
        prev_n = cur_n;
    }
    Ok(Some(CoreOutcome {
        estimate: prev_n.swap_remove(0),
        interrupted: false,
        number_samples,
    }))
}
