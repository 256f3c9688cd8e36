//! Core pass with every replica kept explicitly and exact Bernoulli draws.

use num_traits::One;

use super::union::UnionOracle;
use super::{next_estimate, Extensions, plan_level, CoreOptions, CoreOutcome, FprasParams, Observer, StateReport, WordTable};
use crate::alphabet::Word;
use crate::automaton::UnrolledNfa;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::rng::{stream, ExactProbability};

/// Stream of replica `r` at state `q`: tags `[q, r]`.
pub(super) fn run(
    u: &UnrolledNfa,
    params: &FprasParams,
    seed: u64,
    options: &CoreOptions,
    mut observer: Option<&mut dyn Observer>,
) -> Result<CoreOutcome> {
    let alpha = params.alpha as usize;
    let beta = params.beta as usize;
    let gamma = params.gamma as usize;

    let mut prev_tables = vec![WordTable::default()];
    let lambda = prev_tables[0].intern(Vec::new());
    // prev_sets[pos][r] = S^r(q) as sorted word ids.
    let mut prev_sets: Vec<Vec<Vec<u32>>> = vec![vec![vec![lambda]; alpha]];
    let mut prev_n: Vec<Rational> = vec![Rational::one()];
    let mut number_samples = params.alpha as u128;

    if let Some(obs) = observer.as_deref_mut() {
        let sets = vec![vec![Word::new()]; alpha];
        obs.state(&StateReport {
            state: u.initial(),
            level: 0,
            n_max: &prev_n[0],
            n_hat: &prev_n[0],
            n: &prev_n[0],
            hat: &sets,
            samples: &sets,
        });
    }

    for level in 1..=u.length() {
        let plans = plan_level(u, level);
        let mut cur_tables = Vec::with_capacity(plans.len());
        let mut cur_sets = Vec::with_capacity(plans.len());
        let mut cur_n = Vec::with_capacity(plans.len());
        for plan in &plans {
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
            let mut hats = Vec::with_capacity(alpha);
            let mut rngs = Vec::with_capacity(alpha);
            let mut sums = vec![0u128; gamma];
            for r in 0..alpha {
                let mut rng = stream(seed, &[q as u64, r as u64]);
                let mut hat = Vec::new();
                for (i, &p) in plan.preds.iter().enumerate() {
                    for &x in &prev_sets[p][r] {
                        if !probs[i].sample(&mut rng) {
                            continue;
                        }
                        hat.extend_from_slice(ext.get(i, x, plan, &prev_tables, &mut oracle, &mut table));
                    }
                }
                hat.sort_unstable();
                hat.dedup();
                sums[r / beta] += hat.len() as u128;
                hats.push(hat);
                rngs.push(rng);
            }
            let fixed = options.fixed_counts.as_ref().map(|v| &v[q as usize]);
            let (n_hat, n_q) = next_estimate(params, &n_max, &sums, fixed)?;
            let keep = ExactProbability::new(&(&n_max / &n_q))
                .ok_or_else(|| Error::Precondition("N(q) below N_max(q)".into()))?;
            let samples: Vec<Vec<u32>> = hats
                .iter()
                .zip(rngs.iter_mut())
                .map(|(h, rng)| h.iter().copied().filter(|_| keep.sample(rng)).collect())
                .collect();
            number_samples += samples.iter().map(|s| s.len() as u128).sum::<u128>();

            if let Some(obs) = observer.as_deref_mut() {
                let words = |sets: &[Vec<u32>]| -> Vec<Vec<Word>> {
                    sets.iter().map(|s| s.iter().map(|&x| table.get(x).clone()).collect()).collect()
                };
                obs.state(&StateReport {
                    state: q,
                    level,
                    n_max: &n_max,
                    n_hat: &n_hat,
                    n: &n_q,
                    hat: &words(&hats),
                    samples: &words(&samples),
                });
            }

            cur_tables.push(table);
            cur_sets.push(samples);
            cur_n.push(n_q);
            if Rational::from_integer(number_samples.into()) >= params.theta {
                return Ok(CoreOutcome {
                    estimate: Rational::default(),
                    interrupted: true,
                    number_samples,
                });
            }
        }
        prev_tables = cur_tables;
        prev_sets = cur_sets;
        prev_n = cur_n;
    }
    Ok(CoreOutcome {
        estimate: prev_n.swap_remove(0),
        interrupted: false,
        number_samples,
    })
}
