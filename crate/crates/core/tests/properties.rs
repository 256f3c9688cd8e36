//! Property tests: library results against the brute-force oracles in
//! `common`. Instances are drawn from a seed so that shrinking stays cheap.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;

use common::*;
use tracecount::automaton::{in_nf_language, nf_dfa, product, unroll};
use tracecount::exact::{count_exact_nf, CanonicalOracle};
use tracecount::fpras::{median_of_means, round_up};
use tracecount::membership::{member, search, IdealSteps};
use tracecount::prefix_validator::{build_prefix_validator, is_dag_prefix, u_prefix_residual};
use tracecount::rational::from_u64;
use tracecount::sampler::{ExactCounter, Sampler};
use tracecount::trace::{equivalent, insert_letter, is_normal_form, normal_form};
use tracecount::{ConcurrentAlphabet, Letter, Nfa, Transition, Word};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// Random alphabet of 1 to 4 letters and a word of length at most `max_len`.
fn alphabet_and_word(seed: u64, max_len: usize) -> (std::sync::Arc<ConcurrentAlphabet>, Word) {
    let mut r = rng(seed);
    let k = r.gen_range(1..=4);
    let p = r.gen_range(0.0..=1.0);
    let alpha = random_alphabet(&mut r, k, p);
    let len = r.gen_range(0..=max_len);
    let w = random_word(&mut r, &alpha, len);
    (alpha, w)
}

/// Largest pairwise independent subset, by direct enumeration of subsets.
fn brute_width(alpha: &ConcurrentAlphabet) -> usize {
    let ls = letters(alpha);
    (1u32..1 << ls.len())
        .filter(|mask| {
            let chosen: Vec<Letter> = ls.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a).collect();
            chosen.iter().all(|&a| chosen.iter().all(|&b| a == b || alpha.independent(a, b)))
        })
        .map(u32::count_ones)
        .max()
        .unwrap() as usize
}

/// The longest prefix of `x` that some word of `class(u)` starts with.
fn brute_u_prefix(alpha: &ConcurrentAlphabet, u: &[Letter], x: &[Letter]) -> usize {
    let class = brute_class(alpha, u);
    (0..=x.len().min(u.len()))
        .rev()
        .find(|&l| class.iter().any(|v| v.starts_with(&x[..l])))
        .unwrap()
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn width_matches_subset_search(seed in any::<u64>()) {
        let (alpha, _) = alphabet_and_word(seed, 0);
        let w = alpha.width().unwrap();
        prop_assert_eq!(w, brute_width(&alpha));
        prop_assert_eq!(w == 1, alpha.independent_pairs().is_empty());
        let k = alpha.len();
        prop_assert_eq!(w == k, alpha.independent_pairs().len() == k * (k - 1) / 2);
    }

    #[test]
    fn normal_form_is_class_minimum(seed in any::<u64>()) {
        let (alpha, w) = alphabet_and_word(seed, 7);
        let class = brute_class(&alpha, &w);
        let nf = normal_form(&alpha, &w);
        prop_assert_eq!(&nf, class.iter().next().unwrap());
        prop_assert!(is_normal_form(&alpha, &nf));
        prop_assert_eq!(is_normal_form(&alpha, &w), w == nf);
        prop_assert!(in_nf_language(&alpha, &nf));
        for v in &class {
            prop_assert_eq!(&normal_form(&alpha, v), &nf);
            prop_assert!(equivalent(&alpha, v, &w));
        }
    }

    #[test]
    fn inequivalent_words_differ_in_normal_form(seed in any::<u64>()) {
        let (alpha, w) = alphabet_and_word(seed, 6);
        let mut r = rng(seed ^ 0x5eed);
        let v = random_word(&mut r, &alpha, w.len());
        let same = brute_class(&alpha, &w).contains(&v);
        prop_assert_eq!(equivalent(&alpha, &w, &v), same);
        prop_assert_eq!(normal_form(&alpha, &w) == normal_form(&alpha, &v), same);
    }

    #[test]
    fn insertion_extends_normal_form(seed in any::<u64>()) {
        let (alpha, w) = alphabet_and_word(seed, 8);
        let mut r = rng(!seed);
        let a = Letter(r.gen_range(0..alpha.len()) as u8);
        let nf = normal_form(&alpha, &w);
        let (inserted, pos) = insert_letter(&alpha, &nf, a);
        let mut wa = w.clone();
        wa.push(a);
        prop_assert_eq!(&inserted, &normal_form(&alpha, &wa));
        prop_assert_eq!(inserted[pos], a);
        prop_assert_eq!(&inserted[..pos], &nf[..pos]);
        prop_assert_eq!(&inserted[pos + 1..], &nf[pos..]);
    }

    #[test]
    fn normal_forms_are_prefix_closed(seed in any::<u64>()) {
        let (alpha, w) = alphabet_and_word(seed, 8);
        let nf = normal_form(&alpha, &w);
        for l in 0..=nf.len() {
            prop_assert!(is_normal_form(&alpha, &nf[..l]));
        }
    }

    #[test]
    fn nf_dfa_accepts_exactly_normal_forms(seed in any::<u64>()) {
        let (alpha, w) = alphabet_and_word(seed, 7);
        let dfa = nf_dfa(&alpha);
        prop_assert!(dfa.is_deterministic());
        prop_assert_eq!(accepts(&dfa, &w), brute_nf(&alpha, &w) == w);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn unrolled_slice_matches_original(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nfa = random_instance(&mut r);
        let n = r.gen_range(0..=4);
        let u = unroll(&nfa, n);
        let unrolled = u.to_nfa();
        // every state sits on an accepting path of length n
        for q in 0..u.num_states() as u32 {
            prop_assert!(u.is_empty() || !u.incoming(q).is_empty() || q == u.initial());
            prop_assert!(u.is_empty() || !u.outgoing(q).is_empty() || Some(q) == u.final_state() || n == 0);
        }
        for i in 0..=n {
            for w in all_words(nfa.alphabet(), i) {
                if i == n {
                    prop_assert_eq!(accepts(&unrolled, &w), accepts(&nfa, &w), "{:?}", w);
                }
                // reached level-i copies project into the original reach set
                let orig = reach(&nfa, &w);
                for p in reach(&unrolled, &w) {
                    prop_assert_eq!(u.level_of(p), i);
                    if let Some(o) = u.origin(p) {
                        prop_assert!(orig.contains(&o));
                    }
                }
            }
        }
        // the unrolled transitions are sorted and level-increasing
        let ts = u.transitions();
        prop_assert!(ts.windows(2).all(|p| (p[0].src, p[0].letter, p[0].dst) < (p[1].src, p[1].letter, p[1].dst)));
        prop_assert!(ts.iter().all(|t| u.level_of(t.dst) == u.level_of(t.src) + 1));
    }

    #[test]
    fn product_is_intersection(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_instance(&mut r);
        let m = r.gen_range(1..=4);
        let b = random_nfa(&mut r, a.alphabet_arc().clone(), m, 0.4);
        let p = product(&a, &b).unwrap();
        for len in 0..=4 {
            for w in all_words(a.alphabet(), len) {
                prop_assert_eq!(accepts(&p, &w), accepts(&a, &w) && accepts(&b, &w));
            }
        }
    }

    #[test]
    fn member_agrees_with_class_search(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nfa = random_instance(&mut r);
        let len = r.gen_range(0..=6);
        let w = random_word(&mut r, nfa.alphabet(), len);
        let class = brute_class(nfa.alphabet(), &w);
        for q in 0..nfa.num_states() as u32 {
            let brute = class.iter().any(|v| reach(&nfa, v).contains(&q));
            prop_assert_eq!(member(&nfa, q, &w), brute);
        }
        // configurations are (state, downward closed count vector)
        let counts = IdealSteps::new(nfa.alphabet(), &w).counts().to_vec();
        let bound = nfa.num_states() * counts.iter().map(|&c| c as usize + 1).product::<usize>();
        let stats = search(nfa.alphabet(), &w, nfa.initial(), |p, a, out| out.extend(nfa.successors(p, a)), |p| nfa.is_final(p));
        prop_assert!(stats.visited <= bound, "{} > {}", stats.visited, bound);
        prop_assert_eq!(stats.member, class.iter().any(|v| accepts(&nfa, v)));
    }

    #[test]
    fn member_is_monotone_under_removal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nfa = random_instance(&mut r);
        if nfa.transitions().is_empty() {
            return Ok(());
        }
        let drop = r.gen_range(0..nfa.transitions().len());
        let kept: Vec<Transition> = nfa.transitions().iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &t)| t).collect();
        let names = (0..nfa.num_states()).map(|i| format!("s{i}")).collect();
        let smaller = Nfa::new(nfa.alphabet_arc().clone(), names, nfa.initial(), nfa.finals().collect::<Vec<_>>(), kept).unwrap();
        for len in 0..=4 {
            for w in all_words(nfa.alphabet(), len) {
                for q in 0..nfa.num_states() as u32 {
                    prop_assert!(!member(&smaller, q, &w) || member(&nfa, q, &w));
                }
            }
        }
    }

    #[test]
    fn canonical_runs_are_unique_per_trace(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nfa = random_instance(&mut r);
        let n = r.gen_range(1..=4);
        let u = unroll(&nfa, n);
        let mut oracle = CanonicalOracle::new(&u);
        let alpha = nfa.alphabet();
        for q in 0..u.num_states() as u32 {
            let lang = oracle.language(q).clone();
            let traces: BTreeSet<Word> = lang.iter().map(|w| brute_nf(alpha, w)).collect();
            let mut runs = BTreeSet::new();
            for t in &traces {
                let run = oracle.run(t, q).unwrap();
                prop_assert!(lang.contains(&run.word));
                prop_assert!(brute_class(alpha, t).contains(&run.word));
                // the run is a path from the initial state to q reading its word
                let mut cur = u.initial();
                for (&k, &a) in run.transitions.iter().zip(&run.word) {
                    let tr = u.transitions()[k];
                    prop_assert_eq!((tr.src, tr.letter), (cur, a));
                    cur = tr.dst;
                }
                prop_assert_eq!(cur, q);
                // every word of the class gives the same run
                for v in brute_class(alpha, t) {
                    if lang.contains(&v) {
                        prop_assert_eq!(&oracle.run(&v, q).unwrap(), &run);
                    }
                }
                runs.insert(run.transitions);
            }
            prop_assert_eq!(runs.len(), traces.len());
        }
    }

    #[test]
    fn exact_count_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nfa = random_instance(&mut r);
        let n = r.gen_range(0..=4);
        prop_assert_eq!(count_exact_nf(&nfa, n).unwrap() as usize, brute_traces(&nfa, n).len());
    }
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn validator_accepts_words_whose_nf_extends_u(seed in any::<u64>()) {
        let (alpha, w0) = alphabet_and_word(seed, 4);
        let u = brute_nf(&alpha, &w0);
        let pv = build_prefix_validator(&alpha, &u).unwrap();
        prop_assert!(pv.dfa.is_deterministic());
        for len in 0..=5 {
            for w in all_words(&alpha, len) {
                let nf = brute_nf(&alpha, &w);
                prop_assert_eq!(accepts(&pv.dfa, &w), nf.starts_with(&u), "{:?}", w);
            }
        }
    }

    #[test]
    fn validator_state_is_prefix_and_residual(seed in any::<u64>()) {
        let (alpha, w0) = alphabet_and_word(seed, 4);
        let u = brute_nf(&alpha, &w0);
        let pv = build_prefix_validator(&alpha, &u).unwrap();
        let mut r = rng(seed.rotate_left(17));
        let len = r.gen_range(0..=6);
        let w = random_word(&mut r, &alpha, len);
        let nf = brute_nf(&alpha, &w);
        let l = brute_u_prefix(&alpha, &u, &nf);
        let state = pv.run(&w);
        prop_assert_eq!(&state.u_prefix, &nf[..l].to_vec());
        prop_assert_eq!(state.first_residual, nf.get(l).copied());
        prop_assert_eq!(state.residual_letters, tracecount::LetterSet::of(&nf[l..]));
        prop_assert_eq!(u_prefix_residual(&alpha, &u, &nf), (nf[..l].to_vec(), nf[l..].to_vec()));
        prop_assert!(is_dag_prefix(&alpha, &nf[..l], &u));
        // equivalent words reach the same state
        for v in brute_class(&alpha, &w) {
            prop_assert_eq!(pv.run(&v), state);
        }
    }

    #[test]
    fn median_of_means_is_bracketed(xs in prop::collection::vec(0u64..1000, 1..8), beta in 1usize..4) {
        let xs: Vec<_> = xs.iter().cycle().take(xs.len() * beta).map(|&x| from_u64(x)).collect();
        let m = median_of_means(beta, &xs).unwrap();
        let means: Vec<_> = xs.chunks(beta).map(|c| c.iter().sum::<num_rational::BigRational>() / from_u64(beta as u64)).collect();
        prop_assert!(means.iter().min().unwrap() <= &m && &m <= means.iter().max().unwrap());
        let below = means.iter().filter(|x| **x < m).count();
        let above = means.iter().filter(|x| **x > m).count();
        prop_assert!(below <= (means.len() - 1) / 2 && above <= means.len() / 2);
    }

    #[test]
    fn round_up_is_least_acceptable(num in 0u64..400, den in 1u64..20, eps_den in 2u64..10, max in 1u32..40) {
        let v = num_rational::BigRational::new(num.into(), den.into());
        let eps = num_rational::BigRational::new(1.into(), eps_den.into());
        let max_count = BigUint::from(max);
        let acceptable: Vec<_> = (1..=max as u64)
            .flat_map(|l| {
                let l = from_u64(l);
                let one = from_u64(1);
                [l.clone(), &l * (&one - &eps), &l * (&one + &eps)]
            })
            .collect();
        let least = acceptable.iter().filter(|x| **x >= v).min();
        match (round_up(&max_count, &eps, &v), least) {
            (Ok(got), Some(want)) => prop_assert_eq!(&got, want),
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    /// With exact counts, the letter weights at each step telescope, so
    /// every trace is produced with probability `1 / C(λ)` per core run.
    #[test]
    fn exact_sampler_weights_telescope(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nfa = random_instance(&mut r);
        let n = r.gen_range(1..=3);
        let traces = brute_traces(&nfa, n);
        let sampler = Sampler::new(&nfa, n, ExactCounter::default(), 1);
        let alpha = nfa.alphabet();
        prop_assert_eq!(sampler.estimate_c(&[], 0).unwrap(), from_u64(traces.len() as u64));
        let mut prefixes: BTreeMap<Word, u64> = BTreeMap::new();
        for t in &traces {
            for l in 0..=n {
                *prefixes.entry(t[..l].to_vec()).or_default() += 1;
            }
        }
        for (p, count) in &prefixes {
            prop_assert_eq!(sampler.estimate_c(p, 0).unwrap(), from_u64(*count));
            if p.len() < n {
                let extended: u64 = letters(alpha)
                    .into_iter()
                    .map(|a| {
                        let mut pa = p.clone();
                        pa.push(a);
                        prefixes.get(&pa).copied().unwrap_or(0)
                    })
                    .sum();
                prop_assert_eq!(extended, *count);
            }
        }
        for k in 0..8 {
            if traces.is_empty() {
                break;
            }
            if let Some(w) = sampler.sample(seed.wrapping_add(k)).unwrap().word {
                prop_assert!(traces.contains(&w), "{:?}", w);
            }
        }
    }
}
