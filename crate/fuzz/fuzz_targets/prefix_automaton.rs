#![no_main]

use std::sync::Arc;

use libfuzzer_sys::fuzz_target;
use tracecount::prefix_validator::build_prefix_validator;
use tracecount::trace::normal_form;
use tracecount::ConcurrentAlphabet;

// First byte: alphabet size and independence pairs; the rest: the word.
fuzz_target!(|data: &[u8]| {
    let Some((&head, rest)) = data.split_first() else {
        return;
    };
    let k = 1 + (head & 3) as usize;
    let pairs: Vec<(usize, usize)> = [(0, 1), (0, 2), (1, 2), (0, 3)]
        .into_iter()
        .enumerate()
        .filter(|&(i, (x, y))| head >> (2 + i) & 1 == 1 && x < k && y < k)
        .map(|(_, p)| p)
        .collect();
    let alpha = Arc::new(ConcurrentAlphabet::from_indices(k, &pairs).unwrap());
    let letters: Vec<_> = alpha.letters().collect();
    let w: Vec<_> = rest.iter().take(6).map(|&b| letters[b as usize % k]).collect();
    let u = normal_form(&alpha, &w);
    let pv = build_prefix_validator(&alpha, &u).expect("normal forms are accepted");
    assert!(pv.dfa.accepts(&u));
    if w != u {
        assert!(build_prefix_validator(&alpha, &w).is_err());
    }
});
