#![no_main]

use libfuzzer_sys::fuzz_target;
use tracecount::automaton::unroll;
use tracecount::Nfa;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(nfa) = Nfa::from_json(text) {
        // A parsed automaton must round-trip and unroll.
        let again = Nfa::from_json(&nfa.to_json()).expect("round trip");
        assert_eq!(again.num_states(), nfa.num_states());
        let _ = unroll(&nfa, 3);
    }
});
