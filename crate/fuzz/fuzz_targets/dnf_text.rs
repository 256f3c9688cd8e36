#![no_main]

use libfuzzer_sys::fuzz_target;
use tracecount::dnf::{dnf_to_dfa, Dnf};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(phi) = Dnf::parse(text) {
        // Encoding size is linear in the formula; keep runs short.
        if phi.num_vars() * phi.terms().len() <= 4096 {
            assert!(dnf_to_dfa(&phi).is_deterministic());
        }
    }
});
