#![no_main]

use libfuzzer_sys::fuzz_target;
use tracecount::membership::member_accepting;
use tracecount::trace::{is_normal_form, normal_form};
use tracecount::{ConcurrentAlphabet, Nfa};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let alpha = ConcurrentAlphabet::new(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
    if let Ok(w) = alpha.parse_word(text) {
        if w.len() > 64 {
            return;
        }
        let nf = normal_form(&alpha, &w);
        assert!(is_normal_form(&alpha, &nf));
        assert_eq!(alpha.parse_word(&alpha.format_word(&nf)).unwrap(), nf);
        let json = r#"{"alphabet":["a","b","c"],"independence":[["a","b"],["b","c"]],
            "states":[0],"initial":0,"finals":[0],"transitions":[[0,"a",0],[0,"b",0],[0,"c",0]]}"#;
        assert!(member_accepting(&Nfa::from_json(json).unwrap(), &w));
    }
});
