#![no_main]

use cancellab::symbolic::Word;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(w) = Word::parse(text) {
            let p = w.primitive_period();
            assert!(p >= 1 && p <= w.len() && w.len() % p == 0);
            assert_eq!(Word::parse(&w.to_string()).unwrap(), w);
        }
    }
});
