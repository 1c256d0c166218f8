#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = cancellab::io::parse_seq_csv(text);
        let _ = cancellab::io::parse_numeric_csv(text, &["N", "tau", "re", "im", "abs"]);
    }
});
