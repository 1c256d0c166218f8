#![no_main]

use cancellab::io::{decode_f64le, encode_f64le};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(values) = decode_f64le(data) {
        assert_eq!(encode_f64le(&values), data);
    }
});
