#![no_main]

use cancellab::processes::{simulate_process, ProcessSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<ProcessSpec>(data) {
        if spec.validate().is_ok() {
            let _ = simulate_process(&spec, 1, 16);
        }
    }
});
