#![no_main]

use cancellab::symbolic::OracleSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<OracleSpec>(data) {
        // building a deep Chacon oracle is slow by design; keep inputs cheap
        if let OracleSpec::Chacon { level, max_len } = &spec {
            if *level > 6 || *max_len > 64 {
                return;
            }
        }
        if let OracleSpec::Empirical { sample, max_len } = &spec {
            if sample.len() > 4096 || *max_len > 64 {
                return;
            }
        }
        let _ = spec.build();
    }
});
