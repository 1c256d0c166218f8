#![no_main]

use cancellab::symbolic::{CoverSpec, PeriodicOracle, Word};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cover) = serde_json::from_slice::<CoverSpec>(data) {
        let oracle = PeriodicOracle::new(&Word::parse("ab").unwrap()).unwrap();
        if let Ok(check) = cover.check(&oracle) {
            assert_eq!(check.valid, check.violations.is_empty());
        }
    }
});
