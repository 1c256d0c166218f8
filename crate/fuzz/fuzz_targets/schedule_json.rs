#![no_main]

use cancellab::symbolic::HochmanSchedule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = serde_json::from_slice::<HochmanSchedule>(data) {
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<HochmanSchedule>(&text).unwrap(), s);
    }
});
