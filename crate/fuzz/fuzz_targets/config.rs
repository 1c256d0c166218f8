#![no_main]

use cancellab_cli::config::RawConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(raw) = RawConfig::parse(text) {
            if let Ok(params) = raw.resolve() {
                let again = RawConfig {
                    command: raw.command.clone(),
                    params: params.to_value(),
                    out: None,
                };
                assert_eq!(again.resolve().unwrap(), params);
            }
        }
    }
});
