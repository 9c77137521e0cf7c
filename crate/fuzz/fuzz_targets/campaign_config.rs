#![no_main]

use hedonic_core::experiments::parse_campaign_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(overrides) = parse_campaign_config(text) {
        let _ = overrides.into_campaign();
    }
});
