#![no_main]

use hedonic_core::experiments::{results_from_json, results_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = results_from_json(text) {
        let _ = results_to_csv(&table);
    }
});
