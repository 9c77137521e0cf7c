#![no_main]

use hedonic_core::bounds::Formula;
use libfuzzer_sys::fuzz_target;

// `name` and `params` separated by the first newline. Evaluation is skipped:
// exact bounds for large `n` are legitimately expensive.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (name, params) = text.split_once('\n').unwrap_or((text, ""));
    if let Ok(f) = Formula::parse(name, params) {
        let _ = f.to_string();
    }
});
