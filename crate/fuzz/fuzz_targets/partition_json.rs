#![no_main]

use hedonic_core::io::{parse_partition_json, partition_to_json};
use libfuzzer_sys::fuzz_target;

// First byte picks the agent count, the rest is the document.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(p) = parse_partition_json(text, n as usize) {
        assert_eq!(p.n(), n as usize);
        let again = parse_partition_json(&partition_to_json(&p), n as usize).unwrap();
        assert_eq!(again, p);
    }
});
