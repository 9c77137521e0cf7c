#![no_main]

use hedonic_core::experiments::{parse_cap_rule, parse_size_rule, CampaignKind, ExportFormat};
use hedonic_core::Concept;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = text.parse::<Concept>() {
        assert_eq!(c.name().parse::<Concept>().unwrap(), c);
    }
    if let Ok(k) = text.parse::<CampaignKind>() {
        assert_eq!(k.to_string().parse::<CampaignKind>().unwrap(), k);
    }
    let _ = text.parse::<ExportFormat>();
    if let Ok(rule) = parse_size_rule(text) {
        let _ = rule.eval(1000);
    }
    let _ = parse_cap_rule(text);
});
