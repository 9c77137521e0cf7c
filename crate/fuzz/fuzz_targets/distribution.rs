#![no_main]

use hedonic_core::UtilityDistribution;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = text.parse::<UtilityDistribution>() {
        let UtilityDistribution::Uniform { lo, hi } = d;
        assert!(lo.is_finite() && hi.is_finite() && lo < hi);
        assert_eq!(d.to_string().parse::<UtilityDistribution>().unwrap(), d);
    }
});
