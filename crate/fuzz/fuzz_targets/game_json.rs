#![no_main]

use hedonic_core::io::{game_to_json, parse_game_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(game) = parse_game_json(text) {
        let again = parse_game_json(&game_to_json(&game)).expect("serialised game parses");
        assert_eq!(again, game);
    }
});
