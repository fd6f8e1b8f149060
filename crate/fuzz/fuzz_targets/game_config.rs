#![no_main]
use libfuzzer_sys::fuzz_target;
use stopgame::GameConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = GameConfig::from_json_str(text) {
        let back = GameConfig::from_json_str(&cfg.to_json_string()).expect("accepted configs round-trip");
        assert_eq!(back, cfg);
    }
});
