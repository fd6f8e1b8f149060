#![no_main]
use libfuzzer_sys::fuzz_target;
use stopgame::obs_model::parse_trace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = parse_trace(text) {
        assert!(d.rows.iter().all(|&(s, x)| s <= 1 && x.is_finite()));
    }
});
