#![no_main]
use libfuzzer_sys::fuzz_target;
use stopgame::{MixedStrategy, ThresholdStrategy};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = serde_json::from_slice::<ThresholdStrategy>(data) {
        let back: ThresholdStrategy = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
    if let Ok(m) = serde_json::from_slice::<MixedStrategy>(data) {
        let back: MixedStrategy = serde_json::from_str(&m.to_json_string()).unwrap();
        assert_eq!(back.len(), m.len());
    }
});
