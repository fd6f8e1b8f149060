#![no_main]
use libfuzzer_sys::fuzz_target;
use stopgame::{ObservationModel, State};

fuzz_target!(|data: &[u8]| {
    let Ok(m) = serde_json::from_slice::<ObservationModel>(data) else { return };
    for s in State::LIVE {
        let total: f64 = m.pmf(s).iter().sum();
        assert!((total - 1.0).abs() < 1e-6, "accepted pmf sums to {total}");
    }
    let _ = stopgame::evaluator::check_tp2(&m);
});
