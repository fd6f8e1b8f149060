#![no_main]
use libfuzzer_sys::fuzz_target;
use std::path::Path;
use stopgame_cli::spec::Experiment;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Inline games only; a path game would hit the filesystem.
    let _ = Experiment::from_json_str(text, Path::new("/nonexistent"));
});
