#![no_main]
use hiphome::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(c) = ExperimentConfig::from_json_str(s, "fuzz") {
            let _ = ExperimentConfig::from_json_str(&c.to_json(), "fuzz");
        }
    }
});
