#![no_main]
use hiphome::geometry::Table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(t) = Table::from_csv_str(s) {
            let _ = t.eval(0.5);
        }
    }
});
