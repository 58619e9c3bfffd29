#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = fracq::export::read_ensemble_csv(data) {
        assert!(!rows.is_empty());
    }
});
