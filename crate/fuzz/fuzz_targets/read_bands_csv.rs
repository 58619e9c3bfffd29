#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = fracq::export::read_bands_csv(data) {
        assert!(!rows.is_empty());
        let width = rows[0].1.len();
        assert!(rows.iter().all(|(_, e)| e.len() == width));
    }
});
