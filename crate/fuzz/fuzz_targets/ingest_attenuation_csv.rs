#![no_main]

use libfuzzer_sys::fuzz_target;

// the attenuation CSV reader must reject arbitrary bytes gracefully:
// no panics, and accepted datasets must satisfy their own invariants
fuzz_target!(|data: &[u8]| {
    if let Ok(dataset) = fracq::fitting::ingest_csv(data) {
        assert!(dataset.rows().len() >= 3 || !dataset.rows().is_empty());
        for row in dataset.rows() {
            assert!(row.omega > 0.0 && row.alpha > 0.0);
        }
    }
});
