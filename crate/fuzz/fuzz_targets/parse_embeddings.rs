#![no_main]

use ddi_core::corpus::parse_embeddings;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_embeddings(data, "fuzz") {
        // Accepted vectors feed arithmetic directly, so they must be finite.
        assert!(rows.iter().all(|r| r.vector.iter().all(|v| v.is_finite())));
    }
});
