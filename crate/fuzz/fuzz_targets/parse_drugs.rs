#![no_main]

use ddi_core::corpus::parse_drugs;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_drugs(data, "fuzz") {
        assert!(rows.iter().all(|r| !r.drug_id.is_empty()));
    }
});
