#![no_main]

use ddi_core::corpus::parse_scaffolds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_scaffolds(data, "fuzz");
});
