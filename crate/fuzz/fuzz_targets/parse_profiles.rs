#![no_main]

use ddi_core::corpus::parse_profiles;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_profiles(data, "fuzz");
});
