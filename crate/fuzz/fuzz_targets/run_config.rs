#![no_main]

use std::path::Path;

use ddi_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_json(text, Path::new("/fuzz")) {
        let _ = cfg.validate_values();
        let _ = cfg.to_json();
    }
});
