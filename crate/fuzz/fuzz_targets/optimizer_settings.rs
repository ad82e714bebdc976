#![no_main]

use ddi_core::hyperopt::OptimizerSettings;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(settings) = serde_json::from_slice::<OptimizerSettings>(data) {
        if settings.validate().is_ok() {
            let _ = settings.max_evaluations();
        }
    }
});
