#![no_main]

use ddi_core::MlpModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = MlpModel::from_checkpoint_str(text) {
        // Anything the loader accepts must survive a save and reload unchanged.
        let again = MlpModel::from_checkpoint_str(&model.to_checkpoint_string())
            .expect("re-encoded checkpoint must load");
        assert_eq!(again, model);
    }
});
