#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::models::{ModelFile, Regressor};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ModelFile::from_json(text) {
        // A model that validates must predict without panicking.
        let x = vec![0.5; file.n_features()];
        let _ = file.predict_row(&x);
    }
});
