#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::spectra::SynthConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<SynthConfig>(data) {
        if cfg.validate().is_ok() {
            let _ = cfg.axis();
        }
    }
});
