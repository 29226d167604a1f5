#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::metrics::parse_expert;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = parse_expert(data) {
        assert!(set.wavenumbers.iter().all(|w| w.is_finite()));
    }
});
