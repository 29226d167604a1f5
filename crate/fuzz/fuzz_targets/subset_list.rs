#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::selectors::parse_subset;
use spectral_xai::spectra::WavenumberAxis;

fuzz_target!(|data: &[u8]| {
    let axis = WavenumberAxis::linspace(400.0, 800.0, 41, 7.1).unwrap();
    if let Ok(s) = parse_subset(data, &axis) {
        assert!(s.indices.windows(2).all(|w| w[0] < w[1]));
        assert!(s.indices.iter().all(|&j| j < axis.len()));
    }
});
