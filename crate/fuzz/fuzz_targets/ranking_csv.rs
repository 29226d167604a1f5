#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::selectors::parse_ranking;
use spectral_xai::spectra::WavenumberAxis;

fuzz_target!(|data: &[u8]| {
    let axis = WavenumberAxis::linspace(400.0, 800.0, 41, 7.1).unwrap();
    if let Ok(r) = parse_ranking(data, &axis, "fuzz") {
        assert_eq!(r.scores.len(), axis.len());
        let mut order = r.order.clone();
        order.sort_unstable();
        assert!(order.iter().enumerate().all(|(i, &j)| i == j));
    }
});
