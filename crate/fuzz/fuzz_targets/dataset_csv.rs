#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::spectra::{parse_dataset, DatasetSchema};

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = parse_dataset(data, &DatasetSchema::default()) {
        assert_eq!(ds.intensities().nrows(), ds.response().len());
        assert_eq!(ds.intensities().ncols(), ds.axis().len());
        assert!(ds.intensities().iter().all(|v| v.is_finite()));
        assert!(ds.axis().values().windows(2).all(|w| w[0] < w[1]));
    }
});
