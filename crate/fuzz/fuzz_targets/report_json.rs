#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_xai::harness::EvalReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rep) = EvalReport::from_json(text) {
        let mut sink = Vec::new();
        rep.write_table_csv(&mut sink).unwrap();
    }
});
