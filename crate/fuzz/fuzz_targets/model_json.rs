#![no_main]

use libfuzzer_sys::fuzz_target;
use pacf_audit::artifact::ModelFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = ModelFile::from_json(text) {
        assert_eq!(file.model.w.len(), file.encoder.dim());
        let again = ModelFile::from_json(&file.to_json()).expect("re-parse own output");
        assert_eq!(file, again);
    }
});
