#![no_main]

use libfuzzer_sys::fuzz_target;
use pacf_audit::ingest::Schema;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // anything accepted must survive a write/read cycle unchanged
    if let Ok(schema) = Schema::from_toml_str(text) {
        let again = Schema::from_toml_str(&schema.to_toml_string()).expect("re-parse own output");
        assert_eq!(schema, again);
    }
});
