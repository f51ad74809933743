#![no_main]

use libfuzzer_sys::fuzz_target;
use pacf_audit::ingest::{parse_table_str, TableFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = parse_table_str(text, TableFormat::Csv, "fuzz") {
        assert!(!table.is_empty());
        assert!(table.rows.iter().all(|r| r.len() == table.header.len()));
    }
});
