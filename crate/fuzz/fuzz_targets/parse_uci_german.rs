#![no_main]

use libfuzzer_sys::fuzz_target;
use pacf_audit::ingest::{parse_table_str, TableFormat, GERMAN_HEADER};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(table) = parse_table_str(&text, TableFormat::UciGerman, "fuzz") {
        assert!(table.rows.iter().all(|r| r.len() == GERMAN_HEADER.len()));
    }
});
