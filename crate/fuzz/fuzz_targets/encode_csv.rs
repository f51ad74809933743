#![no_main]

use libfuzzer_sys::fuzz_target;
use pacf_audit::ingest::{encode, extract_subgroups, parse_table_str, Schema, TableFormat};

const SCHEMA: &str = r#"
name = "fuzz"
missing_token = "?"
sensitive = ["g"]

[target]
column = "y"
positive = "1"

[[columns]]
name = "a"
kind = "numeric"

[[columns]]
name = "c"
kind = "categorical"

[[columns]]
name = "g"
kind = "categorical"
domain = ["p", "q"]
"#;

fuzz_target!(|data: &[u8]| {
    let text = format!("a,c,g,y\n{}", String::from_utf8_lossy(data));
    let Ok(table) = parse_table_str(&text, TableFormat::Csv, "fuzz") else {
        return;
    };
    let schema = Schema::from_toml_str(SCHEMA).unwrap();
    let Ok(ds) = encode(&table, &schema) else {
        return;
    };
    assert!(ds.x.all_finite());
    let groups = extract_subgroups(&ds, &table, &schema).unwrap();
    assert_eq!(groups.iter().map(|g| g.size()).sum::<usize>(), ds.m());
});
