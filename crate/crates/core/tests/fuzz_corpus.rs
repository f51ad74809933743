//! Replays the checked-in fuzz seeds so they stay valid inputs as formats evolve.

use std::path::PathBuf;

use pacf_audit::artifact::ModelFile;
use pacf_audit::audit::AuditReport;
use pacf_audit::ingest::{
    encode, parse_table_str, Schema, TableFormat, ADULT_HEADER, GERMAN_HEADER,
};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn table_seeds_parse() {
    for (target, format, width) in [
        ("parse_csv", TableFormat::Csv, None),
        (
            "parse_uci_adult",
            TableFormat::UciAdult,
            Some(ADULT_HEADER.len()),
        ),
        (
            "parse_uci_german",
            TableFormat::UciGerman,
            Some(GERMAN_HEADER.len()),
        ),
    ] {
        for (name, text) in seeds(target) {
            let table = parse_table_str(&text, format, &name)
                .unwrap_or_else(|e| panic!("{target}/{name}: {e}"));
            let want = width.unwrap_or(table.header.len());
            assert!(
                table.rows.iter().all(|r| r.len() == want),
                "{target}/{name}"
            );
        }
    }
}

#[test]
fn schema_seeds_round_trip() {
    for (name, text) in seeds("schema_toml") {
        let schema = Schema::from_toml_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            Schema::from_toml_str(&schema.to_toml_string()).unwrap(),
            schema
        );
    }
}

#[test]
fn model_seeds_round_trip() {
    for (name, text) in seeds("model_json") {
        let file = ModelFile::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(file.model.w.len(), file.encoder.dim());
        assert_eq!(ModelFile::from_json(&file.to_json()).unwrap(), file);
    }
}

#[test]
fn report_seeds_render() {
    for (name, text) in seeds("report_json") {
        let report = AuditReport::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!report.to_markdown().is_empty());
    }
}

#[test]
fn encode_seeds_encode() {
    let source = include_str!("../../../fuzz/fuzz_targets/encode_csv.rs");
    let start = source.find("r#\"").unwrap() + 3;
    let end = source[start..].find("\"#").unwrap() + start;
    let schema = Schema::from_toml_str(&source[start..end]).unwrap();
    for (name, rows) in seeds("encode_csv") {
        let table = parse_table_str(&format!("a,c,g,y\n{rows}"), TableFormat::Csv, &name).unwrap();
        let ds = encode(&table, &schema).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(ds.x.all_finite());
    }
}
