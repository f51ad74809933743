use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the directory that holds the UCI files.
pub const DATA_DIR_ENV: &str = "PACF_DATA_DIR";

/// Column names of the UCI Adult files (`adult.data`, `adult.test`).
pub const ADULT_HEADER: [&str; 15] = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
    "income",
];

/// Column names of the UCI Statlog German Credit file (`german.data`).
pub const GERMAN_HEADER: [&str; 21] = [
    "status",
    "duration",
    "credit_history",
    "purpose",
    "credit_amount",
    "savings",
    "employment",
    "installment_rate",
    "status_sex",
    "other_debtors",
    "residence_since",
    "property",
    "age",
    "installment_plans",
    "housing",
    "existing_credits",
    "job",
    "people_liable",
    "telephone",
    "foreign_worker",
    "credit",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    /// Comma separated with a header row.
    Csv,
    /// `adult.data` / `adult.test`: comma plus optional space, no header.
    UciAdult,
    /// `german.data`: whitespace separated coded values, no header.
    UciGerman,
}

impl TableFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::UciAdult => "uci-adult",
            TableFormat::UciGerman => "uci-german",
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "uci-adult" => Ok(TableFormat::UciAdult),
            "uci-german" => Ok(TableFormat::UciGerman),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Where a table comes from: a file on disk or one of the builtin UCI datasets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableSource {
    Path(PathBuf),
    Builtin(String),
}

impl TableSource {
    /// `adult` and `german` are treated as builtin ids, anything else as a path.
    pub fn parse(s: &str) -> Self {
        match s {
            "adult" | "german" => TableSource::Builtin(s.to_string()),
            _ => TableSource::Path(PathBuf::from(s)),
        }
    }

    /// Resolves a builtin id against `data_dir` (the file name and format of
    /// the published UCI distribution).
    pub fn resolve(&self, data_dir: &Path) -> Result<(PathBuf, Option<TableFormat>)> {
        match self {
            TableSource::Path(p) => Ok((p.clone(), None)),
            TableSource::Builtin(id) => match id.as_str() {
                "adult" => Ok((data_dir.join("adult.data"), Some(TableFormat::UciAdult))),
                "german" => Ok((data_dir.join("german.data"), Some(TableFormat::UciGerman))),
                other => Err(Error::UnknownBuiltin(other.to_string())),
            },
        }
    }
}

/// Directory holding the UCI files: `$PACF_DATA_DIR`, else `./data`.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub source: String,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Reads a table from disk. Builtin ids resolve against [`default_data_dir`];
/// a builtin's own format overrides `format`.
pub fn parse_table(source: &TableSource, format: TableFormat) -> Result<RawTable> {
    parse_table_in(source, format, &default_data_dir())
}

pub fn parse_table_in(
    source: &TableSource,
    format: TableFormat,
    data_dir: &Path,
) -> Result<RawTable> {
    let (path, builtin_format) = source.resolve(data_dir)?;
    let format = builtin_format.unwrap_or(format);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_table_str(&text, format, &path.display().to_string())
}

/// Parses table text already in memory. This is the entry point the fuzz
/// targets drive.
pub fn parse_table_str(text: &str, format: TableFormat, source: &str) -> Result<RawTable> {
    let (header, rows) = match format {
        TableFormat::Csv => parse_csv(text)?,
        TableFormat::UciAdult => (owned(&ADULT_HEADER), parse_adult(text)?),
        TableFormat::UciGerman => (owned(&GERMAN_HEADER), parse_german(text)?),
    };
    if rows.is_empty() {
        return Err(Error::NoDataRows);
    }
    Ok(RawTable {
        header,
        rows,
        source: source.to_string(),
    })
}

fn owned(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::NoDataRows);
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::FieldCount {
                // header is line 1
                row: i + 2,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_adult(text: &str) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        // blank lines, the lone "." sentinel and the "|1x3 Cross validator"
        // banner of adult.test
        if line.is_empty() || line == "." || line.starts_with('|') {
            continue;
        }
        let mut fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != ADULT_HEADER.len() {
            return Err(Error::FieldCount {
                row: i + 1,
                expected: ADULT_HEADER.len(),
                found: fields.len(),
            });
        }
        if let Some(label) = fields.last_mut() {
            if let Some(stripped) = label.strip_suffix('.') {
                *label = stripped.to_string();
            }
        }
        rows.push(fields);
    }
    Ok(rows)
}

fn parse_german(text: &str) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != GERMAN_HEADER.len() {
            return Err(Error::FieldCount {
                row: i + 1,
                expected: GERMAN_HEADER.len(),
                found: fields.len(),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}
