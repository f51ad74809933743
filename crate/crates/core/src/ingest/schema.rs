//! Declarative description of a tabular dataset.
//!
//! A schema lists the feature columns (numeric or categorical), the binary
//! target, and the sensitive columns whose value combinations define the
//! audited subgroups. Schemas are stored as TOML; see `docs/schema-format.md`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Category name substituted for the schema's missing token.
pub const UNKNOWN_CATEGORY: &str = "Unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Scale each numeric column to [0, 1] using its min and max over the table.
    #[default]
    MinMax,
    /// Center and scale to unit variance. Encoded values are no longer in [0, 1].
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Declared value domain (after value and group maps). Used to enumerate
    /// subgroups so that empty intersections are reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
    /// Human-readable names for values, used in reports only.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

impl ColumnSpec {
    pub fn numeric(name: &str) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            domain: None,
            labels: BTreeMap::new(),
        }
    }

    pub fn categorical(name: &str) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
            domain: None,
            labels: BTreeMap::new(),
        }
    }

    pub fn with_domain(mut self, domain: &[&str]) -> Self {
        self.domain = Some(domain.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn with_labels(mut self, labels: &[(&str, &str)]) -> Self {
        self.labels = labels
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub column: String,
    /// Raw value mapped to label 1; every other value maps to 0.
    pub positive: String,
}

/// Raw value → merged value. Values absent from `map` fall back to
/// `default`, or pass through unchanged when there is no default.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueMap {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default)]
    pub map: BTreeMap<String, String>,
}

impl ValueMap {
    pub fn apply<'a>(&'a self, value: &'a str) -> &'a str {
        match self.map.get(value) {
            Some(v) => v,
            None => self.default.as_deref().unwrap_or(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    /// Raw token treated as a missing value; it becomes the `Unknown` category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_token: Option<String>,
    pub sensitive: Vec<String>,
    #[serde(default)]
    pub normalization: Normalization,
    pub target: TargetSpec,
    pub columns: Vec<ColumnSpec>,
    /// Applied before one-hot encoding and before grouping.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub value_maps: BTreeMap<String, ValueMap>,
    /// Applied on top of `value_maps` when assigning rows to subgroups only;
    /// the one-hot encoding keeps the finer categories.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub group_maps: BTreeMap<String, ValueMap>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("schema serializes to TOML")
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Structural checks. Does not require `sensitive` to be non-empty; see
    /// [`Schema::validate_for_audit`].
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("column `{}` declared twice", c.name)));
            }
            if c.domain.is_some() && c.kind == ColumnKind::Numeric {
                return Err(Error::Schema(format!(
                    "numeric column `{}` cannot declare a domain",
                    c.name
                )));
            }
        }
        if self.column(&self.target.column).is_some() {
            return Err(Error::Schema(format!(
                "target `{}` must not be declared as a feature column",
                self.target.column
            )));
        }
        let mut seen_sensitive = BTreeSet::new();
        for s in &self.sensitive {
            if s == &self.target.column {
                return Err(Error::Schema(format!("target `{s}` cannot be sensitive")));
            }
            if !seen_sensitive.insert(s.as_str()) {
                return Err(Error::Schema(format!(
                    "sensitive column `{s}` listed twice"
                )));
            }
            match self.column(s) {
                Some(c) if c.kind == ColumnKind::Categorical => {}
                Some(_) => {
                    return Err(Error::Schema(format!(
                        "sensitive column `{s}` must be categorical"
                    )))
                }
                None => {
                    return Err(Error::Schema(format!(
                        "sensitive column `{s}` is not declared"
                    )))
                }
            }
        }
        for (kind, maps) in [
            ("value_maps", &self.value_maps),
            ("group_maps", &self.group_maps),
        ] {
            for key in maps.keys() {
                match self.column(key) {
                    Some(c) if c.kind == ColumnKind::Categorical => {}
                    _ => {
                        return Err(Error::Schema(format!(
                            "{kind} key `{key}` is not a declared categorical column"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate_for_audit(&self) -> Result<()> {
        self.validate()?;
        if self.sensitive.is_empty() {
            return Err(Error::Schema(
                "at least one sensitive column is required".into(),
            ));
        }
        Ok(())
    }

    /// Category used for one-hot encoding: missing token → `Unknown`, then
    /// the column's value map.
    pub fn encoded_value<'a>(&'a self, column: &str, raw: &'a str) -> &'a str {
        let v = match &self.missing_token {
            Some(tok) if raw == tok => UNKNOWN_CATEGORY,
            _ => raw,
        };
        match self.value_maps.get(column) {
            Some(m) => m.apply(v),
            None => v,
        }
    }

    /// Value used for subgroup membership: [`Schema::encoded_value`] followed
    /// by the column's group map.
    pub fn group_value<'a>(&'a self, column: &str, raw: &'a str) -> &'a str {
        let v = self.encoded_value(column, raw);
        match self.group_maps.get(column) {
            Some(m) => m.apply(v),
            None => v,
        }
    }

    /// Display label for a sensitive value.
    pub fn label<'a>(&'a self, column: &str, value: &'a str) -> &'a str {
        self.column(column)
            .and_then(|c| c.labels.get(value))
            .map(String::as_str)
            .unwrap_or(value)
    }
}
