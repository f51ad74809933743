use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, Normalization, Schema};
use super::table::RawTable;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureBlock {
    /// Encoded as `(value - shift) / scale`; `scale == 0` marks a constant
    /// column, encoded as 0.
    Numeric {
        column: String,
        shift: f64,
        scale: f64,
    },
    Categorical {
        column: String,
        categories: Vec<String>,
    },
}

impl FeatureBlock {
    pub fn column(&self) -> &str {
        match self {
            FeatureBlock::Numeric { column, .. } | FeatureBlock::Categorical { column, .. } => {
                column
            }
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureBlock::Numeric { .. } => 1,
            FeatureBlock::Categorical { categories, .. } => categories.len(),
        }
    }
}

/// Encoding state fitted on one table: numeric scaling constants and the
/// category list of every one-hot block. Applying it to another table
/// rejects categories that were not seen during fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub schema: Schema,
    pub blocks: Vec<FeatureBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub x: Matrix,
    /// Labels in {0, 1}.
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    /// `true` for coordinates not derived from a sensitive column.
    pub non_sensitive_mask: Vec<bool>,
    /// Index of the raw table row each encoded row came from.
    pub row_origin: Vec<usize>,
    pub warnings: Vec<String>,
}

impl EncodedDataset {
    pub fn m(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// Feature rows and labels restricted to `indices`.
    pub fn subset(&self, indices: &[usize]) -> (Matrix, Vec<f64>) {
        (
            self.x.select_rows(indices),
            indices.iter().map(|&i| self.y[i]).collect(),
        )
    }
}

/// Fits an [`Encoder`] on `table` and encodes it.
pub fn encode(table: &RawTable, schema: &Schema) -> Result<EncodedDataset> {
    let encoder = Encoder::fit(table, schema)?;
    let mut ds = encoder.transform(table)?;
    ds.warnings.splice(0..0, encoder.fit_warnings(table));
    Ok(ds)
}

fn column_positions(table: &RawTable, schema: &Schema) -> Result<Vec<usize>> {
    schema
        .columns
        .iter()
        .map(|c| {
            table
                .column_index(&c.name)
                .ok_or_else(|| Error::MissingColumn(c.name.clone()))
        })
        .collect()
}

fn parse_numeric(raw: &str, row: usize, column: &str) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

impl Encoder {
    pub fn fit(table: &RawTable, schema: &Schema) -> Result<Self> {
        schema.validate()?;
        table
            .column_index(&schema.target.column)
            .ok_or_else(|| Error::MissingColumn(schema.target.column.clone()))?;
        let positions = column_positions(table, schema)?;
        let mut blocks = Vec::with_capacity(schema.columns.len());
        for (spec, &pos) in schema.columns.iter().zip(&positions) {
            let block = match spec.kind {
                ColumnKind::Numeric => {
                    let values = table
                        .rows
                        .iter()
                        .enumerate()
                        .map(|(i, r)| parse_numeric(&r[pos], i + 1, &spec.name))
                        .collect::<Result<Vec<_>>>()?;
                    let (shift, scale) = match schema.normalization {
                        Normalization::MinMax => {
                            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                            (lo, hi - lo)
                        }
                        Normalization::ZScore => {
                            let n = values.len() as f64;
                            let mean = values.iter().sum::<f64>() / n;
                            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                            (mean, var.sqrt())
                        }
                    };
                    if !scale.is_finite() {
                        return Err(Error::NonFinite("numeric column range"));
                    }
                    FeatureBlock::Numeric {
                        column: spec.name.clone(),
                        shift,
                        scale,
                    }
                }
                ColumnKind::Categorical => {
                    let categories: BTreeSet<&str> = table
                        .rows
                        .iter()
                        .map(|r| schema.encoded_value(&spec.name, &r[pos]))
                        .collect();
                    FeatureBlock::Categorical {
                        column: spec.name.clone(),
                        categories: categories.into_iter().map(str::to_string).collect(),
                    }
                }
            };
            blocks.push(block);
        }
        Ok(Encoder {
            schema: schema.clone(),
            blocks,
        })
    }

    fn fit_warnings(&self, table: &RawTable) -> Vec<String> {
        let mut out = Vec::new();
        for b in &self.blocks {
            if let FeatureBlock::Numeric { column, scale, .. } = b {
                if *scale == 0.0 {
                    let msg = format!(
                        "numeric column `{column}` is constant over {}; encoded as 0",
                        table.source
                    );
                    log::warn!("{msg}");
                    out.push(msg);
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(FeatureBlock::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            match b {
                FeatureBlock::Numeric { column, .. } => names.push(column.clone()),
                FeatureBlock::Categorical { column, categories } => {
                    names.extend(categories.iter().map(|c| format!("{column}={c}")))
                }
            }
        }
        names
    }

    pub fn non_sensitive_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            let sensitive = self.schema.sensitive.iter().any(|s| s == b.column());
            mask.extend(std::iter::repeat_n(!sensitive, b.width()));
        }
        mask
    }

    /// Encodes `table` with the fitted state.
    pub fn transform(&self, table: &RawTable) -> Result<EncodedDataset> {
        let schema = &self.schema;
        let positions = column_positions(table, schema)?;
        let target_pos = table
            .column_index(&schema.target.column)
            .ok_or_else(|| Error::MissingColumn(schema.target.column.clone()))?;
        let d = self.dim();
        let m = table.len();
        let mut x = Matrix::zeros(m, d);
        let mut y = Vec::with_capacity(m);
        for (i, raw) in table.rows.iter().enumerate() {
            if raw.len() != table.header.len() {
                return Err(Error::FieldCount {
                    row: i + 1,
                    expected: table.header.len(),
                    found: raw.len(),
                });
            }
            let out = x.row_mut(i);
            let mut offset = 0;
            for (block, &pos) in self.blocks.iter().zip(&positions) {
                match block {
                    FeatureBlock::Numeric {
                        column,
                        shift,
                        scale,
                    } => {
                        let v = parse_numeric(&raw[pos], i + 1, column)?;
                        out[offset] = if *scale == 0.0 {
                            0.0
                        } else {
                            (v - shift) / scale
                        };
                    }
                    FeatureBlock::Categorical { column, categories } => {
                        let v = schema.encoded_value(column, &raw[pos]);
                        let k =
                            categories
                                .binary_search_by(|c| c.as_str().cmp(v))
                                .map_err(|_| Error::UnseenCategory {
                                    row: i + 1,
                                    column: column.clone(),
                                    value: v.to_string(),
                                })?;
                        out[offset + k] = 1.0;
                    }
                }
                offset += block.width();
            }
            y.push(if raw[target_pos] == schema.target.positive {
                1.0
            } else {
                0.0
            });
        }
        Ok(EncodedDataset {
            x,
            y,
            feature_names: self.feature_names(),
            non_sensitive_mask: self.non_sensitive_mask(),
            row_origin: (0..m).collect(),
            warnings: Vec::new(),
        })
    }
}
