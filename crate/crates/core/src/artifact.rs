//! On-disk model file: a fitted encoder plus the logistic model trained on
//! its output, so the model can be re-applied to raw tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Encoder, SubgroupKey};
use crate::linmodel::{CvResult, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub encoder: Encoder,
    pub model: TrainedModel,
    /// Subgroup the model was trained on; `None` for the whole table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<SubgroupKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvResult>,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    /// Parses and checks that the weight vector matches the encoder width.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.model.dim() != file.encoder.dim() {
            return Err(Error::DimensionMismatch {
                expected: file.encoder.dim(),
                found: file.model.dim(),
            });
        }
        if !file.model.w.iter().all(|v| v.is_finite()) || !file.model.b.is_finite() {
            return Err(Error::NonFinite("model weights"));
        }
        file.encoder.schema.validate()?;
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{builtin_schema, parse_table_str, TableFormat};

    #[test]
    fn round_trip_and_dimension_check() {
        let table = parse_table_str(
            "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1\n\
             A12 48 A32 A43 5951 A61 A73 2 A92 A101 2 A121 22 A143 A152 1 A173 1 A191 A201 2\n",
            TableFormat::UciGerman,
            "g",
        )
        .unwrap();
        let encoder = Encoder::fit(&table, &builtin_schema("german").unwrap()).unwrap();
        let d = encoder.dim();
        let file = ModelFile {
            encoder,
            model: TrainedModel {
                w: vec![0.5; d],
                b: -1.0,
                lambda_star: 1.0,
                converged: true,
                iterations: 3,
                grad_norm: 1e-9,
                cv_log_loss: None,
            },
            subgroup: None,
            cv: None,
        };
        let text = file.to_json();
        assert_eq!(ModelFile::from_json(&text).unwrap(), file);

        let mut bad = file.clone();
        bad.model.w.pop();
        assert!(matches!(
            ModelFile::from_json(&bad.to_json()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(ModelFile::from_json("{"), Err(Error::Parse(_))));
    }
}
