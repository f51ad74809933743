//! Frozen schemas for the UCI Adult and German Credit datasets.

use std::collections::BTreeMap;

use super::schema::{ColumnSpec, Normalization, Schema, TargetSpec, ValueMap};
use crate::error::{Error, Result};

pub const BUILTIN_IDS: [&str; 2] = ["adult", "german"];

pub fn builtin_schema(id: &str) -> Result<Schema> {
    match id {
        "adult" => Ok(adult()),
        "german" => Ok(german()),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

/// Adult: income > 50K, sensitive sex and race. Race is grouped as White vs
/// non-White; the one-hot encoding keeps all five raw race categories.
fn adult() -> Schema {
    use ColumnSpec as C;
    let columns = vec![
        C::numeric("age"),
        C::categorical("workclass"),
        C::numeric("fnlwgt"),
        C::categorical("education"),
        C::numeric("education-num"),
        C::categorical("marital-status"),
        C::categorical("occupation"),
        C::categorical("relationship"),
        C::categorical("race").with_domain(&["non-White", "White"]),
        C::categorical("sex").with_domain(&["Female", "Male"]),
        C::numeric("capital-gain"),
        C::numeric("capital-loss"),
        C::numeric("hours-per-week"),
        C::categorical("native-country"),
    ];
    let mut group_maps = BTreeMap::new();
    group_maps.insert(
        "race".to_string(),
        ValueMap {
            default: Some("non-White".into()),
            map: [("White".to_string(), "White".to_string())].into(),
        },
    );
    Schema {
        name: "adult".into(),
        missing_token: Some("?".into()),
        sensitive: vec!["sex".into(), "race".into()],
        normalization: Normalization::MinMax,
        target: TargetSpec {
            column: "income".into(),
            positive: ">50K".into(),
        },
        columns,
        value_maps: BTreeMap::new(),
        group_maps,
    }
}

/// German Credit: good credit (code 1) is the positive label; the compound
/// personal-status-and-sex attribute (A91..A95) is the sensitive column.
fn german() -> Schema {
    use ColumnSpec as C;
    let columns = vec![
        C::categorical("status"),
        C::numeric("duration"),
        C::categorical("credit_history"),
        C::categorical("purpose"),
        C::numeric("credit_amount"),
        C::categorical("savings"),
        C::categorical("employment"),
        C::numeric("installment_rate"),
        C::categorical("status_sex")
            .with_domain(&["A91", "A92", "A93", "A94", "A95"])
            .with_labels(&[
                ("A91", "Male/Separated"),
                ("A92", "Female/Separated-Married"),
                ("A93", "Male/Single"),
                ("A94", "Male/Married"),
                ("A95", "Female/Single"),
            ]),
        C::categorical("other_debtors"),
        C::numeric("residence_since"),
        C::categorical("property"),
        C::numeric("age"),
        C::categorical("installment_plans"),
        C::categorical("housing"),
        C::numeric("existing_credits"),
        C::categorical("job"),
        C::numeric("people_liable"),
        C::categorical("telephone"),
        C::categorical("foreign_worker"),
    ];
    Schema {
        name: "german".into(),
        missing_token: None,
        sensitive: vec!["status_sex".into()],
        normalization: Normalization::MinMax,
        target: TargetSpec {
            column: "credit".into(),
            positive: "1".into(),
        },
        columns,
        value_maps: BTreeMap::new(),
        group_maps: BTreeMap::new(),
    }
}
