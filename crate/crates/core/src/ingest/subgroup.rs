use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::encode::EncodedDataset;
use super::schema::Schema;
use super::table::RawTable;
use crate::error::{Error, Result};

/// One value per sensitive column, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupKey(pub Vec<(String, String)>);

impl fmt::Display for SubgroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (col, val)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{col}={val}")?;
        }
        Ok(())
    }
}

impl SubgroupKey {
    /// Values only, slash separated, using the schema's display labels.
    pub fn label(&self, schema: &Schema) -> String {
        self.0
            .iter()
            .map(|(c, v)| schema.label(c, v))
            .collect::<Vec<_>>()
            .join("/")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub key: SubgroupKey,
    /// Sorted row indices into the encoded dataset.
    pub indices: Vec<usize>,
}

impl Subgroup {
    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// Value domain of each sensitive column: the declared domain followed by
/// any observed values it does not list (sorted).
fn sensitive_domains(
    table: &RawTable,
    schema: &Schema,
) -> Result<Vec<(String, usize, Vec<String>)>> {
    let mut out = Vec::with_capacity(schema.sensitive.len());
    for name in &schema.sensitive {
        let pos = table
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        let observed: BTreeSet<&str> = table
            .rows
            .iter()
            .map(|r| schema.group_value(name, &r[pos]))
            .collect();
        let mut domain: Vec<String> = schema
            .column(name)
            .and_then(|c| c.domain.clone())
            .unwrap_or_default();
        for v in observed {
            if !domain.iter().any(|d| d == v) {
                domain.push(v.to_string());
            }
        }
        out.push((name.clone(), pos, domain));
    }
    Ok(out)
}

/// Partitions the encoded rows by their sensitive values.
///
/// Every combination of the sensitive domains yields one subgroup, including
/// combinations with no rows, ordered lexicographically by domain position.
pub fn extract_subgroups(
    ds: &EncodedDataset,
    table: &RawTable,
    schema: &Schema,
) -> Result<Vec<Subgroup>> {
    if schema.sensitive.is_empty() {
        return Err(Error::Schema(
            "at least one sensitive column is required".into(),
        ));
    }
    let domains = sensitive_domains(table, schema)?;

    let mut buckets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, &origin) in ds.row_origin.iter().enumerate() {
        let raw = table.rows.get(origin).ok_or_else(|| {
            Error::Parse(format!(
                "encoded row {i} points at missing raw row {origin}"
            ))
        })?;
        let code: Vec<usize> = domains
            .iter()
            .map(|(name, pos, domain)| {
                let v = schema.group_value(name, &raw[*pos]);
                domain
                    .iter()
                    .position(|d| d == v)
                    .expect("domain covers observed values")
            })
            .collect();
        buckets.entry(code).or_default().push(i);
    }

    let mut subgroups = Vec::new();
    let mut code = vec![0usize; domains.len()];
    if domains.iter().any(|(_, _, d)| d.is_empty()) {
        return Ok(subgroups);
    }
    loop {
        let key = SubgroupKey(
            domains
                .iter()
                .zip(&code)
                .map(|((name, _, dom), &j)| (name.clone(), dom[j].clone()))
                .collect(),
        );
        subgroups.push(Subgroup {
            key,
            indices: buckets.remove(&code).unwrap_or_default(),
        });
        // odometer increment, last column fastest
        let mut pos = domains.len();
        loop {
            if pos == 0 {
                return Ok(subgroups);
            }
            pos -= 1;
            code[pos] += 1;
            if code[pos] < domains[pos].2.len() {
                break;
            }
            code[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::builtin::builtin_schema;
    use crate::ingest::encode::encode;
    use crate::ingest::schema::{ColumnSpec, Normalization, TargetSpec};
    use crate::ingest::table::{parse_table_str, TableFormat};

    fn schema(sensitive: &[&str]) -> Schema {
        Schema {
            name: "t".into(),
            missing_token: None,
            sensitive: sensitive.iter().map(|s| s.to_string()).collect(),
            normalization: Normalization::MinMax,
            target: TargetSpec {
                column: "y".into(),
                positive: "1".into(),
            },
            columns: vec![
                ColumnSpec::categorical("a").with_domain(&["p", "q"]),
                ColumnSpec::categorical("b"),
                ColumnSpec::numeric("v"),
            ],
            value_maps: BTreeMap::new(),
            group_maps: BTreeMap::new(),
        }
    }

    #[test]
    fn enumerates_empty_intersections_in_order() {
        let t = parse_table_str(
            "a,b,v,y\np,u,1,0\np,w,2,1\nq,u,3,0\np,u,4,1\n",
            TableFormat::Csv,
            "t",
        )
        .unwrap();
        let s = schema(&["a", "b"]);
        let ds = encode(&t, &s).unwrap();
        let groups = extract_subgroups(&ds, &t, &s).unwrap();
        let summary: Vec<(String, usize)> = groups
            .iter()
            .map(|g| (g.key.to_string(), g.size()))
            .collect();
        assert_eq!(
            summary,
            vec![
                ("a=p, b=u".to_string(), 2),
                ("a=p, b=w".to_string(), 1),
                ("a=q, b=u".to_string(), 1),
                ("a=q, b=w".to_string(), 0),
            ]
        );
        assert_eq!(groups[0].indices, vec![0, 3]);
    }

    #[test]
    fn single_value_gives_one_nonempty_group() {
        let t = parse_table_str(
            "a,b,v,y\np,u,1,0\np,u,2,1\np,u,3,0\n",
            TableFormat::Csv,
            "t",
        )
        .unwrap();
        let s = schema(&["b"]);
        let ds = encode(&t, &s).unwrap();
        let groups = extract_subgroups(&ds, &t, &s).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].indices, vec![0, 1, 2]);
    }

    #[test]
    fn observed_values_outside_declared_domain_are_kept() {
        let t = parse_table_str("a,b,v,y\nr,u,1,0\np,u,2,1\n", TableFormat::Csv, "t").unwrap();
        let s = schema(&["a"]);
        let ds = encode(&t, &s).unwrap();
        let groups = extract_subgroups(&ds, &t, &s).unwrap();
        let keys: Vec<String> = groups.iter().map(|g| g.key.to_string()).collect();
        assert_eq!(keys, vec!["a=p", "a=q", "a=r"]);
        assert_eq!(groups.iter().map(Subgroup::size).sum::<usize>(), 2);
    }

    #[test]
    fn german_labels() {
        let s = builtin_schema("german").unwrap();
        let key = SubgroupKey(vec![("status_sex".into(), "A95".into())]);
        assert_eq!(key.label(&s), "Female/Single");
    }
}
