//! CSV ingestion against a JSON schema.
//!
//! The schema lists every feature column with its kind and range (or
//! category names), the label column and the class names. Class indices
//! follow the order of `classes`; category indices follow `categories`.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::space::{Feature, FeatureSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric { lower: f64, upper: f64 },
    Categorical { categories: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub label: String,
    pub classes: Vec<String>,
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Schema> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn space(&self) -> Result<FeatureSpace> {
        let features = self
            .columns
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Numeric { lower, upper } => Feature::numeric(c.name.clone(), *lower, *upper),
                ColumnKind::Categorical { categories } => Feature::categorical(c.name.clone(), categories.len()),
            })
            .collect();
        FeatureSpace::new(features)
    }
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    /// Cells pulled back into their schema range.
    pub clamped: usize,
    pub class_names: Vec<String>,
}

fn ingest_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Parses CSV text. Rows are numbered from 1 for the first data line.
pub fn ingest_str(csv_text: &str, schema: &Schema) -> Result<Ingested> {
    let space = Arc::new(schema.space()?);
    if schema.classes.len() < 2 {
        return Err(Error::Config("schema needs at least two classes".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    for h in headers.iter() {
        if h != schema.label && !schema.columns.iter().any(|c| c.name == h) {
            return Err(ingest_error(0, h, "column is not in the schema"));
        }
    }
    let locate = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| ingest_error(0, name, "schema column missing from CSV header"))
    };
    let feature_pos = schema
        .columns
        .iter()
        .map(|c| locate(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let label_pos = locate(&schema.label)?;
    let categories: Vec<Option<HashMap<&str, usize>>> = schema
        .columns
        .iter()
        .map(|c| match &c.kind {
            ColumnKind::Categorical { categories } => {
                Some(categories.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
            }
            ColumnKind::Numeric { .. } => None,
        })
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record?;
        let mut row = Vec::with_capacity(schema.columns.len());
        for (j, col) in schema.columns.iter().enumerate() {
            let cell = record.get(feature_pos[j]).unwrap_or("");
            let v = match &categories[j] {
                Some(map) => *map
                    .get(cell)
                    .ok_or_else(|| ingest_error(row_no, &col.name, format!("unknown category '{cell}'")))?
                    as f64,
                None => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| ingest_error(row_no, &col.name, format!("cannot parse '{cell}' as a number")))?;
                    if !v.is_finite() {
                        return Err(ingest_error(row_no, &col.name, "value is not finite"));
                    }
                    v
                }
            };
            row.push(v);
        }
        let cell = record.get(label_pos).unwrap_or("");
        let label = schema
            .classes
            .iter()
            .position(|c| c == cell)
            .ok_or_else(|| ingest_error(row_no, &schema.label, format!("unknown class '{cell}'")))?;
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(ingest_error(0, "", "file has no data rows"));
    }
    let (dataset, clamped) = Dataset::with_clamping(space, rows, labels, schema.classes.len())?;
    if clamped > 0 {
        log::warn!("{clamped} values clamped to their schema range");
    }
    Ok(Ingested {
        dataset,
        clamped,
        class_names: schema.classes.clone(),
    })
}

pub fn ingest(csv_path: &Path, schema_path: &Path) -> Result<Ingested> {
    let schema = Schema::from_json(&std::fs::read_to_string(schema_path)?)?;
    ingest_str(&std::fs::read_to_string(csv_path)?, &schema)
}

/// Hex SHA-256 of a byte string, used for input and output digests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The bundled Wisconsin diagnostic breast-cancer data (569 rows, 30
/// numeric features, malignant is class 1).
pub mod breast_cancer {
    use super::*;

    pub const CSV: &str = include_str!("../data/breast_cancer.csv");
    pub const SCHEMA: &str = include_str!("../data/breast_cancer.schema.json");

    pub fn load() -> Result<Dataset> {
        Ok(ingest_str(CSV, &Schema::from_json(SCHEMA)?)?.dataset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::from_json(
            r#"{"label":"y","classes":["no","yes"],"columns":[
                {"name":"x","kind":"numeric","lower":0,"upper":10},
                {"name":"c","kind":"categorical","categories":["red","green","blue"]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn reads_columns_in_any_order() {
        let got = ingest_str("c,y,x\nblue,yes,3.5\nred,no,0\n", &schema()).unwrap();
        assert_eq!(got.dataset.len(), 2);
        assert_eq!(got.dataset.row(0), &[3.5, 2.0]);
        assert_eq!(got.dataset.labels(), &[1, 0]);
        assert_eq!(got.clamped, 0);
    }

    #[test]
    fn clamps_and_counts() {
        let got = ingest_str("x,c,y\n12,red,no\n-1,red,yes\n", &schema()).unwrap();
        assert_eq!(got.clamped, 2);
        assert_eq!(got.dataset.value(0, 0), 10.0);
        assert_eq!(got.dataset.value(1, 0), 0.0);
    }

    #[test]
    fn errors_name_row_and_column() {
        let err = |text: &str| match ingest_str(text, &schema()) {
            Err(Error::Ingest { row, column, .. }) => (row, column),
            other => panic!("expected ingestion error, got {other:?}"),
        };
        assert_eq!(err("x,c,y\n1,red,no\nabc,red,no\n"), (2, "x".into()));
        assert_eq!(err("x,c,y\n1,purple,no\n"), (1, "c".into()));
        assert_eq!(err("x,c,y\n1,red,maybe\n"), (1, "y".into()));
        assert_eq!(err("x,c,y,z\n1,red,no,4\n"), (0, "z".into()));
        assert_eq!(err("x,y\n1,no\n"), (0, "c".into()));
        assert_eq!(err("x,c,y\n"), (0, "".into()));
        assert_eq!(err(""), (0, "x".into()));
    }

    #[test]
    fn bundled_breast_cancer() {
        let d = breast_cancer::load().unwrap();
        assert_eq!((d.len(), d.n_features(), d.class_count()), (569, 30, 2));
        let prevalence = d.class_counts()[1] as f64 / d.len() as f64;
        assert!((prevalence - 0.3726).abs() < 5e-5);
    }
}
