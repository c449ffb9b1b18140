//! CSV tables and TOML schema sidecars.
//!
//! A schema sidecar lists columns in any order:
//!
//! ```toml
//! [[columns]]
//! name = "age"
//! kind = "numerical"
//!
//! [[columns]]
//! name = "colour"
//! kind = "categorical"
//! categories = ["red", "green"]
//!
//! [[columns]]
//! name = "y"
//! kind = "label"
//! categories = ["no", "yes"]   # omit for regression
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ncakit_core::data::{encode_features, ColumnKind, ColumnSchema, Dataset};
use ncakit_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub columns: Vec<ColumnSchema>,
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    toml::from_str(&text).map_err(|source| Error::Toml {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_schema(path: &Path) -> Result<Vec<ColumnSchema>> {
    let s: SchemaFile = read_toml(path)?;
    ncakit_core::data::validate_schema(&s.columns)?;
    Ok(s.columns)
}

pub fn write_schema(path: &Path, columns: &[ColumnSchema]) -> Result<()> {
    let text = toml::to_string(&SchemaFile {
        columns: columns.to_vec(),
    })
    .map_err(|e| Error::Invalid(e.to_string()))?;
    fs::write(path, text).map_err(Error::io(path))
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(Error::csv(path))?;
    let header = r
        .headers()
        .map_err(Error::csv(path))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(
            rec.map_err(Error::csv(path))?
                .iter()
                .map(str::to_string)
                .collect(),
        );
    }
    Ok((header, rows))
}

/// Rows of `path` parsed under `schema`, categorical columns one-hot encoded
/// in schema category order.
pub fn load_csv(path: &Path, schema: &[ColumnSchema]) -> Result<Dataset> {
    let (header, rows) = read_table(path)?;
    Dataset::from_records(schema.to_vec(), &header, &rows).map_err(|e| match e {
        ncakit_core::Error::EmptyDataset => {
            Error::Invalid(format!("{}: empty dataset", path.display()))
        }
        e => Error::Invalid(format!("{}: {e}", path.display())),
    })
}

/// Model input rows of `path`; the label column may be missing.
pub fn load_features(path: &Path, schema: &[ColumnSchema]) -> Result<Matrix> {
    let (header, rows) = read_table(path)?;
    encode_features(schema, &header, &rows)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

/// Writes a dataset back to CSV in schema column order.
pub fn write_csv(path: &Path, d: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::csv(path))?;
    let schema = d.schema();
    w.write_record(schema.iter().map(|c| c.name.as_str()))
        .map_err(Error::csv(path))?;
    let values = d.original_values();
    for i in 0..d.len() {
        let (mut num, mut cat) = (0, 0);
        let mut rec = Vec::with_capacity(schema.len());
        for c in schema {
            match c.kind {
                ColumnKind::Numerical => {
                    rec.push(fmt_f64(d.numerical()[(i, num)]));
                    num += 1;
                }
                ColumnKind::Categorical => {
                    let cats = c.categories.as_deref().unwrap_or_default();
                    let row = &d.categorical().row(i)[cat..cat + cats.len()];
                    let k = row.iter().position(|&v| v == 1.0).unwrap_or(0);
                    rec.push(cats[k].clone());
                    cat += cats.len();
                }
                ColumnKind::Label => match (&c.categories, d.targets().classes(), &values) {
                    (Some(names), Some(ids), _) => rec.push(names[ids[i]].clone()),
                    (_, _, Some(v)) => rec.push(fmt_f64(v[i])),
                    _ => return Err(Error::Invalid("label column does not match targets".into())),
                },
            }
        }
        w.write_record(&rec).map_err(Error::csv(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Buffered CSV writer for output tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            rows: vec![header.into_iter().map(Into::into).collect()],
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .from_path(path)
            .map_err(Error::csv(path))?;
        for r in &self.rows {
            w.write_record(r).map_err(Error::csv(path))?;
        }
        w.flush().map_err(Error::io(path))
    }
}

/// Appends one JSON value per line.
pub fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(Error::io(path))?;
    for it in items {
        let line = serde_json::to_string(it).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(f, "{line}").map_err(Error::io(path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc_schema() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::numerical("a"),
            ColumnSchema::categorical("c", ["x", "y"]),
            ColumnSchema::class_label("y", ["0", "1"]),
        ]
    }

    #[test]
    fn one_hot_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "a,c,y\n1.0,x,0\n2.5,y,1\n-3,x,1\n").unwrap();
        let d = load_csv(&p, &abc_schema()).unwrap();
        assert_eq!(d.categorical().as_slice(), &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(d.numerical().as_slice(), &[1.0, 2.5, -3.0]);
        assert_eq!(d.targets().classes().unwrap(), &[0, 1, 1]);
    }

    #[test]
    fn csv_errors_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "a,c,y\n").unwrap();
        assert!(load_csv(&p, &abc_schema())
            .unwrap_err()
            .to_string()
            .contains("empty dataset"));
        fs::write(&p, "a,c,y\n1,x,0\n2,z,1\n").unwrap();
        let msg = load_csv(&p, &abc_schema()).unwrap_err().to_string();
        assert!(msg.contains("row 1") && msg.contains("`c`"), "{msg}");
        fs::write(&p, "a,y\n1,0\n").unwrap();
        assert!(load_csv(&p, &abc_schema())
            .unwrap_err()
            .to_string()
            .contains("missing column `c`"));
    }

    #[test]
    fn schema_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sp = dir.path().join("s.toml");
        write_schema(&sp, &abc_schema()).unwrap();
        assert_eq!(load_schema(&sp).unwrap(), abc_schema());
        let p = dir.path().join("d.csv");
        fs::write(&p, "y,a,c\n1,0.1,y\n0,1e-3,x\n").unwrap();
        let d = load_csv(&p, &abc_schema()).unwrap();
        let q = dir.path().join("e.csv");
        write_csv(&q, &d).unwrap();
        assert_eq!(load_csv(&q, &abc_schema()).unwrap(), d);
    }
}
