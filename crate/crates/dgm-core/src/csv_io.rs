//! CSV ingestion and serialization plus the schema sidecar format.
//!
//! The sidecar is a JSON object mapping column name to a declaration:
//!
//! ```json
//! {
//!   "age":    { "kind": "numerical" },
//!   "sex":    { "kind": "categorical", "categories": ["F", "M"] },
//!   "weight": { "kind": "numerical", "min": 0.0, "max": 300.0 }
//! }
//! ```
//!
//! Categories and numeric ranges are inferred from the data when absent.
//! Category sets, declared or inferred, are kept in sorted order so the
//! same data always yields the same schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ColumnData, ColumnKind, ColumnMeta, DataTable};

/// One column declaration in the sidecar file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnDecl {
    pub kind: DeclKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclKind {
    Categorical,
    Numerical,
}

/// Parsed sidecar: column name -> declaration.
pub type SchemaFile = BTreeMap<String, ColumnDecl>;

pub fn read_schema_file(path: impl AsRef<Path>) -> Result<SchemaFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_schema_file(schema: &[ColumnMeta], path: impl AsRef<Path>) -> Result<()> {
    let mut decls = SchemaFile::new();
    for meta in schema {
        let decl = match &meta.kind {
            ColumnKind::Categorical { categories } => ColumnDecl {
                kind: DeclKind::Categorical,
                categories: Some(categories.clone()),
                min: None,
                max: None,
            },
            ColumnKind::Numerical { min, max } => ColumnDecl {
                kind: DeclKind::Numerical,
                categories: None,
                min: Some(*min),
                max: Some(*max),
            },
        };
        decls.insert(meta.name.clone(), decl);
    }
    std::fs::write(path, serde_json::to_string_pretty(&decls)?)?;
    Ok(())
}

/// Load a CSV file against a schema sidecar.
///
/// The CSV must have a header row; every column declared in the sidecar must
/// be present. Columns appear in the table in CSV header order. Cells must be
/// non-empty; numeric cells must parse; categorical cells must be members of
/// the declared set when one is given.
pub fn load_csv(path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<DataTable> {
    let decls = read_schema_file(schema_path)?;
    load_csv_with_schema(path, &decls)
}

pub fn load_csv_with_schema(path: impl AsRef<Path>, decls: &SchemaFile) -> Result<DataTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    for name in decls.keys() {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn {
                column: name.clone(),
                place: "csv header".into(),
            });
        }
    }
    for h in &headers {
        if !decls.contains_key(h) {
            return Err(Error::MissingColumn {
                column: h.clone(),
                place: "schema file".into(),
            });
        }
    }

    let k = headers.len();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != k {
            return Err(Error::Schema(format!(
                "row {}: expected {k} fields, found {}",
                i + 1,
                record.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            if field.trim().is_empty() {
                return Err(Error::EmptyCell {
                    row: i + 1,
                    column: headers[j].clone(),
                });
            }
            raw[j].push(field.to_string());
        }
    }

    let mut schema = Vec::with_capacity(k);
    let mut columns = Vec::with_capacity(k);
    for (j, name) in headers.iter().enumerate() {
        let decl = &decls[name];
        match decl.kind {
            DeclKind::Numerical => {
                let mut vals = Vec::with_capacity(raw[j].len());
                for (i, cell) in raw[j].iter().enumerate() {
                    let x: f64 = cell.trim().parse().map_err(|_| Error::BadNumericCell {
                        row: i + 1,
                        column: name.clone(),
                        value: cell.clone(),
                    })?;
                    if !x.is_finite() {
                        return Err(Error::BadNumericCell {
                            row: i + 1,
                            column: name.clone(),
                            value: cell.clone(),
                        });
                    }
                    vals.push(x);
                }
                let min = decl
                    .min
                    .unwrap_or_else(|| vals.iter().copied().fold(f64::INFINITY, f64::min));
                let max = decl
                    .max
                    .unwrap_or_else(|| vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                let (min, max) = if vals.is_empty() && (decl.min.is_none() || decl.max.is_none()) {
                    (0.0, 0.0)
                } else {
                    (min, max)
                };
                schema.push(ColumnMeta::numerical(name.clone(), min, max));
                columns.push(ColumnData::Numerical(vals));
            }
            DeclKind::Categorical => {
                let categories = match &decl.categories {
                    Some(c) => c.clone(),
                    None => {
                        let mut set: Vec<String> = raw[j].to_vec();
                        set.sort();
                        set.dedup();
                        if set.is_empty() {
                            // Header-only file with no declared set: keep a
                            // placeholder so the schema invariant holds.
                            vec!["__none__".to_string()]
                        } else {
                            set
                        }
                    }
                };
                let mut idx = Vec::with_capacity(raw[j].len());
                for (i, cell) in raw[j].iter().enumerate() {
                    match categories.iter().position(|c| c == cell) {
                        Some(p) => idx.push(p as u32),
                        None => {
                            return Err(Error::UnknownCategory {
                                row: i + 1,
                                column: name.clone(),
                                value: cell.clone(),
                            })
                        }
                    }
                }
                schema.push(ColumnMeta::categorical(name.clone(), categories));
                columns.push(ColumnData::Categorical(idx));
            }
        }
    }
    DataTable::new(schema, columns)
}

/// Write a table as RFC-4180 CSV with a header row.
///
/// Numericals are printed with the shortest representation that parses back
/// to the same 64-bit value, so a load/write/load cycle is lossless.
pub fn write_csv(table: &DataTable, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(table.schema().iter().map(|m| m.name.as_str()))?;
    for i in 0..table.n() {
        let row: Vec<String> = (0..table.k()).map(|j| table.cell_text(i, j)).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
