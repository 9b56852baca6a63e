//! Column-major mixed-type tables.
//!
//! A [`DataTable`] stores each column as either category indices or 64-bit
//! reals, together with per-column metadata. Tables are immutable after
//! construction and cheap to slice by row or column, which is how the
//! partitioning pipeline hands column subsets to generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use rand::seq::SliceRandom;

/// What a column holds, plus the metadata needed to interpret raw cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ColumnKind {
    /// Values are indices into `categories`.
    Categorical { categories: Vec<String> },
    /// Values are finite 64-bit reals in `[min, max]`.
    Numerical { min: f64, max: f64 },
}

/// Name and kind of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

impl ColumnMeta {
    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical { categories },
        }
    }

    pub fn numerical(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numerical { min, max },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColumnKind::Categorical { .. })
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            ColumnKind::Categorical { categories } => Some(categories),
            ColumnKind::Numerical { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            ColumnKind::Categorical { categories } => {
                if categories.is_empty() {
                    return Err(Error::Schema(format!(
                        "column {:?}: empty category set",
                        self.name
                    )));
                }
                let mut seen = std::collections::HashSet::new();
                for c in categories {
                    if !seen.insert(c) {
                        return Err(Error::Schema(format!(
                            "column {:?}: duplicate category {:?}",
                            self.name, c
                        )));
                    }
                }
            }
            ColumnKind::Numerical { min, max } => {
                if min.is_nan() || max.is_nan() || min > max {
                    return Err(Error::Schema(format!(
                        "column {:?}: min {min} > max {max}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One column of cell values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnData {
    /// Indices into the column's category list.
    Categorical(Vec<u32>),
    Numerical(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numerical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_categorical(&self) -> Option<&[u32]> {
        match self {
            ColumnData::Categorical(v) => Some(v),
            ColumnData::Numerical(_) => None,
        }
    }

    pub fn as_numerical(&self) -> Option<&[f64]> {
        match self {
            ColumnData::Numerical(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i]).collect())
            }
            ColumnData::Numerical(v) => {
                ColumnData::Numerical(rows.iter().map(|&i| v[i]).collect())
            }
        }
    }
}

/// Column-major table with schema; all columns share the same length.
///
/// Deserialization funnels through [`DataTable::new`], so serialized tables
/// cannot bypass the invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct DataTable {
    schema: Vec<ColumnMeta>,
    columns: Vec<ColumnData>,
    n: usize,
}

#[derive(Deserialize)]
struct RawTable {
    schema: Vec<ColumnMeta>,
    columns: Vec<ColumnData>,
}

impl TryFrom<RawTable> for DataTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        DataTable::new(raw.schema, raw.columns)
    }
}

impl DataTable {
    /// Build a table, checking every schema and data invariant.
    pub fn new(schema: Vec<ColumnMeta>, columns: Vec<ColumnData>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "schema has {} columns, data has {}",
                schema.len(),
                columns.len()
            )));
        }
        let mut names = std::collections::HashSet::new();
        for meta in &schema {
            meta.validate()?;
            if !names.insert(meta.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", meta.name)));
            }
        }
        let n = columns.first().map_or(0, ColumnData::len);
        for (meta, col) in schema.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Schema(format!(
                    "column {:?} has {} rows, expected {n}",
                    meta.name,
                    col.len()
                )));
            }
            match (&meta.kind, col) {
                (ColumnKind::Categorical { categories }, ColumnData::Categorical(v)) => {
                    if let Some(&bad) = v.iter().find(|&&c| c as usize >= categories.len()) {
                        return Err(Error::Schema(format!(
                            "column {:?}: category index {bad} out of range",
                            meta.name
                        )));
                    }
                }
                (ColumnKind::Numerical { .. }, ColumnData::Numerical(v)) => {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Schema(format!(
                            "column {:?}: non-finite value",
                            meta.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column {:?}: data does not match declared kind",
                        meta.name
                    )));
                }
            }
        }
        Ok(Self { schema, columns, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnMeta] {
        &self.schema
    }

    pub fn column(&self, j: usize) -> &ColumnData {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|m| m.name == name)
    }

    /// New table containing the given rows (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n: rows.len(),
        }
    }

    /// New table containing the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DataTable {
        DataTable {
            schema: cols.iter().map(|&j| self.schema[j].clone()).collect(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            n: self.n,
        }
    }

    /// Concatenate tables column-wise; all inputs must share the row count.
    pub fn hconcat(parts: &[&DataTable]) -> Result<DataTable> {
        let n = parts.first().map_or(0, |t| t.n);
        if parts.iter().any(|t| t.n != n) {
            return Err(Error::UnequalPartSizes);
        }
        let mut schema = Vec::new();
        let mut columns = Vec::new();
        for t in parts {
            schema.extend(t.schema.iter().cloned());
            columns.extend(t.columns.iter().cloned());
        }
        DataTable::new(schema, columns)
    }

    /// Render one cell as text (category label or shortest-round-trip real).
    pub fn cell_text(&self, row: usize, col: usize) -> String {
        match (&self.schema[col].kind, &self.columns[col]) {
            (ColumnKind::Categorical { categories }, ColumnData::Categorical(v)) => {
                categories[v[row] as usize].clone()
            }
            (_, ColumnData::Numerical(v)) => format!("{}", v[row]),
            _ => unreachable!("kind/data consistency is checked at construction"),
        }
    }

    /// True when both tables have identical column names and kinds
    /// (category sets must match exactly; numerical ranges may differ).
    pub fn schema_compatible(&self, other: &DataTable) -> bool {
        self.k() == other.k()
            && self.schema.iter().zip(other.schema.iter()).all(|(a, b)| {
                a.name == b.name
                    && match (&a.kind, &b.kind) {
                        (
                            ColumnKind::Categorical { categories: ca },
                            ColumnKind::Categorical { categories: cb },
                        ) => ca == cb,
                        (ColumnKind::Numerical { .. }, ColumnKind::Numerical { .. }) => true,
                        _ => false,
                    }
            })
    }
}

/// Disjoint train/holdout split of one source table.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: DataTable,
    pub holdout: DataTable,
}

/// Split rows into train and holdout by a seeded uniform permutation.
///
/// The holdout gets `round(holdout_fraction * n)` rows. Identical seeds give
/// identical splits.
pub fn split(table: &DataTable, holdout_fraction: f64, seed: u64) -> Result<SplitPair> {
    if table.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: table.n(),
        });
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout_fraction must be in (0,1), got {holdout_fraction}"
        )));
    }
    let n = table.n();
    let n_holdout = ((holdout_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeededRng::new(seed).rng());
    let holdout = table.select_rows(&order[..n_holdout]);
    let train = table.select_rows(&order[n_holdout..]);
    Ok(SplitPair { train, holdout })
}
