//! Column-to-partition assignment and inter-partition correlation measures.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::correlation::mixed_correlation;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::table::DataTable;
use rand::seq::SliceRandom;

/// Assignment of each column index to exactly one of `n_p` partitions.
///
/// Partition indices are 0-based internally; the serialized form names them
/// `part1..partN`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    n_p: usize,
    assignment: Vec<usize>,
}

impl PartitionSpec {
    /// Build from a per-column assignment vector, validating that every
    /// partition in `0..n_p` is non-empty.
    pub fn new(n_p: usize, assignment: Vec<usize>) -> Result<Self> {
        if n_p == 0 {
            return Err(Error::InvalidPartition("n_p must be at least 1".into()));
        }
        if assignment.is_empty() {
            return Err(Error::InvalidPartition("no columns to assign".into()));
        }
        let mut counts = vec![0usize; n_p];
        for (col, &p) in assignment.iter().enumerate() {
            if p >= n_p {
                return Err(Error::InvalidPartition(format!(
                    "column {col} assigned to partition {p}, but n_p = {n_p}"
                )));
            }
            counts[p] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidPartition(format!(
                "partition {empty} is empty"
            )));
        }
        Ok(Self { n_p, assignment })
    }

    /// Build from explicit per-partition column-index groups.
    pub fn from_groups(k: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; k];
        for (p, group) in groups.iter().enumerate() {
            for &col in group {
                if col >= k {
                    return Err(Error::InvalidPartition(format!(
                        "column index {col} out of range for k = {k}"
                    )));
                }
                if assignment[col] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "column {col} assigned twice"
                    )));
                }
                assignment[col] = p;
            }
        }
        if let Some(col) = assignment.iter().position(|&p| p == usize::MAX) {
            return Err(Error::InvalidPartition(format!("column {col} unassigned")));
        }
        Self::new(groups.len(), assignment)
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn k(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Column indices of partition `p`, in column order.
    pub fn columns_of(&self, p: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(col, &q)| (q == p).then_some(col))
            .collect()
    }

    /// All partitions as column-index groups, partition order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.n_p).map(|p| self.columns_of(p)).collect()
    }

    /// Columns listed partition-by-partition; the column order of joined
    /// output tables.
    pub fn partition_column_order(&self) -> Vec<usize> {
        self.groups().concat()
    }
}

/// Serialized partition layout: named partitions with their column names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionFile {
    pub partitions: Vec<PartitionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionEntry {
    pub name: String,
    pub columns: Vec<String>,
}

impl PartitionSpec {
    pub fn to_file(&self, table: &DataTable) -> PartitionFile {
        PartitionFile {
            partitions: (0..self.n_p)
                .map(|p| PartitionEntry {
                    name: format!("part{}", p + 1),
                    columns: self
                        .columns_of(p)
                        .into_iter()
                        .map(|c| table.schema()[c].name.clone())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn write(&self, table: &DataTable, path: impl AsRef<Path>) -> Result<()> {
        let file = self.to_file(table);
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn read(table: &DataTable, path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: PartitionFile = serde_json::from_str(&text)?;
        Self::from_names(
            table,
            &file
                .partitions
                .iter()
                .map(|e| e.columns.clone())
                .collect::<Vec<_>>(),
        )
    }

    /// Build from per-partition column-name lists.
    pub fn from_names(table: &DataTable, groups: &[Vec<String>]) -> Result<Self> {
        let mut index_groups = Vec::with_capacity(groups.len());
        for group in groups {
            let mut idx = Vec::with_capacity(group.len());
            for name in group {
                let col = table.column_index(name).ok_or_else(|| Error::MissingColumn {
                    column: name.clone(),
                    place: "table schema".into(),
                })?;
                idx.push(col);
            }
            index_groups.push(idx);
        }
        Self::from_groups(table.k(), &index_groups)
    }
}

/// Distribute `k` columns over `n_p` partitions uniformly at random.
///
/// Sizes differ by at most one; when `k` is not divisible by `n_p` the
/// remainder goes to the lowest-index partitions.
pub fn random_partition(k: usize, n_p: usize, seed: u64) -> Result<PartitionSpec> {
    if n_p < 1 || n_p > k {
        return Err(Error::InvalidPartition(format!(
            "need 1 <= n_p <= k, got n_p = {n_p}, k = {k}"
        )));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut SeededRng::new(seed).stream(0x7072).rng());
    let base = k / n_p;
    let rem = k % n_p;
    let mut assignment = vec![0usize; k];
    let mut cursor = 0;
    for p in 0..n_p {
        let size = base + usize::from(p < rem);
        for &col in &order[cursor..cursor + size] {
            assignment[col] = p;
        }
        cursor += size;
    }
    PartitionSpec::new(n_p, assignment)
}

/// Two-way partition that separates the most correlated column pairs.
///
/// Takes the largest remaining off-diagonal |association|, sends its row
/// column to partition 1 and its column column to partition 2, removes both,
/// and repeats. Ties break toward the lexicographically smallest index pair.
/// A leftover unpaired column joins the first partition.
pub fn correlation_partition(table: &DataTable) -> Result<PartitionSpec> {
    if table.k() < 2 {
        return Err(Error::InvalidPartition(
            "correlation partitioning needs at least 2 columns".into(),
        ));
    }
    let corr = mixed_correlation(table)?;
    correlation_partition_from_matrix(&corr)
}

/// Same greedy procedure, driven by a precomputed association matrix.
pub fn correlation_partition_from_matrix(corr: &DMatrix<f64>) -> Result<PartitionSpec> {
    let k = corr.nrows();
    if k < 2 || corr.ncols() != k {
        return Err(Error::InvalidPartition(
            "association matrix must be square with k >= 2".into(),
        ));
    }
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut assignment = vec![0usize; k];
    while remaining.len() >= 2 {
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
        for (a, &i) in remaining.iter().enumerate() {
            for &j in &remaining[a + 1..] {
                let v = corr[(i, j)].abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (_, i, j) = best;
        assignment[i] = 0;
        assignment[j] = 1;
        remaining.retain(|&c| c != i && c != j);
    }
    if let Some(&leftover) = remaining.first() {
        // Pairing keeps the two sides equal, so "smaller" is always a tie;
        // the leftover goes to the first partition.
        assignment[leftover] = 0;
    }
    PartitionSpec::new(2, assignment)
}

/// Frobenius-norm decomposition of an association matrix relative to a
/// partition: mass on within-partition cells vs. cells spanning partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRatioReport {
    pub exterior_norm: f64,
    pub interior_norm: f64,
    /// `exterior_norm / interior_norm`; `f64::INFINITY` when the interior
    /// norm is zero (see `interior_zero`).
    pub ratio: f64,
    pub interior_zero: bool,
}

/// Split the off-diagonal Frobenius mass of `corr` into interior (same
/// partition) and exterior (across partitions) parts.
pub fn exterior_interior_ratio(
    corr: &DMatrix<f64>,
    spec: &PartitionSpec,
) -> Result<CorrelationRatioReport> {
    let k = corr.nrows();
    if corr.ncols() != k || spec.k() != k {
        return Err(Error::InvalidPartition(format!(
            "matrix is {}x{}, partition covers {} columns",
            corr.nrows(),
            corr.ncols(),
            spec.k()
        )));
    }
    let assignment = spec.assignment();
    let mut interior_sq = 0.0;
    let mut exterior_sq = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let v = corr[(i, j)];
            if assignment[i] == assignment[j] {
                interior_sq += v * v;
            } else {
                exterior_sq += v * v;
            }
        }
    }
    let interior_norm = interior_sq.sqrt();
    let exterior_norm = exterior_sq.sqrt();
    let interior_zero = interior_norm == 0.0;
    let ratio = if interior_zero {
        f64::INFINITY
    } else {
        exterior_norm / interior_norm
    };
    Ok(CorrelationRatioReport {
        exterior_norm,
        interior_norm,
        ratio,
        interior_zero,
    })
}
