//! Real-vector encoding of mixed-type tables.
//!
//! Categoricals expand to one-hot blocks, numericals are z-scored with the
//! statistics of the table the encoder was fitted on. Each encoded dimension
//! can carry a weight of `1 / H` where `H` is the empirical entropy of its
//! source column (floored at 0.01 nats), which is the distance weighting
//! used by the identifiability metric.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::table::{ColumnData, DataTable};

const ENTROPY_FLOOR_NATS: f64 = 0.01;
const ENTROPY_BINS: usize = 10;

#[derive(Debug, Clone)]
enum ColSpec {
    Numerical { mean: f64, std: f64 },
    Categorical { n_cats: usize },
}

/// Column encoder fitted on one reference table.
#[derive(Debug, Clone)]
pub struct Encoder {
    specs: Vec<ColSpec>,
    /// Entropy of each source column, floored.
    entropies: Vec<f64>,
    dims: usize,
}

impl Encoder {
    pub fn fit(table: &DataTable) -> Encoder {
        let mut specs = Vec::with_capacity(table.k());
        let mut entropies = Vec::with_capacity(table.k());
        let mut dims = 0;
        for j in 0..table.k() {
            match table.column(j) {
                ColumnData::Numerical(values) => {
                    let n = values.len().max(1) as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                    specs.push(ColSpec::Numerical { mean, std });
                    entropies.push(numeric_entropy(values));
                    dims += 1;
                }
                ColumnData::Categorical(codes) => {
                    let n_cats = table.schema()[j].categories().unwrap().len();
                    specs.push(ColSpec::Categorical { n_cats });
                    entropies.push(categorical_entropy(codes, n_cats));
                    dims += n_cats;
                }
            }
        }
        Encoder {
            specs,
            entropies,
            dims,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Encode with unit distance weights.
    pub fn encode(&self, table: &DataTable) -> Result<EncodedMatrix> {
        self.encode_inner(table, false)
    }

    /// Encode with per-dimension weights `1 / H(source column)`.
    pub fn encode_entropy_weighted(&self, table: &DataTable) -> Result<EncodedMatrix> {
        self.encode_inner(table, true)
    }

    fn encode_inner(&self, table: &DataTable, entropy_weights: bool) -> Result<EncodedMatrix> {
        if table.k() != self.specs.len() {
            return Err(Error::SchemaMismatch(format!(
                "encoder fitted on {} columns, table has {}",
                self.specs.len(),
                table.k()
            )));
        }
        let n = table.n();
        let mut data = vec![0.0f64; n * self.dims];
        let mut weights = vec![1.0f64; self.dims];
        let mut offset = 0;
        for (j, spec) in self.specs.iter().enumerate() {
            let w = if entropy_weights {
                1.0 / self.entropies[j].max(ENTROPY_FLOOR_NATS)
            } else {
                1.0
            };
            match (spec, table.column(j)) {
                (ColSpec::Numerical { mean, std }, ColumnData::Numerical(values)) => {
                    weights[offset] = w;
                    for (i, &v) in values.iter().enumerate() {
                        data[i * self.dims + offset] = (v - mean) / std;
                    }
                    offset += 1;
                }
                (ColSpec::Categorical { n_cats }, ColumnData::Categorical(codes)) => {
                    for d in 0..*n_cats {
                        weights[offset + d] = w;
                    }
                    for (i, &c) in codes.iter().enumerate() {
                        if (c as usize) < *n_cats {
                            data[i * self.dims + offset + c as usize] = 1.0;
                        } else {
                            return Err(Error::SchemaMismatch(format!(
                                "column {j}: category index {c} unknown to the encoder"
                            )));
                        }
                    }
                    offset += n_cats;
                }
                _ => {
                    return Err(Error::SchemaMismatch(format!(
                        "column {j}: kind differs from the encoder's fit table"
                    )))
                }
            }
        }
        Ok(EncodedMatrix {
            data,
            n,
            d: self.dims,
            weights,
        })
    }
}

fn categorical_entropy(codes: &[u32], n_cats: usize) -> f64 {
    let n = codes.len();
    if n == 0 {
        return 0.0;
    }
    let mut counts = vec![0.0f64; n_cats];
    for &c in codes {
        counts[c as usize] += 1.0;
    }
    shannon(&counts, n as f64)
}

fn numeric_entropy(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return 0.0;
    }
    let mut counts = vec![0.0f64; ENTROPY_BINS];
    for &v in values {
        let b = (((v - lo) / (hi - lo) * ENTROPY_BINS as f64) as usize).min(ENTROPY_BINS - 1);
        counts[b] += 1.0;
    }
    shannon(&counts, n as f64)
}

fn shannon(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

/// Row-major encoded matrix with per-dimension distance weights.
#[derive(Debug, Clone)]
pub struct EncodedMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
    weights: Vec<f64>,
}

impl EncodedMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distance(&self, i: usize, other: &EncodedMatrix, j: usize) -> f64 {
        weighted_distance(self.row(i), other.row(j), &self.weights)
    }

    /// Distance from every row to its nearest *other* row in the same set.
    pub fn nearest_within(&self) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                for j in 0..self.n {
                    if j != i {
                        let d = self.distance(i, self, j);
                        if d < best {
                            best = d;
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// Distance from every row of `self` to its nearest row of `other`.
    pub fn nearest_to(&self, other: &EncodedMatrix) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                for j in 0..other.n {
                    let d = self.distance(i, other, j);
                    if d < best {
                        best = d;
                    }
                }
                best
            })
            .collect()
    }
}

pub fn weighted_distance(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnData, ColumnMeta, DataTable};

    fn mixed_table() -> DataTable {
        DataTable::new(
            vec![
                ColumnMeta::numerical("x", 0.0, 4.0),
                ColumnMeta::categorical("c", vec!["a".into(), "b".into(), "c".into()]),
            ],
            vec![
                ColumnData::Numerical(vec![0.0, 1.0, 2.0, 3.0, 4.0]),
                ColumnData::Categorical(vec![0, 1, 2, 0, 1]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn one_hot_plus_zscore_dimensions() {
        let t = mixed_table();
        let enc = Encoder::fit(&t);
        assert_eq!(enc.dims(), 1 + 3);
        let m = enc.encode(&t).unwrap();
        assert_eq!(m.n(), 5);
        // z-scored column has zero mean and unit variance
        let mean: f64 = (0..5).map(|i| m.row(i)[0]).sum::<f64>() / 5.0;
        let var: f64 = (0..5).map(|i| m.row(i)[0] * m.row(i)[0]).sum::<f64>() / 5.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        // one-hot rows sum to 1 over the categorical block
        for i in 0..5 {
            let s: f64 = m.row(i)[1..].iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_weights_floor_constant_columns() {
        let t = DataTable::new(
            vec![ColumnMeta::numerical("const", 1.0, 1.0)],
            vec![ColumnData::Numerical(vec![1.0, 1.0, 1.0])],
        )
        .unwrap();
        let enc = Encoder::fit(&t);
        let m = enc.encode_entropy_weighted(&t).unwrap();
        assert!((m.weights()[0] - 1.0 / ENTROPY_FLOOR_NATS).abs() < 1e-9);
    }

    #[test]
    fn nearest_distances_are_symmetric_on_a_line() {
        let t = DataTable::new(
            vec![ColumnMeta::numerical("x", 0.0, 3.0)],
            vec![ColumnData::Numerical(vec![0.0, 1.0, 2.0, 3.0])],
        )
        .unwrap();
        let enc = Encoder::fit(&t);
        let m = enc.encode(&t).unwrap();
        let nn = m.nearest_within();
        assert_eq!(nn.len(), 4);
        assert!((nn[0] - nn[3]).abs() < 1e-12);
        let cross = m.nearest_to(&m);
        assert!(cross.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn rejects_unknown_categories() {
        let t = mixed_table();
        let enc = Encoder::fit(&t);
        let other = DataTable::new(
            vec![
                ColumnMeta::numerical("x", 0.0, 4.0),
                ColumnMeta::categorical(
                    "c",
                    vec!["a".into(), "b".into(), "c".into(), "d".into()],
                ),
            ],
            vec![
                ColumnData::Numerical(vec![1.0]),
                ColumnData::Categorical(vec![3]),
            ],
        )
        .unwrap();
        assert!(enc.encode(&other).is_err());
    }
}
