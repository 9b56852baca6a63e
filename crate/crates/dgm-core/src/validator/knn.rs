//! Distance-based validator backends: k-nearest-neighbour vote and the
//! one-class distance scorer. Both work on one-hot/z-scored encodings.

use crate::encode::{EncodedMatrix, Encoder};
use crate::error::Result;
use crate::table::DataTable;

#[derive(Debug, Clone)]
pub struct KnnModel {
    encoder: Encoder,
    train: EncodedMatrix,
    labels: Vec<u8>,
    pub k: usize,
}

impl KnnModel {
    pub fn fit(features: &DataTable, labels: &[u8], rows: &[usize], k: usize) -> Result<KnnModel> {
        let subset = features.select_rows(rows);
        let encoder = Encoder::fit(&subset);
        let train = encoder.encode(&subset)?;
        let labels = rows.iter().map(|&r| labels[r]).collect();
        Ok(KnnModel {
            encoder,
            train,
            labels,
            k: k.clamp(1, rows.len()),
        })
    }

    /// Fraction of positive labels among the k nearest training rows.
    pub fn score(&self, queries: &DataTable) -> Result<Vec<f64>> {
        let q = self.encoder.encode(queries)?;
        Ok((0..q.n())
            .map(|i| {
                let neighbours = k_smallest(
                    (0..self.train.n()).map(|j| (q.distance(i, &self.train, j), j)),
                    self.k,
                );
                let pos = neighbours
                    .iter()
                    .filter(|&&(_, j)| self.labels[j] == 1)
                    .count();
                pos as f64 / self.k as f64
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct OneClassModel {
    encoder: Encoder,
    positives: EncodedMatrix,
    pub k: usize,
    /// Median over training positives of the distance to their k-th nearest
    /// other positive; the scale of the score transfer function.
    pub tau: f64,
}

impl OneClassModel {
    /// Fits on the label-1 rows only; label-0 rows are ignored.
    pub fn fit(features: &DataTable, labels: &[u8], rows: &[usize], k: usize) -> Result<OneClassModel> {
        let pos_rows: Vec<usize> = rows.iter().copied().filter(|&r| labels[r] == 1).collect();
        let subset = features.select_rows(&pos_rows);
        let encoder = Encoder::fit(&subset);
        let positives = encoder.encode(&subset)?;
        let k = k.clamp(1, pos_rows.len().saturating_sub(1).max(1));

        let mut kth: Vec<f64> = (0..positives.n())
            .map(|i| {
                kth_distance(
                    (0..positives.n())
                        .filter(|&j| j != i)
                        .map(|j| positives.distance(i, &positives, j)),
                    k,
                )
            })
            .collect();
        kth.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tau = if kth.is_empty() {
            1.0
        } else {
            median_of_sorted(&kth).max(1e-12)
        };
        Ok(OneClassModel {
            encoder,
            positives,
            k,
            tau,
        })
    }

    /// `1 / (1 + d_k / tau)` where `d_k` is the distance to the k-th nearest
    /// training positive; exactly 0.5 at `d_k = tau`.
    pub fn score(&self, queries: &DataTable) -> Result<Vec<f64>> {
        let q = self.encoder.encode(queries)?;
        Ok((0..q.n())
            .map(|i| {
                let d_k = kth_distance(
                    (0..self.positives.n()).map(|j| q.distance(i, &self.positives, j)),
                    self.k,
                );
                1.0 / (1.0 + d_k / self.tau)
            })
            .collect())
    }
}

fn k_smallest(items: impl Iterator<Item = (f64, usize)>, k: usize) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = items.collect();
    // Deterministic neighbour sets: break distance ties on training index.
    all.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    all.truncate(k);
    all
}

fn kth_distance(items: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut all: Vec<f64> = items.collect();
    if all.is_empty() {
        return f64::INFINITY;
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    all[(k - 1).min(all.len() - 1)]
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        sorted[n / 2 - 1].midpoint(sorted[n / 2])
    }
}
