//! Independent per-column samplers: plain bootstrap marginals and the
//! Laplace-noised histogram variant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::table::{ColumnData, DataTable};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(super) enum ColumnDist {
    /// Category probabilities aligned with the schema's category list.
    CatProbs(Vec<f64>),
    /// Empirical pool; sampling draws uniformly with replacement.
    NumBootstrap(Vec<f64>),
    /// Equal-width histogram; sampling picks a bin then a uniform point in it.
    NumBins { edges: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalModel {
    columns: Vec<ColumnDist>,
}

impl MarginalModel {
    pub(super) fn category_probs(&self, column: usize) -> Option<&[f64]> {
        match &self.columns[column] {
            ColumnDist::CatProbs(p) => Some(p),
            _ => None,
        }
    }

    /// Histogram probabilities (category or bin) for inspection in tests.
    pub fn histogram(&self, column: usize) -> Option<&[f64]> {
        match &self.columns[column] {
            ColumnDist::CatProbs(p) | ColumnDist::NumBins { probs: p, .. } => Some(p),
            ColumnDist::NumBootstrap(_) => None,
        }
    }

    pub(super) fn sample(&self, m: usize, seed: &SeededRng) -> Vec<ColumnData> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, dist)| {
                let mut rng = seed.substream(&[0x6d61, j as u64]).rng();
                match dist {
                    ColumnDist::CatProbs(probs) => ColumnData::Categorical(
                        (0..m).map(|_| draw_index(probs, &mut rng) as u32).collect(),
                    ),
                    ColumnDist::NumBootstrap(pool) => ColumnData::Numerical(
                        (0..m)
                            .map(|_| pool[rng.random_range(0..pool.len())])
                            .collect(),
                    ),
                    ColumnDist::NumBins { edges, probs } => ColumnData::Numerical(
                        (0..m)
                            .map(|_| {
                                let b = draw_index(probs, &mut rng);
                                let (lo, hi) = (edges[b], edges[b + 1]);
                                if hi > lo {
                                    rng.random_range(lo..hi)
                                } else {
                                    lo
                                }
                            })
                            .collect(),
                    ),
                }
            })
            .collect()
    }
}

pub(super) fn draw_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub(super) fn fit_plain(data: &DataTable) -> MarginalModel {
    let columns = (0..data.k())
        .map(|j| match data.column(j) {
            ColumnData::Categorical(codes) => {
                let n_cats = data.schema()[j].categories().unwrap().len();
                ColumnDist::CatProbs(category_frequencies(codes, n_cats))
            }
            ColumnData::Numerical(values) => ColumnDist::NumBootstrap(values.clone()),
        })
        .collect();
    MarginalModel { columns }
}

/// Laplace-noised histograms: the budget is split evenly over the columns,
/// giving each frequency cell noise of scale `2k / (n * epsilon)`. Negative
/// cells clamp to zero and each histogram renormalizes.
pub(super) fn fit_dp(data: &DataTable, epsilon: f64, bins: usize, seed: &SeededRng) -> MarginalModel {
    let n = data.n() as f64;
    let k = data.k() as f64;
    let scale = 2.0 * k / (n * epsilon);
    let columns = (0..data.k())
        .map(|j| {
            let mut rng = seed.substream(&[0x6470, j as u64]).rng();
            match data.column(j) {
                ColumnData::Categorical(codes) => {
                    let n_cats = data.schema()[j].categories().unwrap().len();
                    let mut probs = category_frequencies(codes, n_cats);
                    perturb(&mut probs, scale, &mut rng);
                    ColumnDist::CatProbs(probs)
                }
                ColumnData::Numerical(values) => {
                    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let edges: Vec<f64> = (0..=bins)
                        .map(|b| lo + (hi - lo) * b as f64 / bins as f64)
                        .collect();
                    let mut probs = vec![0.0f64; bins];
                    for &v in values {
                        probs[bin_of(v, lo, hi, bins)] += 1.0 / n;
                    }
                    perturb(&mut probs, scale, &mut rng);
                    ColumnDist::NumBins { edges, probs }
                }
            }
        })
        .collect();
    MarginalModel { columns }
}

pub(super) fn category_frequencies(codes: &[u32], n_cats: usize) -> Vec<f64> {
    let mut probs = vec![0.0f64; n_cats];
    for &c in codes {
        probs[c as usize] += 1.0;
    }
    let n = codes.len() as f64;
    for p in &mut probs {
        *p /= n;
    }
    probs
}

pub(super) fn bin_of(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((value - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
}

fn perturb(probs: &mut [f64], scale: f64, rng: &mut impl Rng) {
    for p in probs.iter_mut() {
        *p = (*p + laplace(scale, rng)).max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in probs.iter_mut() {
            *p /= total;
        }
    } else {
        let uniform = 1.0 / probs.len() as f64;
        probs.fill(uniform);
    }
}

/// Laplace draw by inverse CDF.
pub(super) fn laplace(scale: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_is_centered_and_scaled() {
        let mut rng = SeededRng::new(5).rng();
        let n = 20000;
        let scale = 2.0;
        let draws: Vec<f64> = (0..n).map(|_| laplace(scale, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let mean_abs = draws.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        // E|X| = scale for Laplace.
        assert!((mean_abs - scale).abs() < 0.1, "mean abs {mean_abs}");
    }

    #[test]
    fn bin_of_clamps_to_range() {
        assert_eq!(bin_of(0.0, 0.0, 10.0, 10), 0);
        assert_eq!(bin_of(10.0, 0.0, 10.0, 10), 9);
        assert_eq!(bin_of(9.999, 0.0, 10.0, 10), 9);
    }
}
