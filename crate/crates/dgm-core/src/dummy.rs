//! Controlled Gaussian benchmark tables.
//!
//! Builds a random correlation matrix over two column groups, scales the
//! cross-group block by a factor `gamma`, repairs the result to the nearest
//! positive semi-definite correlation matrix by eigenvalue clipping, and
//! samples multivariate-normal rows through a Cholesky factor. The achieved
//! exterior/interior correlation ratio is reported from the final matrix,
//! since clipping can move it away from the requested scale.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{exterior_interior_ratio, PartitionSpec};
use crate::rng::SeededRng;
use crate::table::{ColumnData, ColumnMeta, DataTable};

const EIGENVALUE_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DummySpec {
    /// Columns in the first group.
    pub k1: usize,
    /// Columns in the second group.
    pub k2: usize,
    pub n: usize,
    /// Scale applied to the cross-group correlation block.
    pub gamma: f64,
    pub base_seed: u64,
}

impl DummySpec {
    pub fn new(k1: usize, k2: usize, n: usize, gamma: f64, base_seed: u64) -> Self {
        Self {
            k1,
            k2,
            n,
            gamma,
            base_seed,
        }
    }

    pub fn k(&self) -> usize {
        self.k1 + self.k2
    }

    /// The two-group partition this table is built around.
    pub fn partition(&self) -> PartitionSpec {
        let mut assignment = vec![0usize; self.k()];
        for a in assignment.iter_mut().skip(self.k1) {
            *a = 1;
        }
        PartitionSpec::new(2, assignment).expect("both groups non-empty")
    }

    fn validate(&self) -> Result<()> {
        if self.k1 < 1 || self.k2 < 1 {
            return Err(Error::InvalidConfig("k1 and k2 must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                got: self.n,
            });
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// One generated table with its target matrix and bookkeeping.
#[derive(Debug, Clone)]
pub struct DummySample {
    pub table: DataTable,
    pub achieved_ratio: f64,
    /// The final (post-repair) correlation matrix rows were drawn from.
    pub correlation: DMatrix<f64>,
    pub gamma: f64,
    pub seed: u64,
}

pub fn sample_dummy(spec: &DummySpec) -> Result<DummySample> {
    spec.validate()?;
    let k = spec.k();
    let root = SeededRng::new(spec.base_seed);

    // Random PSD base: A A^T for iid standard normal A, then normalize to a
    // correlation matrix.
    let mut rng = root.substream(&[0x6d78]).rng();
    let a = DMatrix::<f64>::from_fn(k, k, |_, _| rng.sample(StandardNormal));
    let sigma0 = &a * a.transpose();
    let mut corr = normalize_diagonal(&sigma0);

    // Scale both symmetric copies of the cross-group block.
    for i in 0..spec.k1 {
        for j in spec.k1..k {
            corr[(i, j)] *= spec.gamma;
            corr[(j, i)] *= spec.gamma;
        }
    }

    let corr = nearest_correlation(&corr);
    let report = exterior_interior_ratio(&corr, &spec.partition())?;

    let factor = cholesky_factor(&corr);
    let mut sample_rng = root.substream(&[0x6d73]).rng();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.n); k];
    for _ in 0..spec.n {
        let z = DVector::<f64>::from_fn(k, |_, _| sample_rng.sample(StandardNormal));
        let x = &factor * z;
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(x[j]);
        }
    }

    let schema: Vec<ColumnMeta> = (0..k)
        .map(|j| {
            let group = if j < spec.k1 { 1 } else { 2 };
            let index = if j < spec.k1 { j } else { j - spec.k1 };
            let lo = columns[j].iter().copied().fold(f64::INFINITY, f64::min);
            let hi = columns[j].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ColumnMeta::numerical(format!("g{group}_v{index}"), lo, hi)
        })
        .collect();
    let table = DataTable::new(schema, columns.into_iter().map(ColumnData::Numerical).collect())?;

    Ok(DummySample {
        table,
        achieved_ratio: report.ratio,
        correlation: corr,
        gamma: spec.gamma,
        seed: spec.base_seed,
    })
}

/// One table per `(gamma, seed)` pair, sorted by achieved ratio.
pub fn ratio_sweep(base: &DummySpec, gammas: &[f64], seeds: &[u64]) -> Result<Vec<DummySample>> {
    if gammas.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep lists must be non-empty".into()));
    }
    let mut out = Vec::with_capacity(gammas.len() * seeds.len());
    for &gamma in gammas {
        for &seed in seeds {
            let spec = DummySpec {
                gamma,
                base_seed: seed,
                ..*base
            };
            out.push(sample_dummy(&spec)?);
        }
    }
    out.sort_by(|a, b| {
        a.achieved_ratio
            .partial_cmp(&b.achieved_ratio)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// The default sweep preset: 21 gammas x 10 seeds = 210 tables spanning
/// achieved ratios from 0 to about 2.
pub fn default_sweep() -> (Vec<f64>, Vec<u64>) {
    let gammas = (0..21).map(|i| f64::from(i) * 0.1).collect();
    let seeds = (0..10).collect();
    (gammas, seeds)
}

fn normalize_diagonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    let scale: Vec<f64> = (0..k).map(|i| m[(i, i)].max(1e-300).sqrt()).collect();
    DMatrix::from_fn(k, k, |i, j| m[(i, j)] / (scale[i] * scale[j]))
}

/// Eigenvalue-clipping PSD repair. Matrices already safely positive
/// definite pass through untouched, so an unscaled matrix is returned
/// exactly as built.
fn nearest_correlation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|&v| v >= EIGENVALUE_CLIP) {
        return m.clone();
    }
    let clipped = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| v.max(EIGENVALUE_CLIP)),
    );
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    normalize_diagonal(&rebuilt)
}

/// Lower-triangular factor; falls back to the eigenvalue square root if the
/// Cholesky fails on the numerical boundary.
fn cholesky_factor(corr: &DMatrix<f64>) -> DMatrix<f64> {
    match Cholesky::new(corr.clone()) {
        Some(chol) => chol.unpack(),
        None => {
            let eig = SymmetricEigen::new(corr.clone());
            let sqrt = DVector::from_iterator(
                eig.eigenvalues.len(),
                eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()),
            );
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{mixed_correlation, pearson};

    #[test]
    fn gamma_zero_has_no_cross_correlation() {
        let spec = DummySpec::new(3, 3, 4000, 0.0, 7);
        let out = sample_dummy(&spec).unwrap();
        assert_eq!(out.achieved_ratio, 0.0);

        let bound = 3.0 / (spec.n as f64).sqrt();
        for i in 0..3 {
            for j in 3..6 {
                let x = out.table.column(i).as_numerical().unwrap();
                let y = out.table.column(j).as_numerical().unwrap();
                let r = pearson(x, y);
                assert!(r.abs() < bound, "cross pair ({i},{j}) correlation {r}");
            }
        }
    }

    #[test]
    fn gamma_one_leaves_the_base_matrix_untouched() {
        let spec = DummySpec::new(3, 3, 100, 1.0, 11);
        let out = sample_dummy(&spec).unwrap();
        // Rebuild sigma0's correlation matrix with the same stream and
        // compare exactly: no rescale and no clipping may intervene.
        let mut rng = SeededRng::new(11).substream(&[0x6d78]).rng();
        let a = DMatrix::<f64>::from_fn(6, 6, |_, _| rng.sample(StandardNormal));
        let sigma0 = &a * a.transpose();
        let expected = normalize_diagonal(&sigma0);
        assert_eq!(out.correlation, expected);
    }

    #[test]
    fn achieved_ratio_matches_block_norm_recomputation() {
        let spec = DummySpec::new(3, 3, 50, 2.0, 5);
        let out = sample_dummy(&spec).unwrap();
        // Independent oracle: recompute the Frobenius block norms from the
        // emitted matrix.
        let m = &out.correlation;
        let mut interior = 0.0;
        let mut exterior = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let same_group = (i < 3) == (j < 3);
                if same_group {
                    interior += m[(i, j)] * m[(i, j)];
                } else {
                    exterior += m[(i, j)] * m[(i, j)];
                }
            }
        }
        let expected = exterior.sqrt() / interior.sqrt();
        assert!((out.achieved_ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn emitted_matrices_are_valid_correlations() {
        for gamma in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let out = sample_dummy(&DummySpec::new(4, 2, 10, gamma, 3)).unwrap();
            let m = &out.correlation;
            for i in 0..6 {
                assert!((m[(i, i)] - 1.0).abs() < 1e-9, "unit diagonal");
            }
            let eig = SymmetricEigen::new(m.clone());
            for v in eig.eigenvalues.iter() {
                assert!(*v >= -1e-9, "eigenvalue {v}");
            }
        }
    }

    #[test]
    fn empirical_correlation_converges_to_target() {
        let spec = DummySpec::new(3, 3, 10000, 1.3, 19);
        let out = sample_dummy(&spec).unwrap();
        let emp = mixed_correlation(&out.table).unwrap();
        let bound = 5.0 / (spec.n as f64).sqrt();
        let mut worst = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                worst = worst.max((emp[(i, j)] - out.correlation[(i, j)]).abs());
            }
        }
        assert!(worst < bound, "max entry error {worst} vs bound {bound}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DummySpec::new(2, 2, 64, 0.8, 23);
        let a = sample_dummy(&spec).unwrap();
        let b = sample_dummy(&spec).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.achieved_ratio, b.achieved_ratio);
    }

    #[test]
    fn sweep_covers_the_grid_and_tracks_gamma() {
        let base = DummySpec::new(3, 3, 60, 0.0, 0);
        let (gammas, seeds) = default_sweep();
        assert_eq!(gammas.len() * seeds.len(), 210);

        // Small sweep: ratios respond monotonically to gamma (rank
        // correlation across one seed).
        let single_seed = [4u64];
        let sweep = ratio_sweep(&base, &gammas, &single_seed).unwrap();
        assert_eq!(sweep.len(), 21);
        let mut by_gamma = sweep.clone();
        by_gamma.sort_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap());
        let ratios: Vec<f64> = by_gamma.iter().map(|s| s.achieved_ratio).collect();
        let gs: Vec<f64> = by_gamma.iter().map(|s| s.gamma).collect();
        let rho = spearman(&gs, &ratios);
        assert!(rho >= 0.9, "spearman(gamma, ratio) = {rho}");

        // Sorted output contract.
        for w in sweep.windows(2) {
            assert!(w[0].achieved_ratio <= w[1].achieved_ratio);
        }
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
            let mut r = vec![0.0; v.len()];
            for (pos, &i) in idx.iter().enumerate() {
                r[i] = pos as f64;
            }
            r
        };
        pearson(&rank(a), &rank(b))
    }
}
