//! Utility and privacy evaluation of synthetic tables.
//!
//! Utility: PCA eigenvalue/angle differences, average marginal Hellinger
//! distance, correlation-matrix difference, and machine-learning efficacy
//! (train-on-real vs train-on-synthetic classifier gaps). Privacy:
//! identifiability risk from entropy-weighted nearest-neighbour distances,
//! normalized median distance to the closest record, and the recall and
//! precision of a worst-case membership inference attack.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::correlation::mixed_correlation;
use crate::encode::Encoder;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::table::{ColumnData, ColumnKind, DataTable};
use crate::validator::{auroc, ForestParams, KnnModel, RandomForest};

/// Identification-risk level commonly cited as acceptable for release.
pub const EPS_RISK_THRESHOLD: f64 = 0.09;

const HELLINGER_BINS: usize = 10;
const ML_SEED: u64 = 0xd96a;

/// Everything the evaluation suite measures for one real/synthetic/holdout
/// triple. Machine-learning fields are absent when no label column applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pca_eigenvalue_diff: f64,
    pub pca_angle_diff: f64,
    pub hellinger_avg: f64,
    pub corr_diff_frobenius: f64,
    pub auroc_diff: Option<f64>,
    pub acc_diff_cv: Option<f64>,
    pub acc_diff_holdout: Option<f64>,
    pub eps_identifiability: f64,
    pub median_dcr_normalized: f64,
    pub median_dcr_is_normalized: bool,
    pub mia_recall: f64,
    pub mia_precision: f64,
    /// True when `eps_identifiability` is at or below the 9% release level.
    pub eps_below_threshold: bool,
}

impl MetricsReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub const CSV_HEADER: [&'static str; 13] = [
        "pca_eigenvalue_diff",
        "pca_angle_diff",
        "hellinger_avg",
        "corr_diff_frobenius",
        "auroc_diff",
        "acc_diff_cv",
        "acc_diff_holdout",
        "eps_identifiability",
        "median_dcr_normalized",
        "median_dcr_is_normalized",
        "mia_recall",
        "mia_precision",
        "eps_below_threshold",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.pca_eigenvalue_diff.to_string(),
            self.pca_angle_diff.to_string(),
            self.hellinger_avg.to_string(),
            self.corr_diff_frobenius.to_string(),
            opt(self.auroc_diff),
            opt(self.acc_diff_cv),
            opt(self.acc_diff_holdout),
            self.eps_identifiability.to_string(),
            self.median_dcr_normalized.to_string(),
            self.median_dcr_is_normalized.to_string(),
            self.mia_recall.to_string(),
            self.mia_precision.to_string(),
            self.eps_below_threshold.to_string(),
        ]
    }
}

fn check_schemas(real: &DataTable, synth: &DataTable) -> Result<()> {
    if !real.schema_compatible(synth) {
        return Err(Error::SchemaMismatch(
            "real and synthetic tables must share a schema".into(),
        ));
    }
    Ok(())
}

/// Average per-column Hellinger distance between real and synthetic
/// marginals. Categorical columns compare category frequencies; numerical
/// columns compare 10 equal-width bins over the union range.
pub fn hellinger_avg(real: &DataTable, synth: &DataTable) -> Result<f64> {
    check_schemas(real, synth)?;
    let mut total = 0.0;
    for j in 0..real.k() {
        total += match (real.column(j), synth.column(j)) {
            (ColumnData::Categorical(a), ColumnData::Categorical(b)) => {
                let n_cats = real.schema()[j].categories().unwrap().len();
                let p = frequencies_cat(a, n_cats);
                let q = frequencies_cat(b, n_cats);
                hellinger(&p, &q)
            }
            (ColumnData::Numerical(a), ColumnData::Numerical(b)) => {
                let lo = a
                    .iter()
                    .chain(b.iter())
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                let hi = a
                    .iter()
                    .chain(b.iter())
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let p = frequencies_binned(a, lo, hi, HELLINGER_BINS);
                let q = frequencies_binned(b, lo, hi, HELLINGER_BINS);
                hellinger(&p, &q)
            }
            _ => unreachable!("schemas checked compatible"),
        };
    }
    Ok(total / real.k() as f64)
}

fn frequencies_cat(codes: &[u32], n_cats: usize) -> Vec<f64> {
    let mut f = vec![0.0; n_cats];
    for &c in codes {
        f[c as usize] += 1.0;
    }
    let n = codes.len().max(1) as f64;
    f.iter_mut().for_each(|x| *x /= n);
    f
}

fn frequencies_binned(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut f = vec![0.0; bins];
    for &v in values {
        let b = if hi > lo {
            (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        f[b] += 1.0;
    }
    let n = values.len().max(1) as f64;
    f.iter_mut().for_each(|x| *x /= n);
    f
}

/// `H(p, q) = (1/sqrt 2) * || sqrt(p) - sqrt(q) ||_2`.
pub fn hellinger(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    (s / 2.0).sqrt()
}

/// Frobenius norm of the difference between the two mixed-association
/// matrices.
pub fn correlation_diff(real: &DataTable, synth: &DataTable) -> Result<f64> {
    check_schemas(real, synth)?;
    let a = mixed_correlation(real)?;
    let b = mixed_correlation(synth)?;
    Ok((a - b).norm())
}

/// PCA population-alignment measures on the one-hot/z-score encoding fitted
/// on the real table.
///
/// Returns `(eigenvalue diff, angle diff)`: the former is the absolute
/// eigenvalue gap summed over sorted spectra, normalized by the real
/// spectrum's mass; the latter is the principal angle
/// `arccos |<v1_real, v1_synth>|` in `[0, pi/2]`.
pub fn pca_diffs(real: &DataTable, synth: &DataTable) -> Result<(f64, f64)> {
    check_schemas(real, synth)?;
    let encoder = Encoder::fit(real);
    if encoder.dims() < 2 {
        return Err(Error::InvalidConfig(
            "pca diffs need at least 2 encoded dimensions".into(),
        ));
    }
    let (real_vals, real_v1) = leading_spectrum(&covariance(&encoder, real)?);
    let (synth_vals, synth_v1) = leading_spectrum(&covariance(&encoder, synth)?);

    let real_mass: f64 = real_vals.iter().sum();
    let gap: f64 = real_vals
        .iter()
        .zip(&synth_vals)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let eigenvalue_diff = if real_mass > 0.0 { gap / real_mass } else { 0.0 };

    Ok((eigenvalue_diff, principal_angle(&real_v1, &synth_v1)))
}

/// Angle between two directions in `[0, pi/2]`, sign-invariant. Computed
/// via `atan2(|perpendicular|, |dot|)`, which stays accurate where `acos`
/// loses precision (nearly parallel vectors).
fn principal_angle(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a).max(1e-300), norm(b).max(1e-300));
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    let flip = if dot < 0.0 { -1.0 } else { 1.0 };
    let cos = dot.abs().min(1.0);
    let perp_sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x / na - cos * flip * y / nb;
            d * d
        })
        .sum();
    perp_sq.sqrt().atan2(cos)
}

fn covariance(encoder: &Encoder, table: &DataTable) -> Result<DMatrix<f64>> {
    let m = encoder.encode(table)?;
    let n = m.n();
    let d = m.d();
    let mut means = vec![0.0f64; d];
    for i in 0..n {
        for (j, v) in m.row(i).iter().enumerate() {
            means[j] += v;
        }
    }
    means.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        let row = m.row(i);
        for a in 0..d {
            let xa = row[a] - means[a];
            for b in a..d {
                cov[(a, b)] += xa * (row[b] - means[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / n.max(1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}

/// Eigenvalues sorted descending (clamped at zero) plus the leading
/// eigenvector.
fn leading_spectrum(cov: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let v1: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    (values, v1)
}

/// Machine-learning efficacy gaps, sign convention: negative means the
/// synthetic data trains worse classifiers than the real data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlEfficacy {
    pub auroc_diff: f64,
    pub acc_diff_cv: f64,
    pub acc_diff_holdout: f64,
}

/// Train a small classifier set (random forest and k-NN) once on the real
/// training table and once on the synthetic table, and report holdout AUROC,
/// 5-fold cross-validation accuracy, and holdout accuracy differences.
pub fn ml_efficacy(
    real_train: &DataTable,
    synth: &DataTable,
    holdout: &DataTable,
    label_column: &str,
) -> Result<MlEfficacy> {
    check_schemas(real_train, synth)?;
    check_schemas(real_train, holdout)?;
    let label_idx = real_train
        .column_index(label_column)
        .ok_or_else(|| Error::MissingColumn {
            column: label_column.to_string(),
            place: "table schema".into(),
        })?;
    let n_cats = match &real_train.schema()[label_idx].kind {
        ColumnKind::Categorical { categories } => categories.len(),
        ColumnKind::Numerical { .. } => {
            return Err(Error::InvalidConfig(format!(
                "label column {label_column:?} must be categorical"
            )))
        }
    };
    if n_cats != 2 {
        return Err(Error::NonBinaryLabel(n_cats));
    }

    let real_eval = classifier_suite(real_train, holdout, label_idx)?;
    let synth_eval = classifier_suite(synth, holdout, label_idx)?;
    Ok(MlEfficacy {
        auroc_diff: synth_eval.0 - real_eval.0,
        acc_diff_cv: synth_eval.1 - real_eval.1,
        acc_diff_holdout: synth_eval.2 - real_eval.2,
    })
}

/// Mean (holdout AUROC, CV accuracy, holdout accuracy) over the classifier
/// set for one training table. Rows are put in a canonical sorted order
/// first so results do not depend on incoming row permutation.
fn classifier_suite(train: &DataTable, holdout: &DataTable, label_idx: usize) -> Result<(f64, f64, f64)> {
    let order = canonical_row_order(train);
    let train = train.select_rows(&order);
    let feature_cols: Vec<usize> = (0..train.k()).filter(|&j| j != label_idx).collect();
    let x = train.select_columns(&feature_cols);
    let y = label_vector(&train, label_idx);
    let hx = holdout.select_columns(&feature_cols);
    let hy = label_vector(holdout, label_idx);
    let n = train.n();
    let all_rows: Vec<usize> = (0..n).collect();

    let mut sum_auroc = 0.0;
    let mut sum_cv = 0.0;
    let mut sum_hold = 0.0;
    for clf in [Classifier::Forest, Classifier::Knn] {
        let scores = clf.fit_score(&x, &y, &all_rows, &hx)?;
        sum_auroc += auroc(&scores, &hy);
        sum_hold += accuracy(&scores, &hy);

        // Striped 5-fold CV over the canonical order.
        let mut cv_acc = 0.0;
        let mut folds_used = 0;
        for fold in 0..5 {
            let test_rows: Vec<usize> = (0..n).filter(|i| i % 5 == fold).collect();
            let fit_rows: Vec<usize> = (0..n).filter(|i| i % 5 != fold).collect();
            if test_rows.is_empty() || fit_rows.is_empty() {
                continue;
            }
            let fold_scores = clf.fit_score(&x, &y, &fit_rows, &x.select_rows(&test_rows))?;
            let fold_labels: Vec<u8> = test_rows.iter().map(|&r| y[r]).collect();
            cv_acc += accuracy(&fold_scores, &fold_labels);
            folds_used += 1;
        }
        sum_cv += cv_acc / folds_used.max(1) as f64;
    }
    Ok((sum_auroc / 2.0, sum_cv / 2.0, sum_hold / 2.0))
}

enum Classifier {
    Forest,
    Knn,
}

impl Classifier {
    fn fit_score(
        &self,
        x: &DataTable,
        y: &[u8],
        rows: &[usize],
        queries: &DataTable,
    ) -> Result<Vec<f64>> {
        match self {
            Classifier::Forest => {
                let params = ForestParams {
                    n_trees: 50,
                    max_depth: 12,
                    min_leaf: 2,
                };
                let forest = RandomForest::fit(x, y, rows, params, &SeededRng::new(ML_SEED));
                Ok(forest.score(queries))
            }
            Classifier::Knn => {
                let model = KnnModel::fit(x, y, rows, 5)?;
                model.score(queries)
            }
        }
    }
}

fn label_vector(table: &DataTable, label_idx: usize) -> Vec<u8> {
    table
        .column(label_idx)
        .as_categorical()
        .expect("label checked categorical")
        .iter()
        .map(|&c| c as u8)
        .collect()
}

fn accuracy(scores: &[f64], labels: &[u8]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores
        .iter()
        .zip(labels)
        .filter(|&(&s, &l)| u8::from(s >= 0.5) == l)
        .count() as f64
        / scores.len() as f64
}

/// Total order over table rows: numerical cells by value, categorical cells
/// by category index, column by column.
fn canonical_row_order(table: &DataTable) -> Vec<usize> {
    let mut order: Vec<usize> = (0..table.n()).collect();
    order.sort_by(|&a, &b| {
        for j in 0..table.k() {
            let cmp = match table.column(j) {
                ColumnData::Numerical(v) => v[a].partial_cmp(&v[b]).unwrap(),
                ColumnData::Categorical(v) => v[a].cmp(&v[b]),
            };
            if cmp != std::cmp::Ordering::Equal {
                return cmp;
            }
        }
        std::cmp::Ordering::Equal
    });
    order
}

/// Fraction of real records whose entropy-weighted nearest synthetic
/// neighbour is strictly closer than their nearest other real record.
pub fn eps_identifiability(real: &DataTable, synth: &DataTable) -> Result<f64> {
    check_schemas(real, synth)?;
    if real.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: real.n(),
        });
    }
    let encoder = Encoder::fit(real);
    let real_m = encoder.encode_entropy_weighted(real)?;
    let synth_m = encoder.encode_entropy_weighted(synth)?;
    let within = real_m.nearest_within();
    let cross = real_m.nearest_to(&synth_m);
    let hits = within
        .iter()
        .zip(&cross)
        .filter(|&(&r, &d)| d < r)
        .count();
    Ok(hits as f64 / real.n() as f64)
}

/// Median distance from synthetic rows to their closest real record,
/// normalized by the median nearest-neighbour distance within the real
/// table. Falls back to the unnormalized median (flagged) when the real
/// nearest-neighbour median is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianDcr {
    pub value: f64,
    pub normalized: bool,
}

pub fn median_dcr(real: &DataTable, synth: &DataTable) -> Result<MedianDcr> {
    check_schemas(real, synth)?;
    if real.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: real.n(),
        });
    }
    let encoder = Encoder::fit(real);
    let real_m = encoder.encode(real)?;
    let synth_m = encoder.encode(synth)?;
    let dcr = median(&synth_m.nearest_to(&real_m));
    let real_nn = median(&real_m.nearest_within());
    if real_nn > 0.0 {
        Ok(MedianDcr {
            value: dcr / real_nn,
            normalized: true,
        })
    } else {
        Ok(MedianDcr {
            value: dcr,
            normalized: false,
        })
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        sorted[n / 2 - 1].midpoint(sorted[n / 2])
    }
}

/// Worst-case membership inference attack: the adversary holds full records
/// with ground-truth membership and predicts "member" when a record's
/// distance to its nearest synthetic row is below the median such distance.
pub fn mia_attack(
    known_records: &DataTable,
    membership: &[bool],
    synth: &DataTable,
) -> Result<(f64, f64)> {
    check_schemas(known_records, synth)?;
    if known_records.n() != membership.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} known records vs {} membership labels",
            known_records.n(),
            membership.len()
        )));
    }
    let encoder = Encoder::fit(known_records);
    let known_m = encoder.encode(known_records)?;
    let synth_m = encoder.encode(synth)?;
    let distances = known_m.nearest_to(&synth_m);
    let cutoff = median(&distances);

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&d, &member) in distances.iter().zip(membership) {
        let predicted = d < cutoff;
        match (predicted, member) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    Ok((recall, precision))
}

/// Run the whole suite. The membership-inference known set is a balanced
/// mix of training and holdout rows, drawn deterministically from the
/// canonical row order of each table. Machine-learning metrics need a
/// binary categorical `label` column and are skipped when `label` is unset.
pub fn evaluate_all(
    real_train: &DataTable,
    synth: &DataTable,
    holdout: &DataTable,
    label: Option<&str>,
) -> Result<MetricsReport> {
    check_schemas(real_train, synth)?;
    check_schemas(real_train, holdout)?;
    let (pca_eigenvalue_diff, pca_angle_diff) = pca_diffs(real_train, synth)?;
    let hellinger = hellinger_avg(real_train, synth)?;
    let corr = correlation_diff(real_train, synth)?;
    let ml = match label {
        Some(column) => Some(ml_efficacy(real_train, synth, holdout, column)?),
        None => None,
    };
    let eps = eps_identifiability(real_train, synth)?;
    let dcr = median_dcr(real_train, synth)?;

    let n_mia = real_train.n().min(holdout.n());
    let train_rows = canonical_row_order(real_train);
    let holdout_rows = canonical_row_order(holdout);
    let known = crate::join::vconcat(
        &real_train.select_rows(&train_rows[..n_mia]),
        &holdout.select_rows(&holdout_rows[..n_mia]),
    )?;
    let mut membership = vec![true; n_mia];
    membership.extend(std::iter::repeat_n(false, n_mia));
    let (mia_recall, mia_precision) = mia_attack(&known, &membership, synth)?;

    Ok(MetricsReport {
        pca_eigenvalue_diff,
        pca_angle_diff,
        hellinger_avg: hellinger,
        corr_diff_frobenius: corr,
        auroc_diff: ml.map(|m| m.auroc_diff),
        acc_diff_cv: ml.map(|m| m.acc_diff_cv),
        acc_diff_holdout: ml.map(|m| m.acc_diff_holdout),
        eps_identifiability: eps,
        median_dcr_normalized: dcr.value,
        median_dcr_is_normalized: dcr.normalized,
        mia_recall,
        mia_precision,
        eps_below_threshold: eps <= EPS_RISK_THRESHOLD,
    })
}
