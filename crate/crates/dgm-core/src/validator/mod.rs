//! Trainable, calibrated binary scorers for join validation.
//!
//! Training splits the labeled data 70/15/15 into fit, select, and calibrate
//! parts: every grid point is fitted on the first, the best is chosen by
//! AUROC on the second, and the sigmoid calibration is fitted on the third.
//! The one-class backend trains on positives only and keeps its raw
//! transfer-function scores (its calibration stays the identity).

pub mod calibrate;
pub mod forest;
pub mod knn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::join::JoinScorer;
use crate::rng::SeededRng;
use crate::table::{ColumnMeta, DataTable};
use rand::seq::SliceRandom;

pub use calibrate::{auroc, brier, Calibration};
pub use forest::{ForestParams, RandomForest};
pub use knn::{KnnModel, OneClassModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidatorBackend {
    RandomForest,
    Knn,
    OneClassDistance,
}

/// Candidate settings per backend; selection picks by AUROC on the select
/// split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperparameterGrid {
    pub forest: Vec<ForestParams>,
    pub knn_k: Vec<usize>,
    pub one_class_k: Vec<usize>,
}

impl HyperparameterGrid {
    /// The regular search space.
    pub fn full() -> Self {
        let mut forest = Vec::new();
        for &n_trees in &[50, 200] {
            for &max_depth in &[8, 16] {
                for &min_leaf in &[1, 5] {
                    forest.push(ForestParams {
                        n_trees,
                        max_depth,
                        min_leaf,
                    });
                }
            }
        }
        Self {
            forest,
            knn_k: vec![5, 15, 31],
            one_class_k: vec![5, 15],
        }
    }

    /// A deliberately starved search space that reproduces the
    /// underconfident regime: a couple of stumps, oversized neighbourhoods.
    pub fn degraded() -> Self {
        Self {
            forest: vec![ForestParams {
                n_trees: 2,
                max_depth: 1,
                min_leaf: 40,
            }],
            knn_k: vec![101],
            one_class_k: vec![50],
        }
    }

    fn validate(&self, backend: ValidatorBackend) -> Result<()> {
        let empty = match backend {
            ValidatorBackend::RandomForest => self.forest.is_empty(),
            ValidatorBackend::Knn => self.knn_k.is_empty(),
            ValidatorBackend::OneClassDistance => self.one_class_k.is_empty(),
        };
        if empty {
            return Err(Error::InvalidConfig(format!(
                "hyperparameter grid is empty for backend {backend:?}"
            )));
        }
        Ok(())
    }
}

impl Default for HyperparameterGrid {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Debug, Clone)]
enum BackendModel {
    Forest(RandomForest),
    Knn(KnnModel),
    OneClass(OneClassModel),
}

/// A trained scorer mapping candidate rows to validity scores in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ValidatorModel {
    schema: Vec<ColumnMeta>,
    model: BackendModel,
    calibration: Calibration,
    select_auroc: f64,
    /// Brier scores (raw, calibrated) on the calibration split.
    calibrate_brier: (f64, f64),
}

impl ValidatorModel {
    pub fn backend(&self) -> ValidatorBackend {
        match self.model {
            BackendModel::Forest(_) => ValidatorBackend::RandomForest,
            BackendModel::Knn(_) => ValidatorBackend::Knn,
            BackendModel::OneClass(_) => ValidatorBackend::OneClassDistance,
        }
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    /// AUROC of the winning grid point on the selection split.
    pub fn select_auroc(&self) -> f64 {
        self.select_auroc
    }

    /// `(raw, calibrated)` Brier scores on the calibration split; the
    /// calibrated value never exceeds the raw one.
    pub fn calibrate_brier(&self) -> (f64, f64) {
        self.calibrate_brier
    }

    /// Uncalibrated backend scores.
    pub fn raw_score(&self, queries: &DataTable) -> Result<Vec<f64>> {
        if !self.feature_schema_matches(queries) {
            return Err(Error::SchemaMismatch(
                "query schema differs from the training feature schema".into(),
            ));
        }
        match &self.model {
            BackendModel::Forest(m) => Ok(m.score(queries)),
            BackendModel::Knn(m) => m.score(queries),
            BackendModel::OneClass(m) => m.score(queries),
        }
    }

    /// Calibrated scores in `[0, 1]`.
    pub fn score(&self, queries: &DataTable) -> Result<Vec<f64>> {
        Ok(self
            .raw_score(queries)?
            .into_iter()
            .map(|s| self.calibration.apply(s).clamp(0.0, 1.0))
            .collect())
    }

    fn feature_schema_matches(&self, queries: &DataTable) -> bool {
        queries.k() == self.schema.len()
            && self
                .schema
                .iter()
                .zip(queries.schema())
                .all(|(a, b)| a.name == b.name && a.categories() == b.categories())
    }
}

impl JoinScorer for ValidatorModel {
    fn score_rows(&self, queries: &DataTable) -> Result<Vec<f64>> {
        self.score(queries)
    }
}

/// Train a validator of the given backend.
pub fn train(
    features: &DataTable,
    labels: &[u8],
    backend: ValidatorBackend,
    grid: &HyperparameterGrid,
    seed: u64,
) -> Result<ValidatorModel> {
    if features.n() != labels.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} feature rows vs {} labels",
            features.n(),
            labels.len()
        )));
    }
    let n = features.n();
    if n < 4 {
        return Err(Error::TooFewRows { needed: 4, got: n });
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClassLabels);
    }
    grid.validate(backend)?;

    let root = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut root.substream(&[0x7370]).rng());
    let fit_end = ((0.70 * n as f64).round() as usize).clamp(1, n - 2);
    let select_end = ((0.85 * n as f64).round() as usize).clamp(fit_end + 1, n - 1);
    let fit_rows = &order[..fit_end];
    let select_rows = &order[fit_end..select_end];
    let calibrate_rows = &order[select_end..];

    if !has_both_classes(labels, fit_rows) {
        return Err(Error::SingleClassLabels);
    }

    let select_table = features.select_rows(select_rows);
    let select_labels: Vec<u8> = select_rows.iter().map(|&r| labels[r]).collect();

    let mut best: Option<(f64, BackendModel)> = None;
    let mut consider = |model: BackendModel, scores: Vec<f64>| {
        let a = auroc(&scores, &select_labels);
        if best.as_ref().is_none_or(|(b, _)| a > *b) {
            best = Some((a, model));
        }
    };

    match backend {
        ValidatorBackend::RandomForest => {
            for (g, &params) in grid.forest.iter().enumerate() {
                let m = RandomForest::fit(
                    features,
                    labels,
                    fit_rows,
                    params,
                    &root.substream(&[0x6674, g as u64]),
                );
                let scores = m.score(&select_table);
                consider(BackendModel::Forest(m), scores);
            }
        }
        ValidatorBackend::Knn => {
            for &k in &grid.knn_k {
                let m = KnnModel::fit(features, labels, fit_rows, k)?;
                let scores = m.score(&select_table)?;
                consider(BackendModel::Knn(m), scores);
            }
        }
        ValidatorBackend::OneClassDistance => {
            for &k in &grid.one_class_k {
                let m = OneClassModel::fit(features, labels, fit_rows, k)?;
                let scores = m.score(&select_table)?;
                consider(BackendModel::OneClass(m), scores);
            }
        }
    }
    let (select_auroc, model) = best.expect("grid validated non-empty");

    // The one-class scorer's transfer function is already a probability-like
    // value; it keeps raw scores.
    let calibrate_table = features.select_rows(calibrate_rows);
    let calibrate_labels: Vec<u8> = calibrate_rows.iter().map(|&r| labels[r]).collect();
    let raw = match &model {
        BackendModel::Forest(m) => m.score(&calibrate_table),
        BackendModel::Knn(m) => m.score(&calibrate_table)?,
        BackendModel::OneClass(m) => m.score(&calibrate_table)?,
    };
    let calibration = if matches!(model, BackendModel::OneClass(_)) {
        Calibration::Identity
    } else {
        calibrate::fit_sigmoid(&raw, &calibrate_labels)
    };
    let calibrated: Vec<f64> = raw.iter().map(|&s| calibration.apply(s)).collect();
    let raw_clamped: Vec<f64> = raw.iter().map(|s| s.clamp(0.0, 1.0)).collect();
    let calibrate_brier = (
        calibrate::brier(&raw_clamped, &calibrate_labels),
        calibrate::brier(&calibrated, &calibrate_labels),
    );

    Ok(ValidatorModel {
        schema: features.schema().to_vec(),
        model,
        calibration,
        select_auroc,
        calibrate_brier,
    })
}

fn has_both_classes(labels: &[u8], rows: &[usize]) -> bool {
    rows.iter().any(|&r| labels[r] == 0) && rows.iter().any(|&r| labels[r] == 1)
}

/// One bin of a reliability diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub mean_score: f64,
    pub positive_fraction: f64,
    pub count: usize,
}

/// Reliability diagram data for train and holdout inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityCurve {
    pub train: Vec<ReliabilityBin>,
    pub holdout: Vec<ReliabilityBin>,
}

impl ReliabilityCurve {
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(["split", "lo", "hi", "mean_score", "positive_fraction", "count"])?;
        for (split, bins) in [("train", &self.train), ("holdout", &self.holdout)] {
            for b in bins {
                w.write_record(&[
                    split.to_string(),
                    b.lo.to_string(),
                    b.hi.to_string(),
                    b.mean_score.to_string(),
                    b.positive_fraction.to_string(),
                    b.count.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Bin `(score, label)` pairs into `bins` equal-width score bins.
pub fn reliability_from_scores(scores: &[f64], labels: &[u8], bins: usize) -> Vec<ReliabilityBin> {
    let mut sums = vec![0.0f64; bins];
    let mut pos = vec![0.0f64; bins];
    let mut counts = vec![0usize; bins];
    for (&s, &l) in scores.iter().zip(labels) {
        let b = ((s * bins as f64) as usize).min(bins - 1);
        sums[b] += s;
        pos[b] += f64::from(l);
        counts[b] += 1;
    }
    (0..bins)
        .map(|b| ReliabilityBin {
            lo: b as f64 / bins as f64,
            hi: (b + 1) as f64 / bins as f64,
            mean_score: if counts[b] > 0 {
                sums[b] / counts[b] as f64
            } else {
                0.0
            },
            positive_fraction: if counts[b] > 0 {
                pos[b] / counts[b] as f64
            } else {
                0.0
            },
            count: counts[b],
        })
        .collect()
}

/// Reliability curves of a model on train and holdout data.
pub fn reliability(
    model: &ValidatorModel,
    train_features: &DataTable,
    train_labels: &[u8],
    holdout_features: &DataTable,
    holdout_labels: &[u8],
    bins: usize,
) -> Result<ReliabilityCurve> {
    if bins < 2 {
        return Err(Error::InvalidConfig("reliability needs bins >= 2".into()));
    }
    let train_scores = model.score(train_features)?;
    let holdout_scores = model.score(holdout_features)?;
    Ok(ReliabilityCurve {
        train: reliability_from_scores(&train_scores, train_labels, bins),
        holdout: reliability_from_scores(&holdout_scores, holdout_labels, bins),
    })
}
