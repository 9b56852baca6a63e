//! Row-wise joining of synthetic partition tables.
//!
//! Two strategies: random concatenation (independent per-part shuffles,
//! truncated and glued column-wise) and the validated joining loop, which
//! repeatedly aligns the current pools into candidate rows, scores them,
//! moves rows at or above the threshold into the output, and reshuffles the
//! remaining pool rows for the next round. The threshold starts at an
//! explicit value or at the quantile accepting the top fraction of
//! first-round scores, and decays additively after rounds that accept
//! nothing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::PartitionSpec;
use crate::rng::SeededRng;
use crate::table::DataTable;
use rand::seq::SliceRandom;

const STREAM_INIT: u64 = 0x6a69;
const STREAM_ROUND: u64 = 0x6a72;
const STREAM_TRAIN: u64 = 0x6a74;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinStrategy {
    Concat,
    Validated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinConfig {
    pub strategy: JoinStrategy,
    pub target_size: usize,
    /// Static acceptance threshold; when unset the first-round score
    /// quantile implied by `auto_accept_fraction` is used.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_auto_accept")]
    pub auto_accept_fraction: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_early_stop")]
    pub early_stop_rounds: usize,
}

fn default_auto_accept() -> f64 {
    0.10
}

fn default_decay() -> f64 {
    0.02
}

fn default_max_iters() -> usize {
    200
}

fn default_early_stop() -> usize {
    20
}

impl JoinConfig {
    pub fn concat(target_size: usize) -> Self {
        Self {
            strategy: JoinStrategy::Concat,
            target_size,
            theta: None,
            auto_accept_fraction: default_auto_accept(),
            decay: default_decay(),
            max_iters: default_max_iters(),
            early_stop_rounds: default_early_stop(),
        }
    }

    pub fn validated(target_size: usize) -> Self {
        Self {
            strategy: JoinStrategy::Validated,
            ..Self::concat(target_size)
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_size < 1 {
            return Err(Error::InvalidConfig("target_size must be >= 1".into()));
        }
        if let Some(theta) = self.theta {
            // 0 is allowed: it is the accept-all setting that reduces the
            // loop to concatenation.
            if !(0.0..=1.0).contains(&theta) {
                return Err(Error::InvalidConfig(format!(
                    "theta must lie in [0, 1], got {theta}"
                )));
            }
        }
        if !(self.auto_accept_fraction > 0.0 && self.auto_accept_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "auto_accept_fraction must lie in (0, 1], got {}",
                self.auto_accept_fraction
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "decay must lie in (0, 1), got {}",
                self.decay
            )));
        }
        if self.max_iters < 1 || self.early_stop_rounds < 1 {
            return Err(Error::InvalidConfig(
                "max_iters and early_stop_rounds must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Scores candidate joined rows; higher means more plausible.
pub trait JoinScorer {
    fn score_rows(&self, queries: &DataTable) -> Result<Vec<f64>>;
}

/// Fixed-score scorer, mainly for tests and accept-all runs.
pub struct ConstantScorer(pub f64);

impl JoinScorer for ConstantScorer {
    fn score_rows(&self, queries: &DataTable) -> Result<Vec<f64>> {
        Ok(vec![self.0; queries.n()])
    }
}

/// Adapter for closure-based scorers.
pub struct FnScorer<F>(pub F);

impl<F: Fn(&DataTable) -> Vec<f64>> JoinScorer for FnScorer<F> {
    fn score_rows(&self, queries: &DataTable) -> Result<Vec<f64>> {
        Ok(self.0(queries))
    }
}

/// One round of the joining loop, as recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinTraceRound {
    pub round: usize,
    pub theta: f64,
    pub queries: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct JoinTrace {
    pub rounds: Vec<JoinTraceRound>,
}

impl JoinTrace {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(["round", "theta", "queries", "accepted"])?;
        for r in &self.rounds {
            w.write_record(&[
                r.round.to_string(),
                r.theta.to_string(),
                r.queries.to_string(),
                r.accepted.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Result of a validated join.
#[derive(Debug, Clone)]
pub struct JoinOutcome {
    pub table: DataTable,
    pub trace: JoinTrace,
    /// True when the loop terminated before reaching `target_size`.
    pub truncated: bool,
    /// Per output row: the source row index used from each part. Internal
    /// bookkeeping surfaced for audits; not part of `table`.
    pub provenance: Vec<Vec<usize>>,
}

/// Independently shuffle each part, truncate to `target_size`, and glue the
/// columns. Per-column value multisets equal the first `target_size` rows of
/// each shuffled part by construction.
pub fn concat_join(parts: &[&DataTable], target_size: usize, seed: u64) -> Result<DataTable> {
    if parts.is_empty() {
        return Err(Error::InvalidConfig("no parts to join".into()));
    }
    if target_size < 1 {
        return Err(Error::InvalidConfig("target_size must be >= 1".into()));
    }
    for (p, t) in parts.iter().enumerate() {
        if t.n() < target_size {
            return Err(Error::PartTooSmall {
                part: p,
                rows: t.n(),
                needed: target_size,
            });
        }
    }
    let root = SeededRng::new(seed);
    let shuffled: Vec<DataTable> = parts
        .iter()
        .enumerate()
        .map(|(p, t)| {
            let order = shuffled_indices(t.n(), root.substream(&[STREAM_INIT, p as u64]));
            t.select_rows(&order[..target_size])
        })
        .collect();
    DataTable::hconcat(&shuffled.iter().collect::<Vec<_>>())
}

/// Training material for a joining validator: `2n` rows, the first `n` being
/// the authentic table (columns grouped by partition) labeled 1, the rest
/// being per-partition independently shuffled rows labeled 0.
pub fn build_validator_training(
    x: &DataTable,
    spec: &PartitionSpec,
    seed: u64,
) -> Result<(DataTable, Vec<u8>)> {
    if x.n() == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    if spec.k() != x.k() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} columns, table has {}",
            spec.k(),
            x.k()
        )));
    }
    let root = SeededRng::new(seed);
    let authentic = x.select_columns(&spec.partition_column_order());

    let shuffled_parts: Vec<DataTable> = (0..spec.n_p())
        .map(|p| {
            let order = shuffled_indices(x.n(), root.substream(&[STREAM_TRAIN, p as u64]));
            x.select_columns(&spec.columns_of(p)).select_rows(&order)
        })
        .collect();
    let fake = DataTable::hconcat(&shuffled_parts.iter().collect::<Vec<_>>())?;

    let features = vconcat(&authentic, &fake)?;
    let mut labels = vec![1u8; x.n()];
    labels.extend(std::iter::repeat_n(0u8, x.n()));
    Ok((features, labels))
}

/// The validated joining loop.
///
/// Pools of remaining source rows (one per part, equal length) are aligned
/// into candidate rows, scored, and rows with score at or above the current
/// threshold move into the output, each source row used at most once. The
/// loop ends when the output reaches `target_size`, pools empty, the round
/// budget runs out, or after `early_stop_rounds` consecutive empty rounds
/// with the threshold already at the floor.
pub fn validated_join(
    parts: &[&DataTable],
    scorer: &dyn JoinScorer,
    config: &JoinConfig,
    seed: u64,
) -> Result<JoinOutcome> {
    config.validate()?;
    if parts.is_empty() {
        return Err(Error::InvalidConfig("no parts to join".into()));
    }
    let m = parts[0].n();
    if parts.iter().any(|t| t.n() != m) {
        return Err(Error::UnequalPartSizes);
    }
    if m < config.target_size {
        return Err(Error::PartTooSmall {
            part: 0,
            rows: m,
            needed: config.target_size,
        });
    }

    let root = SeededRng::new(seed);
    let mut pools: Vec<Vec<usize>> = (0..parts.len())
        .map(|p| shuffled_indices(m, root.substream(&[STREAM_INIT, p as u64])))
        .collect();

    let mut theta = config.theta;
    let mut provenance: Vec<Vec<usize>> = Vec::with_capacity(config.target_size);
    let mut trace = JoinTrace::default();
    let mut floor_stalls = 0usize;

    for round in 1..=config.max_iters {
        let pool_len = pools[0].len();
        if pool_len == 0 {
            break;
        }
        let queries = build_query(parts, &pools);
        let scores = scorer.score_rows(&queries)?;
        let th = *theta.get_or_insert_with(|| {
            first_round_cutoff(&scores, config.auto_accept_fraction)
        });

        let needed = config.target_size - provenance.len();
        let mut accepted_positions: Vec<usize> = Vec::new();
        for (i, &z) in scores.iter().enumerate() {
            if z >= th {
                accepted_positions.push(i);
                if accepted_positions.len() == needed {
                    break;
                }
            }
        }

        trace.rounds.push(JoinTraceRound {
            round,
            theta: th,
            queries: pool_len,
            accepted: accepted_positions.len(),
        });

        if accepted_positions.is_empty() {
            if th <= 0.0 {
                floor_stalls += 1;
                if floor_stalls >= config.early_stop_rounds {
                    break;
                }
            }
            theta = Some(th - config.decay);
        } else {
            floor_stalls = 0;
            for &i in &accepted_positions {
                provenance.push(pools.iter().map(|pool| pool[i]).collect());
            }
            let mut taken = vec![false; pool_len];
            for &i in &accepted_positions {
                taken[i] = true;
            }
            for pool in &mut pools {
                let mut cursor = 0;
                pool.retain(|_| {
                    let keep = !taken[cursor];
                    cursor += 1;
                    keep
                });
            }
        }

        if provenance.len() >= config.target_size || pools[0].is_empty() {
            break;
        }
        for (p, pool) in pools.iter_mut().enumerate() {
            pool.shuffle(
                &mut root
                    .substream(&[STREAM_ROUND, p as u64, round as u64])
                    .rng(),
            );
        }
    }

    let truncated = provenance.len() < config.target_size;
    let selected: Vec<DataTable> = parts
        .iter()
        .enumerate()
        .map(|(p, t)| {
            let rows: Vec<usize> = provenance.iter().map(|src| src[p]).collect();
            t.select_rows(&rows)
        })
        .collect();
    let table = DataTable::hconcat(&selected.iter().collect::<Vec<_>>())?;
    Ok(JoinOutcome {
        table,
        trace,
        truncated,
        provenance,
    })
}

fn shuffled_indices(n: usize, seed: SeededRng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed.rng());
    idx
}

fn build_query(parts: &[&DataTable], pools: &[Vec<usize>]) -> DataTable {
    let aligned: Vec<DataTable> = parts
        .iter()
        .zip(pools)
        .map(|(t, pool)| t.select_rows(pool))
        .collect();
    DataTable::hconcat(&aligned.iter().collect::<Vec<_>>())
        .expect("pools share one length by construction")
}

/// The score cutoff that admits the top `fraction` of first-round scores,
/// ties at the boundary included.
fn first_round_cutoff(scores: &[f64], fraction: f64) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let take = ((fraction * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[take - 1]
}

/// Stack two tables with identical schemas row-wise.
pub fn vconcat(a: &DataTable, b: &DataTable) -> Result<DataTable> {
    use crate::table::ColumnData;
    if !a.schema_compatible(b) {
        return Err(Error::SchemaMismatch(
            "row-stacked tables must share a schema".into(),
        ));
    }
    let columns: Vec<ColumnData> = a
        .columns()
        .iter()
        .zip(b.columns())
        .map(|(ca, cb)| match (ca, cb) {
            (ColumnData::Numerical(x), ColumnData::Numerical(y)) => {
                ColumnData::Numerical(x.iter().chain(y).copied().collect())
            }
            (ColumnData::Categorical(x), ColumnData::Categorical(y)) => {
                ColumnData::Categorical(x.iter().chain(y).copied().collect())
            }
            _ => unreachable!("schema compatibility checked above"),
        })
        .collect();
    DataTable::new(a.schema().to_vec(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnData, ColumnMeta};

    fn num_table(name: &str, values: Vec<f64>) -> DataTable {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        DataTable::new(
            vec![ColumnMeta::numerical(name, lo.min(0.0), hi.max(0.0))],
            vec![ColumnData::Numerical(values)],
        )
        .unwrap()
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn single_part_concat_is_shuffled_truncation() {
        let t = num_table("x", (0..10).map(f64::from).collect());
        let out = concat_join(&[&t], 6, 5).unwrap();
        assert_eq!(out.n(), 6);
        let values = out.column(0).as_numerical().unwrap();
        let mut seen = std::collections::HashSet::new();
        for &v in values {
            assert!((0.0..10.0).contains(&v));
            assert!(seen.insert(v as i64), "no source row reused");
        }
    }

    #[test]
    fn concat_preserves_column_multisets() {
        let a = num_table("x", (0..100).map(f64::from).collect());
        let b = num_table("y", (0..100).map(|i| f64::from(i) * 2.0).collect());
        let out = concat_join(&[&a, &b], 100, 7).unwrap();
        assert_eq!(
            sorted(out.column(0).as_numerical().unwrap().to_vec()),
            sorted(a.column(0).as_numerical().unwrap().to_vec())
        );
        assert_eq!(
            sorted(out.column(1).as_numerical().unwrap().to_vec()),
            sorted(b.column(0).as_numerical().unwrap().to_vec())
        );
    }

    #[test]
    fn constant_parts_force_the_join() {
        let a = num_table("x", vec![4.0; 20]);
        let b = num_table("y", vec![9.0; 20]);
        let out = concat_join(&[&a, &b], 10, 1).unwrap();
        for i in 0..10 {
            assert_eq!(out.column(0).as_numerical().unwrap()[i], 4.0);
            assert_eq!(out.column(1).as_numerical().unwrap()[i], 9.0);
        }
    }

    #[test]
    fn concat_rejects_small_parts() {
        let a = num_table("x", vec![1.0, 2.0]);
        assert!(matches!(
            concat_join(&[&a], 3, 0),
            Err(Error::PartTooSmall { .. })
        ));
    }

    #[test]
    fn accept_all_scorer_terminates_in_one_round() {
        let a = num_table("x", (0..30).map(f64::from).collect());
        let b = num_table("y", (0..30).map(|i| f64::from(i) + 100.0).collect());
        let config = JoinConfig::validated(12);
        let out = validated_join(&[&a, &b], &ConstantScorer(1.0), &config, 3).unwrap();
        assert_eq!(out.table.n(), 12);
        assert!(!out.truncated);
        assert_eq!(out.trace.rounds.len(), 1);

        // Accept-all is exactly the concatenation prefix under the same seed.
        let concat = concat_join(&[&a, &b], 12, 3).unwrap();
        assert_eq!(out.table, concat);
    }

    #[test]
    fn zero_scorer_walks_theta_down_then_accepts() {
        let a = num_table("x", (0..8).map(f64::from).collect());
        let mut config = JoinConfig::validated(8).with_theta(0.5);
        config.decay = 0.02;
        let out = validated_join(&[&a], &ConstantScorer(0.0), &config, 1).unwrap();
        assert!(!out.truncated);
        let rounds = &out.trace.rounds;
        // 25 stalled rounds while theta walks 0.5 -> 0.02, acceptance at 0.
        assert_eq!(rounds.len(), 26);
        for w in rounds.windows(2) {
            assert!(w[1].theta < w[0].theta, "theta strictly decreasing");
        }
        assert!(rounds[..25].iter().all(|r| r.accepted == 0));
        assert!(rounds[25].theta.abs() < 1e-12);
        assert_eq!(rounds[25].accepted, 8);
    }

    #[test]
    fn oracle_scorer_only_admits_valid_joins() {
        // Validity: sign of part-1 value equals sign of part-2 value.
        let m = 400;
        let xs: Vec<f64> = (0..m)
            .map(|i| if i % 2 == 0 { 1.0 + i as f64 } else { -1.0 - i as f64 })
            .collect();
        let ys: Vec<f64> = (0..m)
            .map(|i| if (i / 2) % 2 == 0 { 2.0 + i as f64 } else { -2.0 - i as f64 })
            .collect();
        let a = num_table("x", xs);
        let b = num_table("y", ys);
        let oracle = FnScorer(|q: &DataTable| {
            let x = q.column(0).as_numerical().unwrap();
            let y = q.column(1).as_numerical().unwrap();
            x.iter()
                .zip(y)
                .map(|(&u, &v)| if u.signum() == v.signum() { 1.0 } else { 0.0 })
                .collect()
        });
        let config = JoinConfig::validated(200).with_theta(0.5);
        let out = validated_join(&[&a, &b], &oracle, &config, 9).unwrap();
        assert!(!out.truncated);
        let x = out.table.column(0).as_numerical().unwrap();
        let y = out.table.column(1).as_numerical().unwrap();
        for (u, v) in x.iter().zip(y) {
            assert_eq!(u.signum(), v.signum(), "accepted row violates the predicate");
        }
    }

    #[test]
    fn provenance_rows_are_unique_per_part() {
        let a = num_table("x", (0..50).map(f64::from).collect());
        let b = num_table("y", (0..50).map(f64::from).collect());
        let config = JoinConfig::validated(40);
        let out = validated_join(&[&a, &b], &ConstantScorer(0.8), &config, 2).unwrap();
        for p in 0..2 {
            let mut used: Vec<usize> = out.provenance.iter().map(|src| src[p]).collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used.len(), out.provenance.len());
        }
    }

    #[test]
    fn unequal_part_sizes_are_rejected() {
        let a = num_table("x", vec![1.0, 2.0, 3.0]);
        let b = num_table("y", vec![1.0, 2.0]);
        let config = JoinConfig::validated(2);
        assert!(matches!(
            validated_join(&[&a, &b], &ConstantScorer(1.0), &config, 0),
            Err(Error::UnequalPartSizes)
        ));
    }

    #[test]
    fn nan_scores_hit_the_early_stop_guard() {
        let a = num_table("x", (0..5).map(f64::from).collect());
        let mut config = JoinConfig::validated(5).with_theta(0.0);
        config.early_stop_rounds = 4;
        let out = validated_join(&[&a], &ConstantScorer(f64::NAN), &config, 0).unwrap();
        assert!(out.truncated);
        assert_eq!(out.table.n(), 0);
        assert_eq!(out.trace.rounds.len(), 4);
    }

    #[test]
    fn validator_training_single_row_degenerates() {
        let t = num_table("x", vec![5.0]);
        let spec = PartitionSpec::new(1, vec![0]).unwrap();
        let (features, labels) = build_validator_training(&t, &spec, 0).unwrap();
        assert_eq!(features.n(), 2);
        assert_eq!(labels, vec![1, 0]);
        let col = features.column(0).as_numerical().unwrap();
        assert_eq!(col, &[5.0, 5.0]);
    }

    #[test]
    fn shuffle_destroys_cross_partition_pairing() {
        // Two perfectly correlated columns split across partitions: after
        // independent shuffles, almost no fake row preserves the relation.
        let n = 1000;
        let values: Vec<f64> = (0..n).map(f64::from).collect();
        let t = DataTable::new(
            vec![
                ColumnMeta::numerical("x", 0.0, n as f64),
                ColumnMeta::numerical("y", 0.0, n as f64),
            ],
            vec![
                ColumnData::Numerical(values.clone()),
                ColumnData::Numerical(values),
            ],
        )
        .unwrap();
        let spec = PartitionSpec::new(2, vec![0, 1]).unwrap();
        let mut mismatches = 0usize;
        let mut total = 0usize;
        for seed in 0..10 {
            let (features, labels) = build_validator_training(&t, &spec, seed).unwrap();
            let x = features.column(0).as_numerical().unwrap();
            let y = features.column(1).as_numerical().unwrap();
            for i in 0..features.n() {
                if labels[i] == 0 {
                    total += 1;
                    if x[i] != y[i] {
                        mismatches += 1;
                    }
                }
            }
        }
        let rate = mismatches as f64 / total as f64;
        assert!(rate > 0.99, "mismatch rate {rate}");
    }

    #[test]
    fn single_partition_training_is_a_permutation() {
        let t = num_table("x", (0..100).map(f64::from).collect());
        let spec = PartitionSpec::new(1, vec![0]).unwrap();
        let (features, labels) = build_validator_training(&t, &spec, 4).unwrap();
        let x = features.column(0).as_numerical().unwrap();
        let authentic = sorted(x[..100].to_vec());
        let fake = sorted(x[100..].to_vec());
        assert_eq!(authentic, fake);
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 100);
    }
}
