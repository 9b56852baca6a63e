//! Experiment presets: fixed parameter grids that sweep one factor of the
//! pipeline and emit one CSV row per (parameter point, repeat) with the full
//! metric set.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;

use dgm_core::dummy::{default_sweep, ratio_sweep, DummySpec};
use dgm_core::generate::{structure_search_cost, GeneratorConfig};
use dgm_core::join::{JoinScorer, JoinStrategy};
use dgm_core::metrics::{evaluate_all, MetricsReport};
use dgm_core::partition::random_partition;
use dgm_core::table::{split, DataTable};
use dgm_core::validator::ValidatorBackend;

use crate::config::{PipelineConfig, ValidatorSection};
use crate::run::{
    build_partition, derive_seed, join_parts, prepare, synthesize_parts, to_schema_order,
    write_manifest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExperimentPreset {
    /// Utility/privacy vs number of random partitions (1..6).
    PartitionSweep,
    /// Concatenation vs validated joining on identical samples.
    JoinCompare,
    /// Wall-clock per stage plus the structure-search cost counter.
    Timing,
    /// Both joiners across dummy tables of rising cross-partition
    /// correlation.
    CorrelationSweep,
    /// The three validator backends on identical samples.
    ValidatorCompare,
    /// Static acceptance thresholds 0.1..0.9.
    ThresholdSweep,
}

impl ExperimentPreset {
    pub fn file_stem(self) -> &'static str {
        match self {
            ExperimentPreset::PartitionSweep => "partition_sweep",
            ExperimentPreset::JoinCompare => "join_compare",
            ExperimentPreset::Timing => "timing",
            ExperimentPreset::CorrelationSweep => "correlation_sweep",
            ExperimentPreset::ValidatorCompare => "validator_compare",
            ExperimentPreset::ThresholdSweep => "threshold_sweep",
        }
    }
}

/// Run a preset and return the sweep CSV path.
pub fn run_experiment(
    preset: ExperimentPreset,
    config: &PipelineConfig,
    out_dir: &Path,
    repeats: Option<usize>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let repeats = repeats.unwrap_or(config.seeds.repeats).max(1);
    let master = config.seeds.master;
    write_manifest(config, master, out_dir)?;
    let path = out_dir.join(format!("{}.csv", preset.file_stem()));
    match preset {
        ExperimentPreset::PartitionSweep => partition_sweep(config, repeats, &path)?,
        ExperimentPreset::JoinCompare => join_compare(config, repeats, &path)?,
        ExperimentPreset::Timing => timing(config, &path)?,
        ExperimentPreset::CorrelationSweep => correlation_sweep(config, repeats, &path)?,
        ExperimentPreset::ValidatorCompare => validator_compare(config, repeats, &path)?,
        ExperimentPreset::ThresholdSweep => threshold_sweep(config, repeats, &path, None)?,
    }
    Ok(path)
}

fn write_sweep_csv(
    path: &Path,
    param_names: &[&str],
    rows: &[(Vec<String>, MetricsReport)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<&str> = param_names
        .iter()
        .copied()
        .chain(MetricsReport::CSV_HEADER)
        .collect();
    w.write_record(&header)?;
    for (params, report) in rows {
        let record: Vec<String> = params.iter().cloned().chain(report.csv_row()).collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Repeat-safe pipeline execution with a repeat-specific master seed; the
/// generator template list is broadcast over the partition count.
#[allow(clippy::too_many_arguments)]
fn pipeline_run(
    pair: &dgm_core::table::SplitPair,
    spec: &dgm_core::partition::PartitionSpec,
    generators: &[GeneratorConfig],
    join: &dgm_core::join::JoinConfig,
    validator: &ValidatorSection,
    label: Option<&str>,
    master: u64,
    scorer: Option<&dyn JoinScorer>,
) -> Result<(MetricsReport, DataTable, bool)> {
    let target = join.target_size;
    let parts = synthesize_parts(&pair.train, spec, generators, target, master)?;
    let (joined, _trace, truncated) =
        join_parts(&pair.train, spec, &parts, join, validator, master, scorer)?;
    let synthetic = to_schema_order(&pair.train, &joined)?;
    let report = evaluate_all(&pair.train, &synthetic, &pair.holdout, label)?;
    Ok((report, synthetic, truncated))
}

fn broadcast_generators(template: &GeneratorConfig, n_p: usize) -> Vec<GeneratorConfig> {
    (0..n_p).map(|_| template.clone()).collect()
}

fn partition_sweep(config: &PipelineConfig, repeats: usize, path: &Path) -> Result<()> {
    let master = config.seeds.master;
    let pair = prepare(config, master)?;
    let k = pair.train.k();
    let grid: Vec<usize> = (1..=6).filter(|&n_p| n_p <= k).collect();
    let template = &config.generators[0];

    let points: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&n_p| (0..repeats).map(move |rep| (n_p, rep)))
        .collect();
    let rows: Vec<(Vec<String>, MetricsReport)> = points
        .par_iter()
        .map(|&(n_p, rep)| {
            let run_seed = derive_seed(master, 0x505, (n_p * 1000 + rep) as u64);
            let spec = random_partition(k, n_p, run_seed)?;
            let join = config.join.to_join_config(pair.train.n());
            let (report, _, _) = pipeline_run(
                &pair,
                &spec,
                &broadcast_generators(template, n_p),
                &join,
                &config.validator,
                config.eval.label_column.as_deref(),
                run_seed,
                None,
            )?;
            Ok((
                vec![n_p.to_string(), rep.to_string(), run_seed.to_string()],
                report,
            ))
        })
        .collect::<Result<_>>()?;
    write_sweep_csv(path, &["n_p", "repeat", "seed"], &rows)
}

fn join_compare(config: &PipelineConfig, repeats: usize, path: &Path) -> Result<()> {
    let master = config.seeds.master;
    let pair = prepare(config, master)?;
    let rows: Vec<(Vec<String>, MetricsReport)> = (0..repeats)
        .into_par_iter()
        .map(|rep| {
            let run_seed = derive_seed(master, 0x4a43, rep as u64);
            let spec = build_partition(&config.partition, &pair.train, run_seed)?;
            let mut out = Vec::new();
            for strategy in [JoinStrategy::Concat, JoinStrategy::Validated] {
                let mut join = config.join.to_join_config(pair.train.n());
                join.strategy = strategy;
                // Identical samples: the synthesis seed does not depend on
                // the joiner.
                let (report, _, _) = pipeline_run(
                    &pair,
                    &spec,
                    &config.generators,
                    &join,
                    &config.validator,
                    config.eval.label_column.as_deref(),
                    run_seed,
                    None,
                )?;
                let name = match strategy {
                    JoinStrategy::Concat => "concat",
                    JoinStrategy::Validated => "validated",
                };
                out.push((
                    vec![name.to_string(), rep.to_string(), run_seed.to_string()],
                    report,
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    write_sweep_csv(path, &["joiner", "repeat", "seed"], &rows)
}

fn timing(config: &PipelineConfig, path: &Path) -> Result<()> {
    let master = config.seeds.master;
    let pair = prepare(config, master)?;
    let k = pair.train.k();
    let template = &config.generators[0];
    let max_parents = template.bn.max_parents;

    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n_p",
        "stage",
        "seconds",
        "structure_search_cost",
    ])?;
    for n_p in [1usize, 2, 4] {
        if n_p > k {
            continue;
        }
        let cost = structure_search_cost(k, n_p, max_parents)?;
        let run_seed = derive_seed(master, 0x74, n_p as u64);
        let spec = random_partition(k, n_p, run_seed)?;
        let join = config.join.to_join_config(pair.train.n());

        let fit_start = Instant::now();
        let parts = synthesize_parts(
            &pair.train,
            &spec,
            &broadcast_generators(template, n_p),
            join.target_size,
            run_seed,
        )?;
        let fit_seconds = fit_start.elapsed().as_secs_f64();

        let join_start = Instant::now();
        let (joined, _, _) = join_parts(
            &pair.train,
            &spec,
            &parts,
            &join,
            &config.validator,
            run_seed,
            None,
        )?;
        let join_seconds = join_start.elapsed().as_secs_f64();

        let eval_start = Instant::now();
        let synthetic = to_schema_order(&pair.train, &joined)?;
        let _ = evaluate_all(
            &pair.train,
            &synthetic,
            &pair.holdout,
            config.eval.label_column.as_deref(),
        )?;
        let eval_seconds = eval_start.elapsed().as_secs_f64();

        for (stage, seconds) in [
            ("fit_sample", fit_seconds),
            ("join", join_seconds),
            ("evaluate", eval_seconds),
        ] {
            w.write_record(&[
                n_p.to_string(),
                stage.to_string(),
                format!("{seconds:.6}"),
                cost.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dummy-data dimensions used by the correlation sweep preset.
const SWEEP_GROUP_COLUMNS: usize = 3;
const SWEEP_ROWS: usize = 600;

fn correlation_sweep(config: &PipelineConfig, repeats: usize, path: &Path) -> Result<()> {
    let master = config.seeds.master;
    let (gammas, _) = default_sweep();
    let seeds: Vec<u64> = (0..repeats as u64).map(|r| derive_seed(master, 0x6353, r)).collect();
    let base = DummySpec::new(SWEEP_GROUP_COLUMNS, SWEEP_GROUP_COLUMNS, SWEEP_ROWS, 1.0, 0);
    let samples = ratio_sweep(&base, &gammas, &seeds)?;
    let template = &config.generators[0];

    let rows: Vec<(Vec<String>, MetricsReport)> = samples
        .par_iter()
        .map(|sample| {
            let run_seed = derive_seed(sample.seed, 0x6352, (sample.gamma * 1e6) as u64);
            let pair = split(&sample.table, 0.2, run_seed)?;
            let spec = DummySpec::new(SWEEP_GROUP_COLUMNS, SWEEP_GROUP_COLUMNS, SWEEP_ROWS, 1.0, 0)
                .partition();
            let mut out = Vec::new();
            for strategy in [JoinStrategy::Concat, JoinStrategy::Validated] {
                let mut join = config.join.to_join_config(pair.train.n());
                join.strategy = strategy;
                // Dummy tables carry no label column; ML metrics are
                // skipped regardless of the dataset config.
                let (report, _, _) = pipeline_run(
                    &pair,
                    &spec,
                    &broadcast_generators(template, 2),
                    &join,
                    &config.validator,
                    None,
                    run_seed,
                    None,
                )?;
                let name = match strategy {
                    JoinStrategy::Concat => "concat",
                    JoinStrategy::Validated => "validated",
                };
                out.push((
                    vec![
                        sample.gamma.to_string(),
                        sample.seed.to_string(),
                        sample.achieved_ratio.to_string(),
                        name.to_string(),
                    ],
                    report,
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    write_sweep_csv(path, &["gamma", "seed", "achieved_ratio", "joiner"], &rows)
}

fn validator_compare(config: &PipelineConfig, repeats: usize, path: &Path) -> Result<()> {
    let master = config.seeds.master;
    let pair = prepare(config, master)?;
    let backends = [
        ValidatorBackend::RandomForest,
        ValidatorBackend::Knn,
        ValidatorBackend::OneClassDistance,
    ];
    let points: Vec<(ValidatorBackend, usize)> = backends
        .iter()
        .flat_map(|&b| (0..repeats).map(move |rep| (b, rep)))
        .collect();
    let rows: Vec<(Vec<String>, MetricsReport)> = points
        .par_iter()
        .map(|&(backend, rep)| {
            let run_seed = derive_seed(master, 0x7663, rep as u64);
            let spec = build_partition(&config.partition, &pair.train, run_seed)?;
            let mut join = config.join.to_join_config(pair.train.n());
            join.strategy = JoinStrategy::Validated;
            let validator = ValidatorSection {
                backend,
                grid: config.validator.grid,
            };
            let (report, _, _) = pipeline_run(
                &pair,
                &spec,
                &config.generators,
                &join,
                &validator,
                config.eval.label_column.as_deref(),
                run_seed,
                None,
            )?;
            let name = match backend {
                ValidatorBackend::RandomForest => "random_forest",
                ValidatorBackend::Knn => "knn",
                ValidatorBackend::OneClassDistance => "one_class_distance",
            };
            Ok((
                vec![name.to_string(), rep.to_string(), run_seed.to_string()],
                report,
            ))
        })
        .collect::<Result<_>>()?;
    write_sweep_csv(path, &["backend", "repeat", "seed"], &rows)
}

/// Static thresholds 0.1..0.9. Decay is effectively disabled so each point
/// evaluates the dataset assembled at exactly that threshold; runs may
/// terminate with fewer rows than requested at strict thresholds.
pub fn threshold_sweep(
    config: &PipelineConfig,
    repeats: usize,
    path: &Path,
    scorer: Option<&dyn JoinScorer>,
) -> Result<()> {
    let master = config.seeds.master;
    let pair = prepare(config, master)?;
    let thetas: Vec<f64> = (1..=9).map(|t| f64::from(t) / 10.0).collect();

    // Scorer overrides cannot cross rayon tasks without Sync bounds; the
    // sweep is sequential, each run is internally parallel already.
    let mut rows = Vec::new();
    for &theta in &thetas {
        for rep in 0..repeats {
            let run_seed = derive_seed(master, 0x7473, rep as u64);
            let spec = build_partition(&config.partition, &pair.train, run_seed)?;
            let mut join = config.join.to_join_config(pair.train.n());
            join.strategy = JoinStrategy::Validated;
            join.theta = Some(theta);
            join.decay = 1e-12;
            match pipeline_run(
                &pair,
                &spec,
                &config.generators,
                &join,
                &config.validator,
                config.eval.label_column.as_deref(),
                run_seed,
                scorer,
            ) {
                Ok((report, synthetic, truncated)) => rows.push((
                    vec![
                        theta.to_string(),
                        rep.to_string(),
                        synthetic.n().to_string(),
                        truncated.to_string(),
                    ],
                    report,
                )),
                // Strict thresholds can starve the join below what the
                // metrics can evaluate; record nothing for that point.
                Err(error)
                    if matches!(
                        error.downcast_ref::<dgm_core::Error>(),
                        Some(dgm_core::Error::TooFewRows { .. })
                    ) =>
                {
                    eprintln!("note: theta {theta} repeat {rep} skipped ({error:#})");
                }
                Err(error) => return Err(error),
            }
        }
    }
    write_sweep_csv(path, &["theta", "repeat", "rows", "truncated"], &rows)
}

/// The `dummy` subcommand: emit one table or the full sweep, with a
/// manifest CSV naming every file.
pub fn run_dummy(
    out_dir: &Path,
    spec: &DummySpec,
    sweep: bool,
    repeats: usize,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let samples = if sweep {
        let (gammas, _) = default_sweep();
        let seeds: Vec<u64> = (0..repeats as u64).collect();
        ratio_sweep(spec, &gammas, &seeds)?
    } else {
        vec![dgm_core::dummy::sample_dummy(spec)?]
    };

    let manifest_path = out_dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest_path)?;
    w.write_record(["seed", "gamma", "achieved_ratio", "file"])?;
    for (i, sample) in samples.iter().enumerate() {
        let file = format!("dummy_{i:03}.csv");
        dgm_core::csv_io::write_csv(&sample.table, out_dir.join(&file))
            .with_context(|| format!("writing {file}"))?;
        if i == 0 {
            dgm_core::csv_io::write_schema_file(
                sample.table.schema(),
                out_dir.join("dummy.schema.json"),
            )?;
        }
        w.write_record(&[
            sample.seed.to_string(),
            sample.gamma.to_string(),
            sample.achieved_ratio.to_string(),
            file,
        ])?;
    }
    w.flush()?;
    Ok(manifest_path)
}
