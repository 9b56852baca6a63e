//! One synthesis run: split, partition, per-partition fit/sample, join,
//! evaluate, and write every artefact with a reproducibility manifest.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::Serialize;

use dgm_core::csv_io::{load_csv, write_csv, write_schema_file};
use dgm_core::generate::{fit, sample, GeneratorConfig};
use dgm_core::join::{
    build_validator_training, concat_join, validated_join, JoinScorer, JoinStrategy, JoinTrace,
};
use dgm_core::metrics::{evaluate_all, MetricsReport};
use dgm_core::partition::{correlation_partition, random_partition, PartitionSpec};
use dgm_core::table::{split, DataTable, SplitPair};
use dgm_core::validator::train;

use crate::config::{PartitionSection, PipelineConfig, ValidatorSection};

/// Derive a stage seed from the master seed; stable mixing so runs are
/// reproducible from the manifest alone.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut h = master ^ 0x9e37_79b9_7f4a_7c15;
    for w in [tag, index] {
        h ^= w.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
    }
    h
}

const TAG_FIT: u64 = 1;
const TAG_SAMPLE: u64 = 2;
const TAG_JOIN: u64 = 3;
const TAG_VALIDATOR: u64 = 4;
const TAG_PARTITION: u64 = 5;

pub struct SynthRun {
    pub synthetic: DataTable,
    pub report: MetricsReport,
    pub trace: Option<JoinTrace>,
    pub truncated: bool,
}

/// Load the dataset and produce the train/holdout split.
pub fn prepare(config: &PipelineConfig, master: u64) -> Result<SplitPair> {
    let table = load_csv(&config.dataset.csv, &config.dataset.schema)
        .with_context(|| format!("loading {}", config.dataset.csv.display()))?;
    Ok(split(&table, config.dataset.holdout_fraction, master)?)
}

pub fn build_partition(
    section: &PartitionSection,
    train: &DataTable,
    master: u64,
) -> Result<PartitionSpec> {
    Ok(match section {
        PartitionSection::Random { n_p } => {
            random_partition(train.k(), *n_p, derive_seed(master, TAG_PARTITION, 0))?
        }
        PartitionSection::Correlation => correlation_partition(train)?,
        PartitionSection::Explicit { parts } => PartitionSpec::from_names(train, parts)?,
    })
}

/// Fit one generator per partition and oversample each part to
/// `round(oversample_factor * target)` rows.
pub fn synthesize_parts(
    train: &DataTable,
    spec: &PartitionSpec,
    generators: &[GeneratorConfig],
    target: usize,
    master: u64,
) -> Result<Vec<DataTable>> {
    if generators.len() != spec.n_p() {
        return Err(anyhow!(
            "{} generators for {} partitions",
            generators.len(),
            spec.n_p()
        ));
    }
    spec.groups()
        .iter()
        .zip(generators)
        .enumerate()
        .map(|(p, (group, template))| {
            let slice = train.select_columns(group);
            let mut generator_config = template.clone();
            generator_config.seed = derive_seed(master, TAG_FIT, p as u64);
            let fitted = fit(&slice, &generator_config)
                .with_context(|| format!("fitting partition {p}"))?;
            let rows = ((template.oversample_factor * target as f64).round() as usize).max(target);
            Ok(sample(&fitted, rows, derive_seed(master, TAG_SAMPLE, p as u64))?)
        })
        .collect()
}

/// Join synthesized parts per the configured strategy. An explicit scorer
/// replaces the trained validator when given (used by experiment presets
/// with fixed scorers).
#[allow(clippy::too_many_arguments)]
pub fn join_parts(
    train: &DataTable,
    spec: &PartitionSpec,
    parts: &[DataTable],
    join: &dgm_core::join::JoinConfig,
    validator: &ValidatorSection,
    master: u64,
    scorer_override: Option<&dyn JoinScorer>,
) -> Result<(DataTable, Option<JoinTrace>, bool)> {
    let refs: Vec<&DataTable> = parts.iter().collect();
    match join.strategy {
        JoinStrategy::Concat => {
            let joined = concat_join(&refs, join.target_size, derive_seed(master, TAG_JOIN, 0))?;
            Ok((joined, None, false))
        }
        JoinStrategy::Validated => {
            let outcome = match scorer_override {
                Some(scorer) => {
                    validated_join(&refs, scorer, join, derive_seed(master, TAG_JOIN, 0))?
                }
                None => {
                    let (features, labels) = build_validator_training(
                        train,
                        spec,
                        derive_seed(master, TAG_VALIDATOR, 0),
                    )?;
                    let model = train_validator(&features, &labels, validator, master)?;
                    validated_join(&refs, &model, join, derive_seed(master, TAG_JOIN, 0))?
                }
            };
            Ok((outcome.table, Some(outcome.trace), outcome.truncated))
        }
    }
}

pub fn train_validator(
    features: &DataTable,
    labels: &[u8],
    section: &ValidatorSection,
    master: u64,
) -> Result<dgm_core::validator::ValidatorModel> {
    Ok(train(
        features,
        labels,
        section.backend,
        &section.grid.grid(),
        derive_seed(master, TAG_VALIDATOR, 1),
    )?)
}

/// Reorder a joined table (columns grouped by partition) back to the
/// reference schema order.
pub fn to_schema_order(reference: &DataTable, joined: &DataTable) -> Result<DataTable> {
    let order: Vec<usize> = reference
        .schema()
        .iter()
        .map(|m| {
            joined
                .column_index(&m.name)
                .ok_or_else(|| anyhow!("joined output lost column {:?}", m.name))
        })
        .collect::<Result<_>>()?;
    Ok(joined.select_columns(&order))
}

/// Execute the full pipeline in memory.
pub fn execute(config: &PipelineConfig, master: u64) -> Result<SynthRun> {
    let pair = prepare(config, master)?;
    let spec = build_partition(&config.partition, &pair.train, master)?;
    let target = config.join.target_size.unwrap_or(pair.train.n());
    let join = config.join.to_join_config(pair.train.n());
    let parts = synthesize_parts(&pair.train, &spec, &config.generators, target, master)?;
    let (joined, trace, truncated) = join_parts(
        &pair.train,
        &spec,
        &parts,
        &join,
        &config.validator,
        master,
        None,
    )?;
    let synthetic = to_schema_order(&pair.train, &joined)?;
    let report = evaluate_all(
        &pair.train,
        &synthetic,
        &pair.holdout,
        config.eval.label_column.as_deref(),
    )?;
    Ok(SynthRun {
        synthetic,
        report,
        trace,
        truncated,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    master_seed: u64,
    config_hash: String,
    config: &'a PipelineConfig,
}

pub fn write_manifest(config: &PipelineConfig, master: u64, out_dir: &Path) -> Result<()> {
    let manifest = Manifest {
        tool: "dgm",
        version: env!("CARGO_PKG_VERSION"),
        master_seed: master,
        config_hash: config.content_hash(),
        config,
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn write_report_row(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MetricsReport::CSV_HEADER)?;
    w.write_record(report.csv_row())?;
    w.flush()?;
    Ok(())
}

/// The `synth` subcommand: run the pipeline and write all artefacts.
pub fn run_synth(config: &PipelineConfig, out_dir: &Path, seed: Option<u64>) -> Result<PathBuf> {
    let master = seed.unwrap_or(config.seeds.master);
    std::fs::create_dir_all(out_dir)?;

    let pair = prepare(config, master)?;
    let spec = build_partition(&config.partition, &pair.train, master)?;
    spec.write(&pair.train, out_dir.join("partition.json"))?;

    let target = config.join.target_size.unwrap_or(pair.train.n());
    let join = config.join.to_join_config(pair.train.n());
    let parts = synthesize_parts(&pair.train, &spec, &config.generators, target, master)?;
    let (joined, trace, truncated) = join_parts(
        &pair.train,
        &spec,
        &parts,
        &join,
        &config.validator,
        master,
        None,
    )?;
    let synthetic = to_schema_order(&pair.train, &joined)?;

    let csv_path = out_dir.join("synthetic.csv");
    write_csv(&synthetic, &csv_path)?;
    write_schema_file(synthetic.schema(), out_dir.join("synthetic.schema.json"))?;
    if let Some(trace) = &trace {
        trace.write_csv(out_dir.join("join_trace.csv"))?;
    }
    if truncated {
        eprintln!(
            "note: joining terminated early; synthetic output has {} of {} requested rows",
            synthetic.n(),
            target
        );
    }

    let report = evaluate_all(
        &pair.train,
        &synthetic,
        &pair.holdout,
        config.eval.label_column.as_deref(),
    )?;
    report.write_json(out_dir.join("report.json"))?;
    write_report_row(&report, &out_dir.join("report_row.csv"))?;
    write_manifest(config, master, out_dir)?;
    Ok(csv_path)
}

/// The `eval` subcommand: score an existing synthetic table.
pub fn run_eval(
    real_csv: &Path,
    schema: &Path,
    synth_csv: &Path,
    holdout_csv: &Path,
    label: Option<&str>,
    out_dir: &Path,
) -> Result<MetricsReport> {
    std::fs::create_dir_all(out_dir)?;
    let real = load_csv(real_csv, schema)?;
    let holdout = load_csv(holdout_csv, schema)?;
    let synth_raw = load_csv(synth_csv, schema)?;
    let synth = to_schema_order(&real, &synth_raw)?;
    let report = evaluate_all(&real, &synth, &holdout, label)?;
    report.write_json(out_dir.join("report.json"))?;
    write_report_row(&report, &out_dir.join("report_row.csv"))?;
    Ok(report)
}
