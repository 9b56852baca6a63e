//! Disjoint generative models for tabular synthetic data.
//!
//! The pipeline partitions a table column-wise, trains an independent
//! generator per partition, and rejoins the synthetic outputs either by
//! random concatenation or by a validator-driven joining loop. A utility and
//! privacy metric suite evaluates the result against the real data.
//!
//! Modules follow the pipeline stages:
//!
//! - [`table`], [`csv_io`]: data model, ingestion, train/holdout splitting
//! - [`correlation`]: mixed-type association matrix
//! - [`partition`]: column-to-partition assignment
//! - [`generate`]: per-partition generators (marginal, sequential CART,
//!   Bayesian network, noised histograms)
//! - [`join`]: concatenation and the validated joining loop
//! - [`validator`]: trainable calibrated scorers for join validation
//! - [`metrics`]: utility and privacy evaluation suite
//! - [`dummy`]: controlled Gaussian benchmark tables with tunable
//!   cross-partition correlation

pub mod correlation;
pub mod csv_io;
pub mod dummy;
pub mod encode;
mod error;
pub mod generate;
pub mod join;
pub mod metrics;
pub mod partition;
pub mod rng;
pub mod table;
pub mod tree;
pub mod validator;

pub use error::{Error, Result};
pub use generate::{FittedGenerator, GeneratorConfig, GeneratorKind};
pub use join::{JoinConfig, JoinStrategy};
pub use metrics::MetricsReport;
pub use partition::PartitionSpec;
pub use rng::SeededRng;
pub use table::{ColumnData, ColumnKind, ColumnMeta, DataTable, SplitPair};
pub use validator::{ValidatorBackend, ValidatorModel};
