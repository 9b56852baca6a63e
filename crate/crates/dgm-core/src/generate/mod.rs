//! Per-partition generative models behind one fit/sample interface.
//!
//! Four kinds are provided: independent marginals, sequential CART (columns
//! generated one at a time from decision-tree donor leaves), a discretized
//! Bayesian network with optional Laplace noise on its conditional tables,
//! and a Laplace-noised histogram sampler. All are deterministic given
//! `(data, config, seed)`.

mod bayes;
mod cart;
mod marginal;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::table::{ColumnMeta, DataTable};

pub use bayes::BnModel;
pub use cart::CartModel;
pub use marginal::MarginalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Marginal,
    CartSequential,
    BayesNet,
    DpMarginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartParams {
    pub min_leaf: usize,
    pub max_depth: usize,
    /// Column visit order as indices into the fitted subset; schema order
    /// when unset.
    pub visit_order: Option<Vec<usize>>,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            min_leaf: 5,
            max_depth: 12,
            visit_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BnParams {
    pub max_parents: usize,
    pub bins: usize,
    /// Laplace-noise budget for the conditional tables; no noise when unset.
    pub epsilon: Option<f64>,
}

impl Default for BnParams {
    fn default() -> Self {
        Self {
            max_parents: 2,
            bins: 10,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpParams {
    pub epsilon: f64,
    pub bins: usize,
}

impl Default for DpParams {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    #[serde(default = "default_oversample")]
    pub oversample_factor: f64,
    #[serde(default)]
    pub cart: CartParams,
    #[serde(default)]
    pub bn: BnParams,
    #[serde(default)]
    pub dp: DpParams,
    #[serde(default)]
    pub seed: u64,
}

fn default_oversample() -> f64 {
    3.0
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind) -> Self {
        Self {
            kind,
            oversample_factor: default_oversample(),
            cart: CartParams::default(),
            bn: BnParams::default(),
            dp: DpParams::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.oversample_factor < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "oversample_factor must be >= 1, got {}",
                self.oversample_factor
            )));
        }
        if self.bn.bins < 2 || self.dp.bins < 2 {
            return Err(Error::InvalidConfig("bins must be >= 2".into()));
        }
        if self.bn.max_parents < 1 {
            return Err(Error::InvalidConfig("max_parents must be >= 1".into()));
        }
        if let Some(eps) = self.bn.epsilon {
            if !eps.is_finite() || eps <= 0.0 {
                return Err(Error::InvalidConfig("bn.epsilon must be > 0".into()));
            }
        }
        if !self.dp.epsilon.is_finite() || self.dp.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("dp.epsilon must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum GeneratorModel {
    Marginal(MarginalModel),
    DpMarginal(MarginalModel),
    Cart(CartModel),
    BayesNet(BnModel),
}

/// A trained per-partition synthesizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedGenerator {
    schema: Vec<ColumnMeta>,
    model: GeneratorModel,
}

impl FittedGenerator {
    pub fn kind(&self) -> GeneratorKind {
        match self.model {
            GeneratorModel::Marginal(_) => GeneratorKind::Marginal,
            GeneratorModel::DpMarginal(_) => GeneratorKind::DpMarginal,
            GeneratorModel::Cart(_) => GeneratorKind::CartSequential,
            GeneratorModel::BayesNet(_) => GeneratorKind::BayesNet,
        }
    }

    /// Schema of the fitted column subset; `sample` reproduces it exactly.
    pub fn schema(&self) -> &[ColumnMeta] {
        &self.schema
    }

    /// Learned category probabilities of a marginal-family model, if any.
    pub fn marginal_probs(&self, column: usize) -> Option<&[f64]> {
        match &self.model {
            GeneratorModel::Marginal(m) | GeneratorModel::DpMarginal(m) => {
                m.category_probs(column)
            }
            _ => None,
        }
    }

    /// Parent sets of a fitted Bayesian network, per column.
    pub fn bn_parent_sets(&self) -> Option<Vec<Vec<usize>>> {
        match &self.model {
            GeneratorModel::BayesNet(bn) => Some(bn.parent_sets()),
            _ => None,
        }
    }

    /// Candidate parent-set evaluations performed by the structure search.
    pub fn bn_search_evaluations(&self) -> Option<u64> {
        match &self.model {
            GeneratorModel::BayesNet(bn) => Some(bn.search_evaluations()),
            _ => None,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Train a generator of the configured kind on `data`.
pub fn fit(data: &DataTable, config: &GeneratorConfig) -> Result<FittedGenerator> {
    config.validate()?;
    if data.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: data.n(),
        });
    }
    let seed = SeededRng::new(config.seed);
    let model = match config.kind {
        GeneratorKind::Marginal => GeneratorModel::Marginal(marginal::fit_plain(data)),
        GeneratorKind::DpMarginal => GeneratorModel::DpMarginal(marginal::fit_dp(
            data,
            config.dp.epsilon,
            config.dp.bins,
            &seed,
        )),
        GeneratorKind::CartSequential => GeneratorModel::Cart(cart::fit(data, &config.cart)?),
        GeneratorKind::BayesNet => GeneratorModel::BayesNet(bayes::fit(data, &config.bn, &seed)),
    };
    Ok(FittedGenerator {
        schema: data.schema().to_vec(),
        model,
    })
}

/// Draw exactly `m` synthetic rows.
pub fn sample(generator: &FittedGenerator, m: usize, seed: u64) -> Result<DataTable> {
    if m < 1 {
        return Err(Error::InvalidConfig("sample size must be >= 1".into()));
    }
    let seed = SeededRng::new(seed);
    let columns = match &generator.model {
        GeneratorModel::Marginal(model) | GeneratorModel::DpMarginal(model) => {
            model.sample(m, &seed)
        }
        GeneratorModel::Cart(model) => model.sample(m, &seed),
        GeneratorModel::BayesNet(model) => model.sample(m, &seed),
    };
    DataTable::new(generator.schema.clone(), columns)
}

/// Exact number of candidate parent-set evaluations the greedy Bayesian
/// network search performs when `k` columns are spread over `n_p`
/// equal-as-possible partitions.
///
/// A column with `p` predecessors in its partition costs
/// `p + (p-1) + ... ` down to `p - min(max_parents, p) + 1` evaluations,
/// because each greedy step scores every remaining candidate once.
pub fn structure_search_cost(k: usize, n_p: usize, max_parents: usize) -> Result<u64> {
    if n_p < 1 || n_p > k {
        return Err(Error::InvalidPartition(format!(
            "need 1 <= n_p <= k, got n_p = {n_p}, k = {k}"
        )));
    }
    let base = k / n_p;
    let rem = k % n_p;
    let mut total = 0u64;
    for p in 0..n_p {
        let size = base + usize::from(p < rem);
        total += partition_search_cost(size, max_parents);
    }
    Ok(total)
}

fn partition_search_cost(size: usize, max_parents: usize) -> u64 {
    let mut cost = 0u64;
    for j in 0..size {
        let steps = max_parents.min(j);
        for t in 0..steps {
            cost += (j - t) as u64;
        }
    }
    cost
}
