//! Random forest over mixed-type features.
//!
//! Bagged decision trees with per-node feature subsampling; the score of a
//! query is the mean positive fraction of the leaves it reaches.
//! Categorical features are consumed as category indices directly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::table::DataTable;
use crate::tree::{DecisionTree, FeatureView, TargetView, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 16,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    params: ForestParams,
}

impl RandomForest {
    /// Fit on the given rows of `features` with binary labels.
    pub fn fit(
        features: &DataTable,
        labels: &[u8],
        rows: &[usize],
        params: ForestParams,
        seed: &SeededRng,
    ) -> RandomForest {
        let views = FeatureView::from_table(features);
        let codes: Vec<u32> = labels.iter().map(|&l| u32::from(l)).collect();
        let target = TargetView::Categorical {
            codes: &codes,
            n_cats: 2,
        };
        let mtry = (features.k() as f64).sqrt().ceil() as usize;
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            mtry: Some(mtry.max(1)),
        };
        let trees: Vec<DecisionTree> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.substream(&[0x7266, t as u64]).rng();
                let bootstrap: Vec<usize> = (0..rows.len())
                    .map(|_| rows[rng.random_range(0..rows.len())])
                    .collect();
                DecisionTree::fit(&views, &target, &bootstrap, &tree_params, &mut rng)
            })
            .collect();
        RandomForest { trees, params }
    }

    /// Mean leaf positive fraction over the ensemble, per query row.
    pub fn score(&self, queries: &DataTable) -> Vec<f64> {
        let views = FeatureView::from_table(queries);
        (0..queries.n())
            .map(|row| {
                let total: f64 = self
                    .trees
                    .iter()
                    .map(|t| t.leaf_pos_fraction(t.leaf_for(&views, row)))
                    .sum();
                total / self.trees.len() as f64
            })
            .collect()
    }

    pub fn params(&self) -> ForestParams {
        self.params
    }
}
