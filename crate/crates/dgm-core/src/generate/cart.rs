//! Sequential CART synthesis.
//!
//! Columns are generated in visit order: the first from its empirical
//! marginal, each later one by routing the partially generated row through a
//! decision tree fitted on the preceding columns and drawing the value of a
//! uniformly chosen training row from the reached leaf.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CartParams;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::table::{ColumnData, DataTable};
use crate::tree::{DecisionTree, FeatureView, TargetView, TreeParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartModel {
    /// Donor pool: the training slice this generator was fitted on.
    training: DataTable,
    /// Visit order over the fitted columns.
    order: Vec<usize>,
    /// One tree per visited column after the first, aligned with
    /// `order[1..]`. Tree features are the columns visited before it.
    trees: Vec<DecisionTree>,
}

pub(super) fn fit(data: &DataTable, params: &CartParams) -> Result<CartModel> {
    let k = data.k();
    let order: Vec<usize> = match &params.visit_order {
        Some(order) => {
            let mut seen = vec![false; k];
            for &j in order {
                if j >= k || seen[j] {
                    return Err(Error::InvalidConfig(format!(
                        "visit_order must be a permutation of 0..{k}"
                    )));
                }
                seen[j] = true;
            }
            if order.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "visit_order must be a permutation of 0..{k}"
                )));
            }
            order.clone()
        }
        None => (0..k).collect(),
    };

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: None,
    };
    let rows: Vec<usize> = (0..data.n()).collect();
    // CART fits never subsample features, so the rng is inert; any stream is fine.
    let mut rng = SeededRng::new(0).rng();
    let trees = order[1..]
        .iter()
        .enumerate()
        .map(|(step, &target_col)| {
            let features: Vec<FeatureView> = order[..=step]
                .iter()
                .map(|&j| feature_view(data, j))
                .collect();
            let target = target_view(data, target_col);
            DecisionTree::fit(&features, &target, &rows, &tree_params, &mut rng)
        })
        .collect();

    Ok(CartModel {
        training: data.clone(),
        order,
        trees,
    })
}

impl CartModel {
    pub(super) fn sample(&self, m: usize, seed: &SeededRng) -> Vec<ColumnData> {
        let k = self.training.k();
        let mut generated: Vec<ColumnData> = Vec::with_capacity(k);

        // First visited column: bootstrap from its empirical marginal.
        {
            let mut rng = seed.substream(&[0x6361, 0]).rng();
            let n = self.training.n();
            let col = self.training.column(self.order[0]);
            generated.push(bootstrap_column(col, m, n, &mut rng));
        }

        for (step, &target_col) in self.order[1..].iter().enumerate() {
            let mut rng = seed.substream(&[0x6361, step as u64 + 1]).rng();
            let tree = &self.trees[step];
            let features: Vec<FeatureView> = generated
                .iter()
                .enumerate()
                .map(|(s, col)| {
                    let source = self.order[s];
                    let n_cats = self.training.schema()[source]
                        .categories()
                        .map_or(0, <[String]>::len);
                    FeatureView::from_column(col, n_cats)
                })
                .collect();
            let target = self.training.column(target_col);
            let out = match target {
                ColumnData::Categorical(codes) => ColumnData::Categorical(
                    (0..m)
                        .map(|row| {
                            let leaf = tree.leaf_for(&features, row);
                            let donors = tree.leaf_rows(leaf);
                            codes[donors[rng.random_range(0..donors.len())]]
                        })
                        .collect(),
                ),
                ColumnData::Numerical(values) => ColumnData::Numerical(
                    (0..m)
                        .map(|row| {
                            let leaf = tree.leaf_for(&features, row);
                            let donors = tree.leaf_rows(leaf);
                            values[donors[rng.random_range(0..donors.len())]]
                        })
                        .collect(),
                ),
            };
            generated.push(out);
        }

        // Reorder from visit order back to schema order.
        let mut by_schema: Vec<Option<ColumnData>> = vec![None; k];
        for (step, col) in generated.into_iter().enumerate() {
            by_schema[self.order[step]] = Some(col);
        }
        by_schema.into_iter().map(Option::unwrap).collect()
    }
}

fn bootstrap_column(col: &ColumnData, m: usize, n: usize, rng: &mut impl Rng) -> ColumnData {
    match col {
        ColumnData::Categorical(codes) => {
            ColumnData::Categorical((0..m).map(|_| codes[rng.random_range(0..n)]).collect())
        }
        ColumnData::Numerical(values) => {
            ColumnData::Numerical((0..m).map(|_| values[rng.random_range(0..n)]).collect())
        }
    }
}

fn feature_view(data: &DataTable, j: usize) -> FeatureView<'_> {
    let n_cats = data.schema()[j].categories().map_or(0, <[String]>::len);
    FeatureView::from_column(data.column(j), n_cats)
}

fn target_view(data: &DataTable, j: usize) -> TargetView<'_> {
    match data.column(j) {
        ColumnData::Numerical(v) => TargetView::Numerical(v),
        ColumnData::Categorical(v) => TargetView::Categorical {
            codes: v,
            n_cats: data.schema()[j].categories().unwrap().len(),
        },
    }
}
