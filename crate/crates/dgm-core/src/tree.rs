//! Binary decision trees over mixed-type features.
//!
//! One implementation serves two consumers: the sequential-CART generator
//! (leaves keep their training rows so values can be drawn from donors) and
//! the random-forest validator (leaves keep the positive-class fraction).
//! Splits are Gini-scored for categorical targets and variance-scored for
//! numerical targets. Categorical features split one-category-vs-rest.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::table::{ColumnData, DataTable};

/// Borrowed view of one feature column.
#[derive(Debug, Clone, Copy)]
pub enum FeatureView<'a> {
    Numerical(&'a [f64]),
    Categorical { codes: &'a [u32], n_cats: usize },
}

impl<'a> FeatureView<'a> {
    pub fn from_column(col: &'a ColumnData, n_cats: usize) -> Self {
        match col {
            ColumnData::Numerical(v) => FeatureView::Numerical(v),
            ColumnData::Categorical(v) => FeatureView::Categorical { codes: v, n_cats },
        }
    }

    /// Views over a whole table's columns, in order.
    pub fn from_table(table: &'a DataTable) -> Vec<FeatureView<'a>> {
        (0..table.k())
            .map(|j| {
                let n_cats = table.schema()[j].categories().map_or(0, <[String]>::len);
                FeatureView::from_column(table.column(j), n_cats)
            })
            .collect()
    }
}

/// Borrowed view of the target column.
#[derive(Debug, Clone, Copy)]
pub enum TargetView<'a> {
    Numerical(&'a [f64]),
    Categorical { codes: &'a [u32], n_cats: usize },
}

#[derive(Debug, Clone)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Number of candidate features per node; `None` means all (CART mode).
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Split {
    /// Rows with `value <= threshold` go left.
    NumThreshold { feature: usize, threshold: f64 },
    /// Rows with `value == category` go left.
    CatEquals { feature: usize, category: u32 },
}

impl Split {
    fn goes_left(&self, features: &[FeatureView], row: usize) -> bool {
        match *self {
            Split::NumThreshold { feature, threshold } => match features[feature] {
                FeatureView::Numerical(v) => v[row] <= threshold,
                FeatureView::Categorical { .. } => unreachable!("split/feature kind mismatch"),
            },
            Split::CatEquals { feature, category } => match features[feature] {
                FeatureView::Categorical { codes, .. } => codes[row] == category,
                FeatureView::Numerical(_) => unreachable!("split/feature kind mismatch"),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Internal {
        split: Split,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Training rows that landed here (donor pool).
        rows: Vec<usize>,
        /// Fraction of class-1 training rows for binary targets, else 0.
        pos_fraction: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

struct FitCtx<'a, 'b> {
    features: &'a [FeatureView<'a>],
    target: &'a TargetView<'a>,
    params: &'a TreeParams,
    rng: &'b mut ChaCha8Rng,
}

impl DecisionTree {
    /// Fit on the given training rows. `rng` is consumed only when `mtry`
    /// asks for feature subsampling, so CART fits are rng-free.
    pub fn fit(
        features: &[FeatureView],
        target: &TargetView,
        rows: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let mut ctx = FitCtx {
            features,
            target,
            params,
            rng,
        };
        tree.grow(&mut ctx, rows.to_vec(), 0);
        tree
    }

    fn grow(&mut self, ctx: &mut FitCtx, rows: Vec<usize>, depth: usize) -> usize {
        let parent_cost = cost(ctx.target, &rows);
        let splittable = depth < ctx.params.max_depth
            && rows.len() >= 2 * ctx.params.min_leaf
            && parent_cost > 1e-12;
        if let Some(split) = splittable
            .then(|| self.best_split(ctx, &rows, parent_cost))
            .flatten()
        {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&r| split.goes_left(ctx.features, r));
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf {
                rows: Vec::new(),
                pos_fraction: 0.0,
            }); // placeholder, replaced below
            let left = self.grow(ctx, left_rows, depth + 1);
            let right = self.grow(ctx, right_rows, depth + 1);
            self.nodes[id] = Node::Internal { split, left, right };
            id
        } else {
            let pos_fraction = match ctx.target {
                TargetView::Categorical { codes, .. } => {
                    let pos = rows.iter().filter(|&&r| codes[r] == 1).count();
                    pos as f64 / rows.len().max(1) as f64
                }
                TargetView::Numerical(_) => 0.0,
            };
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf { rows, pos_fraction });
            id
        }
    }

    fn best_split(&self, ctx: &mut FitCtx, rows: &[usize], parent_cost: f64) -> Option<Split> {
        let k = ctx.features.len();
        let candidates: Vec<usize> = match ctx.params.mtry {
            None => (0..k).collect(),
            Some(m) => {
                let m = m.min(k);
                let mut idx: Vec<usize> = (0..k).collect();
                for i in 0..m {
                    let j = rand::Rng::random_range(&mut *ctx.rng, i..k);
                    idx.swap(i, j);
                }
                let mut chosen = idx[..m].to_vec();
                chosen.sort_unstable();
                chosen
            }
        };

        let mut best: Option<(f64, Split)> = None;
        for &f in &candidates {
            let found = match ctx.features[f] {
                FeatureView::Numerical(values) => {
                    best_numeric_split(values, ctx.target, rows, ctx.params.min_leaf, f)
                }
                FeatureView::Categorical { codes, n_cats } => {
                    best_categorical_split(codes, n_cats, ctx.target, rows, ctx.params.min_leaf, f)
                }
            };
            if let Some((cost, split)) = found {
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, split));
                }
            }
        }
        best.and_then(|(cost, split)| (cost < parent_cost - 1e-12).then_some(split))
    }

    /// Route one query row to its leaf; returns the node id.
    pub fn leaf_for(&self, features: &[FeatureView], row: usize) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Internal { split, left, right } => {
                    id = if split.goes_left(features, row) {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Leaf { .. } => return id,
            }
        }
    }

    pub fn leaf_rows(&self, node_id: usize) -> &[usize] {
        match &self.nodes[node_id] {
            Node::Leaf { rows, .. } => rows,
            Node::Internal { .. } => unreachable!("leaf_for always lands on a leaf"),
        }
    }

    pub fn leaf_pos_fraction(&self, node_id: usize) -> f64 {
        match &self.nodes[node_id] {
            Node::Leaf { pos_fraction, .. } => *pos_fraction,
            Node::Internal { .. } => unreachable!("leaf_for always lands on a leaf"),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Node cost: `n * gini` for categorical targets, sum of squared deviations
/// for numerical ones. Additive over children, so split search minimizes
/// `cost(left) + cost(right)`.
fn cost(target: &TargetView, rows: &[usize]) -> f64 {
    match target {
        TargetView::Categorical { codes, n_cats } => {
            let mut counts = vec![0.0f64; *n_cats];
            for &r in rows {
                counts[codes[r] as usize] += 1.0;
            }
            gini_cost(&counts, rows.len() as f64)
        }
        TargetView::Numerical(values) => {
            let n = rows.len() as f64;
            if rows.is_empty() {
                return 0.0;
            }
            let sum: f64 = rows.iter().map(|&r| values[r]).sum();
            let sum_sq: f64 = rows.iter().map(|&r| values[r] * values[r]).sum();
            (sum_sq - sum * sum / n).max(0.0)
        }
    }
}

fn gini_cost(counts: &[f64], n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let sum_sq: f64 = counts.iter().map(|&c| c * c).sum();
    (n - sum_sq / n).max(0.0)
}

enum RunningStats {
    Cat { counts: Vec<f64>, n: f64 },
    Num { sum: f64, sum_sq: f64, n: f64 },
}

impl RunningStats {
    fn new(target: &TargetView) -> Self {
        match target {
            TargetView::Categorical { n_cats, .. } => RunningStats::Cat {
                counts: vec![0.0; *n_cats],
                n: 0.0,
            },
            TargetView::Numerical(_) => RunningStats::Num {
                sum: 0.0,
                sum_sq: 0.0,
                n: 0.0,
            },
        }
    }

    fn add(&mut self, target: &TargetView, row: usize) {
        match (self, target) {
            (RunningStats::Cat { counts, n }, TargetView::Categorical { codes, .. }) => {
                counts[codes[row] as usize] += 1.0;
                *n += 1.0;
            }
            (RunningStats::Num { sum, sum_sq, n }, TargetView::Numerical(values)) => {
                *sum += values[row];
                *sum_sq += values[row] * values[row];
                *n += 1.0;
            }
            _ => unreachable!("stats kind fixed at construction"),
        }
    }

    fn remove(&mut self, target: &TargetView, row: usize) {
        match (self, target) {
            (RunningStats::Cat { counts, n }, TargetView::Categorical { codes, .. }) => {
                counts[codes[row] as usize] -= 1.0;
                *n -= 1.0;
            }
            (RunningStats::Num { sum, sum_sq, n }, TargetView::Numerical(values)) => {
                *sum -= values[row];
                *sum_sq -= values[row] * values[row];
                *n -= 1.0;
            }
            _ => unreachable!("stats kind fixed at construction"),
        }
    }

    fn n(&self) -> f64 {
        match self {
            RunningStats::Cat { n, .. } | RunningStats::Num { n, .. } => *n,
        }
    }

    fn cost(&self) -> f64 {
        match self {
            RunningStats::Cat { counts, n } => gini_cost(counts, *n),
            RunningStats::Num { sum, sum_sq, n } => {
                if *n <= 0.0 {
                    0.0
                } else {
                    (*sum_sq - *sum * *sum / *n).max(0.0)
                }
            }
        }
    }
}

fn best_numeric_split(
    values: &[f64],
    target: &TargetView,
    rows: &[usize],
    min_leaf: usize,
    feature: usize,
) -> Option<(f64, Split)> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    let mut left = RunningStats::new(target);
    let mut right = RunningStats::new(target);
    for &r in &order {
        right.add(target, r);
    }

    let mut best: Option<(f64, f64)> = None; // (cost, threshold)
    for w in 0..order.len() - 1 {
        let r = order[w];
        left.add(target, r);
        right.remove(target, r);
        let (lo, hi) = (values[order[w]], values[order[w + 1]]);
        if lo == hi {
            continue; // no boundary between equal values
        }
        if (left.n() as usize) < min_leaf || (right.n() as usize) < min_leaf {
            continue;
        }
        let cost = left.cost() + right.cost();
        if best.is_none_or(|(b, _)| cost < b) {
            best = Some((cost, lo.midpoint(hi)));
        }
    }
    best.map(|(cost, threshold)| (cost, Split::NumThreshold { feature, threshold }))
}

fn best_categorical_split(
    codes: &[u32],
    n_cats: usize,
    target: &TargetView,
    rows: &[usize],
    min_leaf: usize,
    feature: usize,
) -> Option<(f64, Split)> {
    let total = cost_stats(target, rows);
    let mut per_cat: Vec<RunningStats> = (0..n_cats).map(|_| RunningStats::new(target)).collect();
    for &r in rows {
        per_cat[codes[r] as usize].add(target, r);
    }

    let mut best: Option<(f64, u32)> = None;
    for (c, cat_stats) in per_cat.iter().enumerate() {
        let n_left = cat_stats.n() as usize;
        let n_right = rows.len() - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let mut rest = clone_stats(&total);
        subtract_stats(&mut rest, cat_stats);
        let cost = cat_stats.cost() + rest.cost();
        if best.is_none_or(|(b, _)| cost < b) {
            best = Some((cost, c as u32));
        }
    }
    best.map(|(cost, category)| (cost, Split::CatEquals { feature, category }))
}

fn cost_stats(target: &TargetView, rows: &[usize]) -> RunningStats {
    let mut s = RunningStats::new(target);
    for &r in rows {
        s.add(target, r);
    }
    s
}

fn clone_stats(s: &RunningStats) -> RunningStats {
    match s {
        RunningStats::Cat { counts, n } => RunningStats::Cat {
            counts: counts.clone(),
            n: *n,
        },
        RunningStats::Num { sum, sum_sq, n } => RunningStats::Num {
            sum: *sum,
            sum_sq: *sum_sq,
            n: *n,
        },
    }
}

fn subtract_stats(a: &mut RunningStats, b: &RunningStats) {
    match (a, b) {
        (
            RunningStats::Cat { counts, n },
            RunningStats::Cat {
                counts: bc,
                n: bn,
            },
        ) => {
            for (x, y) in counts.iter_mut().zip(bc) {
                *x -= y;
            }
            *n -= bn;
        }
        (
            RunningStats::Num { sum, sum_sq, n },
            RunningStats::Num {
                sum: bs,
                sum_sq: bq,
                n: bn,
            },
        ) => {
            *sum -= bs;
            *sum_sq -= bq;
            *n -= bn;
        }
        _ => unreachable!("stats kind fixed at construction"),
    }
}
