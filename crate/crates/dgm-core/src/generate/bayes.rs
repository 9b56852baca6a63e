//! Discretized Bayesian network synthesis.
//!
//! Columns are visited in schema order; each greedily collects up to
//! `max_parents` parents from its predecessors by maximizing plug-in mutual
//! information over the discretized values. Sampling is ancestral, with
//! numerical bins de-discretized by a uniform draw inside the bin. With an
//! epsilon budget set, conditional-table rows receive Laplace noise of scale
//! `2 * tables / (n * epsilon)` per cell, clamped at zero and renormalized.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::marginal::{bin_of, draw_index, laplace};
use super::BnParams;
use crate::rng::SeededRng;
use crate::table::{ColumnData, DataTable};

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Discretizer {
    /// Categorical column used as-is.
    Identity { n_states: usize },
    /// Equal-width bins over the observed range.
    Bins { edges: Vec<f64> },
}

impl Discretizer {
    fn n_states(&self) -> usize {
        match self {
            Discretizer::Identity { n_states } => *n_states,
            Discretizer::Bins { edges } => edges.len() - 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NodeModel {
    parents: Vec<usize>,
    /// Conditional distributions, one row per parent-state combination
    /// (mixed-radix over parent states), each of length `n_states(child)`.
    table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnModel {
    discretizers: Vec<Discretizer>,
    nodes: Vec<NodeModel>,
    search_evaluations: u64,
}

impl BnModel {
    pub(super) fn parent_sets(&self) -> Vec<Vec<usize>> {
        self.nodes.iter().map(|n| n.parents.clone()).collect()
    }

    pub(super) fn search_evaluations(&self) -> u64 {
        self.search_evaluations
    }
}

pub(super) fn fit(data: &DataTable, params: &BnParams, seed: &SeededRng) -> BnModel {
    let k = data.k();
    let n = data.n();

    let discretizers: Vec<Discretizer> = (0..k)
        .map(|j| match data.column(j) {
            ColumnData::Categorical(_) => Discretizer::Identity {
                n_states: data.schema()[j].categories().unwrap().len(),
            },
            ColumnData::Numerical(values) => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let edges = (0..=params.bins)
                    .map(|b| lo + (hi - lo) * b as f64 / params.bins as f64)
                    .collect();
                Discretizer::Bins { edges }
            }
        })
        .collect();

    let states: Vec<Vec<usize>> = (0..k)
        .map(|j| discretize_column(data.column(j), &discretizers[j]))
        .collect();

    let mut evaluations = 0u64;
    let mut nodes = Vec::with_capacity(k);
    for child in 0..k {
        let parents = greedy_parents(child, &states, &discretizers, params.max_parents, &mut evaluations);
        let table = conditional_table(child, &parents, &states, &discretizers);
        nodes.push(NodeModel { parents, table });
    }

    if let Some(epsilon) = params.epsilon {
        let scale = 2.0 * k as f64 / (n as f64 * epsilon);
        let mut rng = seed.substream(&[0x626e]).rng();
        for node in &mut nodes {
            for row in &mut node.table {
                for cell in row.iter_mut() {
                    *cell = (*cell + laplace(scale, &mut rng)).max(0.0);
                }
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    for cell in row.iter_mut() {
                        *cell /= total;
                    }
                } else {
                    let uniform = 1.0 / row.len() as f64;
                    row.fill(uniform);
                }
            }
        }
    }

    BnModel {
        discretizers,
        nodes,
        search_evaluations: evaluations,
    }
}

fn discretize_column(col: &ColumnData, disc: &Discretizer) -> Vec<usize> {
    match (col, disc) {
        (ColumnData::Categorical(codes), Discretizer::Identity { .. }) => {
            codes.iter().map(|&c| c as usize).collect()
        }
        (ColumnData::Numerical(values), Discretizer::Bins { edges }) => {
            let lo = edges[0];
            let hi = edges[edges.len() - 1];
            let bins = edges.len() - 1;
            values.iter().map(|&v| bin_of(v, lo, hi, bins)).collect()
        }
        _ => unreachable!("discretizer kind fixed per column"),
    }
}

/// Greedy parent selection: each step scores every remaining predecessor by
/// the mutual information between the child and the candidate parent set,
/// takes the best, and stops at `max_parents`. Every scoring call counts as
/// one evaluation; ties keep the lowest column index.
fn greedy_parents(
    child: usize,
    states: &[Vec<usize>],
    discretizers: &[Discretizer],
    max_parents: usize,
    evaluations: &mut u64,
) -> Vec<usize> {
    let mut parents: Vec<usize> = Vec::new();
    let mut candidates: Vec<usize> = (0..child).collect();
    while parents.len() < max_parents && !candidates.is_empty() {
        let mut best: Option<(f64, usize)> = None;
        for &cand in &candidates {
            let mut trial = parents.clone();
            trial.push(cand);
            trial.sort_unstable();
            let score = mutual_information(child, &trial, states, discretizers);
            *evaluations += 1;
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, cand));
            }
        }
        let (_, chosen) = best.unwrap();
        parents.push(chosen);
        parents.sort_unstable();
        candidates.retain(|&c| c != chosen);
    }
    parents
}

/// Plug-in mutual information between the child column and the joint state
/// of the parent set, in nats.
fn mutual_information(
    child: usize,
    parents: &[usize],
    states: &[Vec<usize>],
    discretizers: &[Discretizer],
) -> f64 {
    let n = states[child].len();
    let child_states = discretizers[child].n_states();
    let parent_space = parent_space(parents, discretizers);
    let mut joint = vec![0.0f64; child_states * parent_space];
    let mut child_marg = vec![0.0f64; child_states];
    let mut parent_marg = vec![0.0f64; parent_space];
    for row in 0..n {
        let c = states[child][row];
        let s = parent_state(parents, states, discretizers, row);
        joint[c * parent_space + s] += 1.0;
        child_marg[c] += 1.0;
        parent_marg[s] += 1.0;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for c in 0..child_states {
        for s in 0..parent_space {
            let pj = joint[c * parent_space + s] / nf;
            if pj > 0.0 {
                mi += pj * (pj * nf * nf / (child_marg[c] * parent_marg[s])).ln();
            }
        }
    }
    mi.max(0.0)
}

fn parent_space(parents: &[usize], discretizers: &[Discretizer]) -> usize {
    parents
        .iter()
        .map(|&p| discretizers[p].n_states())
        .product::<usize>()
        .max(1)
}

/// Mixed-radix encoding of one row's parent states.
fn parent_state(
    parents: &[usize],
    states: &[Vec<usize>],
    discretizers: &[Discretizer],
    row: usize,
) -> usize {
    let mut index = 0usize;
    for &p in parents {
        index = index * discretizers[p].n_states() + states[p][row];
    }
    index
}

fn conditional_table(
    child: usize,
    parents: &[usize],
    states: &[Vec<usize>],
    discretizers: &[Discretizer],
) -> Vec<Vec<f64>> {
    let n = states[child].len();
    let child_states = discretizers[child].n_states();
    let parent_space = parent_space(parents, discretizers);
    let mut counts = vec![vec![0.0f64; child_states]; parent_space];
    let mut marginal = vec![0.0f64; child_states];
    for row in 0..n {
        let c = states[child][row];
        let s = parent_state(parents, states, discretizers, row);
        counts[s][c] += 1.0;
        marginal[c] += 1.0;
    }
    for m in &mut marginal {
        *m /= n as f64;
    }
    counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.into_iter().map(|c| c / total).collect()
            } else {
                // Unseen parent combination: fall back to the child marginal.
                marginal.clone()
            }
        })
        .collect()
}

impl BnModel {
    pub(super) fn sample(&self, m: usize, seed: &SeededRng) -> Vec<ColumnData> {
        let k = self.nodes.len();
        let mut sampled_states: Vec<Vec<usize>> = Vec::with_capacity(k);
        for (j, node) in self.nodes.iter().enumerate() {
            let mut rng = seed.substream(&[0x626a, j as u64]).rng();
            let column: Vec<usize> = (0..m)
                .map(|row| {
                    let mut idx = 0usize;
                    for &p in &node.parents {
                        idx = idx * self.discretizers[p].n_states() + sampled_states[p][row];
                    }
                    draw_index(&node.table[idx], &mut rng)
                })
                .collect();
            sampled_states.push(column);
        }

        sampled_states
            .into_iter()
            .enumerate()
            .map(|(j, states)| match &self.discretizers[j] {
                Discretizer::Identity { .. } => {
                    ColumnData::Categorical(states.into_iter().map(|s| s as u32).collect())
                }
                Discretizer::Bins { edges } => {
                    let mut rng = seed.substream(&[0x6264, j as u64]).rng();
                    ColumnData::Numerical(
                        states
                            .into_iter()
                            .map(|s| {
                                let (lo, hi) = (edges[s], edges[s + 1]);
                                if hi > lo {
                                    rng.random_range(lo..hi)
                                } else {
                                    lo
                                }
                            })
                            .collect(),
                    )
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{fit as fit_generator, sample, GeneratorConfig, GeneratorKind};
    use crate::correlation::cramers_v;
    use crate::table::{ColumnData, ColumnMeta, DataTable};

    fn binary_pair(col1: Vec<u32>, col2: Vec<u32>) -> DataTable {
        DataTable::new(
            vec![
                ColumnMeta::categorical("a", vec!["0".into(), "1".into()]),
                ColumnMeta::categorical("b", vec!["0".into(), "1".into()]),
            ],
            vec![ColumnData::Categorical(col1), ColumnData::Categorical(col2)],
        )
        .unwrap()
    }

    #[test]
    fn perfectly_correlated_columns_get_an_edge() {
        let a: Vec<u32> = (0..64).map(|i| (i % 2) as u32).collect();
        let b = a.clone();
        let t = binary_pair(a.clone(), b.clone());
        let mut config = GeneratorConfig::new(GeneratorKind::BayesNet);
        config.bn.max_parents = 1;
        let g = fit_generator(&t, &config).unwrap();
        let parents = g.bn_parent_sets().unwrap();
        assert_eq!(parents[1], vec![0], "column 1 should have column 0 as parent");

        // Oracle: enumerate the 1-parent structures for column 1 (only
        // candidate is column 0) and check the score ordering directly:
        // MI(b; a) for identical binary columns is ln 2 > 0 = MI with no
        // parent, so the greedy step must take the edge.
        let p = 0.5f64;
        let mi_identical = {
            // joint: P(0,0) = P(1,1) = 0.5, marginals 0.5 each
            2.0 * (p * (p / (p * p)).ln())
        };
        assert!((mi_identical - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn independence_is_preserved() {
        // Two independent uniform binary columns; the sampled cross
        // association stays near zero.
        let n = 1024;
        let a: Vec<u32> = (0..n).map(|i| ((i / 2) % 2) as u32).collect();
        let b: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
        let t = binary_pair(a, b);
        let g = fit_generator(&t, &GeneratorConfig::new(GeneratorKind::BayesNet)).unwrap();
        let s = sample(&g, 1000, 17).unwrap();
        let sa = s.column(0).as_categorical().unwrap();
        let sb = s.column(1).as_categorical().unwrap();
        let v = cramers_v(sa, 2, sb, 2);
        assert!(v < 0.15, "cross Cramer's V {v}");
    }

    #[test]
    fn numerical_columns_round_trip_through_bins() {
        let values: Vec<f64> = (0..100).map(|i| f64::from(i) / 10.0).collect();
        let t = DataTable::new(
            vec![ColumnMeta::numerical("x", 0.0, 9.9)],
            vec![ColumnData::Numerical(values)],
        )
        .unwrap();
        let g = fit_generator(&t, &GeneratorConfig::new(GeneratorKind::BayesNet)).unwrap();
        let s = sample(&g, 500, 23).unwrap();
        let xs = s.column(0).as_numerical().unwrap();
        assert!(xs.iter().all(|&x| (0.0..=9.9).contains(&x)));
    }

    #[test]
    fn noised_tables_remain_distributions_and_stay_deterministic() {
        let a: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        let t = binary_pair(a.clone(), a);
        let mut config = GeneratorConfig::new(GeneratorKind::BayesNet);
        config.bn.epsilon = Some(0.5);
        config.seed = 9;
        let g = fit_generator(&t, &config).unwrap();
        let s = sample(&g, 200, 3).unwrap();
        assert_eq!(s.n(), 200);
        // The noise stream is part of the fit seed.
        let again = fit_generator(&t, &config).unwrap();
        assert_eq!(sample(&again, 200, 3).unwrap(), s);
        let mut other = config.clone();
        other.seed = 10;
        let different = fit_generator(&t, &other).unwrap();
        assert_ne!(sample(&different, 200, 3).unwrap(), s);
    }

    #[test]
    fn fit_evaluation_counter_matches_cost_formula() {
        use super::super::structure_search_cost;
        let n = 128;
        let cols: Vec<ColumnData> = (0..5)
            .map(|j| {
                ColumnData::Categorical((0..n).map(|i| ((i >> j) % 2) as u32).collect())
            })
            .collect();
        let schema: Vec<ColumnMeta> = (0..5)
            .map(|j| ColumnMeta::categorical(format!("c{j}"), vec!["0".into(), "1".into()]))
            .collect();
        let t = DataTable::new(schema, cols).unwrap();
        let mut config = GeneratorConfig::new(GeneratorKind::BayesNet);
        config.bn.max_parents = 2;
        let g = fit_generator(&t, &config).unwrap();
        assert_eq!(
            g.bn_search_evaluations().unwrap(),
            structure_search_cost(5, 1, 2).unwrap()
        );
    }
}
