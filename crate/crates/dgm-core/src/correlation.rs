//! Mixed-type pairwise association matrix.
//!
//! Numerical pairs use Pearson correlation, categorical pairs use Cramér's V
//! (no bias correction), and mixed pairs use the correlation ratio η placed
//! symmetrically. Zero-variance columns get association 0 with everything,
//! which avoids the division by zero in all three statistics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::table::{ColumnData, DataTable};

/// Pearson correlation of two equal-length real slices; 0 when either side
/// has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Cramér's V from two category-index slices.
pub fn cramers_v(x: &[u32], nx: usize, y: &[u32], ny: usize) -> f64 {
    let n = x.len();
    if n == 0 || nx < 2 || ny < 2 {
        return 0.0;
    }
    let mut table = vec![0.0f64; nx * ny];
    let mut row = vec![0.0f64; nx];
    let mut col = vec![0.0f64; ny];
    for (&a, &b) in x.iter().zip(y) {
        table[a as usize * ny + b as usize] += 1.0;
        row[a as usize] += 1.0;
        col[b as usize] += 1.0;
    }
    let observed_rows = row.iter().filter(|&&c| c > 0.0).count();
    let observed_cols = col.iter().filter(|&&c| c > 0.0).count();
    if observed_rows < 2 || observed_cols < 2 {
        // A constant column carries no association signal.
        return 0.0;
    }
    let nf = n as f64;
    let mut chi2 = 0.0;
    for a in 0..nx {
        for b in 0..ny {
            let expected = row[a] * col[b] / nf;
            if expected > 0.0 {
                let d = table[a * ny + b] - expected;
                chi2 += d * d / expected;
            }
        }
    }
    let denom = nf * (observed_rows.min(observed_cols) - 1) as f64;
    (chi2 / denom).sqrt().clamp(0.0, 1.0)
}

/// Correlation ratio η between a categorical grouping and a numerical column.
pub fn correlation_ratio(groups: &[u32], ng: usize, values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 || ng < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut group_sum = vec![0.0f64; ng];
    let mut group_count = vec![0usize; ng];
    for (&g, &v) in groups.iter().zip(values) {
        group_sum[g as usize] += v;
        group_count[g as usize] += 1;
    }
    let ss_total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_total == 0.0 || group_count.iter().filter(|&&c| c > 0).count() < 2 {
        return 0.0;
    }
    let ss_between: f64 = (0..ng)
        .filter(|&g| group_count[g] > 0)
        .map(|g| {
            let gm = group_sum[g] / group_count[g] as f64;
            group_count[g] as f64 * (gm - mean) * (gm - mean)
        })
        .sum();
    (ss_between / ss_total).sqrt().clamp(0.0, 1.0)
}

/// Full k×k association matrix of a table; symmetric with unit diagonal.
pub fn mixed_correlation(table: &DataTable) -> Result<DMatrix<f64>> {
    if table.n() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: table.n(),
        });
    }
    let k = table.k();
    let mut m = DMatrix::<f64>::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let v = pair_association(table, i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn pair_association(table: &DataTable, i: usize, j: usize) -> f64 {
    let ci = table.column(i);
    let cj = table.column(j);
    match (ci, cj) {
        (ColumnData::Numerical(x), ColumnData::Numerical(y)) => pearson(x, y),
        (ColumnData::Categorical(x), ColumnData::Categorical(y)) => {
            let nx = table.schema()[i].categories().unwrap().len();
            let ny = table.schema()[j].categories().unwrap().len();
            cramers_v(x, nx, y, ny)
        }
        (ColumnData::Categorical(g), ColumnData::Numerical(v)) => {
            let ng = table.schema()[i].categories().unwrap().len();
            correlation_ratio(g, ng, v)
        }
        (ColumnData::Numerical(v), ColumnData::Categorical(g)) => {
            let ng = table.schema()[j].categories().unwrap().len();
            correlation_ratio(g, ng, v)
        }
    }
}
