//! Score calibration and ranking metrics.
//!
//! Calibration is a two-parameter sigmoid fitted by logistic regression on
//! raw scores, with Platt's prior-corrected targets so separable data keeps
//! the parameters finite. Two guards keep the advertised invariants: a
//! negative slope falls back to the identity map (calibration must not
//! reorder scores), and so does a fit that worsens the Brier score on its
//! own calibration split.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Calibration {
    Identity,
    Sigmoid { a: f64, b: f64 },
}

impl Calibration {
    pub fn apply(&self, score: f64) -> f64 {
        match *self {
            Calibration::Identity => score.clamp(0.0, 1.0),
            Calibration::Sigmoid { a, b } => sigmoid(a * score + b),
        }
    }

    pub fn sigmoid_params(&self) -> Option<(f64, f64)> {
        match *self {
            Calibration::Identity => None,
            Calibration::Sigmoid { a, b } => Some((a, b)),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fit the sigmoid on `(raw score, label)` pairs and return the guarded
/// calibration.
pub fn fit_sigmoid(scores: &[f64], labels: &[u8]) -> Calibration {
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n < 2 || n_pos == 0 || n_neg == 0 {
        return Calibration::Identity;
    }

    // Platt targets: shrink 1/0 toward the prior to keep the MLE finite.
    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l == 1 { t_pos } else { t_neg })
        .collect();

    // Newton iterations on the 2-parameter logistic log-likelihood.
    let mut a = 1.0f64;
    let mut b = 0.0f64;
    for _ in 0..100 {
        let mut g_a = 0.0;
        let mut g_b = 0.0;
        let mut h_aa = 1e-9;
        let mut h_ab = 0.0;
        let mut h_bb = 1e-9;
        for (&s, &t) in scores.iter().zip(&targets) {
            let p = sigmoid(a * s + b);
            let d = p - t;
            let w = (p * (1.0 - p)).max(1e-12);
            g_a += d * s;
            g_b += d;
            h_aa += w * s * s;
            h_ab += w * s;
            h_bb += w;
        }
        let det = h_aa * h_bb - h_ab * h_ab;
        if det.abs() < 1e-18 {
            break;
        }
        let da = (g_a * h_bb - g_b * h_ab) / det;
        let db = (g_b * h_aa - g_a * h_ab) / det;
        a -= da;
        b -= db;
        if da.abs() < 1e-10 && db.abs() < 1e-10 {
            break;
        }
    }

    if !a.is_finite() || !b.is_finite() || a < 0.0 {
        return Calibration::Identity;
    }
    let fitted = Calibration::Sigmoid { a, b };
    let calibrated: Vec<f64> = scores.iter().map(|&s| fitted.apply(s)).collect();
    let raw_clamped: Vec<f64> = scores.iter().map(|&s| s.clamp(0.0, 1.0)).collect();
    if brier(&calibrated, labels) <= brier(&raw_clamped, labels) {
        fitted
    } else {
        Calibration::Identity
    }
}

/// Mean squared error between scores and binary labels.
pub fn brier(scores: &[f64], labels: &[u8]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| {
            let d = s - f64::from(l);
            d * d
        })
        .sum::<f64>()
        / scores.len() as f64
}

/// Area under the ROC curve by the rank statistic, ties at half credit.
/// Returns 0.5 when either class is absent.
pub fn auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap_or(std::cmp::Ordering::Equal));

    // Average ranks over tie groups.
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }

    let rank_sum: f64 = (0..n).filter(|&i| labels[i] == 1).map(|i| ranks[i]).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos as f64 * n_neg as f64)
}
