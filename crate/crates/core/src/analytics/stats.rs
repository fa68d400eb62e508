//! Rank tests and correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Average (mid) ranks, 1-based, of `values`. Also returns `Σ (t³ − t)` over
/// tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Tie-corrected Kruskal–Wallis H with its chi-square tail p-value.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::InvalidParameter("Kruskal-Wallis needs at least two groups".into()));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter("Kruskal-Wallis group without samples".into()));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN sample".into()));
    }
    let n = pooled.len() as f64;
    if pooled.len() < 3 {
        return Err(Error::InvalidParameter("Kruskal-Wallis needs at least three samples".into()));
    }
    let df = groups.len() - 1;
    let (ranks, ties) = average_ranks(&pooled);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, p_value: 1.0, df });
    }
    let mean_rank = (n + 1.0) / 2.0;
    let mut offset = 0;
    let mut between = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum::<f64>() / g.len() as f64;
        between += g.len() as f64 * (r - mean_rank).powi(2);
        offset += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * between / correction;
    let chi = ChiSquared::new(df as f64).expect("df >= 1");
    Ok(KruskalWallis {
        h,
        p_value: chi.sf(h).clamp(0.0, 1.0),
        df,
    })
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}
