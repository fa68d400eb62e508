//! Extrapolated rank-biased overlap.
//!
//! For rankings of lengths `s <= l` with overlap `X_d` at depth `d`:
//!
//! ```text
//! RBO_ext = (1−p)/p · Σ_{d=1..l} A_d p^d + A_l p^l
//! A_d = X_d / d                      for d <= s
//! A_d = (X_d + (X_s / s)(d − s)) / d  for d > s
//! ```
//!
//! which is the uneven-length extrapolation of the original definition.
//! Tied items enter the prefix together at the depth of the group's first
//! position; agreement within the short list's range is then
//! `X_d / ((|S_d| + |T_d|) / 2)`.

use std::collections::HashSet;
use std::hash::Hash;

use crate::{Error, Result};

pub const DEFAULT_PERSISTENCE: f64 = 0.9;

/// RBO of two rankings without ties. Duplicate items are ignored after their
/// first occurrence.
pub fn rbo<T: Eq + Hash + Clone>(a: &[T], b: &[T], persistence: f64) -> Result<f64> {
    let wrap = |xs: &[T]| -> Vec<Vec<T>> { xs.iter().map(|x| vec![x.clone()]).collect() };
    rbo_tied(&wrap(a), &wrap(b), persistence)
}

/// RBO of two rankings given as ordered tie groups.
pub fn rbo_tied<T: Eq + Hash + Clone>(a: &[Vec<T>], b: &[Vec<T>], persistence: f64) -> Result<f64> {
    if !(persistence > 0.0 && persistence < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "RBO persistence must be in (0, 1), got {persistence}"
        )));
    }
    let a = dedup_groups(a);
    let b = dedup_groups(b);
    let len_a: usize = a.iter().map(Vec::len).sum();
    let len_b: usize = b.iter().map(Vec::len).sum();
    match (len_a, len_b) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let short = len_a.min(len_b);
    let long = len_a.max(len_b);
    let p = persistence;

    let mut seen_a: HashSet<&T> = HashSet::new();
    let mut seen_b: HashSet<&T> = HashSet::new();
    let (mut ga, mut gb) = (0usize, 0usize);
    let (mut next_a, mut next_b) = (1usize, 1usize);
    let mut overlap = 0usize;
    let mut agreement_at_short = 0.0;
    let mut sum = 0.0;
    let mut weight = 1.0; // p^d
    let mut last = 0.0;
    for d in 1..=long {
        while ga < a.len() && next_a <= d {
            for x in &a[ga] {
                if seen_b.contains(x) {
                    overlap += 1;
                }
                seen_a.insert(x);
            }
            next_a += a[ga].len();
            ga += 1;
        }
        while gb < b.len() && next_b <= d {
            for x in &b[gb] {
                if seen_a.contains(x) {
                    overlap += 1;
                }
                seen_b.insert(x);
            }
            next_b += b[gb].len();
            gb += 1;
        }
        let agreement = if d <= short {
            overlap as f64 / ((seen_a.len() + seen_b.len()) as f64 / 2.0)
        } else {
            (overlap as f64 + agreement_at_short * (d - short) as f64) / d as f64
        };
        if d == short {
            agreement_at_short = agreement;
        }
        weight *= p;
        sum += agreement * weight;
        last = agreement;
    }
    let value = (1.0 - p) / p * sum + last * weight;
    Ok(value.clamp(0.0, 1.0))
}

fn dedup_groups<T: Eq + Hash + Clone>(groups: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut seen: HashSet<&T> = HashSet::new();
    groups
        .iter()
        .map(|g| g.iter().filter(|x| seen.insert(x)).cloned().collect::<Vec<T>>())
        .filter(|g| !g.is_empty())
        .collect()
}

/// Ranks items by descending count into tie groups; groups are internally
/// sorted for determinism.
pub fn tie_groups<T: Ord + Clone>(counts: impl IntoIterator<Item = (T, usize)>) -> Vec<Vec<T>> {
    let mut items: Vec<(T, usize)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut groups: Vec<Vec<T>> = Vec::new();
    let mut last_count = None;
    for (item, c) in items {
        if last_count == Some(c) {
            groups.last_mut().expect("group exists").push(item);
        } else {
            groups.push(vec![item]);
            last_count = Some(c);
        }
    }
    groups
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Direct evaluation of the extrapolated sum from prefix intersections.
    pub(crate) fn rbo_definitional(a: &[u32], b: &[u32], p: f64) -> f64 {
        if a.is_empty() && b.is_empty() {
            return 1.0;
        }
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let (s, l) = if a.len() <= b.len() { (a.len(), b.len()) } else { (b.len(), a.len()) };
        let x = |d: usize| -> f64 {
            let pa: HashSet<u32> = a.iter().take(d).copied().collect();
            let pb: HashSet<u32> = b.iter().take(d).copied().collect();
            pa.intersection(&pb).count() as f64
        };
        let xs = x(s);
        let xl = x(l);
        let mut first = 0.0;
        for d in 1..=l {
            first += x(d) / d as f64 * p.powi(d as i32);
        }
        let mut second = 0.0;
        for d in (s + 1)..=l {
            second += xs * (d - s) as f64 / (s * d) as f64 * p.powi(d as i32);
        }
        (1.0 - p) / p * (first + second) + ((xl - xs) / l as f64 + xs / s as f64) * p.powi(l as i32)
    }

    #[test]
    fn identity_and_disjoint() {
        let a = ["x", "y", "z"];
        assert_abs_diff_eq!(rbo(&a, &a, 0.9).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(rbo(&a, &["p", "q"], 0.9).unwrap(), 0.0);
    }

    #[test]
    fn swap_of_last_two_matches_sum() {
        let a = [0u32, 1, 2];
        let b = [0u32, 2, 1];
        let got = rbo(&a, &b, 0.9).unwrap();
        assert_abs_diff_eq!(got, rbo_definitional(&a, &b, 0.9), epsilon = 1e-12);
        // X = 1, 1, 3 → 0.1/0.9·(0.9 + 0.405 + 0.729) + 0.729
        assert_abs_diff_eq!(got, 0.1 / 0.9 * (0.9 + 0.5 * 0.81 + 0.729) + 0.729, epsilon = 1e-12);
    }

    #[test]
    fn empty_rankings() {
        let e: [u32; 0] = [];
        assert_eq!(rbo(&e, &e, 0.9).unwrap(), 1.0);
        assert_eq!(rbo(&e, &[1], 0.9).unwrap(), 0.0);
        assert!(rbo(&[1], &[1], 1.0).is_err());
    }

    #[test]
    fn ties_enter_as_a_block() {
        // {a,b} tied at the top on one side, a then b on the other
        let tied = vec![vec!["a", "b"], vec!["c"]];
        let plain = vec![vec!["a"], vec!["b"], vec!["c"]];
        let v = rbo_tied(&tied, &plain, 0.9).unwrap();
        assert!(v > 0.0 && v <= 1.0);
        // ties within the same block on both sides agree fully
        let swapped = vec![vec!["b", "a"], vec!["c"]];
        assert_abs_diff_eq!(rbo_tied(&tied, &swapped, 0.9).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tie_groups_from_counts() {
        let g = tie_groups(vec![("b", 2), ("a", 2), ("c", 5), ("d", 0)]);
        assert_eq!(g, vec![vec!["c"], vec!["a", "b"]]);
    }

    fn ranking() -> impl Strategy<Value = Vec<u32>> {
        proptest::sample::subsequence((0u32..12).collect::<Vec<_>>(), 0..=10).prop_shuffle()
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in ranking(), b in ranking(), p in 0.05f64..0.99) {
            let x = rbo(&a, &b, p).unwrap();
            let y = rbo(&b, &a, p).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert!((rbo(&a, &a, p).unwrap() - 1.0).abs() < 1e-12 || a.is_empty());
        }
    }
}
