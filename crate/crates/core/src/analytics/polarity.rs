//! Hashtag polarity by label propagation over the co-occurrence graph, and
//! community polarity as a TF-weighted average.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::hashtags::HashtagCounts;
use crate::ingest::RetweetEvent;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashtagPolarity {
    pub polarity: BTreeMap<String, f64>,
    pub seeds: BTreeMap<String, f64>,
    /// Hashtags with no path to any seed; their polarity is 0.
    pub unreachable: Vec<String>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarityMap {
    pub hashtags: HashtagPolarity,
    pub communities: BTreeMap<u32, f64>,
    /// Communities whose members used no hashtag.
    pub without_hashtags: Vec<u32>,
}

/// Propagates seed values over a graph whose edge weights count the events
/// using both hashtags. Seeds stay clamped; every other hashtag takes the
/// weighted mean of its neighbors until the largest update is below
/// [`TOLERANCE`].
pub fn hashtag_polarity<'a>(
    events: impl IntoIterator<Item = &'a RetweetEvent>,
    seeds: &BTreeMap<String, f64>,
) -> Result<HashtagPolarity> {
    if let Some((h, v)) = seeds.iter().find(|(_, v)| ![-1.0, 0.0, 1.0].contains(*v)) {
        return Err(Error::InvalidParameter(format!("seed {h} has value {v}, expected -1, 0 or 1")));
    }
    if !seeds.values().any(|&v| v < 0.0) || !seeds.values().any(|&v| v > 0.0) {
        return Err(Error::InvalidParameter("polarity needs both a negative and a positive seed".into()));
    }
    let seeds: BTreeMap<String, f64> = seeds
        .iter()
        .map(|(h, &v)| (crate::ingest::normalize_hashtags([h]).pop().unwrap_or_default(), v))
        .collect();

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut pair_weight: HashMap<(usize, usize), f64> = HashMap::new();
    let mut intern = |h: &str, names: &mut Vec<String>| -> usize {
        *index.entry(h.to_string()).or_insert_with(|| {
            names.push(h.to_string());
            names.len() - 1
        })
    };
    for ev in events {
        let ids: Vec<usize> = ev.hashtags.iter().map(|h| intern(h, &mut names)).collect();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                let (a, b) = (ids[i].min(ids[j]), ids[i].max(ids[j]));
                *pair_weight.entry((a, b)).or_default() += 1.0;
            }
        }
    }
    for h in seeds.keys() {
        intern(h, &mut names);
    }
    let n = names.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut pairs: Vec<_> = pair_weight.into_iter().collect();
    pairs.sort_by_key(|&(k, _)| k);
    for ((a, b), w) in pairs {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let seed_value: Vec<Option<f64>> = names.iter().map(|h| seeds.get(h).copied()).collect();

    // hashtags sharing a component with a seed
    let mut reachable = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| seed_value[i].is_some()).collect();
    for &s in &stack {
        reachable[s] = true;
    }
    while let Some(v) = stack.pop() {
        for &(t, _) in &adj[v] {
            if !reachable[t] {
                reachable[t] = true;
                stack.push(t);
            }
        }
    }

    let mut p: Vec<f64> = seed_value.iter().map(|s| s.unwrap_or(0.0)).collect();
    let mut next = p.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut delta: f64 = 0.0;
        for v in 0..n {
            if seed_value[v].is_some() || !reachable[v] {
                continue;
            }
            let (num, den) = adj[v].iter().fold((0.0, 0.0), |(a, b), &(t, w)| (a + w * p[t], b + w));
            next[v] = if den > 0.0 { num / den } else { 0.0 };
            delta = delta.max((next[v] - p[v]).abs());
        }
        std::mem::swap(&mut p, &mut next);
        next.copy_from_slice(&p);
        if delta < TOLERANCE {
            converged = true;
            break;
        }
    }
    let mut unreachable: Vec<String> = (0..n).filter(|&v| !reachable[v]).map(|v| names[v].clone()).collect();
    unreachable.sort();
    Ok(HashtagPolarity {
        polarity: names.iter().cloned().zip(p).collect(),
        seeds,
        unreachable,
        iterations,
        converged,
    })
}

/// TF-weighted mean hashtag polarity per community, rescaled so positive
/// scores are divided by the largest and negative ones by the magnitude of
/// the smallest.
pub fn community_polarity(hashtags: HashtagPolarity, counts: &BTreeMap<u32, HashtagCounts>) -> PolarityMap {
    let mut raw: BTreeMap<u32, f64> = BTreeMap::new();
    let mut without: BTreeSet<u32> = BTreeSet::new();
    for (&k, c) in counts {
        let total: usize = c.values().sum();
        if total == 0 {
            without.insert(k);
            raw.insert(k, 0.0);
            continue;
        }
        let s: f64 = c
            .iter()
            .map(|(h, &n)| n as f64 * hashtags.polarity.get(h).copied().unwrap_or(0.0))
            .sum();
        raw.insert(k, s / total as f64);
    }
    let max = raw.values().copied().fold(0.0f64, f64::max);
    let min = raw.values().copied().fold(0.0f64, f64::min);
    let communities = raw
        .into_iter()
        .map(|(k, v)| {
            let scaled = if v > 0.0 {
                v / max
            } else if v < 0.0 {
                v / min.abs()
            } else {
                0.0
            };
            (k, scaled)
        })
        .collect();
    PolarityMap { hashtags, communities, without_hashtags: without.into_iter().collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(tags: &[&str]) -> RetweetEvent {
        RetweetEvent::new("u", "t", "o", 0, tags.iter().copied())
    }

    fn seeds(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
        items.iter().map(|(h, v)| (h.to_string(), *v)).collect()
    }

    fn two_cliques() -> Vec<RetweetEvent> {
        vec![
            tweet(&["l1", "l2", "l3"]),
            tweet(&["l1", "l2"]),
            tweet(&["r1", "r2", "r3"]),
            tweet(&["r2", "r3"]),
            tweet(&["island"]),
        ]
    }

    #[test]
    fn signs_follow_seeds() {
        let hp = hashtag_polarity(&two_cliques(), &seeds(&[("l1", -1.0), ("r1", 1.0)])).unwrap();
        assert!(hp.converged);
        assert_eq!(hp.polarity["l1"], -1.0);
        assert_eq!(hp.polarity["r1"], 1.0);
        for h in ["l2", "l3"] {
            assert!(hp.polarity[h] < 0.0);
        }
        for h in ["r2", "r3"] {
            assert!(hp.polarity[h] > 0.0);
        }
        assert_eq!(hp.unreachable, vec!["island".to_string()]);
        assert_eq!(hp.polarity["island"], 0.0);
    }

    #[test]
    fn neutral_seed_is_kept() {
        let ev = vec![tweet(&["a", "n"]), tweet(&["n", "b"]), tweet(&["a", "b"])];
        let hp = hashtag_polarity(&ev, &seeds(&[("a", -1.0), ("b", 1.0), ("n", 0.0)])).unwrap();
        assert_eq!(hp.polarity["n"], 0.0);
    }

    #[test]
    fn seed_validation() {
        assert!(hashtag_polarity(&two_cliques(), &seeds(&[("l1", -1.0)])).is_err());
        assert!(hashtag_polarity(&two_cliques(), &seeds(&[("l1", -0.5), ("r1", 1.0)])).is_err());
    }

    #[test]
    fn normalized_extremes() {
        let hp = hashtag_polarity(&two_cliques(), &seeds(&[("l1", -1.0), ("r1", 1.0)])).unwrap();
        let c = |items: &[(&str, usize)]| -> HashtagCounts { items.iter().map(|(h, n)| (h.to_string(), *n)).collect() };
        let counts = BTreeMap::from([
            (0, c(&[("l2", 3), ("r2", 1)])),
            (1, c(&[("l1", 1)])),
            (2, c(&[("r3", 2), ("island", 2)])),
            (3, HashtagCounts::new()),
        ]);
        let pm = community_polarity(hp, &counts);
        let min = pm.communities.values().copied().fold(f64::INFINITY, f64::min);
        let max = pm.communities.values().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((min, max), (-1.0, 1.0));
        assert_eq!(pm.communities[&1], -1.0);
        assert_eq!(pm.communities[&2], 1.0);
        assert!(pm.communities[&0] < 0.0 && pm.communities[&0] > -1.0);
        assert_eq!(pm.without_hashtags, vec![3]);
    }
}
