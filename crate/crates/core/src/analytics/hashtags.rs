//! Hashtag term frequencies per community and per user, community similarity
//! and per-window hashtag trends.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dyncomm::DynamicPartition;
use crate::ingest::{UserId, WindowedCorpus};
use crate::{Error, Result};

/// Hashtag → number of events using it.
pub type HashtagCounts = BTreeMap<String, usize>;

fn add_tags(counts: &mut HashtagCounts, tags: &[String]) {
    for t in tags {
        *counts.entry(t.clone()).or_default() += 1;
    }
}

/// Full-period TF of each community. An event counts toward community `k`
/// when its author belongs to `k` in some window containing it; an event seen
/// through several overlapping windows counts once per community.
pub fn community_hashtag_counts(corpus: &WindowedCorpus, partition: &DynamicPartition) -> BTreeMap<u32, HashtagCounts> {
    let mut pairs: BTreeSet<(usize, u32)> = BTreeSet::new();
    for (w, evs) in corpus.window_events.iter().enumerate() {
        for &e in evs {
            if let Some(k) = partition.get(corpus.event_users[e], w) {
                pairs.insert((e, k));
            }
        }
    }
    let mut out: BTreeMap<u32, HashtagCounts> = partition.communities().into_iter().map(|k| (k, HashtagCounts::new())).collect();
    for (e, k) in pairs {
        add_tags(out.entry(k).or_default(), &corpus.events[e].hashtags);
    }
    out
}

/// Full-period TF of each requested user over all of its retained events.
pub fn user_hashtag_counts(corpus: &WindowedCorpus, users: &BTreeSet<UserId>) -> BTreeMap<UserId, HashtagCounts> {
    let mut out: BTreeMap<UserId, HashtagCounts> = BTreeMap::new();
    for (e, ev) in corpus.events.iter().enumerate() {
        let u = corpus.event_users[e];
        if users.contains(&u) {
            add_tags(out.entry(u).or_default(), &ev.hashtags);
        }
    }
    out
}

/// TF of `user` within one window.
pub fn user_window_counts(corpus: &WindowedCorpus, user: UserId, window: usize) -> HashtagCounts {
    let mut c = HashtagCounts::new();
    for (u, ev) in corpus.events_in(window) {
        if u == user {
            add_tags(&mut c, &ev.hashtags);
        }
    }
    c
}

pub fn cosine(a: &HashtagCounts, b: &HashtagCounts) -> f64 {
    let norm = |x: &HashtagCounts| x.values().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(t, &x)| large.get(t).map(|&y| x as f64 * y as f64))
        .sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub communities: Vec<u32>,
    /// Row-major, `communities.len()` squared.
    pub values: Vec<Vec<f64>>,
    /// Communities whose members used no hashtags.
    pub without_hashtags: Vec<u32>,
}

impl SimilarityMatrix {
    fn index(&self, k: u32) -> Option<usize> {
        self.communities.binary_search(&k).ok()
    }

    pub fn get(&self, k: u32, j: u32) -> Option<f64> {
        Some(self.values[self.index(k)?][self.index(j)?])
    }

    /// `1 − sim(k, j)`; communities outside the matrix are maximally distant.
    pub fn distance(&self, k: u32, j: u32) -> f64 {
        1.0 - self.get(k, j).unwrap_or(0.0)
    }
}

pub fn community_similarity(counts: &BTreeMap<u32, HashtagCounts>) -> Result<SimilarityMatrix> {
    if counts.is_empty() {
        return Err(Error::Empty("communities"));
    }
    let communities: Vec<u32> = counts.keys().copied().collect();
    let vecs: Vec<&HashtagCounts> = counts.values().collect();
    let n = communities.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in (i + 1)..n {
            let s = cosine(vecs[i], vecs[j]);
            values[i][j] = s;
            values[j][i] = s;
        }
    }
    let without_hashtags = counts
        .iter()
        .filter(|(_, c)| c.is_empty())
        .map(|(&k, _)| k)
        .collect();
    Ok(SimilarityMatrix { communities, values, without_hashtags })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendRow {
    pub community: u32,
    pub window: usize,
    /// 1 for the top hashtag.
    pub rank: usize,
    pub hashtag: String,
    pub count: usize,
}

/// The `top_k` hashtags per (community, window) by per-window TF, ties by
/// hashtag. Cells without hashtags emit nothing.
pub fn top_hashtag_trends(corpus: &WindowedCorpus, partition: &DynamicPartition, top_k: usize) -> Vec<TrendRow> {
    let mut cells: BTreeMap<(u32, usize), HashtagCounts> = BTreeMap::new();
    for w in 0..corpus.n_windows() {
        for (u, ev) in corpus.events_in(w) {
            if ev.hashtags.is_empty() {
                continue;
            }
            if let Some(k) = partition.get(u, w) {
                add_tags(cells.entry((k, w)).or_default(), &ev.hashtags);
            }
        }
    }
    let mut rows = Vec::new();
    for ((k, w), counts) in cells {
        let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (i, (hashtag, count)) in ranked.into_iter().take(top_k).enumerate() {
            rows.push(TrendRow { community: k, window: w, rank: i + 1, hashtag, count });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn counts(items: &[(&str, usize)]) -> HashtagCounts {
        items.iter().map(|(t, c)| (t.to_string(), *c)).collect()
    }

    #[test]
    fn cosine_extremes() {
        let a = counts(&[("x", 2), ("y", 1)]);
        assert_abs_diff_eq!(cosine(&a, &a), 1.0, epsilon = 1e-12);
        assert_eq!(cosine(&a, &counts(&[("z", 3)])), 0.0);
    }

    #[test]
    fn half_shared_mass() {
        // a = (x:1, y:1), b = (y:1, z:1) → 1/2
        let m = community_similarity(&BTreeMap::from([
            (0, counts(&[("x", 1), ("y", 1)])),
            (1, counts(&[("y", 1), ("z", 1)])),
            (2, HashtagCounts::new()),
        ]))
        .unwrap();
        assert_abs_diff_eq!(m.get(0, 1).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(m.get(1, 0), m.get(0, 1));
        assert_eq!(m.get(2, 0), Some(0.0));
        assert_eq!(m.get(2, 2), Some(1.0));
        assert_eq!(m.without_hashtags, vec![2]);
        assert_abs_diff_eq!(m.distance(0, 1), 0.5, epsilon = 1e-12);
    }
}
