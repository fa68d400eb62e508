//! Topic affinity of stationary users and the approach of influenced users
//! toward their destination community.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hashtags::{user_window_counts, HashtagCounts};
use super::rbo::{rbo_tied, tie_groups};
use super::shifts::ShiftRecord;
use super::stats::{kruskal_wallis, mean, KruskalWallis};
use crate::dyncomm::Timelines;
use crate::ingest::{UserId, WindowedCorpus};
use crate::multiplex::MultiplexNetwork;
use crate::simnet::LayerGraph;
use crate::{Error, Result};

pub fn ranking(counts: &HashtagCounts) -> Vec<Vec<String>> {
    tie_groups(counts.iter().map(|(h, &c)| (h.clone(), c)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinityRow {
    pub user: UserId,
    pub own: u32,
    pub own_rbo: f64,
    /// Community with the highest RBO, lowest id on ties.
    pub best: u32,
    pub best_rbo: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryAffinity {
    pub rows: Vec<AffinityRow>,
    /// Stationary users left out because they used no hashtag.
    pub excluded_without_hashtags: usize,
    /// Share of rows with `best == own`.
    pub diagonal_fraction: Option<f64>,
}

/// `stationary` pairs each user with its single community.
pub fn stationary_affinity(
    stationary: &[(UserId, u32)],
    user_counts: &BTreeMap<UserId, HashtagCounts>,
    community_counts: &BTreeMap<u32, HashtagCounts>,
    persistence: f64,
) -> Result<StationaryAffinity> {
    let comms: Vec<(u32, Vec<Vec<String>>)> = community_counts.iter().map(|(&k, c)| (k, ranking(c))).collect();
    if comms.is_empty() {
        return Err(Error::Empty("communities"));
    }
    let eligible: Vec<(UserId, u32, Vec<Vec<String>>)> = stationary
        .iter()
        .filter_map(|&(u, k)| {
            let c = user_counts.get(&u)?;
            (!c.is_empty()).then(|| (u, k, ranking(c)))
        })
        .collect();
    let excluded = stationary.len() - eligible.len();
    let rows = eligible
        .par_iter()
        .map(|(u, own, r)| {
            let mut best = (comms[0].0, f64::NEG_INFINITY);
            let mut own_rbo = 0.0;
            for (k, cr) in &comms {
                let v = rbo_tied(r, cr, persistence)?;
                if v > best.1 {
                    best = (*k, v);
                }
                if k == own {
                    own_rbo = v;
                }
            }
            Ok(AffinityRow { user: *u, own: *own, own_rbo, best: best.0, best_rbo: best.1 })
        })
        .collect::<Result<Vec<_>>>()?;
    let diag = rows.iter().filter(|r| r.best == r.own).count();
    Ok(StationaryAffinity {
        diagonal_fraction: (!rows.is_empty()).then(|| diag as f64 / rows.len() as f64),
        rows,
        excluded_without_hashtags: excluded,
    })
}

/// Harmonic closeness of `user` toward `targets` on unweighted hops:
/// `1/|C'| Σ_{v∈C'} 1/d(user, v)` with `C' = targets \ {user}`.
pub fn closeness_to_community(layer: &LayerGraph, user: UserId, targets: &BTreeSet<UserId>) -> Result<f64> {
    let src = layer
        .position(user)
        .ok_or_else(|| Error::InvalidParameter(format!("user {user} not in layer {}", layer.window_index)))?;
    let n_targets = targets.iter().filter(|&&t| t != user).count();
    if n_targets == 0 {
        return Err(Error::EmptyTargets);
    }
    let adj = layer.adjacency();
    let mut dist = vec![usize::MAX; layer.nodes.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    let mut sum = 0.0;
    while let Some(v) = queue.pop_front() {
        if v != src && targets.contains(&layer.nodes[v]) {
            sum += 1.0 / dist[v] as f64;
        }
        for &(t, _) in &adj[v] {
            if dist[t] == usize::MAX {
                dist[t] = dist[v] + 1;
                queue.push_back(t);
            }
        }
    }
    Ok(sum / n_targets as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetPoint {
    pub offset: i64,
    pub rbo_origin: Option<f64>,
    pub rbo_destination: Option<f64>,
    pub closeness_origin: Option<f64>,
    pub closeness_destination: Option<f64>,
    pub rbo_samples: usize,
    pub closeness_samples: usize,
    pub rbo_test: Option<KruskalWallis>,
    pub closeness_test: Option<KruskalWallis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedTrends {
    pub half_width: usize,
    pub users: usize,
    pub points: Vec<OffsetPoint>,
}

/// Realigns each shift at offset 0 and averages, per offset in `−m..=m`, the
/// user's RBO to the origin and destination rankings and its closeness to
/// their members in that window. Offsets where the user has no hashtags, is
/// absent from the layer, or a target set is empty drop out of the sample.
pub fn aligned_shift_trends(
    shifts: &[ShiftRecord],
    corpus: &WindowedCorpus,
    network: &MultiplexNetwork,
    timelines: &Timelines,
    community_counts: &BTreeMap<u32, HashtagCounts>,
    half_width: usize,
    persistence: f64,
) -> Result<AlignedTrends> {
    if half_width == 0 {
        return Err(Error::InvalidParameter("half width must be at least 1".into()));
    }
    let layer_of: BTreeMap<usize, &LayerGraph> = network.layers.iter().map(|l| (l.window_index, l)).collect();
    let rank_of: BTreeMap<u32, Vec<Vec<String>>> = community_counts.iter().map(|(&k, c)| (k, ranking(c))).collect();
    let m = half_width as i64;
    let n_offsets = 2 * half_width + 1;

    // per shift, per offset: (rbo_o, rbo_d, close_o, close_d)
    type Sample = (Option<(f64, f64)>, Option<(f64, f64)>);
    let per_shift: Vec<Vec<Sample>> = shifts
        .par_iter()
        .map(|s| {
            (-m..=m)
                .map(|o| {
                    let w = s.window as i64 + o;
                    if w < 0 || w as usize >= corpus.n_windows() {
                        return Ok((None, None));
                    }
                    let w = w as usize;
                    let uc = user_window_counts(corpus, s.user, w);
                    let topic = match (rank_of.get(&s.origin), rank_of.get(&s.destination)) {
                        (Some(ro), Some(rd)) if !uc.is_empty() => {
                            let r = ranking(&uc);
                            Some((rbo_tied(&r, ro, persistence)?, rbo_tied(&r, rd, persistence)?))
                        }
                        _ => None,
                    };
                    let close = layer_of.get(&w).filter(|l| l.contains(s.user)).and_then(|l| {
                        let to = timelines.members_at(s.origin, w)?;
                        let td = timelines.members_at(s.destination, w)?;
                        let co = closeness_to_community(l, s.user, to).ok()?;
                        let cd = closeness_to_community(l, s.user, td).ok()?;
                        Some((co, cd))
                    });
                    Ok((topic, close))
                })
                .collect::<Result<Vec<Sample>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(n_offsets);
    for (i, o) in (-m..=m).enumerate() {
        let topic: Vec<(f64, f64)> = per_shift.iter().filter_map(|v| v[i].0).collect();
        let close: Vec<(f64, f64)> = per_shift.iter().filter_map(|v| v[i].1).collect();
        let split = |xs: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { xs.iter().copied().unzip() };
        let (ro, rd) = split(&topic);
        let (co, cd) = split(&close);
        let test = |a: Vec<f64>, b: Vec<f64>| kruskal_wallis(&[a, b]).ok();
        points.push(OffsetPoint {
            offset: o,
            rbo_origin: mean(&ro),
            rbo_destination: mean(&rd),
            closeness_origin: mean(&co),
            closeness_destination: mean(&cd),
            rbo_samples: topic.len(),
            closeness_samples: close.len(),
            rbo_test: test(ro, rd),
            closeness_test: test(co, cd),
        });
    }
    Ok(AlignedTrends { half_width, users: shifts.len(), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::Edge;
    use approx::assert_abs_diff_eq;

    fn path() -> LayerGraph {
        LayerGraph::from_edges(
            0,
            vec![Edge { u: 0, v: 1, weight: 1.0 }, Edge { u: 1, v: 2, weight: 1.0 }, Edge { u: 3, v: 4, weight: 1.0 }],
        )
    }

    #[test]
    fn closeness_cases() {
        let g = path();
        assert_abs_diff_eq!(closeness_to_community(&g, 0, &BTreeSet::from([1, 2])).unwrap(), 0.75);
        assert_abs_diff_eq!(closeness_to_community(&g, 1, &BTreeSet::from([0, 1, 2])).unwrap(), 1.0);
        assert_eq!(closeness_to_community(&g, 0, &BTreeSet::from([3, 4])).unwrap(), 0.0);
        assert!(matches!(closeness_to_community(&g, 0, &BTreeSet::from([0])), Err(Error::EmptyTargets)));
        assert!(closeness_to_community(&g, 9, &BTreeSet::from([1])).is_err());
    }

    #[test]
    fn affinity_picks_own_pool() {
        let c = |items: &[(&str, usize)]| -> HashtagCounts { items.iter().map(|(h, n)| (h.to_string(), *n)).collect() };
        let comm = BTreeMap::from([(0, c(&[("a", 5), ("b", 3), ("c", 1)])), (1, c(&[("x", 5), ("y", 3)]))]);
        let users = BTreeMap::from([(10, c(&[("a", 2), ("b", 1)])), (11, c(&[("y", 1)])), (12, HashtagCounts::new())]);
        let a = stationary_affinity(&[(10, 0), (11, 0), (12, 1)], &users, &comm, 0.9).unwrap();
        assert_eq!(a.excluded_without_hashtags, 1);
        assert_eq!(a.rows.len(), 2);
        assert_eq!((a.rows[0].best, a.rows[1].best), (0, 1));
        assert_eq!(a.diagonal_fraction, Some(0.5));
    }
}
