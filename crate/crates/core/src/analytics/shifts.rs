//! User shifts between communities and the statistics derived from them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::archetypes::{Archetype, ArchetypeLabel};
use super::hashtags::SimilarityMatrix;
use super::stats::{kruskal_wallis, mean, pearson, KruskalWallis};
use crate::dyncomm::DynamicPartition;
use crate::ingest::UserId;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord {
    pub user: UserId,
    /// Arrival window.
    pub window: usize,
    /// The user's previous active window.
    pub from_window: usize,
    pub origin: u32,
    pub destination: u32,
    /// `1 − sim(origin, destination)`; 1 until [`weigh_shifts`] runs.
    pub weight: f64,
}

/// Shifts between consecutive active windows of each user, ordered by
/// `(window, user)`. Inactive gaps are skipped.
pub fn extract_shifts(partition: &DynamicPartition) -> Vec<ShiftRecord> {
    let mut out = Vec::new();
    for (user, traj) in partition.trajectories() {
        for pair in traj.windows(2) {
            let ((w0, k), (w1, j)) = (pair[0], pair[1]);
            if k != j {
                out.push(ShiftRecord { user, window: w1, from_window: w0, origin: k, destination: j, weight: 1.0 });
            }
        }
    }
    out.sort_by_key(|s| (s.window, s.user));
    out
}

pub fn weigh_shifts(shifts: &mut [ShiftRecord], sim: &SimilarityMatrix) {
    for s in shifts {
        s.weight = sim.distance(s.origin, s.destination);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub from: u32,
    pub to: u32,
    /// `#(from→to) − #(to→from)`, always positive.
    pub net_flow: usize,
    pub dissimilarity: f64,
    /// `dissimilarity · net_flow`.
    pub weight: f64,
}

pub fn net_flow_network(shifts: &[ShiftRecord], sim: &SimilarityMatrix) -> Vec<FlowEdge> {
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for s in shifts {
        *counts.entry((s.origin, s.destination)).or_default() += 1;
    }
    let mut out = Vec::new();
    for (&(k, j), &n) in &counts {
        let back = counts.get(&(j, k)).copied().unwrap_or(0);
        if n > back {
            let d = sim.distance(k, j);
            out.push(FlowEdge { from: k, to: j, net_flow: n - back, dissimilarity: d, weight: d * (n - back) as f64 });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPolarity {
    /// `p_destination − p_origin`, aligned with the input shifts.
    pub deltas: Vec<f64>,
    pub mean: Option<f64>,
    pub total: f64,
}

pub fn polarity_shift_stats(shifts: &[ShiftRecord], polarity: &BTreeMap<u32, f64>) -> Result<DeltaPolarity> {
    let p = |k: u32| {
        polarity
            .get(&k)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("community {k} has no polarity")))
    };
    let deltas = shifts
        .iter()
        .map(|s| Ok(p(s.destination)? - p(s.origin)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DeltaPolarity { mean: mean(&deltas), total: deltas.iter().sum(), deltas })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCell {
    pub memberships: usize,
    pub shifts: usize,
    pub users: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipShiftStats {
    /// `(user, distinct communities, shifts)`.
    pub per_user: Vec<(UserId, usize, usize)>,
    /// Users per `(memberships, shifts)` cell, non-empty cells only.
    pub joint: Vec<JointCell>,
    pub memberships_histogram: BTreeMap<usize, usize>,
    pub shifts_histogram: BTreeMap<usize, usize>,
    /// `None` with fewer than two users or a constant column.
    pub pearson: Option<f64>,
    pub single_membership_fraction: f64,
}

pub fn membership_shift_stats(partition: &DynamicPartition, shifts: &[ShiftRecord]) -> MembershipShiftStats {
    let mut n_shifts: BTreeMap<UserId, usize> = BTreeMap::new();
    for s in shifts {
        *n_shifts.entry(s.user).or_default() += 1;
    }
    let per_user: Vec<(UserId, usize, usize)> = partition
        .trajectories()
        .into_iter()
        .map(|(u, traj)| {
            let distinct = traj.iter().map(|&(_, k)| k).collect::<BTreeSet<_>>().len();
            (u, distinct, n_shifts.get(&u).copied().unwrap_or(0))
        })
        .collect();
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut memberships_histogram = BTreeMap::new();
    let mut shifts_histogram = BTreeMap::new();
    for &(_, m, s) in &per_user {
        *joint.entry((m, s)).or_default() += 1;
        *memberships_histogram.entry(m).or_default() += 1;
        *shifts_histogram.entry(s).or_default() += 1;
    }
    let xs: Vec<f64> = per_user.iter().map(|r| r.1 as f64).collect();
    let ys: Vec<f64> = per_user.iter().map(|r| r.2 as f64).collect();
    let single = per_user.iter().filter(|r| r.1 == 1).count();
    MembershipShiftStats {
        pearson: pearson(&xs, &ys),
        single_membership_fraction: if per_user.is_empty() { 0.0 } else { single as f64 / per_user.len() as f64 },
        per_user,
        joint: joint.into_iter().map(|((memberships, shifts), users)| JointCell { memberships, shifts, users }).collect(),
        memberships_histogram,
        shifts_histogram,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTest {
    pub a: Archetype,
    pub b: Archetype,
    /// `None` when either group has fewer than two samples.
    pub result: Option<KruskalWallis>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceDistributions {
    pub samples: BTreeMap<Archetype, Vec<f64>>,
    pub tests: Vec<GroupTest>,
}

/// Shift distances grouped by the shifting user's archetype (volatile,
/// influenced, other) with pairwise Kruskal–Wallis tests.
pub fn shift_distance_distributions(shifts: &[ShiftRecord], labels: &[ArchetypeLabel]) -> DistanceDistributions {
    const GROUPS: [Archetype; 3] = [Archetype::Volatile, Archetype::Influenced, Archetype::Other];
    let label_of: BTreeMap<UserId, Archetype> = labels.iter().map(|l| (l.user, l.label)).collect();
    let mut samples: BTreeMap<Archetype, Vec<f64>> = GROUPS.iter().map(|&g| (g, Vec::new())).collect();
    for s in shifts {
        if let Some(v) = label_of.get(&s.user).and_then(|l| samples.get_mut(l)) {
            v.push(s.weight);
        }
    }
    let mut tests = Vec::new();
    for i in 0..GROUPS.len() {
        for j in (i + 1)..GROUPS.len() {
            let (a, b) = (&samples[&GROUPS[i]], &samples[&GROUPS[j]]);
            let result = if a.len() >= 2 && b.len() >= 2 {
                kruskal_wallis(&[a.clone(), b.clone()]).ok()
            } else {
                None
            };
            tests.push(GroupTest { a: GROUPS[i], b: GROUPS[j], result });
        }
    }
    DistanceDistributions { samples, tests }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dyncomm::SliceAssignment;
    use approx::assert_abs_diff_eq;

    pub(crate) fn partition(rows: &[(UserId, &[(usize, u32)])]) -> DynamicPartition {
        let mut a = Vec::new();
        for &(user, traj) in rows {
            for &(window, community) in traj {
                a.push(SliceAssignment { window, user, community });
            }
        }
        DynamicPartition::from_assignments(a, 0.0)
    }

    fn shift(user: UserId, origin: u32, destination: u32) -> ShiftRecord {
        ShiftRecord { user, window: 1, from_window: 0, origin, destination, weight: 1.0 }
    }

    fn sim(pairs: &[(u32, u32, f64)], n: u32) -> SimilarityMatrix {
        let mut values = vec![vec![0.0; n as usize]; n as usize];
        for i in 0..n as usize {
            values[i][i] = 1.0;
        }
        for &(a, b, s) in pairs {
            values[a as usize][b as usize] = s;
            values[b as usize][a as usize] = s;
        }
        SimilarityMatrix { communities: (0..n).collect(), values, without_hashtags: vec![] }
    }

    #[test]
    fn gaps_are_skipped() {
        let p = partition(&[(1, &[(2, 0), (3, 0), (7, 1)]), (2, &[(0, 0), (1, 0)])]);
        let s = extract_shifts(&p);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].user, s[0].window, s[0].from_window, s[0].origin, s[0].destination), (1, 7, 3, 0, 1));
    }

    #[test]
    fn alternating_user() {
        let traj: Vec<(usize, u32)> = (0..6).map(|w| (w, (w % 2) as u32)).collect();
        let p = partition(&[(9, &traj)]);
        let s = extract_shifts(&p);
        assert_eq!(s.len(), 5);
        let m = membership_shift_stats(&p, &s);
        assert_eq!(m.per_user, vec![(9, 2, 5)]);
    }

    #[test]
    fn net_flow_cancels_and_scales() {
        let m = sim(&[(0, 1, 0.25)], 3);
        let mut shifts: Vec<ShiftRecord> = (0..5).map(|u| shift(u, 0, 2)).chain((5..10).map(|u| shift(u, 2, 0))).collect();
        assert!(net_flow_network(&shifts, &m).is_empty());
        shifts = (0..7).map(|u| shift(u, 0, 1)).chain((7..9).map(|u| shift(u, 1, 0))).collect();
        weigh_shifts(&mut shifts, &m);
        assert_abs_diff_eq!(shifts[0].weight, 0.75);
        let e = net_flow_network(&shifts, &m);
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].from, e[0].to, e[0].net_flow), (0, 1, 5));
        assert_abs_diff_eq!(e[0].weight, 5.0 * 0.75, epsilon = 1e-12);
    }

    #[test]
    fn delta_p_arithmetic() {
        let pol = BTreeMap::from([(0, 1.0), (1, -1.0), (2, 1.0)]);
        let d = polarity_shift_stats(&[shift(0, 0, 1), shift(1, 0, 2)], &pol).unwrap();
        assert_eq!(d.deltas, vec![-2.0, 0.0]);
        assert_eq!(d.total, -2.0);
        assert_eq!(d.mean, Some(-1.0));
        assert!(polarity_shift_stats(&[shift(0, 0, 5)], &pol).is_err());
    }

    #[test]
    fn membership_stats_linear_and_degenerate() {
        let p = partition(&[
            (0, &[(0, 0), (1, 0)]),
            (1, &[(0, 0), (1, 1)]),
            (2, &[(0, 0), (1, 1), (2, 2)]),
        ]);
        let m = membership_shift_stats(&p, &extract_shifts(&p));
        assert_abs_diff_eq!(m.pearson.unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.single_membership_fraction, 1.0 / 3.0);
        let still = partition(&[(0, &[(0, 0)]), (1, &[(0, 1)])]);
        let m = membership_shift_stats(&still, &[]);
        assert_eq!(m.pearson, None);
        assert_eq!(m.single_membership_fraction, 1.0);
    }
}
