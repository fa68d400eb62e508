use std::collections::{BTreeMap, BTreeSet};

use super::DynamicPartition;
use crate::ingest::UserId;

/// Per-community membership `mem_k(t_i)` for every window.
#[derive(Clone, Debug, PartialEq)]
pub struct Timelines {
    pub n_windows: usize,
    pub members: BTreeMap<u32, Vec<BTreeSet<UserId>>>,
    /// Largest communities by distinct members (ties by id).
    pub top: Vec<u32>,
}

impl Timelines {
    pub fn members_at(&self, community: u32, window: usize) -> Option<&BTreeSet<UserId>> {
        self.members.get(&community).and_then(|m| m.get(window))
    }

    /// Users ever in `community`.
    pub fn distinct_members(&self, community: u32) -> BTreeSet<UserId> {
        self.members
            .get(&community)
            .map(|m| m.iter().flatten().copied().collect())
            .unwrap_or_default()
    }

    pub fn communities(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.keys().copied()
    }
}

pub fn community_timelines(partition: &DynamicPartition, n_windows: usize, top_m: usize) -> Timelines {
    let n_windows = n_windows.max(partition.assignments.iter().map(|a| a.window + 1).max().unwrap_or(0));
    let mut members: BTreeMap<u32, Vec<BTreeSet<UserId>>> = BTreeMap::new();
    for a in &partition.assignments {
        members
            .entry(a.community)
            .or_insert_with(|| vec![BTreeSet::new(); n_windows])[a.window]
            .insert(a.user);
    }
    let mut sizes: Vec<(usize, u32)> = members
        .iter()
        .map(|(&k, m)| (m.iter().flatten().collect::<BTreeSet<_>>().len(), k))
        .collect();
    sizes.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Timelines {
        n_windows,
        members,
        top: sizes.into_iter().take(top_m).map(|(_, k)| k).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyncomm::SliceAssignment;

    fn part(rows: &[(usize, UserId, u32)]) -> DynamicPartition {
        DynamicPartition::from_assignments(
            rows.iter()
                .map(|&(window, user, community)| SliceAssignment { window, user, community })
                .collect(),
            0.0,
        )
    }

    #[test]
    fn constant_member_in_every_window() {
        let rows: Vec<(usize, UserId, u32)> = (0..25).map(|w| (w, 7, 3)).collect();
        let t = community_timelines(&part(&rows), 25, 10);
        for w in 0..25 {
            assert!(t.members_at(3, w).unwrap().contains(&7));
        }
    }

    #[test]
    fn top_by_distinct_members() {
        let t = community_timelines(
            &part(&[(0, 1, 0), (1, 1, 0), (2, 1, 0), (0, 2, 1), (0, 3, 1), (1, 4, 2)]),
            3,
            2,
        );
        assert_eq!(t.top, vec![1, 0]);
        assert_eq!(t.distinct_members(0).len(), 1);
        assert!(t.members_at(2, 0).unwrap().is_empty());
    }
}
