//! Overlap between a static partition and the dynamic one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dyncomm::DynamicPartition;
use crate::ingest::UserId;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapVariant {
    /// A user belongs to every dynamic community it ever joined.
    Union,
    /// A user belongs to the dynamic community it spent most windows in
    /// (lowest id on ties).
    Dominant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub variant: OverlapVariant,
    pub static_ids: Vec<u32>,
    pub dynamic_ids: Vec<u32>,
    /// `|static_k ∩ dynamic_j| / |static_k|`, rows follow `static_ids`.
    pub values: Vec<Vec<f64>>,
}

pub fn dynamic_membership(partition: &DynamicPartition, variant: OverlapVariant) -> BTreeMap<u32, BTreeSet<UserId>> {
    let mut out: BTreeMap<u32, BTreeSet<UserId>> = BTreeMap::new();
    for (user, traj) in partition.trajectories() {
        match variant {
            OverlapVariant::Union => {
                for (_, k) in traj {
                    out.entry(k).or_default().insert(user);
                }
            }
            OverlapVariant::Dominant => {
                let mut n: BTreeMap<u32, usize> = BTreeMap::new();
                for (_, k) in traj {
                    *n.entry(k).or_default() += 1;
                }
                // max_by_key keeps the last maximum; iterate ids descending
                if let Some((&k, _)) = n.iter().rev().max_by_key(|(_, &c)| c) {
                    out.entry(k).or_default().insert(user);
                }
            }
        }
    }
    for k in partition.communities() {
        out.entry(k).or_default();
    }
    out
}

pub fn partition_overlap(
    static_communities: &BTreeMap<u32, BTreeSet<UserId>>,
    partition: &DynamicPartition,
    variant: OverlapVariant,
) -> Result<OverlapMatrix> {
    if let Some((&k, _)) = static_communities.iter().find(|(_, m)| m.is_empty()) {
        return Err(Error::InvalidParameter(format!("static community {k} is empty")));
    }
    let dynamic = dynamic_membership(partition, variant);
    let values = static_communities
        .values()
        .map(|s| {
            dynamic
                .values()
                .map(|d| s.intersection(d).count() as f64 / s.len() as f64)
                .collect()
        })
        .collect();
    Ok(OverlapMatrix {
        variant,
        static_ids: static_communities.keys().copied().collect(),
        dynamic_ids: dynamic.keys().copied().collect(),
        values,
    })
}

/// Groups a flat `user → community` map.
pub fn group_static(membership: &BTreeMap<UserId, u32>) -> BTreeMap<u32, BTreeSet<UserId>> {
    let mut out: BTreeMap<u32, BTreeSet<UserId>> = BTreeMap::new();
    for (&u, &k) in membership {
        out.entry(k).or_default().insert(u);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::shifts::tests::partition;

    #[test]
    fn identical_is_permutation() {
        let p = partition(&[(0, &[(0, 5)]), (1, &[(0, 5)]), (2, &[(0, 7)])]);
        let s = BTreeMap::from([(0, BTreeSet::from([0, 1])), (1, BTreeSet::from([2]))]);
        let m = partition_overlap(&s, &p, OverlapVariant::Union).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn split_in_half() {
        let p = partition(&[(0, &[(0, 1)]), (1, &[(0, 1)]), (2, &[(0, 2)]), (3, &[(0, 2)])]);
        let s = BTreeMap::from([(0, BTreeSet::from([0, 1, 2, 3]))]);
        let m = partition_overlap(&s, &p, OverlapVariant::Union).unwrap();
        assert_eq!(m.values, vec![vec![0.5, 0.5]]);
        assert!(partition_overlap(&BTreeMap::from([(0, BTreeSet::new())]), &p, OverlapVariant::Union).is_err());
    }

    #[test]
    fn union_vs_dominant() {
        let p = partition(&[(0, &[(0, 1), (1, 1), (2, 2)]), (1, &[(0, 2), (1, 1)])]);
        let s = BTreeMap::from([(0, BTreeSet::from([0, 1]))]);
        let u = partition_overlap(&s, &p, OverlapVariant::Union).unwrap();
        assert_eq!(u.values, vec![vec![1.0, 1.0]]);
        let d = partition_overlap(&s, &p, OverlapVariant::Dominant).unwrap();
        // user 1 ties 1:1 → community 1
        assert_eq!(d.values, vec![vec![1.0, 0.0]]);
    }
}
