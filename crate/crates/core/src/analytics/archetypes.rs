//! Stationary, influenced and volatile users.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dyncomm::DynamicPartition;
use crate::ingest::UserId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Archetype {
    Stationary,
    Influenced,
    Volatile,
    Other,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [Archetype::Stationary, Archetype::Influenced, Archetype::Volatile, Archetype::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Stationary => "stationary",
            Archetype::Influenced => "influenced",
            Archetype::Volatile => "volatile",
            Archetype::Other => "other",
        }
    }
}

impl std::fmt::Display for Archetype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Archetype {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| crate::Error::format("archetype", s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchetypeEvidence {
    pub active_windows: usize,
    pub shifts: usize,
    pub distinct_communities: usize,
    /// Most active windows spent in any single community.
    pub max_windows_in_community: usize,
    pub final_destination: Option<u32>,
    /// Active windows from the final shift's arrival to the end, all of which
    /// are in `final_destination`.
    pub final_hold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeLabel {
    pub user: UserId,
    pub label: Archetype,
    pub evidence: ArchetypeEvidence,
}

/// `⌈n_windows / 3⌉`.
pub fn third_of(n_windows: usize) -> usize {
    n_windows.div_ceil(3)
}

pub fn evidence_of(trajectory: &[(usize, u32)]) -> ArchetypeEvidence {
    let mut per: BTreeMap<u32, usize> = BTreeMap::new();
    for &(_, k) in trajectory {
        *per.entry(k).or_default() += 1;
    }
    let mut shifts = 0;
    let mut last_arrival = None;
    for (i, pair) in trajectory.windows(2).enumerate() {
        if pair[0].1 != pair[1].1 {
            shifts += 1;
            last_arrival = Some(i + 1);
        }
    }
    ArchetypeEvidence {
        active_windows: trajectory.len(),
        shifts,
        distinct_communities: per.len(),
        max_windows_in_community: per.values().copied().max().unwrap_or(0),
        final_destination: last_arrival.map(|i| trajectory[i].1),
        final_hold: last_arrival.map_or(0, |i| trajectory.len() - i),
    }
}

/// Label from evidence. `min_active_windows` applies to the stationary label.
pub fn label_of(e: &ArchetypeEvidence, n_windows: usize, min_active_windows: usize) -> Archetype {
    let third = third_of(n_windows);
    let influenced = e.shifts >= 1 && e.final_hold >= third;
    let volatile = e.shifts >= 3 && e.max_windows_in_community < third;
    if e.shifts == 0 {
        if e.active_windows >= min_active_windows.max(1) {
            Archetype::Stationary
        } else {
            Archetype::Other
        }
    } else if volatile {
        if influenced {
            log::warn!("user matches both influenced and volatile; labelled volatile");
        }
        Archetype::Volatile
    } else if influenced {
        Archetype::Influenced
    } else {
        Archetype::Other
    }
}

pub fn classify_archetypes(partition: &DynamicPartition, n_windows: usize, min_active_windows: usize) -> Vec<ArchetypeLabel> {
    partition
        .trajectories()
        .into_iter()
        .map(|(user, traj)| {
            let evidence = evidence_of(&traj);
            ArchetypeLabel { user, label: label_of(&evidence, n_windows, min_active_windows), evidence }
        })
        .collect()
}
