//! Cross-time community detection on the temporal multiplex.
//!
//! Node-slices `(user, window)` are partitioned by maximizing multislice
//! modularity
//!
//! ```text
//! Q = 1/2μ Σ_ijsr [ (A_ijs − γ k_is k_js / 2m_s) δ_sr + δ_ij C_jsr ] δ(g_is, g_jr)
//! ```
//!
//! with a Leiden-style optimizer, so a user may sit in different communities
//! in different windows.

mod graph;
mod leiden;
mod modularity;
mod timelines;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::UserId;

pub use leiden::leiden_partition;
pub use modularity::{multislice_modularity, multislice_modularity_of};
pub use timelines::{community_timelines, Timelines};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionConfig {
    pub gamma: f64,
    pub omega: f64,
    pub seed: u64,
    pub max_passes: usize,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        ResolutionConfig {
            gamma: 1.0,
            omega: 1.0,
            seed: 42,
            max_passes: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SliceAssignment {
    pub window: usize,
    pub user: UserId,
    pub community: u32,
}

/// Community of every node-slice, sorted by `(window, user)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicPartition {
    pub assignments: Vec<SliceAssignment>,
    pub n_communities: usize,
    /// Multislice modularity of the assignment.
    pub quality: f64,
    /// Quality after each optimizer pass, starting from the singleton partition.
    pub pass_qualities: Vec<f64>,
}

impl DynamicPartition {
    /// Wraps externally produced assignments (for instance read from disk).
    pub fn from_assignments(mut assignments: Vec<SliceAssignment>, quality: f64) -> Self {
        assignments.sort();
        assignments.dedup_by_key(|a| (a.window, a.user));
        let n_communities = assignments
            .iter()
            .map(|a| a.community)
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        DynamicPartition {
            assignments,
            n_communities,
            quality,
            pass_qualities: Vec::new(),
        }
    }

    pub fn get(&self, user: UserId, window: usize) -> Option<u32> {
        self.assignments
            .binary_search_by(|a| (a.window, a.user).cmp(&(window, user)))
            .ok()
            .map(|i| self.assignments[i].community)
    }

    pub fn communities(&self) -> std::collections::BTreeSet<u32> {
        self.assignments.iter().map(|a| a.community).collect()
    }

    /// Per user, `(window, community)` over its active windows in time order.
    pub fn trajectories(&self) -> BTreeMap<UserId, Vec<(usize, u32)>> {
        let mut out: BTreeMap<UserId, Vec<(usize, u32)>> = BTreeMap::new();
        for a in &self.assignments {
            out.entry(a.user).or_default().push((a.window, a.community));
        }
        out
    }
}
