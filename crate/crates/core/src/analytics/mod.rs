//! Post-detection analyses over a dynamic partition.

pub mod archetypes;
pub mod hashtags;
pub mod influence;
pub mod overlap;
pub mod polarity;
pub mod rbo;
pub mod shifts;
pub mod stability;
pub mod stats;

pub use archetypes::{classify_archetypes, Archetype, ArchetypeEvidence, ArchetypeLabel};
pub use hashtags::{
    community_hashtag_counts, community_similarity, top_hashtag_trends, user_hashtag_counts,
    HashtagCounts, SimilarityMatrix, TrendRow,
};
pub use influence::{aligned_shift_trends, closeness_to_community, stationary_affinity, AlignedTrends, StationaryAffinity};
pub use overlap::{partition_overlap, OverlapMatrix, OverlapVariant};
pub use polarity::{community_polarity, hashtag_polarity, HashtagPolarity, PolarityMap};
pub use rbo::{rbo, rbo_tied};
pub use shifts::{
    extract_shifts, membership_shift_stats, net_flow_network, polarity_shift_stats,
    shift_distance_distributions, weigh_shifts, FlowEdge, ShiftRecord,
};
pub use stability::{stability_metrics, StabilitySeries};
pub use stats::{kruskal_wallis, pearson, KruskalWallis};
