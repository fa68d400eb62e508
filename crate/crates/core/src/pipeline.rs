//! Stage functions and the configuration tying them together.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, archetypes::Archetype, influence, overlap, shifts, stability};
use crate::dyncomm::{community_timelines, leiden_partition, DynamicPartition, ResolutionConfig, Timelines};
use crate::ingest::{self, InputFormat, RetweetEvent, Span, UserId, WindowedCorpus};
use crate::multiplex::{assemble_multiplex, MultiplexNetwork};
use crate::simnet::{self, LayerGraph};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    /// Inclusive bounds; a bare date as `span_end` covers that whole day.
    /// Unset bounds fall back to the event range.
    pub span_start: Option<String>,
    pub span_end: Option<String>,
    pub d_days: u32,
    pub delta_days: u32,
    pub top_fraction: f64,
    pub max_bad_fraction: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
    pub seed: u64,
    pub max_passes: usize,
    pub rbo_persistence: f64,
    pub output_dir: PathBuf,
    /// Hashtag → −1, 0 or +1. Polarity analyses are skipped when empty.
    pub polarity_seeds: BTreeMap<String, f64>,
    pub top_communities: usize,
    pub trend_depth: usize,
    pub min_active_windows: usize,
    pub align_half_width: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            format: InputFormat::Jsonl,
            span_start: None,
            span_end: None,
            d_days: 7,
            delta_days: 1,
            top_fraction: 0.01,
            max_bad_fraction: 0.01,
            alpha: 0.05,
            gamma: 1.0,
            omega: 1.0,
            seed: 42,
            max_passes: 20,
            rbo_persistence: 0.9,
            output_dir: PathBuf::from("out"),
            polarity_seeds: BTreeMap::new(),
            top_communities: 10,
            trend_depth: 5,
            min_active_windows: 1,
            align_half_width: 3,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.d_days == 0 || self.delta_days == 0 {
            return bad("d_days and delta_days must be >= 1");
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return bad("top_fraction must be in (0, 1]");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must be in (0, 1)");
        }
        if !(self.gamma > 0.0) || !(self.omega >= 0.0) {
            return bad("gamma must be > 0 and omega >= 0");
        }
        if !(self.rbo_persistence > 0.0 && self.rbo_persistence < 1.0) {
            return bad("rbo_persistence must be in (0, 1)");
        }
        if self.max_passes == 0 || self.align_half_width == 0 {
            return bad("max_passes and align_half_width must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.max_bad_fraction) {
            return bad("max_bad_fraction must be in [0, 1]");
        }
        Ok(())
    }

    pub fn resolution(&self) -> ResolutionConfig {
        ResolutionConfig { gamma: self.gamma, omega: self.omega, seed: self.seed, max_passes: self.max_passes }
    }

    pub fn span(&self, events: &[RetweetEvent]) -> Result<Span> {
        let covering = Span::covering(events)?;
        match (&self.span_start, &self.span_end) {
            (Some(a), Some(b)) => Span::parse(a, b),
            (Some(a), None) => Ok(Span { start: ingest::parse_timestamp(a)?, end: covering.end }),
            (None, Some(b)) => Span::parse(&covering.start.to_string(), b),
            (None, None) => Ok(covering),
        }
    }
}

/// Restricts events to the span, keeps superspreaders and cuts windows.
pub fn prepare(events: Vec<RetweetEvent>, cfg: &PipelineConfig) -> Result<WindowedCorpus> {
    cfg.validate()?;
    let span = cfg.span(&events)?;
    let events: Vec<RetweetEvent> = events.into_iter().filter(|e| span.contains(e.timestamp)).collect();
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let keep = ingest::select_superspreaders(&events, cfg.top_fraction)?;
    let windows = ingest::make_windows(span.start, span.end, cfg.d_days, cfg.delta_days)?;
    log::info!("{} superspreaders, {} windows", keep.len(), windows.len());
    ingest::window_events(&events, &windows, Some(&keep))
}

/// Similarity layer per window, reduced to its backbone. Windows without
/// events give empty layers so indices stay aligned.
pub fn build_layers(corpus: &WindowedCorpus, alpha: f64) -> Result<Vec<LayerGraph>> {
    (0..corpus.n_windows())
        .into_par_iter()
        .map(|w| {
            let vectors = simnet::build_user_vectors(corpus.events_in(w));
            let raw = simnet::build_similarity_layer(&vectors, w);
            simnet::disparity_backbone(&raw, alpha)
        })
        .collect()
}

pub fn detect(layers: Vec<LayerGraph>, cfg: &PipelineConfig) -> Result<(MultiplexNetwork, DynamicPartition)> {
    let net = assemble_multiplex(layers, cfg.omega)?;
    let part = leiden_partition(&net, &cfg.resolution())?;
    log::info!("{} communities, Q = {:.6}", part.n_communities, part.quality);
    Ok((net, part))
}

/// Communities of the time-aggregated network.
pub fn static_partition(layers: &[LayerGraph], cfg: &PipelineConfig) -> Result<BTreeMap<UserId, u32>> {
    let agg = simnet::aggregate_static_network(layers)?;
    let net = assemble_multiplex(vec![agg], 0.0)?;
    let part = leiden_partition(&net, &ResolutionConfig { omega: 0.0, ..cfg.resolution() })?;
    Ok(part.assignments.iter().map(|a| (a.user, a.community)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub n_windows: usize,
    pub top_communities: Vec<u32>,
    pub stability: Vec<stability::StabilitySeries>,
    pub shifts: Vec<shifts::ShiftRecord>,
    pub similarity: analytics::SimilarityMatrix,
    pub flows: Vec<shifts::FlowEdge>,
    pub polarity: Option<analytics::PolarityMap>,
    pub delta_polarity: Option<shifts::DeltaPolarity>,
    pub membership: shifts::MembershipShiftStats,
    pub archetypes: Vec<analytics::ArchetypeLabel>,
    pub archetype_counts: BTreeMap<Archetype, usize>,
    pub affinity: influence::StationaryAffinity,
    pub aligned: influence::AlignedTrends,
    pub distances: shifts::DistanceDistributions,
    pub trends: Vec<analytics::TrendRow>,
    pub overlap_union: Option<overlap::OverlapMatrix>,
    pub overlap_dominant: Option<overlap::OverlapMatrix>,
}

/// Runs every analysis. `static_membership` enables the overlap matrices.
pub fn analyze(
    corpus: &WindowedCorpus,
    network: &MultiplexNetwork,
    partition: &DynamicPartition,
    static_membership: Option<&BTreeMap<UserId, u32>>,
    cfg: &PipelineConfig,
) -> Result<Analysis> {
    let n_windows = corpus.n_windows();
    let timelines: Timelines = community_timelines(partition, n_windows, cfg.top_communities);
    let stability = stability::stability_metrics(&timelines, false)?;
    let comm_counts = analytics::community_hashtag_counts(corpus, partition);
    let similarity = analytics::community_similarity(&comm_counts)?;
    let mut shift_list = shifts::extract_shifts(partition);
    shifts::weigh_shifts(&mut shift_list, &similarity);
    let flows = shifts::net_flow_network(&shift_list, &similarity);

    let (polarity, delta_polarity) = if cfg.polarity_seeds.is_empty() {
        (None, None)
    } else {
        let hp = analytics::hashtag_polarity(&corpus.events, &cfg.polarity_seeds)?;
        let pm = analytics::community_polarity(hp, &comm_counts);
        let dp = shifts::polarity_shift_stats(&shift_list, &pm.communities)?;
        (Some(pm), Some(dp))
    };

    let membership = shifts::membership_shift_stats(partition, &shift_list);
    let archetypes = analytics::classify_archetypes(partition, n_windows, cfg.min_active_windows);
    let mut archetype_counts: BTreeMap<Archetype, usize> = Archetype::ALL.iter().map(|&a| (a, 0)).collect();
    for l in &archetypes {
        *archetype_counts.entry(l.label).or_default() += 1;
    }

    let trajectories = partition.trajectories();
    let stationary: Vec<(UserId, u32)> = archetypes
        .iter()
        .filter(|l| l.label == Archetype::Stationary)
        .map(|l| (l.user, trajectories[&l.user][0].1))
        .collect();
    let stationary_ids: BTreeSet<UserId> = stationary.iter().map(|&(u, _)| u).collect();
    let user_counts = analytics::user_hashtag_counts(corpus, &stationary_ids);
    let affinity = influence::stationary_affinity(&stationary, &user_counts, &comm_counts, cfg.rbo_persistence)?;

    let influenced: BTreeSet<UserId> =
        archetypes.iter().filter(|l| l.label == Archetype::Influenced).map(|l| l.user).collect();
    let final_shifts: Vec<shifts::ShiftRecord> = {
        let mut last: BTreeMap<UserId, &shifts::ShiftRecord> = BTreeMap::new();
        for s in shift_list.iter().filter(|s| influenced.contains(&s.user)) {
            last.insert(s.user, s);
        }
        last.into_values().cloned().collect()
    };
    let aligned = influence::aligned_shift_trends(
        &final_shifts,
        corpus,
        network,
        &timelines,
        &comm_counts,
        cfg.align_half_width,
        cfg.rbo_persistence,
    )?;
    let distances = shifts::shift_distance_distributions(&shift_list, &archetypes);
    let trends = analytics::top_hashtag_trends(corpus, partition, cfg.trend_depth);

    let (overlap_union, overlap_dominant) = match static_membership {
        Some(m) => {
            let groups = overlap::group_static(m);
            (
                Some(overlap::partition_overlap(&groups, partition, overlap::OverlapVariant::Union)?),
                Some(overlap::partition_overlap(&groups, partition, overlap::OverlapVariant::Dominant)?),
            )
        }
        None => (None, None),
    };

    Ok(Analysis {
        n_windows,
        top_communities: timelines.top.clone(),
        stability,
        shifts: shift_list,
        similarity,
        flows,
        polarity,
        delta_polarity,
        membership,
        archetypes,
        archetype_counts,
        affinity,
        aligned,
        distances,
        trends,
        overlap_union,
        overlap_dominant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn config_round_trips() {
        let mut c = PipelineConfig::default();
        c.polarity_seeds.insert("a".into(), -1.0);
        c.span_start = Some("2019-11-12".into());
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&s).unwrap(), c);
        assert_eq!(serde_json::from_str::<PipelineConfig>("{}").unwrap(), PipelineConfig::default());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"alfa": 1}"#).is_err());
    }

    #[test]
    fn paper_shaped_span_gives_25_windows() {
        let cfg = PipelineConfig {
            span_start: Some("2019-11-12".into()),
            span_end: Some("2019-12-12".into()),
            ..PipelineConfig::default()
        };
        let ev = vec![RetweetEvent::new("u", "r", "o", synth::DEFAULT_START + 10, Vec::<String>::new())];
        let c = prepare(ev, &cfg).unwrap();
        assert_eq!(c.n_windows(), 25);
    }

    #[test]
    fn small_end_to_end() {
        let sc = synth::ScenarioConfig { n_users: 120, pool_size: 60, ..Default::default() };
        let plan = synth::plan(&sc).unwrap();
        let (events, truth) = synth::generate(&plan).unwrap();
        let cfg = PipelineConfig { top_fraction: 1.0, polarity_seeds: truth.seeds.clone(), ..Default::default() };
        let corpus = prepare(events, &cfg).unwrap();
        let layers = build_layers(&corpus, cfg.alpha).unwrap();
        let st = static_partition(&layers, &cfg).unwrap();
        let (net, part) = detect(layers, &cfg).unwrap();
        let a = analyze(&corpus, &net, &part, Some(&st), &cfg).unwrap();
        assert_eq!(a.n_windows, 25);
        assert!(a.polarity.is_some());
        assert_eq!(a.archetypes.len(), part.trajectories().len());
    }
}
