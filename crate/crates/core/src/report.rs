//! On-disk artifacts. Every stage reads and writes plain files inside one
//! output directory; row order is fixed so identical runs give identical
//! bytes.
//!
//! | file | columns |
//! |---|---|
//! | `events.jsonl` | `user_id, tweet_id, original_tweet_id, timestamp, hashtags` |
//! | `windows.json` | window specs |
//! | `layers/edges.csv` | `window_index,u,v,weight` |
//! | `layers/layer_NNN.graphml` | one per window |
//! | `multiplex/node_slices.csv` | `user_id,window_index` |
//! | `multiplex/couplings.csv` | `user_id,window_index,next_window_index,weight` |
//! | `partition.csv` | `user_id,window_index,community_id` |
//! | `static_partition.csv` | `user_id,community_id` |
//! | `shifts.csv` | `user_id,window_index,from_window_index,origin,destination,weight,delta_polarity` |
//! | `similarity_matrix.csv` | `community_id,<id>...` |
//! | `polarity.csv` | `kind,key,polarity,note` |
//! | `archetypes.csv` | `user_id,archetype,active_windows,shifts,distinct_communities,max_windows_in_community,final_destination,final_hold` |
//! | `trends.csv` | `community_id,window_index,rank,hashtag,count` |
//! | `overlap_matrix.csv` | `variant,static_community_id,dynamic_community_id,overlap` |

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analytics::archetypes::Archetype;
use crate::analytics::influence::AlignedTrends;
use crate::analytics::shifts::{DeltaPolarity, DistanceDistributions, FlowEdge, JointCell};
use crate::analytics::stability::StabilitySeries;
use crate::analytics::KruskalWallis;
use crate::dyncomm::{DynamicPartition, SliceAssignment};
use crate::ingest::{self, InputFormat, ParseOptions, RetweetEvent, UserId, UserTable, WindowSpec, WindowedCorpus};
use crate::multiplex::MultiplexNetwork;
use crate::pipeline::Analysis;
use crate::simnet::{Edge, LayerGraph};
use crate::synth::{GroundTruth, PlantedScenario};
use crate::{Error, Result};

pub const EVENTS: &str = "events.jsonl";
pub const WINDOWS: &str = "windows.json";
pub const INGEST_SUMMARY: &str = "ingest.json";
pub const EDGES: &str = "layers/edges.csv";
pub const NODE_SLICES: &str = "multiplex/node_slices.csv";
pub const COUPLINGS: &str = "multiplex/couplings.csv";
pub const PARTITION: &str = "partition.csv";
pub const STATIC_PARTITION: &str = "static_partition.csv";
pub const DETECTION: &str = "detection.json";
pub const METRICS: &str = "metrics.json";
pub const SHIFTS: &str = "shifts.csv";
pub const SIMILARITY: &str = "similarity_matrix.csv";
pub const POLARITY: &str = "polarity.csv";
pub const ARCHETYPES: &str = "archetypes.csv";
pub const TRENDS: &str = "trends.csv";
pub const OVERLAP: &str = "overlap_matrix.csv";
pub const MANIFEST: &str = "manifest.json";
pub const SCORE: &str = "score.json";

pub const SCENARIO: &str = "scenario.json";
pub const TRUTH: &str = "truth.json";
pub const TRUTH_PARTITION: &str = "truth/partition.csv";
pub const TRUTH_SHIFTS: &str = "truth/shifts.csv";
pub const TRUTH_ARCHETYPES: &str = "truth/archetypes.csv";

pub fn layer_graphml(window: usize) -> String {
    format!("layers/layer_{window:03}.graphml")
}

/// Errors with every listed file that does not exist under `dir`.
pub fn require(dir: &Path, files: &[&str]) -> Result<()> {
    let missing: Vec<PathBuf> = files.iter().map(|f| dir.join(f)).filter(|p| !p.is_file()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingArtifacts(missing))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::Reader::from_reader(open(path)?))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path.display().to_string(), e)
}

fn finish(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path.display().to_string(), e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(BufReader::new(open(path)?)).map_err(|e| Error::format(path.display().to_string(), e))
}

// ingest ----------------------------------------------------------------------

pub fn write_events(path: &Path, events: &[RetweetEvent]) -> Result<()> {
    let mut w = create(path)?;
    for e in events {
        serde_json::to_writer(&mut w, e).map_err(|err| Error::format(path.display().to_string(), err))?;
        writeln!(w).map_err(|err| Error::io(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_events(path: &Path, format: InputFormat, options: &ParseOptions) -> Result<(Vec<RetweetEvent>, ingest::ParseReport)> {
    ingest::parse_events(open(path)?, format, options)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub parse: ingest::ParseReport,
    pub span_start: i64,
    pub span_end: i64,
    pub n_windows: usize,
    pub kept_users: usize,
    pub kept_events: usize,
    pub events_per_window: Vec<usize>,
}

pub fn write_corpus(dir: &Path, corpus: &WindowedCorpus, summary: &IngestSummary) -> Result<()> {
    write_events(&dir.join(EVENTS), &corpus.events)?;
    write_json(&dir.join(WINDOWS), &corpus.windows)?;
    write_json(&dir.join(INGEST_SUMMARY), summary)
}

/// Rebuilds the windowed corpus written by the ingest stage.
pub fn load_corpus(dir: &Path) -> Result<WindowedCorpus> {
    require(dir, &[EVENTS, WINDOWS])?;
    let windows: Vec<WindowSpec> = read_json(&dir.join(WINDOWS))?;
    let strict = ParseOptions { max_bad_fraction: 0.0 };
    let (events, _) = read_events(&dir.join(EVENTS), InputFormat::Jsonl, &strict)?;
    ingest::window_events(&events, &windows, None)
}

// layers ----------------------------------------------------------------------

pub fn write_layers(dir: &Path, users: &UserTable, layers: &[LayerGraph]) -> Result<()> {
    let path = dir.join(EDGES);
    let mut w = csv_writer(&path)?;
    w.write_record(["window_index", "u", "v", "weight"]).map_err(|e| csv_err(&path, e))?;
    for l in layers {
        for e in &l.edges {
            w.write_record([l.window_index.to_string(), users.name(e.u).into(), users.name(e.v).into(), e.weight.to_string()])
                .map_err(|e| csv_err(&path, e))?;
        }
    }
    finish(&path, w)?;
    for l in layers {
        write_graphml(&dir.join(layer_graphml(l.window_index)), users, l)?;
    }
    Ok(())
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_graphml(path: &Path, users: &UserTable, layer: &LayerGraph) -> Result<()> {
    let mut w = create(path)?;
    let mut body = String::new();
    body.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    body.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    body.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    body.push_str(&format!("  <graph id=\"window_{}\" edgedefault=\"undirected\">\n", layer.window_index));
    for &n in &layer.nodes {
        body.push_str(&format!("    <node id=\"{}\"/>\n", xml_escape(users.name(n))));
    }
    for e in &layer.edges {
        body.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data></edge>\n",
            xml_escape(users.name(e.u)),
            xml_escape(users.name(e.v)),
            e.weight
        ));
    }
    body.push_str("  </graph>\n</graphml>\n");
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn user_id(users: &UserTable, name: &str, path: &Path) -> Result<UserId> {
    users
        .id(name)
        .ok_or_else(|| Error::format(path.display().to_string(), format!("unknown user `{name}`")))
}

#[derive(Deserialize)]
struct EdgeRow {
    window_index: usize,
    u: String,
    v: String,
    weight: f64,
}

/// One layer per window; windows without rows give empty layers.
pub fn read_layers(dir: &Path, users: &UserTable, n_windows: usize) -> Result<Vec<LayerGraph>> {
    let path = dir.join(EDGES);
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); n_windows];
    for row in csv_reader(&path)?.deserialize() {
        let r: EdgeRow = row.map_err(|e| csv_err(&path, e))?;
        let slot = edges
            .get_mut(r.window_index)
            .ok_or_else(|| Error::format(path.display().to_string(), format!("window {} out of range", r.window_index)))?;
        if !(r.weight > 0.0 && r.weight.is_finite()) {
            return Err(Error::format(path.display().to_string(), format!("non-positive weight {}", r.weight)));
        }
        slot.push(Edge { u: user_id(users, &r.u, &path)?, v: user_id(users, &r.v, &path)?, weight: r.weight });
    }
    Ok(edges.into_iter().enumerate().map(|(w, e)| LayerGraph::from_edges(w, e)).collect())
}

// detection -------------------------------------------------------------------

pub fn write_multiplex(dir: &Path, users: &UserTable, net: &MultiplexNetwork) -> Result<()> {
    let path = dir.join(NODE_SLICES);
    let mut w = csv_writer(&path)?;
    w.write_record(["user_id", "window_index"]).map_err(|e| csv_err(&path, e))?;
    for (layer, user) in net.slices() {
        w.write_record([users.name(user), &net.window_of(layer).to_string()]).map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(COUPLINGS);
    let mut w = csv_writer(&path)?;
    w.write_record(["user_id", "window_index", "next_window_index", "weight"]).map_err(|e| csv_err(&path, e))?;
    let mut rows: Vec<_> = net.couplings.iter().collect();
    rows.sort_by_key(|c| (c.layer, c.user));
    for c in rows {
        w.write_record([
            users.name(c.user).to_string(),
            net.window_of(c.layer).to_string(),
            net.window_of(c.next_layer()).to_string(),
            net.omega.to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)
}

/// Rows ordered by window, then user.
pub fn write_partition(path: &Path, users: &UserTable, partition: &DynamicPartition) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["user_id", "window_index", "community_id"]).map_err(|e| csv_err(path, e))?;
    for a in &partition.assignments {
        w.write_record([users.name(a.user), &a.window.to_string(), &a.community.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

#[derive(Deserialize)]
struct PartitionRow {
    user_id: String,
    window_index: usize,
    community_id: u32,
}

pub fn read_partition(path: &Path, users: &UserTable) -> Result<DynamicPartition> {
    let mut assignments = Vec::new();
    let mut seen = BTreeSet::new();
    for row in csv_reader(path)?.deserialize() {
        let r: PartitionRow = row.map_err(|e| csv_err(path, e))?;
        let user = user_id(users, &r.user_id, path)?;
        if !seen.insert((r.window_index, user)) {
            return Err(Error::format(
                path.display().to_string(),
                format!("duplicate row for {} in window {}", r.user_id, r.window_index),
            ));
        }
        assignments.push(SliceAssignment { window: r.window_index, user, community: r.community_id });
    }
    Ok(DynamicPartition::from_assignments(assignments, f64::NAN))
}

pub fn write_static_partition(path: &Path, users: &UserTable, membership: &BTreeMap<UserId, u32>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["user_id", "community_id"]).map_err(|e| csv_err(path, e))?;
    for (&u, &k) in membership {
        w.write_record([users.name(u), &k.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

#[derive(Deserialize)]
struct StaticRow {
    user_id: String,
    community_id: u32,
}

pub fn read_static_partition(path: &Path, users: &UserTable) -> Result<BTreeMap<UserId, u32>> {
    let mut out = BTreeMap::new();
    for row in csv_reader(path)?.deserialize() {
        let r: StaticRow = row.map_err(|e| csv_err(path, e))?;
        out.insert(user_id(users, &r.user_id, path)?, r.community_id);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub n_layers: usize,
    pub n_slices: usize,
    pub n_couplings: usize,
    pub n_communities: usize,
    pub quality: f64,
    pub pass_qualities: Vec<f64>,
    pub gamma: f64,
    pub omega: f64,
    pub seed: u64,
    pub static_communities: Option<usize>,
}

// analysis --------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipSummary {
    pub joint: Vec<JointCell>,
    pub memberships_histogram: BTreeMap<usize, usize>,
    pub shifts_histogram: BTreeMap<usize, usize>,
    pub pearson: Option<f64>,
    pub single_membership_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinitySummary {
    pub users: usize,
    pub excluded_without_hashtags: usize,
    pub diagonal_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolaritySummary {
    pub communities: BTreeMap<u32, f64>,
    pub communities_without_hashtags: Vec<u32>,
    pub seeds: BTreeMap<String, f64>,
    pub unreachable_hashtags: usize,
    pub iterations: usize,
    pub converged: bool,
    pub delta: Option<DeltaSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub mean: Option<f64>,
    pub total: f64,
    pub shifts: usize,
}

impl From<&DeltaPolarity> for DeltaSummary {
    fn from(d: &DeltaPolarity) -> Self {
        DeltaSummary { mean: d.mean, total: d.total, shifts: d.deltas.len() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub samples: BTreeMap<Archetype, usize>,
    pub medians: BTreeMap<Archetype, Option<f64>>,
    pub tests: Vec<(Archetype, Archetype, Option<KruskalWallis>)>,
}

impl From<&DistanceDistributions> for DistanceSummary {
    fn from(d: &DistanceDistributions) -> Self {
        let median = |v: &[f64]| -> Option<f64> {
            if v.is_empty() {
                return None;
            }
            let mut s = v.to_vec();
            s.sort_by(f64::total_cmp);
            let m = s.len() / 2;
            Some(if s.len() % 2 == 1 { s[m] } else { (s[m - 1] + s[m]) / 2.0 })
        };
        DistanceSummary {
            samples: d.samples.iter().map(|(&a, v)| (a, v.len())).collect(),
            medians: d.samples.iter().map(|(&a, v)| (a, median(v))).collect(),
            tests: d.tests.iter().map(|t| (t.a, t.b, t.result)).collect(),
        }
    }
}

/// Contents of `metrics.json`. Per-user tables live in the CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_windows: usize,
    pub n_users: usize,
    pub n_slices: usize,
    pub n_communities: usize,
    pub top_communities: Vec<u32>,
    pub stability: Vec<StabilitySeries>,
    pub n_shifts: usize,
    pub flows: Vec<FlowEdge>,
    pub communities_without_hashtags: Vec<u32>,
    pub polarity: Option<PolaritySummary>,
    pub membership: MembershipSummary,
    pub archetype_counts: BTreeMap<Archetype, usize>,
    pub stationary_affinity: AffinitySummary,
    pub aligned_trends: AlignedTrends,
    pub shift_distances: DistanceSummary,
}

impl Metrics {
    pub fn from_analysis(a: &Analysis, partition: &DynamicPartition) -> Self {
        Metrics {
            n_windows: a.n_windows,
            n_users: a.membership.per_user.len(),
            n_slices: partition.assignments.len(),
            n_communities: partition.n_communities,
            top_communities: a.top_communities.clone(),
            stability: a.stability.clone(),
            n_shifts: a.shifts.len(),
            flows: a.flows.clone(),
            communities_without_hashtags: a.similarity.without_hashtags.clone(),
            polarity: a.polarity.as_ref().map(|p| PolaritySummary {
                communities: p.communities.clone(),
                communities_without_hashtags: p.without_hashtags.clone(),
                seeds: p.hashtags.seeds.clone(),
                unreachable_hashtags: p.hashtags.unreachable.len(),
                iterations: p.hashtags.iterations,
                converged: p.hashtags.converged,
                delta: a.delta_polarity.as_ref().map(DeltaSummary::from),
            }),
            membership: MembershipSummary {
                joint: a.membership.joint.clone(),
                memberships_histogram: a.membership.memberships_histogram.clone(),
                shifts_histogram: a.membership.shifts_histogram.clone(),
                pearson: a.membership.pearson,
                single_membership_fraction: a.membership.single_membership_fraction,
            },
            archetype_counts: a.archetype_counts.clone(),
            stationary_affinity: AffinitySummary {
                users: a.affinity.rows.len(),
                excluded_without_hashtags: a.affinity.excluded_without_hashtags,
                diagonal_fraction: a.affinity.diagonal_fraction,
            },
            aligned_trends: a.aligned.clone(),
            shift_distances: DistanceSummary::from(&a.distances),
        }
    }
}

/// Writes `metrics.json` and the per-analysis CSV tables.
pub fn write_analysis(dir: &Path, users: &UserTable, partition: &DynamicPartition, a: &Analysis) -> Result<()> {
    write_json(&dir.join(METRICS), &Metrics::from_analysis(a, partition))?;

    let path = dir.join(SHIFTS);
    let mut w = csv_writer(&path)?;
    w.write_record(["user_id", "window_index", "from_window_index", "origin", "destination", "weight", "delta_polarity"])
        .map_err(|e| csv_err(&path, e))?;
    for (i, s) in a.shifts.iter().enumerate() {
        let dp = a.delta_polarity.as_ref().map(|d| d.deltas[i]);
        w.write_record([
            users.name(s.user).to_string(),
            s.window.to_string(),
            s.from_window.to_string(),
            s.origin.to_string(),
            s.destination.to_string(),
            s.weight.to_string(),
            opt(dp),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(SIMILARITY);
    let mut w = csv_writer(&path)?;
    let header: Vec<String> =
        std::iter::once("community_id".to_string()).chain(a.similarity.communities.iter().map(u32::to_string)).collect();
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for (k, row) in a.similarity.communities.iter().zip(&a.similarity.values) {
        let rec: Vec<String> = std::iter::once(k.to_string()).chain(row.iter().map(f64::to_string)).collect();
        w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(POLARITY);
    let mut w = csv_writer(&path)?;
    w.write_record(["kind", "key", "polarity", "note"]).map_err(|e| csv_err(&path, e))?;
    if let Some(p) = &a.polarity {
        for (k, v) in &p.communities {
            w.write_record(["community", &k.to_string(), &v.to_string(), ""]).map_err(|e| csv_err(&path, e))?;
        }
        for k in &p.without_hashtags {
            w.write_record(["community", &k.to_string(), "", "no_hashtags"]).map_err(|e| csv_err(&path, e))?;
        }
        let unreachable: BTreeSet<&String> = p.hashtags.unreachable.iter().collect();
        for (h, v) in &p.hashtags.polarity {
            let note = if p.hashtags.seeds.contains_key(h) {
                "seed"
            } else if unreachable.contains(h) {
                "unreachable"
            } else {
                ""
            };
            w.write_record(["hashtag", h, &v.to_string(), note]).map_err(|e| csv_err(&path, e))?;
        }
    }
    finish(&path, w)?;

    let path = dir.join(ARCHETYPES);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "user_id",
        "archetype",
        "active_windows",
        "shifts",
        "distinct_communities",
        "max_windows_in_community",
        "final_destination",
        "final_hold",
    ])
    .map_err(|e| csv_err(&path, e))?;
    for l in &a.archetypes {
        let e = &l.evidence;
        w.write_record([
            users.name(l.user).to_string(),
            l.label.to_string(),
            e.active_windows.to_string(),
            e.shifts.to_string(),
            e.distinct_communities.to_string(),
            e.max_windows_in_community.to_string(),
            opt(e.final_destination),
            e.final_hold.to_string(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(TRENDS);
    let mut w = csv_writer(&path)?;
    w.write_record(["community_id", "window_index", "rank", "hashtag", "count"]).map_err(|e| csv_err(&path, e))?;
    for t in &a.trends {
        w.write_record([t.community.to_string(), t.window.to_string(), t.rank.to_string(), t.hashtag.clone(), t.count.to_string()])
            .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(OVERLAP);
    let mut w = csv_writer(&path)?;
    w.write_record(["variant", "static_community_id", "dynamic_community_id", "overlap"]).map_err(|e| csv_err(&path, e))?;
    for m in [&a.overlap_union, &a.overlap_dominant].into_iter().flatten() {
        let variant = serde_json::to_value(m.variant).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        for (s, row) in m.static_ids.iter().zip(&m.values) {
            for (d, v) in m.dynamic_ids.iter().zip(row) {
                w.write_record([variant.clone(), s.to_string(), d.to_string(), v.to_string()])
                    .map_err(|e| csv_err(&path, e))?;
            }
        }
    }
    finish(&path, w)
}

// synthetic scenarios -----------------------------------------------------------

/// Writes the scenario, its event log and the truth tables.
pub fn write_scenario(dir: &Path, scenario: &PlantedScenario, events: &[RetweetEvent], truth: &GroundTruth) -> Result<()> {
    write_json(&dir.join(SCENARIO), &scenario.config)?;
    write_events(&dir.join(EVENTS), events)?;
    write_json(&dir.join(TRUTH), truth)?;

    let path = dir.join(TRUTH_PARTITION);
    let mut w = csv_writer(&path)?;
    w.write_record(["user_id", "window_index", "community_id"]).map_err(|e| csv_err(&path, e))?;
    let mut rows: Vec<_> = truth.assignments.iter().collect();
    rows.sort_by(|a, b| (a.window, &a.user).cmp(&(b.window, &b.user)));
    for a in rows {
        w.write_record([a.user.clone(), a.window.to_string(), a.community.to_string()]).map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(TRUTH_SHIFTS);
    let mut w = csv_writer(&path)?;
    w.write_record(["user_id", "window_index", "origin", "destination"]).map_err(|e| csv_err(&path, e))?;
    let mut rows: Vec<_> = truth.shifts.iter().collect();
    rows.sort_by(|a, b| (a.window, &a.user).cmp(&(b.window, &b.user)));
    for s in rows {
        w.write_record([s.user.clone(), s.window.to_string(), s.origin.to_string(), s.destination.to_string()])
            .map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)?;

    let path = dir.join(TRUTH_ARCHETYPES);
    let mut w = csv_writer(&path)?;
    w.write_record(["user_id", "archetype"]).map_err(|e| csv_err(&path, e))?;
    for (u, a) in &truth.archetypes {
        w.write_record([u.as_str(), a.as_str()]).map_err(|e| csv_err(&path, e))?;
    }
    finish(&path, w)
}

// run manifest ------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seconds: f64,
    pub ok: bool,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: crate::PipelineConfig,
    pub seed: u64,
    pub n_windows: Option<usize>,
    pub stages: Vec<StageRecord>,
    /// Set when a stage failed; outputs of earlier stages are complete.
    pub partial: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(config: &crate::PipelineConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seed: config.seed,
            n_windows: None,
            stages: Vec::new(),
            partial: false,
            failed_stage: None,
            error: None,
        }
    }
}

/// Number of lines in a text file, for quick checks.
pub fn count_lines(path: &Path) -> Result<usize> {
    Ok(BufReader::new(open(path)?).lines().count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{self, PipelineConfig};
    use crate::synth::{self, ScenarioConfig};

    fn small() -> (WindowedCorpus, PipelineConfig) {
        let sc = ScenarioConfig { n_users: 120, n_days: 10, pool_size: 200, ..ScenarioConfig::default() };
        let (events, _) = synth::generate(&synth::plan(&sc).unwrap()).unwrap();
        let cfg = PipelineConfig { top_fraction: 1.0, ..PipelineConfig::default() };
        (pipeline::prepare(events, &cfg).unwrap(), cfg)
    }

    #[test]
    fn corpus_layers_and_partition_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, cfg) = small();
        let summary = IngestSummary {
            parse: Default::default(),
            span_start: 0,
            span_end: 0,
            n_windows: corpus.n_windows(),
            kept_users: corpus.users.len(),
            kept_events: corpus.events.len(),
            events_per_window: corpus.window_events.iter().map(Vec::len).collect(),
        };
        write_corpus(dir.path(), &corpus, &summary).unwrap();
        let back = load_corpus(dir.path()).unwrap();
        assert_eq!(back.users, corpus.users);
        assert_eq!(back.window_events, corpus.window_events);

        let layers = pipeline::build_layers(&corpus, cfg.alpha).unwrap();
        write_layers(dir.path(), &corpus.users, &layers).unwrap();
        assert_eq!(read_layers(dir.path(), &back.users, back.n_windows()).unwrap(), layers);
        assert!(dir.path().join(layer_graphml(0)).is_file());

        let (net, part) = pipeline::detect(layers, &cfg).unwrap();
        write_multiplex(dir.path(), &corpus.users, &net).unwrap();
        assert_eq!(count_lines(&dir.path().join(NODE_SLICES)).unwrap(), net.n_slices() + 1);
        let p = dir.path().join(PARTITION);
        write_partition(&p, &corpus.users, &part).unwrap();
        let read = read_partition(&p, &corpus.users).unwrap();
        assert_eq!(read.assignments, part.assignments);
    }

    #[test]
    fn missing_files_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let err = require(dir.path(), &[EDGES, WINDOWS]).unwrap_err().to_string();
        assert!(err.contains("edges.csv") && err.contains("windows.json"), "{err}");
    }

    #[test]
    fn graphml_escapes_names() {
        let dir = tempfile::tempdir().unwrap();
        let users = UserTable::new(["a&b", "<c>"]);
        let l = LayerGraph::from_edges(0, vec![Edge { u: 0, v: 1, weight: 0.5 }]);
        let p = dir.path().join("g.graphml");
        write_graphml(&p, &users, &l).unwrap();
        let s = fs::read_to_string(p).unwrap();
        assert!(s.contains("&lt;c&gt;") && s.contains("a&amp;b"));
    }

    #[test]
    fn unknown_user_in_partition_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(PARTITION);
        fs::write(&p, "user_id,window_index,community_id\nzed,0,1\n").unwrap();
        assert!(read_partition(&p, &UserTable::new(["a"])).is_err());
    }
}
