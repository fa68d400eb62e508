//! Stage runners shared by the subcommands and by `run`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use dyncoord::analytics::{classify_archetypes, extract_shifts};
use dyncoord::ingest::{ParseOptions, UserId};
use dyncoord::pipeline::{self, PipelineConfig};
use dyncoord::report::{self, DetectionSummary, IngestSummary, RunManifest, StageRecord};
use dyncoord::synth::{self, GroundTruth};
use dyncoord::{DynamicPartition, Error, LayerGraph, MultiplexNetwork, WindowedCorpus};

pub const CONFIG: &str = "config.json";

/// A failed stage with its exit code: 1 for bad input, 2 for a failure while
/// computing or writing results.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub stage: &'static str,
    pub error: Error,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.error)
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

fn input(stage: &'static str) -> impl Fn(Error) -> Failure {
    move |error| Failure { code: 1, stage, error }
}

fn failed(stage: &'static str) -> impl Fn(Error) -> Failure {
    move |error| Failure { code: 2, stage, error }
}

fn names(files: &[&str]) -> Vec<String> {
    files.iter().map(|s| s.to_string()).collect()
}

pub fn ingest(cfg: &PipelineConfig) -> Outcome<WindowedCorpus> {
    const STAGE: &str = "ingest";
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| input(STAGE)(Error::InvalidParameter("no input file given".into())))?;
    cfg.validate().map_err(input(STAGE))?;
    let options = ParseOptions { max_bad_fraction: cfg.max_bad_fraction };
    let (events, parse) = report::read_events(path, cfg.format, &options).map_err(input(STAGE))?;
    if parse.bad_records > 0 {
        log::warn!("skipped {} malformed records of {}", parse.bad_records, parse.total_records);
    }
    let span = cfg.span(&events).map_err(input(STAGE))?;
    let corpus = pipeline::prepare(events, cfg).map_err(input(STAGE))?;
    let summary = IngestSummary {
        parse,
        span_start: span.start,
        span_end: span.end,
        n_windows: corpus.n_windows(),
        kept_users: corpus.users.len(),
        kept_events: corpus.events.len(),
        events_per_window: corpus.window_events.iter().map(Vec::len).collect(),
    };
    let out = &cfg.output_dir;
    report::write_corpus(out, &corpus, &summary).map_err(failed(STAGE))?;
    report::write_json(&out.join(CONFIG), cfg).map_err(failed(STAGE))?;
    log::info!("ingest: {} events from {} users in {} windows", corpus.events.len(), corpus.users.len(), corpus.n_windows());
    Ok(corpus)
}

pub fn load_corpus(dir: &Path, stage: &'static str) -> Outcome<WindowedCorpus> {
    report::load_corpus(dir).map_err(input(stage))
}

pub fn layers(cfg: &PipelineConfig, corpus: &WindowedCorpus) -> Outcome<Vec<LayerGraph>> {
    const STAGE: &str = "layers";
    cfg.validate().map_err(input(STAGE))?;
    let layers = pipeline::build_layers(corpus, cfg.alpha).map_err(failed(STAGE))?;
    report::write_layers(&cfg.output_dir, &corpus.users, &layers).map_err(failed(STAGE))?;
    let edges: usize = layers.iter().map(|l| l.edges.len()).sum();
    log::info!("layers: {} backbone edges over {} windows", edges, layers.len());
    Ok(layers)
}

pub fn load_layers(dir: &Path, corpus: &WindowedCorpus, stage: &'static str) -> Outcome<Vec<LayerGraph>> {
    report::require(dir, &[report::EDGES]).map_err(input(stage))?;
    report::read_layers(dir, &corpus.users, corpus.n_windows()).map_err(input(stage))
}

pub struct Detection {
    pub network: MultiplexNetwork,
    pub partition: DynamicPartition,
    pub static_membership: BTreeMap<UserId, u32>,
}

pub fn detect(cfg: &PipelineConfig, corpus: &WindowedCorpus, layers: Vec<LayerGraph>) -> Outcome<Detection> {
    const STAGE: &str = "detect";
    cfg.validate().map_err(input(STAGE))?;
    let static_membership = pipeline::static_partition(&layers, cfg).map_err(failed(STAGE))?;
    let (network, partition) = pipeline::detect(layers, cfg).map_err(failed(STAGE))?;
    let out = &cfg.output_dir;
    let users = &corpus.users;
    report::write_multiplex(out, users, &network).map_err(failed(STAGE))?;
    report::write_partition(&out.join(report::PARTITION), users, &partition).map_err(failed(STAGE))?;
    report::write_static_partition(&out.join(report::STATIC_PARTITION), users, &static_membership)
        .map_err(failed(STAGE))?;
    let summary = DetectionSummary {
        n_layers: network.n_layers(),
        n_slices: network.n_slices(),
        n_couplings: network.couplings.len(),
        n_communities: partition.n_communities,
        quality: partition.quality,
        pass_qualities: partition.pass_qualities.clone(),
        gamma: cfg.gamma,
        omega: cfg.omega,
        seed: cfg.seed,
        static_communities: Some(static_membership.values().collect::<std::collections::BTreeSet<_>>().len()),
    };
    report::write_json(&out.join(report::DETECTION), &summary).map_err(failed(STAGE))?;
    Ok(Detection { network, partition, static_membership })
}

pub fn analyze(
    cfg: &PipelineConfig,
    corpus: &WindowedCorpus,
    network: &MultiplexNetwork,
    partition: &DynamicPartition,
    static_membership: Option<&BTreeMap<UserId, u32>>,
) -> Outcome<()> {
    const STAGE: &str = "analyze";
    cfg.validate().map_err(input(STAGE))?;
    let analysis = pipeline::analyze(corpus, network, partition, static_membership, cfg).map_err(failed(STAGE))?;
    report::write_analysis(&cfg.output_dir, &corpus.users, partition, &analysis).map_err(failed(STAGE))?;
    log::info!("analyze: {} shifts, {} flow edges", analysis.shifts.len(), analysis.flows.len());
    Ok(())
}

/// Loads what `analyze` needs from an output directory.
pub fn analyze_from_dir(cfg: &PipelineConfig) -> Outcome<()> {
    const STAGE: &str = "analyze";
    let dir = &cfg.output_dir;
    report::require(dir, &[report::EVENTS, report::WINDOWS, report::EDGES, report::PARTITION])
        .map_err(input(STAGE))?;
    let corpus = load_corpus(dir, STAGE)?;
    let layers = load_layers(dir, &corpus, STAGE)?;
    let network = dyncoord::multiplex::assemble_multiplex(layers, cfg.omega).map_err(input(STAGE))?;
    let partition = report::read_partition(&dir.join(report::PARTITION), &corpus.users).map_err(input(STAGE))?;
    let static_path = dir.join(report::STATIC_PARTITION);
    let static_membership = if static_path.is_file() {
        Some(report::read_static_partition(&static_path, &corpus.users).map_err(input(STAGE))?)
    } else {
        None
    };
    analyze(cfg, &corpus, &network, &partition, static_membership.as_ref())
}

/// All stages in order. The manifest is written even when a stage fails.
pub fn run(cfg: &PipelineConfig) -> Outcome<()> {
    let mut manifest = RunManifest::new(cfg);
    let result = run_stages(cfg, &mut manifest);
    if let Err(f) = &result {
        manifest.partial = true;
        manifest.failed_stage = Some(f.stage.to_string());
        manifest.error = Some(f.error.to_string());
    }
    if cfg.output_dir.is_dir() {
        report::write_json(&cfg.output_dir.join(report::MANIFEST), &manifest).map_err(failed("run"))?;
    }
    result
}

fn timed<T>(manifest: &mut RunManifest, stage: &str, outputs: &[&str], f: impl FnOnce() -> Outcome<T>) -> Outcome<T> {
    let t = Instant::now();
    let r = f();
    manifest.stages.push(StageRecord {
        stage: stage.to_string(),
        seconds: t.elapsed().as_secs_f64(),
        ok: r.is_ok(),
        outputs: if r.is_ok() { names(outputs) } else { Vec::new() },
    });
    r
}

fn run_stages(cfg: &PipelineConfig, manifest: &mut RunManifest) -> Outcome<()> {
    let corpus = timed(manifest, "ingest", &[report::EVENTS, report::WINDOWS, report::INGEST_SUMMARY, CONFIG], || {
        ingest(cfg)
    })?;
    manifest.n_windows = Some(corpus.n_windows());
    let layers = timed(manifest, "layers", &[report::EDGES], || layers(cfg, &corpus))?;
    let detection = timed(
        manifest,
        "detect",
        &[report::NODE_SLICES, report::COUPLINGS, report::PARTITION, report::STATIC_PARTITION, report::DETECTION],
        || detect(cfg, &corpus, layers),
    )?;
    let outputs = [
        report::METRICS,
        report::SHIFTS,
        report::SIMILARITY,
        report::POLARITY,
        report::ARCHETYPES,
        report::TRENDS,
        report::OVERLAP,
    ];
    timed(manifest, "analyze", &outputs, || {
        analyze(cfg, &corpus, &detection.network, &detection.partition, Some(&detection.static_membership))
    })
}

pub fn synth(scenario: &synth::ScenarioConfig, out: &Path) -> Outcome<PipelineConfig> {
    const STAGE: &str = "synth";
    let plan = synth::plan(scenario).map_err(input(STAGE))?;
    let (events, truth) = synth::generate(&plan).map_err(failed(STAGE))?;
    report::write_scenario(out, &plan, &events, &truth).map_err(failed(STAGE))?;
    let cfg = PipelineConfig {
        input: Some(out.join(report::EVENTS)),
        d_days: scenario.d_days,
        delta_days: scenario.delta_days,
        top_fraction: 1.0,
        polarity_seeds: truth.seeds.clone(),
        output_dir: out.join("run"),
        ..PipelineConfig::default()
    };
    report::write_json(&out.join("pipeline.json"), &cfg).map_err(failed(STAGE))?;
    log::info!(
        "synth: {} events, {} users, {} planted shifts",
        truth.total_events,
        plan.users.len(),
        truth.shifts.len()
    );
    Ok(cfg)
}

pub fn score(cfg: &PipelineConfig, truth_dir: &Path) -> Outcome<synth::RecoveryScore> {
    const STAGE: &str = "score";
    report::require(truth_dir, &[report::TRUTH]).map_err(input(STAGE))?;
    let dir = &cfg.output_dir;
    report::require(dir, &[report::EVENTS, report::WINDOWS, report::PARTITION]).map_err(input(STAGE))?;
    let truth: GroundTruth = report::read_json(&truth_dir.join(report::TRUTH)).map_err(input(STAGE))?;
    let corpus = load_corpus(dir, STAGE)?;
    let partition = report::read_partition(&dir.join(report::PARTITION), &corpus.users).map_err(input(STAGE))?;
    let shifts = extract_shifts(&partition);
    let archetypes = classify_archetypes(&partition, truth.n_windows, cfg.min_active_windows);
    let score = synth::score_recovery(&truth, &corpus.users, &partition, &shifts, &archetypes).map_err(failed(STAGE))?;
    report::write_json(&dir.join(report::SCORE), &score).map_err(failed(STAGE))?;
    log::info!("score: mean NMI {:.4}, shift F1 {:.4}", score.mean_nmi, score.shift_f1);
    Ok(score)
}
