use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyncoord::ingest::InputFormat;
use dyncoord::pipeline::PipelineConfig;
use dyncoord::report;
use dyncoord::synth::ScenarioConfig;

mod stages;

use stages::{Failure, Outcome, CONFIG};

/// Dynamic community analysis of coordinated retweet networks.
#[derive(Parser, Debug)]
#[command(name = "dyncoord", version, about)]
struct Cli {
    /// Worker threads for per-window work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse the event log, select superspreaders and cut windows.
    Ingest(PipelineArgs),
    /// Build backbone similarity layers from an ingested corpus.
    Layers(PipelineArgs),
    /// Find cross-time communities in the layers.
    Detect(PipelineArgs),
    /// Run the analyses on a partition and write the report bundle.
    Analyze(PipelineArgs),
    /// Every stage in sequence, plus a run manifest.
    Run(PipelineArgs),
    /// Generate a synthetic event log with planted communities.
    Synth(SynthArgs),
    /// Compare a run against a synthetic scenario's ground truth.
    Score(ScoreArgs),
}

/// Pipeline settings. The base is `--config` when given, else the
/// `config.json` an earlier stage left in the output directory, else the
/// defaults. Flags override the base.
#[derive(Args, Debug, Default)]
struct PipelineArgs {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Event log (JSONL or CSV).
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<InputFormat>,
    #[arg(long)]
    span_start: Option<String>,
    #[arg(long)]
    span_end: Option<String>,
    /// Window length in days.
    #[arg(long)]
    d_days: Option<u32>,
    /// Window offset in days.
    #[arg(long)]
    delta_days: Option<u32>,
    #[arg(long)]
    top_fraction: Option<f64>,
    #[arg(long)]
    max_bad_fraction: Option<f64>,
    /// Disparity filter significance level.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_passes: Option<usize>,
    #[arg(long)]
    rbo_persistence: Option<f64>,
    /// Polarity seed as `hashtag=-1|0|1`; repeatable, replaces configured seeds.
    #[arg(long = "polarity-seed", value_parser = parse_seed)]
    polarity_seeds: Vec<(String, f64)>,
    #[arg(long)]
    top_communities: Option<usize>,
    #[arg(long)]
    trend_depth: Option<usize>,
    #[arg(long)]
    min_active_windows: Option<usize>,
    #[arg(long)]
    align_half_width: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory for the log, scenario and truth tables.
    #[arg(long, short)]
    out: PathBuf,
    /// JSON scenario file; flags override it.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    communities: Option<usize>,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Move influenced users to the next lower community.
    #[arg(long)]
    drift: bool,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Directory written by `synth`.
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    s.parse().map_err(|e: dyncoord::Error| e.to_string())
}

fn parse_seed(s: &str) -> Result<(String, f64), String> {
    let (tag, v) = s.split_once('=').ok_or("expected hashtag=value")?;
    let v: f64 = v.parse().map_err(|_| format!("bad seed value `{v}`"))?;
    Ok((tag.trim_start_matches('#').to_lowercase(), v))
}

fn read_config(path: &Path) -> Outcome<PipelineConfig> {
    report::read_json(path).map_err(|error| Failure { code: 1, stage: "config", error })
}

impl PipelineArgs {
    fn resolve(&self) -> Outcome<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_config(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        let echoed = cfg.output_dir.join(CONFIG);
        if self.config.is_none() && echoed.is_file() {
            cfg = PipelineConfig { output_dir: cfg.output_dir.clone(), ..read_config(&echoed)? };
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        set!(d_days, delta_days, top_fraction, max_bad_fraction, alpha, gamma, omega, seed,
             max_passes, rbo_persistence, top_communities, trend_depth, min_active_windows, align_half_width, format);
        if self.span_start.is_some() {
            cfg.span_start = self.span_start.clone();
        }
        if self.span_end.is_some() {
            cfg.span_end = self.span_end.clone();
        }
        if let Some(i) = &self.input {
            cfg.input = Some(i.clone());
        }
        if !self.polarity_seeds.is_empty() {
            cfg.polarity_seeds = self.polarity_seeds.iter().cloned().collect::<BTreeMap<_, _>>();
        }
        cfg.validate().map_err(|error| Failure { code: 1, stage: "config", error })?;
        Ok(cfg)
    }
}

fn scenario_of(args: &SynthArgs) -> Outcome<ScenarioConfig> {
    let mut s: ScenarioConfig = match &args.scenario {
        Some(p) => report::read_json(p).map_err(|error| Failure { code: 1, stage: "synth", error })?,
        None => ScenarioConfig::default(),
    };
    if let Some(v) = args.users {
        s.n_users = v;
    }
    if let Some(v) = args.communities {
        s.n_communities = v;
    }
    if let Some(v) = args.days {
        s.n_days = v;
    }
    if let Some(v) = args.noise {
        s.noise = v;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if args.drift {
        s.drift = true;
    }
    Ok(s)
}

fn execute(command: Command) -> Outcome<()> {
    match command {
        Command::Ingest(a) => stages::ingest(&a.resolve()?).map(drop),
        Command::Layers(a) => {
            let cfg = a.resolve()?;
            let corpus = stages::load_corpus(&cfg.output_dir, "layers")?;
            stages::layers(&cfg, &corpus).map(drop)
        }
        Command::Detect(a) => {
            let cfg = a.resolve()?;
            let dir = &cfg.output_dir;
            report::require(dir, &[report::EVENTS, report::WINDOWS, report::EDGES])
                .map_err(|error| Failure { code: 1, stage: "detect", error })?;
            let corpus = stages::load_corpus(dir, "detect")?;
            let layers = stages::load_layers(dir, &corpus, "detect")?;
            stages::detect(&cfg, &corpus, layers).map(drop)
        }
        Command::Analyze(a) => stages::analyze_from_dir(&a.resolve()?),
        Command::Run(a) => stages::run(&a.resolve()?),
        Command::Synth(a) => stages::synth(&scenario_of(&a)?, &a.out).map(drop),
        Command::Score(a) => {
            let cfg = a.pipeline.resolve()?;
            let s = stages::score(&cfg, &a.truth)?;
            println!("{}", serde_json::to_string_pretty(&s).expect("score serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::error!("cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{f}");
            ExitCode::from(f.code)
        }
    }
}
