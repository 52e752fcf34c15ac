//! `pitchid` command line: run the pipeline, cut player clips, evaluate
//! runs, generate synthetic matches and serve the job API.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use pitchid_core::clip::{clip_player, export_edl, render_cut_commands, video_len};
use pitchid_core::eval::{build_report, Mode, VideoEval};
use pitchid_core::identity::OutputDocument;
use pitchid_core::ingest::{generate_synthetic_match, load_ground_truth, SyntheticSpec};
use pitchid_core::pipeline::{clip_stem, run_manifest_with, IdentitySet, RunManifest};
use pitchid_core::schema::{validate_str, SchemaKind};
use pitchid_core::model::load_config;
use pitchid_core::{ColorSpace, Error as CoreError, OcrMethod, PipelineConfig};
use pitchid_service::{GameFixture, ServiceConfig, TeamInfoClient};
use serde::de::DeserializeOwned;
use tracing::{info, warn};
use tracing_subscriber::EnvFilter;

/// Environment variable holding the log filter, e.g. `info` or
/// `pitchid_core=debug`.
const LOG_ENV: &str = "PITCHID_LOG";

#[derive(Debug, Parser)]
#[command(name = "pitchid", version, about = "Team and player identification for soccer tracking output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline on a manifest or a dataset directory.
    Run(RunArgs),
    /// Build a player's clip timeline from an output.json.
    Clip(ClipArgs),
    /// Score finished runs against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic match with ground truth.
    Synth(SynthArgs),
    /// Serve the HTTP job API.
    Serve(ServeArgs),
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run manifest (JSON). Relative paths resolve against its directory.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    manifest: Option<PathBuf>,
    /// Dataset directory in the generator's layout.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory; required with --dataset, overrides the manifest's.
    #[arg(long, required_unless_present = "manifest")]
    out: Option<PathBuf>,
    /// Pipeline configuration file; overrides the manifest's.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Identities written to output.json: online or post.
    #[arg(long, value_parser = parse_enum::<Mode>)]
    mode: Option<Mode>,
    /// Worker threads; 1 gives fully sequential scheduling.
    #[arg(long)]
    threads: Option<usize>,
    /// rgb, cielab or weighted_rgb.
    #[arg(long, value_parser = parse_enum::<ColorSpace>)]
    color_space: Option<ColorSpace>,
    /// paddle, easy or mock.
    #[arg(long, value_parser = parse_enum::<OcrMethod>)]
    ocr_method: Option<OcrMethod>,
}

#[derive(Debug, Args)]
struct ClipArgs {
    /// output.json of a finished run.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    team: String,
    #[arg(long)]
    kit: u32,
    /// Largest gap in frames bridged between appearances.
    #[arg(long)]
    gap: Option<u32>,
    /// Frames added before and after each segment.
    #[arg(long)]
    pad: Option<u32>,
    /// Frame count of the video; defaults to the last recorded frame + 1.
    #[arg(long)]
    video_len: Option<u32>,
    /// Directory for the EDL and overlay; defaults to `clips/` next to
    /// output.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Cut command template with `{src}`, `{dst}`, `{in}` and `{out}`;
    /// one command per segment is printed.
    #[arg(long)]
    cut_template: Option<String>,
    #[arg(long, default_value = "input.mp4")]
    source: String,
    #[arg(long, default_value = "clip.mp4")]
    dest: String,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Run output directories (each holding identities.json).
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Ground truth for every run; otherwise each run directory needs a
    /// ground_truth.txt.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Where to write report.json and report.txt; prints the table only
    /// when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator spec (JSON); flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    frames: Option<u32>,
    #[arg(long)]
    lighting_sigma: Option<f64>,
    #[arg(long)]
    occlusion_rate: Option<f64>,
    #[arg(long)]
    ocr_noise_rate: Option<f64>,
    #[arg(long)]
    absence_rate: Option<f64>,
    /// Skip writing frame rasters.
    #[arg(long)]
    no_frames: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long, default_value = "pitchid-data")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    max_runs: usize,
    #[arg(long)]
    threads: Option<usize>,
    /// Team fixtures (JSON map of game id to fixture) replacing the
    /// built-in ones.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

fn with_code(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env(LOG_ENV).unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Clip(a) => clip(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", describe(&f.error));
            ExitCode::from(f.code)
        }
    }
}

/// The error and its causes, skipping causes whose text the previous
/// message already includes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn run(a: RunArgs) -> CmdResult {
    let mut manifest = match (&a.manifest, &a.dataset) {
        (Some(m), _) => RunManifest::load(m).map_err(|e| with_code(2)(e.into()))?,
        (None, Some(d)) => RunManifest::from_dataset_dir(d, a.out.as_deref().expect("clap requires --out")),
        (None, None) => unreachable!("clap requires one input"),
    };
    if let Some(out) = a.out {
        manifest.out_dir = out;
    }
    if let Some(c) = a.config {
        manifest.config = Some(c);
    }
    if let Some(m) = a.mode {
        manifest.mode = m;
    }
    if a.threads.is_some() {
        manifest.threads = a.threads;
    }
    let run = run_manifest_with(&manifest, None, |c| {
        if let Some(cs) = a.color_space {
            c.color_space = cs;
        }
        if let Some(m) = a.ocr_method {
            c.ocr_method = m;
        }
        Ok(())
    })
    .map_err(|e| Failure {
        code: e.exit_code() as u8,
        error: e.into(),
    })?;
    for line in &run.log {
        warn!("{line}");
    }
    println!("wrote {}", manifest.out_dir.join("output.json").display());
    if let Some(report) = &run.report {
        print!("{}", report.to_table());
    }
    info!(total_ms = run.timings.total_ms, "run finished");
    Ok(())
}

fn read_output(path: &Path) -> Result<OutputDocument, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(with_code(2))?;
    validate_str(SchemaKind::Output, &text)
        .and_then(|_| OutputDocument::from_json(&text))
        .with_context(|| format!("{} is not a valid output document", path.display()))
        .map_err(with_code(2))
}

/// Clip parameters from the run's config.json next to output.json, if any.
fn sibling_config(output: &Path) -> Result<PipelineConfig, Failure> {
    let path = output.with_file_name("config.json");
    if !path.is_file() {
        return Ok(PipelineConfig::default());
    }
    let text = fs::read_to_string(&path)?;
    load_config(&text)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(with_code(2))
}

fn clip(a: ClipArgs) -> CmdResult {
    let doc = read_output(&a.output)?;
    let config = sibling_config(&a.output)?;
    let gap = a.gap.unwrap_or(config.clip_gap_tolerance);
    let pad = a.pad.unwrap_or(config.clip_pad);
    let len = a.video_len.unwrap_or_else(|| video_len(&doc));
    let timeline = clip_player(&doc, &a.team, a.kit, gap, pad, len).map_err(|e| match e {
        CoreError::UnknownPlayer { .. } => with_code(3)(e.into()),
        other => other.into(),
    })?;
    if timeline.segments.is_empty() {
        eprintln!("warning: {} never appears in {}", timeline.player.label(), a.output.display());
    }
    for f in &timeline.anomalies {
        warn!(frame = f, "several boxes carry this identity; kept the largest");
    }
    let (edl, overlay) = export_edl(&timeline);
    let dir = a
        .out_dir
        .unwrap_or_else(|| a.output.parent().unwrap_or(Path::new(".")).join("clips"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = clip_stem(&doc, &timeline);
    for (name, kind, text) in [
        (format!("{stem}.edl.json"), SchemaKind::Edl, serde_json::to_string_pretty(&edl)? + "\n"),
        (format!("{stem}.overlay.json"), SchemaKind::Overlay, serde_json::to_string_pretty(&overlay)? + "\n"),
    ] {
        validate_str(kind, &text)?;
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    if let Some(t) = &a.cut_template {
        print!("{}", render_cut_commands(t, &edl, &a.source, &a.dest));
    }
    Ok(())
}

fn eval(a: EvalArgs) -> CmdResult {
    let mut videos: BTreeMap<String, VideoEval> = BTreeMap::new();
    for dir in &a.runs {
        let path = dir.join("identities.json");
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(with_code(2))?;
        let set: IdentitySet = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(with_code(2))?;
        let gt_path = a.ground_truth.clone().unwrap_or_else(|| dir.join("ground_truth.txt"));
        let entry = match videos.entry(set.video.clone()) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(v) => {
                let gt_text = fs::read_to_string(&gt_path)
                    .with_context(|| format!("reading ground truth {}", gt_path.display()))
                    .map_err(with_code(2))?;
                let ground_truth = load_ground_truth(&gt_text)
                    .with_context(|| format!("parsing {}", gt_path.display()))
                    .map_err(with_code(2))?;
                v.insert(VideoEval {
                    video: set.video.clone(),
                    ground_truth,
                    runs: Vec::new(),
                })
            }
        };
        entry.runs.extend(set.eval_runs());
    }
    let videos: Vec<VideoEval> = videos.into_values().collect();
    let report = build_report(&videos).map_err(|e| with_code(2)(e.into()))?;
    let json = report.to_json();
    validate_str(SchemaKind::Report, &json)?;
    if let Some(out) = &a.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("report.json"), &json)?;
        fs::write(out.join("report.txt"), report.to_table())?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn synth(a: SynthArgs) -> CmdResult {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(with_code(2))?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .map_err(with_code(2))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(f) = a.frames {
        spec.frames = f;
    }
    if let Some(s) = a.lighting_sigma {
        spec.lighting_noise_sigma = s;
    }
    if let Some(r) = a.occlusion_rate {
        spec.occlusion_rate = r;
    }
    if let Some(r) = a.ocr_noise_rate {
        spec.ocr_noise_rate = r;
    }
    if let Some(r) = a.absence_rate {
        spec.absence_rate = r;
    }
    spec.validate().map_err(|e| with_code(2)(e.into()))?;
    let m = generate_synthetic_match(&spec, a.seed)?;
    m.write_to_dir(&a.out, !a.no_frames)?;
    println!(
        "wrote {} ({} frames, {} detections, {} tracklets)",
        a.out.display(),
        spec.frames,
        m.detections.len(),
        m.ground_truth.len()
    );
    Ok(())
}

fn serve(a: ServeArgs) -> CmdResult {
    let mut config = ServiceConfig::new(&a.data_dir);
    config.max_concurrent_runs = a.max_runs.max(1);
    config.threads = a.threads;
    if let Some(p) = &a.fixtures {
        let text = fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(with_code(2))?;
        let fixtures: BTreeMap<String, GameFixture> = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", p.display()))
            .map_err(with_code(2))?;
        config.team_info = TeamInfoClient::stub(fixtures);
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(pitchid_service::serve(a.addr, config))
        .map_err(|e| anyhow!("service stopped: {e}"))?;
    Ok(())
}
