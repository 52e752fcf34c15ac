//! End-to-end orchestration: color evidence, team clustering, OCR, identity
//! resolution, `output.json`, player clips and evaluation, with per-stage
//! timings and artifacts on disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;
use tracing::{info, warn};

use crate::clip::{build_timeline, detected_players, export_edl, video_len, ClipTimeline};
use crate::color::{assign_tracklet_teams, fit_cluster_model, mean_color, roi_frame_rect, ONLINE_FREEZE_SAMPLES};
use crate::error::{Error, Result};
use crate::eval::{build_report, EvalReport, EvalRun, Mode, VideoEval};
use crate::identity::{emit_output, resolve_identities, OutputDocument, PlayerIdentity};
use crate::ingest::{load_ground_truth, FrameSource, GroundTruth, RasterDir, SyntheticMatch};
use crate::model::{
    group_tracklets, load_config, parse_player_db, parse_team_db, parse_tracker_output, ColorSpace,
    Detection, GameMetadata, OcrMethod, PipelineConfig, PlayerDb, TeamDb, Tracklet,
};
use crate::ocr::{candidates_from_records, recognize_tracklets, OcrRegistry, TrackletReadings};
use crate::schema::{validate_str, SchemaKind};

/// Everything a run consumes, already parsed.
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub detections: Vec<Detection>,
    pub frames: FrameSource,
    pub team_db: TeamDb,
    pub player_db: PlayerDb,
    pub metadata: GameMetadata,
    pub config: PipelineConfig,
    pub ground_truth: Option<GroundTruth>,
}

impl PipelineInputs {
    pub fn from_synthetic(m: &SyntheticMatch, config: PipelineConfig) -> Self {
        PipelineInputs {
            detections: m.detections.clone(),
            frames: m.frame_source(),
            team_db: m.team_db.clone(),
            player_db: m.player_db.clone(),
            metadata: m.metadata.clone(),
            config,
            ground_truth: Some(m.ground_truth.clone()),
        }
    }
}

fn default_mode() -> Mode {
    Mode::Post
}

/// Input paths and output location of one run. Relative paths in a manifest
/// file resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tracks: PathBuf,
    #[serde(default)]
    pub frames_dir: Option<PathBuf>,
    pub team_db: PathBuf,
    pub player_db: PathBuf,
    pub metadata: PathBuf,
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Worker threads for stage-internal parallelism; `None` uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::path(path, e))
}

fn in_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Path { .. } => e,
        other => Error::path(path, std::io::Error::new(std::io::ErrorKind::InvalidData, other.to_string())),
    }
}

fn parse_file<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    parse(&read(path)?).map_err(|e| in_path(path, e))
}

impl RunManifest {
    /// Manifest for a directory in the layout written by the synthetic
    /// generator. Optional inputs are picked up when present.
    pub fn from_dataset_dir(dir: &Path, out_dir: &Path) -> Self {
        let optional = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        RunManifest {
            tracks: dir.join("tracks.txt"),
            frames_dir: optional("frames"),
            team_db: dir.join("team_db.txt"),
            player_db: dir.join("player_db.txt"),
            metadata: dir.join("metadata.json"),
            config: optional("config.json"),
            ground_truth: optional("ground_truth.txt"),
            out_dir: out_dir.to_path_buf(),
            mode: Mode::Post,
            threads: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut m: RunManifest = serde_json::from_str(&read(path)?).map_err(|e| in_path(path, e.into()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut m.tracks);
        fix(&mut m.team_db);
        fix(&mut m.player_db);
        fix(&mut m.metadata);
        fix(&mut m.out_dir);
        for p in [&mut m.frames_dir, &mut m.config, &mut m.ground_truth].into_iter().flatten() {
            fix(p);
        }
        Ok(m)
    }

    /// Reads and validates every input. Errors name the offending path.
    pub fn load_inputs(&self) -> Result<PipelineInputs> {
        let detections = parse_file(&self.tracks, parse_tracker_output)?;
        let team_db = parse_file(&self.team_db, parse_team_db)?;
        let player_db = parse_file(&self.player_db, parse_player_db)?;
        let metadata: GameMetadata =
            parse_file(&self.metadata, |t| Ok(serde_json::from_str::<GameMetadata>(t)?))?;
        metadata.validate().map_err(|e| in_path(&self.metadata, e))?;
        for team in [&metadata.home_team, &metadata.away_team] {
            team_db.get(team).map_err(|e| in_path(&self.team_db, e))?;
        }
        let config = match &self.config {
            Some(p) => parse_file(p, load_config)?,
            None => PipelineConfig::default(),
        };
        let ground_truth = match &self.ground_truth {
            Some(p) => Some(parse_file(p, load_ground_truth)?),
            None => None,
        };
        let frames = match &self.frames_dir {
            Some(d) => FrameSource::RasterDir(RasterDir::open(d, metadata.width, metadata.height)?),
            None => FrameSource::None,
        };
        Ok(PipelineInputs {
            detections,
            frames,
            team_db,
            player_db,
            metadata,
            config,
            ground_truth,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

/// Stage clock. Stages are contiguous: each one runs from the end of the
/// previous stage, so glue work between stages is charged to the next one
/// and the stage sum tracks wall time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
    pub total_ms: f64,
    #[serde(skip)]
    lap: Option<Instant>,
}

impl Timings {
    fn starting_at(start: Instant) -> Self {
        Timings {
            lap: Some(start),
            ..Timings::default()
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = self.lap.unwrap_or_else(Instant::now);
        let out = f();
        let end = Instant::now();
        self.lap = Some(end);
        let ms = (end - start).as_secs_f64() * 1e3;
        info!(stage, ms, "stage finished");
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            ms,
        });
        out
    }

    pub fn stage_sum_ms(&self) -> f64 {
        self.stages.iter().map(|s| s.ms).sum()
    }
}

/// A failed run. Validation failures happen before any stage runs.
#[derive(Debug, ThisError)]
pub enum RunError {
    #[error("invalid input: {0}")]
    Validation(#[source] Error),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
}

impl RunError {
    /// Process exit code: 2 for invalid input, 1 for a failed stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Stage { .. } => 1,
        }
    }

    fn stage(&self) -> &'static str {
        match self {
            RunError::Validation(_) => "validate",
            RunError::Stage { stage, .. } => stage,
        }
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, RunError> {
    r.map_err(|source| RunError::Stage { stage: name, source })
}

/// Identities of both modes plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySet {
    pub video: String,
    pub mode: Mode,
    pub color_space: ColorSpace,
    pub ocr_method: OcrMethod,
    pub online: Vec<PlayerIdentity>,
    pub post: Vec<PlayerIdentity>,
}

impl IdentitySet {
    pub fn for_mode(&self, mode: Mode) -> &[PlayerIdentity] {
        match mode {
            Mode::Online => &self.online,
            Mode::Post => &self.post,
        }
    }

    /// Both modes as evaluation runs.
    pub fn eval_runs(&self) -> Vec<EvalRun> {
        [Mode::Online, Mode::Post]
            .into_iter()
            .map(|mode| EvalRun {
                mode,
                color_space: self.color_space,
                ocr_method: self.ocr_method,
                identities: self.for_mode(mode).to_vec(),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub output: OutputDocument,
    pub identities: IdentitySet,
    pub readings: Vec<TrackletReadings>,
    pub clips: Vec<ClipTimeline>,
    pub report: Option<EvalReport>,
    pub timings: Timings,
    /// Human-readable notes collected during the run.
    pub log: Vec<String>,
}

/// Replaces record colors with the ROI mean measured on the frames. A box
/// whose ROI falls outside the frame loses its color.
fn measure_colors(dets: &mut [Detection], frames: &FrameSource, config: &PipelineConfig) -> Result<()> {
    let Some((w, h)) = frames.dimensions() else {
        return Ok(());
    };
    let offset = config.offset_type;
    if let FrameSource::Synthetic(_) = frames {
        // Rendering a region is cheap; no need to materialize whole frames.
        return dets.par_iter_mut().try_for_each(|d| {
            d.avg_rgb = match roi_frame_rect(&d.bbox, offset, w, h) {
                Some(rect) => Some(mean_color(&frames.read_region(d.frame, rect)?)),
                None => None,
            };
            Ok(())
        });
    }
    let mut by_frame: BTreeMap<u32, Vec<&mut Detection>> = BTreeMap::new();
    for d in dets.iter_mut() {
        by_frame.entry(d.frame).or_default().push(d);
    }
    by_frame.into_par_iter().try_for_each(|(frame, group)| {
        let raster = frames.read_frame(frame)?;
        for d in group {
            d.avg_rgb = roi_frame_rect(&d.bbox, offset, w, h).map(|rect| mean_color(&raster.crop(rect)));
        }
        Ok(())
    })
}

fn team_pass(
    tracklets: &[Tracklet],
    detections: &[Detection],
    inputs: &PipelineInputs,
    max_samples: Option<usize>,
) -> Result<Vec<Tracklet>> {
    let model = fit_cluster_model(detections, &inputs.metadata, &inputs.team_db, &inputs.config, max_samples)?;
    let mut out = tracklets.to_vec();
    assign_tracklet_teams(&mut out, &model, &inputs.metadata, &inputs.config);
    Ok(out)
}

fn video_name(m: &GameMetadata) -> String {
    format!("{}-{}", m.game_id, m.clip_id)
}

/// Runs every stage in memory. `mode` picks which identities go into the
/// output document; both are always computed.
pub fn run_pipeline(
    inputs: &PipelineInputs,
    mode: Mode,
    registry: &OcrRegistry,
) -> std::result::Result<RunOutput, RunError> {
    run_stages(inputs, mode, registry, Timings::starting_at(Instant::now()))
}

fn run_stages(
    inputs: &PipelineInputs,
    mode: Mode,
    registry: &OcrRegistry,
    mut timings: Timings,
) -> std::result::Result<RunOutput, RunError> {
    let mut log = Vec::new();
    let config = &inputs.config;
    timings.time("config", || stage("config", config.validate()))?;

    let mut detections = inputs.detections.clone();
    if inputs.frames.is_none() {
        log.push("no frames: colors and kit numbers taken from the tracker records".to_string());
    }
    timings.time("colors", || stage("colors", measure_colors(&mut detections, &inputs.frames, config)))?;
    let base = timings.time("tracklets", || stage("ingest", group_tracklets(&detections)))?;

    let (online, post) = timings.time("team", || -> std::result::Result<_, RunError> {
        let online = stage("team", team_pass(&base, &detections, inputs, Some(ONLINE_FREEZE_SAMPLES)))?;
        let post = stage("team", team_pass(&base, &detections, inputs, None))?;
        Ok((online, post))
    })?;

    let (mut online, mut post) = (online, post);
    let readings = timings.time("ocr", || -> std::result::Result<_, RunError> {
        let mut tracklets = base.clone();
        let readings = if inputs.frames.is_none() {
            warn!("no frames available; OCR skipped");
            candidates_from_records(&mut tracklets);
            Vec::new()
        } else {
            let engine = stage("ocr", registry.for_method(config.ocr_method))?;
            recognize_tracklets(&mut tracklets, &inputs.frames, engine.as_ref(), config)
        };
        for (t, r) in online.iter_mut().zip(&tracklets).chain(post.iter_mut().zip(&tracklets)) {
            t.kit_candidates = r.kit_candidates.clone();
        }
        Ok(readings)
    })?;
    let errors: usize = readings.iter().map(|r| r.errors.len()).sum();
    if errors > 0 {
        log.push(format!("{errors} OCR submissions failed"));
    }

    let identities = timings.time("resolve", || IdentitySet {
        video: video_name(&inputs.metadata),
        mode,
        color_space: config.color_space,
        ocr_method: config.ocr_method,
        online: resolve_identities(&online, &inputs.metadata, &inputs.player_db),
        post: resolve_identities(&post, &inputs.metadata, &inputs.player_db),
    });

    let output = timings.time("output", || {
        stage(
            "output",
            emit_output(&inputs.metadata, &inputs.player_db, &detections, identities.for_mode(mode)),
        )
    })?;

    let clips = timings.time("clips", || {
        let len = video_len(&output).max(inputs.frames.frame_count());
        detected_players(&output)
            .into_iter()
            .flat_map(|(team, players)| players.into_iter().map(move |p| (team.clone(), p.kit)))
            .map(|(team, kit)| build_timeline(&output, &team, kit, config.clip_gap_tolerance, config.clip_pad, len))
            .collect::<Vec<_>>()
    });

    let report = match &inputs.ground_truth {
        Some(gt) => Some(timings.time("eval", || {
            stage(
                "eval",
                build_report(&[VideoEval {
                    video: identities.video.clone(),
                    ground_truth: gt.clone(),
                    runs: identities.eval_runs(),
                }]),
            )
        })?),
        None => None,
    };

    timings.total_ms = timings.stage_sum_ms();
    Ok(RunOutput {
        output,
        identities,
        readings,
        clips,
        report,
        timings,
        log,
    })
}

/// File name stem of a player's clip artifacts: `<team index>_<kit>`.
pub fn clip_stem(doc: &OutputDocument, t: &ClipTimeline) -> String {
    format!("{}_{:02}", doc.team_index(&t.player.team).unwrap_or(-1), t.player.kit.get())
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes") + "\n"
}

struct ArtifactWriter<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl ArtifactWriter<'_> {
    fn write(&mut self, name: &str, text: &str, schema: Option<SchemaKind>) -> Result<()> {
        if let Some(kind) = schema {
            validate_str(kind, text)?;
        }
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::path(parent, e))?;
        }
        fs::write(&path, text).map_err(|e| Error::path(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Flags everything written so far as partial.
    fn mark_partial(&self) {
        for p in &self.written {
            let mut flagged = p.clone().into_os_string();
            flagged.push(".partial");
            if let Err(e) = fs::rename(p, &flagged) {
                warn!(path = %p.display(), error = %e, "could not flag partial artifact");
            }
        }
    }
}

/// Writes every artifact of a finished run, validating each JSON document
/// against its schema first.
fn write_artifacts(w: &mut ArtifactWriter<'_>, run: &RunOutput, config: &PipelineConfig) -> Result<()> {
    w.write("output.json", &run.output.to_json(), Some(SchemaKind::Output))?;
    w.write("identities.json", &pretty(&run.identities), None)?;
    w.write("ocr_readings.json", &pretty(&run.readings), None)?;
    w.write("players.json", &pretty(&detected_players(&run.output)), None)?;
    w.write("config.json", &(config.to_json() + "\n"), None)?;
    for t in &run.clips {
        let stem = clip_stem(&run.output, t);
        let (edl, overlay) = export_edl(t);
        w.write(&format!("clips/{stem}.edl.json"), &pretty(&edl), Some(SchemaKind::Edl))?;
        w.write(&format!("clips/{stem}.overlay.json"), &pretty(&overlay), Some(SchemaKind::Overlay))?;
    }
    if let Some(report) = &run.report {
        w.write("report.json", &report.to_json(), Some(SchemaKind::Report))?;
        w.write("report.txt", &report.to_table(), None)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Failure<'a> {
    stage: &'a str,
    message: String,
}

/// Where and how a run writes its artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTarget {
    pub out_dir: PathBuf,
    pub mode: Mode,
    pub threads: Option<usize>,
}

/// Loads the manifest's inputs, then runs as [`run_to_dir`].
pub fn run_manifest(manifest: &RunManifest, registry: Option<&OcrRegistry>) -> std::result::Result<RunOutput, RunError> {
    run_manifest_with(manifest, registry, |_| Ok(()))
}

/// As [`run_manifest`], letting `adjust` override the loaded configuration
/// before it is validated.
pub fn run_manifest_with(
    manifest: &RunManifest,
    registry: Option<&OcrRegistry>,
    adjust: impl FnOnce(&mut PipelineConfig) -> Result<()>,
) -> std::result::Result<RunOutput, RunError> {
    let start = Instant::now();
    let mut load_timing = Timings::starting_at(start);
    let inputs = load_timing
        .time("ingest", || -> Result<PipelineInputs> {
            let mut inputs = manifest.load_inputs()?;
            adjust(&mut inputs.config)?;
            inputs.config.validate()?;
            Ok(inputs)
        })
        .map_err(RunError::Validation)?;
    let target = RunTarget {
        out_dir: manifest.out_dir.clone(),
        mode: manifest.mode,
        threads: manifest.threads,
    };
    execute(&inputs, &target, registry, start, load_timing)
}

/// Runs the pipeline on parsed inputs and writes artifacts into
/// `target.out_dir`. On failure, files already written are renamed
/// `*.partial` and `failure.json` records the failing stage.
pub fn run_to_dir(
    inputs: &PipelineInputs,
    target: &RunTarget,
    registry: Option<&OcrRegistry>,
) -> std::result::Result<RunOutput, RunError> {
    let start = Instant::now();
    execute(inputs, target, registry, start, Timings::starting_at(start))
}

fn execute(
    inputs: &PipelineInputs,
    target: &RunTarget,
    registry: Option<&OcrRegistry>,
    start: Instant,
    load_timing: Timings,
) -> std::result::Result<RunOutput, RunError> {
    fs::create_dir_all(&target.out_dir)
        .map_err(|e| RunError::Validation(Error::path(&target.out_dir, e)))?;
    let mut w = ArtifactWriter {
        dir: &target.out_dir,
        written: Vec::new(),
    };
    let result = (|| -> std::result::Result<RunOutput, RunError> {
        let own;
        let registry = match registry {
            Some(r) => r,
            None => {
                own = stage("ocr", OcrRegistry::from_config(&inputs.config))?;
                &own
            }
        };
        let mut timings = load_timing;
        let pool = timings.time("threads", || {
            stage(
                "threads",
                rayon::ThreadPoolBuilder::new()
                    .num_threads(target.threads.unwrap_or(0))
                    .build()
                    .map_err(|e| Error::Config(e.to_string())),
            )
        })?;
        let mut run = pool.install(|| run_stages(inputs, target.mode, registry, timings))?;
        let mut timings = std::mem::take(&mut run.timings);
        timings.time("write", || stage("write", write_artifacts(&mut w, &run, &inputs.config)))?;
        run.timings = timings;
        run.timings.total_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut log: Vec<String> = run
            .timings
            .stages
            .iter()
            .map(|s| format!("stage {:<8} {:>10.1} ms", s.stage, s.ms))
            .collect();
        log.push(format!("total          {:>10.1} ms", run.timings.total_ms));
        log.extend(run.log.iter().cloned());
        stage("write", w.write("timings.json", &pretty(&run.timings), None))?;
        stage("write", w.write("run.log", &(log.join("\n") + "\n"), None))?;
        Ok(run)
    })();
    if let Err(e) = &result {
        w.mark_partial();
        let failure = Failure {
            stage: e.stage(),
            message: e.to_string(),
        };
        let path = target.out_dir.join("failure.json");
        if let Err(io) = fs::write(&path, pretty(&failure)) {
            warn!(path = %path.display(), error = %io, "could not write failure record");
        }
    }
    result
}
