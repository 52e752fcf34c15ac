//! Job records, their on-disk layout and the blocking pipeline run.

use std::fs;
use std::path::{Path, PathBuf};

use pitchid_core::eval::Mode;
use pitchid_core::ingest::{generate_synthetic_match, FrameSource, SyntheticSpec};
use pitchid_core::ocr::OcrRegistry;
use pitchid_core::pipeline::{run_to_dir, PipelineInputs, RunManifest, RunTarget};
use pitchid_core::{GameMetadata, PipelineConfig};
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::ServiceError;
use crate::teaminfo::{DatasetRef, TeamInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }

    fn may_become(self, next: JobState) -> bool {
        matches!(
            (self, next),
            (JobState::Queued, JobState::Running)
                | (JobState::Running, JobState::Done)
                | (JobState::Running, JobState::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Teams {
    pub home: TeamInfo,
    pub away: TeamInfo,
}

/// Links to a finished job's results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobResult {
    pub output: String,
    pub players: String,
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub state: JobState,
    pub video_ref: String,
    pub game_id: String,
    pub teams: Teams,
    pub dataset: DatasetRef,
    /// Effective pipeline configuration.
    pub config: PipelineConfig,
    pub mode: Mode,
    pub progress: f64,
    pub frame_count: Option<u32>,
    pub result: Option<JobResult>,
    pub error: Option<String>,
}

impl Job {
    pub fn new(id: String, video_ref: String, game_id: String, teams: Teams, dataset: DatasetRef, config: PipelineConfig) -> Job {
        Job {
            id,
            state: JobState::Queued,
            video_ref,
            game_id,
            teams,
            dataset,
            config,
            mode: Mode::Post,
            progress: 0.0,
            frame_count: None,
            result: None,
            error: None,
        }
    }

    /// Moves to `next`, refusing transitions outside
    /// queued -> running -> {done, failed}.
    pub fn transition(&mut self, next: JobState) -> Result<(), ServiceError> {
        if !self.state.may_become(next) {
            return Err(ServiceError::Internal(format!(
                "job {} cannot go from {:?} to {next:?}",
                self.id, self.state
            )));
        }
        self.state = next;
        Ok(())
    }
}

pub fn job_dir(data_dir: &Path, id: &str) -> PathBuf {
    data_dir.join("jobs").join(id)
}

pub fn out_dir(data_dir: &Path, id: &str) -> PathBuf {
    job_dir(data_dir, id).join("out")
}

pub fn save_job(data_dir: &Path, job: &Job) -> Result<(), ServiceError> {
    let dir = job_dir(data_dir, &job.id);
    fs::create_dir_all(&dir)?;
    let tmp = dir.join("job.json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(job)? + "\n")?;
    fs::rename(&tmp, dir.join("job.json"))?;
    Ok(())
}

/// Every job found under `data_dir/jobs`, in id order. Unreadable records
/// are skipped with a warning.
pub fn load_jobs(data_dir: &Path) -> Vec<Job> {
    let Ok(entries) = fs::read_dir(data_dir.join("jobs")) else {
        return Vec::new();
    };
    let mut jobs: Vec<Job> = entries
        .flatten()
        .filter_map(|e| {
            let path = e.path().join("job.json");
            let text = fs::read_to_string(&path).ok()?;
            match serde_json::from_str(&text) {
                Ok(job) => Some(job),
                Err(err) => {
                    warn!(path = %path.display(), error = %err, "skipping unreadable job record");
                    None
                }
            }
        })
        .collect();
    jobs.sort_by(|a, b| a.id.cmp(&b.id));
    jobs
}

/// Synthetic spec for a fixture game: generator defaults with the
/// fixture's teams and kit colors.
pub fn synthetic_spec(game_id: &str, teams: &Teams, frames: Option<u32>) -> SyntheticSpec {
    let mut spec = SyntheticSpec {
        game_id: game_id.to_string(),
        ..SyntheticSpec::default()
    };
    if let Some(f) = frames {
        spec.frames = f;
    }
    for (slot, info) in spec.teams.iter_mut().zip([&teams.home, &teams.away]) {
        slot.name = info.name.clone();
        slot.kit = info.color;
    }
    spec
}

/// Inputs of a job plus the frame source used to serve frames.
pub fn job_inputs(job: &Job) -> Result<PipelineInputs, ServiceError> {
    match &job.dataset {
        DatasetRef::Synthetic { seed, frames } => {
            let spec = synthetic_spec(&job.game_id, &job.teams, *frames);
            let m = generate_synthetic_match(&spec, *seed).map_err(|e| ServiceError::Internal(e.to_string()))?;
            Ok(PipelineInputs::from_synthetic(&m, job.config.clone()))
        }
        DatasetRef::Dir { path } => {
            let manifest = RunManifest::from_dataset_dir(path, path);
            let mut inputs = manifest
                .load_inputs()
                .map_err(|e| ServiceError::Internal(e.to_string()))?;
            inputs.config = job.config.clone();
            Ok(inputs)
        }
    }
}

pub fn frame_source(job: &Job) -> Result<FrameSource, ServiceError> {
    match &job.dataset {
        DatasetRef::Synthetic { .. } => Ok(job_inputs(job)?.frames),
        DatasetRef::Dir { path } => {
            let meta: GameMetadata = serde_json::from_str(&fs::read_to_string(path.join("metadata.json"))?)?;
            Ok(pitchid_core::ingest::RasterDir::open(path.join("frames"), meta.width, meta.height)
                .map(FrameSource::RasterDir)
                .unwrap_or_default())
        }
    }
}

/// Runs the pipeline for a job into its output directory. Returns the
/// frame count of the footage.
pub fn run_job(job: &Job, data_dir: &Path, threads: Option<usize>) -> Result<u32, ServiceError> {
    let inputs = job_inputs(job)?;
    let registry = OcrRegistry::from_config(&inputs.config).map_err(|e| ServiceError::Internal(e.to_string()))?;
    let target = RunTarget {
        out_dir: out_dir(data_dir, &job.id),
        mode: job.mode,
        threads,
    };
    run_to_dir(&inputs, &target, Some(&registry)).map_err(|e| ServiceError::Internal(e.to_string()))?;
    Ok(inputs.frames.frame_count())
}
