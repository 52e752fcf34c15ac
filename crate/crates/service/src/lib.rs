//! HTTP job service for the pitchid pipeline.
//!
//! Jobs are submitted with a video reference and a configuration, run one
//! at a time (by default) on a blocking worker, and keep their artifacts on
//! disk under `data_dir/jobs/<id>/`. The job table is rebuilt from those
//! directories on start. Every response is JSON; failures use the
//! [`ErrorBody`] envelope.

mod error;
pub mod jobs;
mod routes;
pub mod teaminfo;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use pitchid_core::ingest::FrameSource;
use serde_json::{Map, Value};
use tokio::sync::{Notify, Semaphore};
use tracing::{error, info};

pub use error::{ErrorBody, ServiceError};
pub use jobs::{Job, JobResult, JobState, Teams};
pub use routes::router;
pub use teaminfo::{game_id_from_playlist, DatasetRef, GameFixture, TeamInfo, TeamInfoClient, TeamInfoMode};

/// Called on the worker thread right after a job turns `running`.
pub type RunHook = Arc<dyn Fn(&str) + Send + Sync>;

#[derive(Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub max_concurrent_runs: usize,
    /// Pipeline worker threads per run; `None` uses every core.
    pub threads: Option<usize>,
    pub team_info: TeamInfoClient,
    /// Pipeline config fields applied before the request's own.
    pub base_config: Map<String, Value>,
    pub on_run_start: Option<RunHook>,
}

impl ServiceConfig {
    /// Stub team lookup with the default fixtures and the mock OCR engine.
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        let mut base_config = Map::new();
        base_config.insert("ocr_method".into(), Value::String("mock".into()));
        ServiceConfig {
            data_dir: data_dir.into(),
            max_concurrent_runs: 1,
            threads: None,
            team_info: TeamInfoClient::with_default_fixtures(),
            base_config,
            on_run_start: None,
        }
    }
}

impl std::fmt::Debug for ServiceConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceConfig")
            .field("data_dir", &self.data_dir)
            .field("max_concurrent_runs", &self.max_concurrent_runs)
            .field("threads", &self.threads)
            .field("team_info", &self.team_info)
            .field("base_config", &self.base_config)
            .finish_non_exhaustive()
    }
}

struct Inner {
    config: ServiceConfig,
    jobs: RwLock<BTreeMap<String, Job>>,
    runs: Arc<Semaphore>,
    changed: Notify,
    frames: Mutex<HashMap<String, Arc<FrameSource>>>,
}

/// Shared service state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// Rebuilds the job table from `data_dir`. Jobs that were queued are
    /// queued again; jobs interrupted while running are marked failed. Must
    /// be called inside a Tokio runtime.
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(config.data_dir.join("jobs"))?;
        let loaded = jobs::load_jobs(&config.data_dir);
        let state = AppState {
            inner: Arc::new(Inner {
                runs: Arc::new(Semaphore::new(config.max_concurrent_runs.max(1))),
                config,
                jobs: RwLock::new(BTreeMap::new()),
                changed: Notify::new(),
                frames: Mutex::new(HashMap::new()),
            }),
        };
        let mut requeue = Vec::new();
        for mut job in loaded {
            if job.state == JobState::Running {
                job.transition(JobState::Failed)?;
                job.error = Some("interrupted by a service restart".into());
                jobs::save_job(&state.inner.config.data_dir, &job)?;
            }
            if job.state == JobState::Queued {
                requeue.push(job.id.clone());
            }
            state.jobs_mut().insert(job.id.clone(), job);
        }
        info!(jobs = state.jobs().len(), requeued = requeue.len(), "job table loaded");
        for id in requeue {
            state.spawn_run(id);
        }
        Ok(state)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    fn jobs(&self) -> std::sync::RwLockReadGuard<'_, BTreeMap<String, Job>> {
        self.inner.jobs.read().expect("job table lock")
    }

    fn jobs_mut(&self) -> std::sync::RwLockWriteGuard<'_, BTreeMap<String, Job>> {
        self.inner.jobs.write().expect("job table lock")
    }

    pub fn job(&self, id: &str) -> Option<Job> {
        self.jobs().get(id).cloned()
    }

    pub fn job_ids(&self) -> Vec<String> {
        self.jobs().keys().cloned().collect()
    }

    /// Applies `f` to a job atomically, persists the result and wakes
    /// waiters.
    fn update(&self, id: &str, f: impl FnOnce(&mut Job) -> Result<(), ServiceError>) -> Result<Job, ServiceError> {
        let snapshot = {
            let mut table = self.jobs_mut();
            let job = table
                .get_mut(id)
                .ok_or_else(|| ServiceError::NotFound(format!("no job `{id}`")))?;
            f(job)?;
            job.clone()
        };
        jobs::save_job(&self.inner.config.data_dir, &snapshot)?;
        self.inner.changed.notify_waiters();
        Ok(snapshot)
    }

    fn insert(&self, job: Job) -> Result<(), ServiceError> {
        jobs::save_job(&self.inner.config.data_dir, &job)?;
        self.jobs_mut().insert(job.id.clone(), job);
        Ok(())
    }

    fn spawn_run(&self, id: String) {
        let state = self.clone();
        tokio::spawn(async move {
            let permit = state.inner.runs.clone().acquire_owned().await.expect("semaphore open");
            let running = state.update(&id, |j| {
                j.transition(JobState::Running)?;
                j.progress = 0.1;
                Ok(())
            });
            let job = match running {
                Ok(job) => job,
                Err(e) => {
                    error!(job = %id, error = %e, "could not start job");
                    return;
                }
            };
            let worker = state.clone();
            let outcome = tokio::task::spawn_blocking(move || {
                if let Some(hook) = &worker.inner.config.on_run_start {
                    hook(&job.id);
                }
                jobs::run_job(&job, &worker.inner.config.data_dir, worker.inner.config.threads)
            })
            .await
            .unwrap_or_else(|e| Err(ServiceError::Internal(format!("worker panicked: {e}"))));
            drop(permit);
            let finished = state.update(&id, |j| {
                match &outcome {
                    Ok(frames) => {
                        j.transition(JobState::Done)?;
                        j.frame_count = Some(*frames);
                        j.result = Some(routes::result_links(&j.id, &state.inner.config.data_dir));
                    }
                    Err(e) => {
                        j.transition(JobState::Failed)?;
                        j.error = Some(e.to_string());
                    }
                }
                j.progress = 1.0;
                Ok(())
            });
            match finished {
                Ok(j) => info!(job = %j.id, state = ?j.state, "job finished"),
                Err(e) => error!(job = %id, error = %e, "could not record job outcome"),
            }
        });
    }

    /// Waits until the job is done or failed, up to `timeout`.
    pub async fn wait_for(&self, id: &str, timeout: Duration) -> Option<Job> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let notified = self.inner.changed.notified();
            tokio::pin!(notified);
            notified.as_mut().enable();
            let job = self.job(id)?;
            if job.state.is_terminal() {
                return Some(job);
            }
            if tokio::time::timeout_at(deadline, notified).await.is_err() {
                return self.job(id);
            }
        }
    }

    fn frames_of(&self, job: &Job) -> Result<Arc<FrameSource>, ServiceError> {
        if let Some(f) = self.inner.frames.lock().expect("frame cache lock").get(&job.id) {
            return Ok(f.clone());
        }
        let source = Arc::new(jobs::frame_source(job)?);
        self.inner
            .frames
            .lock()
            .expect("frame cache lock")
            .insert(job.id.clone(), source.clone());
        Ok(source)
    }
}

/// Serves the API on `addr` until the process is interrupted.
pub async fn serve(addr: std::net::SocketAddr, config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

