use std::fs;
use std::path::Path;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pitchid_core::clip::{clip_player, detected_players, export_edl, video_len, DetectedPlayer};
use pitchid_core::identity::OutputDocument;
use pitchid_core::model::load_config;
use pitchid_core::pipeline::clip_stem;
use pitchid_core::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use uuid::Uuid;

use crate::jobs::{self, Job, JobResult, JobState, Teams};
use crate::teaminfo::{game_id_from_playlist, DatasetRef, TeamInfo, SYNTHETIC_GAME_ID};
use crate::{AppState, ServiceError};

type ApiResult<T> = Result<T, ServiceError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/jobs", post(create_job).get(list_jobs))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/output", get(get_output))
        .route("/jobs/{id}/report", get(get_report))
        .route("/jobs/{id}/players", get(list_players))
        .route("/jobs/{id}/clips", post(request_clip))
        .route("/jobs/{id}/frames/{index}", get(get_frame))
        .route("/clips/{id}", get(get_clip))
        .route("/clips/{id}/edl", get(get_clip_edl))
        .route("/clips/{id}/overlay", get(get_clip_overlay))
        .fallback(|| async { ServiceError::NotFound("no such endpoint".into()) })
        .with_state(state)
}

pub(crate) fn result_links(id: &str, data_dir: &Path) -> JobResult {
    let has_report = jobs::out_dir(data_dir, id).join("report.json").is_file();
    JobResult {
        output: format!("/jobs/{id}/output"),
        players: format!("/jobs/{id}/players"),
        report: has_report.then(|| format!("/jobs/{id}/report")),
    }
}

#[derive(Debug, Deserialize)]
struct CreateJob {
    video_ref: String,
    #[serde(default)]
    config: Option<Value>,
}

#[derive(Debug, Serialize)]
struct Created {
    id: String,
    state: JobState,
    links: Links,
}

#[derive(Debug, Serialize)]
struct Links {
    #[serde(rename = "self")]
    this: String,
}

fn bad_request(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::BadRequest(e.to_string())
}

/// Resolves a video reference into a game id and the data to process.
fn resolve_video(state: &AppState, video_ref: &str) -> ApiResult<(String, Teams, DatasetRef)> {
    let client = &state.config().team_info;
    let teams_of = |game_id: &str| -> ApiResult<(Teams, Option<DatasetRef>)> {
        let f = client.lookup(game_id)?;
        Ok((
            Teams {
                home: f.home.clone(),
                away: f.away.clone(),
            },
            f.dataset.clone(),
        ))
    };
    if let Some(rest) = video_ref.strip_prefix("synthetic:") {
        let mut parts = rest.split(':');
        let seed = parts.next().unwrap_or("").parse::<u64>().map_err(|_| {
            bad_request(format!("bad synthetic reference `{video_ref}`; expected synthetic:<seed>[:<frames>]"))
        })?;
        let frames = match parts.next() {
            Some(f) => Some(
                f.parse::<u32>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| bad_request(format!("bad frame count in `{video_ref}`")))?,
            ),
            None => None,
        };
        let (teams, _) = teams_of(SYNTHETIC_GAME_ID)?;
        return Ok((SYNTHETIC_GAME_ID.to_string(), teams, DatasetRef::Synthetic { seed, frames }));
    }
    if video_ref.to_ascii_lowercase().contains(".m3u8") {
        let game_id = game_id_from_playlist(video_ref)
            .ok_or_else(|| ServiceError::Unprocessable(format!("no game id in playlist URL `{video_ref}`")))?;
        let (teams, dataset) = teams_of(&game_id)?;
        let dataset = dataset
            .ok_or_else(|| ServiceError::Unprocessable(format!("no footage registered for game `{game_id}`")))?;
        return Ok((game_id, teams, dataset));
    }
    let dir = Path::new(video_ref);
    if dir.join("tracks.txt").is_file() && dir.join("metadata.json").is_file() {
        let meta: pitchid_core::GameMetadata = serde_json::from_str(&fs::read_to_string(dir.join("metadata.json"))?)
            .map_err(|e| bad_request(format!("{}: {e}", dir.join("metadata.json").display())))?;
        // The dataset's own metadata wins: its databases are keyed by these names.
        let teams = Teams {
            home: TeamInfo {
                name: meta.home_team.clone(),
                color: meta.home_color,
            },
            away: TeamInfo {
                name: meta.away_team.clone(),
                color: meta.away_color,
            },
        };
        return Ok((
            meta.game_id,
            teams,
            DatasetRef::Dir {
                path: dir.to_path_buf(),
            },
        ));
    }
    Err(bad_request(format!(
        "video_ref `{video_ref}` is not a playlist URL, a synthetic:<seed> reference or a dataset directory"
    )))
}

async fn create_job(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let req: CreateJob = serde_json::from_slice(&body).map_err(|e| bad_request(format!("malformed request: {e}")))?;
    let mut merged = state.config().base_config.clone();
    match req.config {
        None | Some(Value::Null) => {}
        Some(Value::Object(fields)) => merged.extend(fields),
        Some(_) => return Err(bad_request("config must be a JSON object")),
    }
    let config = load_config(&Value::Object(merged).to_string()).map_err(bad_request)?;
    let (game_id, teams, dataset) = resolve_video(&state, req.video_ref.trim())?;
    let id = Uuid::new_v4().simple().to_string();
    let job = Job::new(id.clone(), req.video_ref, game_id, teams, dataset, config);
    state.insert(job)?;
    state.spawn_run(id.clone());
    Ok((
        StatusCode::ACCEPTED,
        Json(Created {
            links: Links {
                this: format!("/jobs/{id}"),
            },
            id,
            state: JobState::Queued,
        }),
    ))
}

async fn list_jobs(State(state): State<AppState>) -> Json<Vec<Job>> {
    Json(state.job_ids().iter().filter_map(|id| state.job(id)).collect())
}

fn find(state: &AppState, id: &str) -> ApiResult<Job> {
    state
        .job(id)
        .ok_or_else(|| ServiceError::NotFound(format!("no job `{id}`")))
}

fn finished(state: &AppState, id: &str) -> ApiResult<Job> {
    let job = find(state, id)?;
    match job.state {
        JobState::Done => Ok(job),
        JobState::Failed => Err(ServiceError::Conflict(format!(
            "job `{id}` failed: {}",
            job.error.as_deref().unwrap_or("unknown error")
        ))),
        s => Err(ServiceError::Conflict(format!("job `{id}` is {s:?}, not done").to_lowercase())),
    }
}

async fn get_job(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Job>> {
    find(&state, &id).map(Json)
}

fn json_file(path: &Path) -> ApiResult<Response> {
    let bytes = fs::read(path).map_err(|_| ServiceError::NotFound(format!("{} not found", path.display())))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn get_output(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    finished(&state, &id)?;
    json_file(&jobs::out_dir(&state.config().data_dir, &id).join("output.json"))
}

async fn get_report(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    finished(&state, &id)?;
    json_file(&jobs::out_dir(&state.config().data_dir, &id).join("report.json"))
}

fn load_output(state: &AppState, id: &str) -> ApiResult<OutputDocument> {
    let path = jobs::out_dir(&state.config().data_dir, id).join("output.json");
    OutputDocument::from_json(&fs::read_to_string(path)?).map_err(|e| ServiceError::Internal(e.to_string()))
}

#[derive(Debug, Serialize)]
struct TeamPlayers {
    team: String,
    side: &'static str,
    color: [u8; 3],
    players: Vec<DetectedPlayer>,
}

#[derive(Debug, Serialize)]
struct PlayersResponse {
    job_id: String,
    teams: Vec<TeamPlayers>,
}

async fn list_players(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<PlayersResponse>> {
    let job = finished(&state, &id)?;
    let mut detected = detected_players(&load_output(&state, &id)?);
    let teams = [("home", &job.teams.home), ("away", &job.teams.away)]
        .into_iter()
        .map(|(side, t)| TeamPlayers {
            team: t.name.clone(),
            side,
            color: t.color,
            players: detected.remove(&t.name).unwrap_or_default(),
        })
        .collect();
    Ok(Json(PlayersResponse { job_id: id, teams }))
}

#[derive(Debug, Deserialize)]
struct ClipRequest {
    team: String,
    kit: u32,
}

#[derive(Debug, Serialize)]
struct ClipCreated {
    id: String,
    segments: usize,
    links: ClipLinks,
}

#[derive(Debug, Serialize)]
struct ClipLinks {
    #[serde(rename = "self")]
    this: String,
    edl: String,
    overlay: String,
}

fn clip_files(state: &AppState, job_id: &str, stem: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let dir = jobs::job_dir(&state.config().data_dir, job_id).join("clips");
    (dir.join(format!("{stem}.edl.json")), dir.join(format!("{stem}.overlay.json")))
}

async fn request_clip(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<ClipCreated>)> {
    let req: ClipRequest = serde_json::from_slice(&body).map_err(|e| bad_request(format!("malformed request: {e}")))?;
    let job = finished(&state, &id)?;
    let doc = load_output(&state, &id)?;
    let len = video_len(&doc).max(job.frame_count.unwrap_or(0));
    let timeline = clip_player(&doc, &req.team, req.kit, job.config.clip_gap_tolerance, job.config.clip_pad, len)
        .map_err(|e| match e {
            CoreError::UnknownPlayer { .. } => ServiceError::NotFound(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        })?;
    let stem = clip_stem(&doc, &timeline);
    let (edl_path, overlay_path) = clip_files(&state, &id, &stem);
    let (edl, overlay) = export_edl(&timeline);
    // Same player, same document: the files would be byte-identical.
    if !edl_path.is_file() || !overlay_path.is_file() {
        fs::create_dir_all(edl_path.parent().expect("clip dir"))?;
        fs::write(&overlay_path, serde_json::to_string_pretty(&overlay)? + "\n")?;
        fs::write(&edl_path, serde_json::to_string_pretty(&edl)? + "\n")?;
    }
    let clip_id = format!("{id}.{stem}");
    Ok((
        StatusCode::CREATED,
        Json(ClipCreated {
            segments: edl.segments.len(),
            links: ClipLinks {
                this: format!("/clips/{clip_id}"),
                edl: format!("/clips/{clip_id}/edl"),
                overlay: format!("/clips/{clip_id}/overlay"),
            },
            id: clip_id,
        }),
    ))
}

fn split_clip_id(state: &AppState, clip_id: &str) -> ApiResult<(std::path::PathBuf, std::path::PathBuf)> {
    let not_found = || ServiceError::NotFound(format!("no clip `{clip_id}`"));
    let (job_id, stem) = clip_id.split_once('.').ok_or_else(not_found)?;
    let valid = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if !valid(job_id) || !valid(stem) {
        return Err(not_found());
    }
    let (edl, overlay) = clip_files(state, job_id, stem);
    if edl.is_file() && overlay.is_file() {
        Ok((edl, overlay))
    } else {
        Err(not_found())
    }
}

async fn get_clip(State(state): State<AppState>, UrlPath(clip_id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let (edl, overlay) = split_clip_id(&state, &clip_id)?;
    let read = |p: &Path| -> ApiResult<Value> { Ok(serde_json::from_str(&fs::read_to_string(p)?)?) };
    Ok(Json(serde_json::json!({
        "id": clip_id,
        "job_id": clip_id.split_once('.').map(|(j, _)| j),
        "edl": read(&edl)?,
        "overlay": read(&overlay)?,
    })))
}

async fn get_clip_edl(State(state): State<AppState>, UrlPath(clip_id): UrlPath<String>) -> ApiResult<Response> {
    json_file(&split_clip_id(&state, &clip_id)?.0)
}

async fn get_clip_overlay(State(state): State<AppState>, UrlPath(clip_id): UrlPath<String>) -> ApiResult<Response> {
    json_file(&split_clip_id(&state, &clip_id)?.1)
}

/// One frame as binary PPM.
async fn get_frame(
    State(state): State<AppState>,
    UrlPath((id, index)): UrlPath<(String, u32)>,
) -> ApiResult<Response> {
    let job = find(&state, &id)?;
    let frames = state.frames_of(&job)?;
    let raster = tokio::task::spawn_blocking(move || frames.read_frame(index))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
        .map_err(|e| match e {
            CoreError::FrameOutOfRange { .. } | CoreError::NoFrames => ServiceError::NotFound(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        })?;
    let mut bytes = Vec::with_capacity(raster.data.len() + 20);
    raster.write_ppm(&mut bytes)?;
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], bytes).into_response())
}
