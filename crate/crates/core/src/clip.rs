//! Player clip timelines: frame selection, segment merging and EDL export.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::{Error, Result};
use crate::identity::OutputDocument;
use crate::model::{FrameIndex, KitNumber, TrackId};

/// Inclusive `[start, end]` frame range.
pub type Segment = [FrameIndex; 2];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerRef {
    pub team: String,
    pub kit: KitNumber,
    pub name: Option<String>,
}

impl PlayerRef {
    /// Overlay label, `"<name> #<kit>"` or `"#<kit>"` without a name.
    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => format!("{n} #{}", self.kit),
            None => format!("#{}", self.kit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayEntry {
    pub track_id: TrackId,
    pub xywh: [f64; 4],
    pub label: String,
}

/// Frames where a player appears, with the box to highlight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlayerFrames {
    pub boxes: BTreeMap<FrameIndex, (TrackId, [f64; 4])>,
    /// Frames where more than one record matched the player.
    pub anomalies: Vec<FrameIndex>,
}

/// Every frame whose records carry `(team, kit)`. When several records of
/// one frame match, the largest box wins (lower track id on equal area) and
/// the frame is flagged.
pub fn player_frames(doc: &OutputDocument, team: &str, kit: KitNumber) -> PlayerFrames {
    let mut out = PlayerFrames::default();
    let Some(team_id) = doc.team_index(team) else {
        return out;
    };
    for (&frame, records) in &doc.frame {
        let mut hits = records
            .values()
            .filter(|r| r.team_id == team_id && r.kit_number == kit.get() as i32);
        let Some(first) = hits.next() else {
            continue;
        };
        let mut best = first;
        let mut count = 1;
        for r in hits {
            count += 1;
            if r.xywh[2] * r.xywh[3] > best.xywh[2] * best.xywh[3] {
                best = r;
            }
        }
        if count > 1 {
            out.anomalies.push(frame);
        }
        out.boxes.insert(frame, (best.track_id, best.xywh));
    }
    out
}

fn merge_sorted(segments: impl IntoIterator<Item = Segment>, gap_tolerance: u32) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for s in segments {
        match out.last_mut() {
            // Missing frames between the two runs: s[0] - last[1] - 1.
            Some(last) if s[0] <= last[1].saturating_add(gap_tolerance).saturating_add(1) => {
                last[1] = last[1].max(s[1]);
            }
            _ => out.push(s),
        }
    }
    out
}

/// Merges frames into segments. Runs separated by at most `gap_tolerance`
/// missing frames are joined, each segment is widened by `pad` on both
/// sides and clamped to `[0, video_len - 1]`, and segments brought within
/// tolerance by padding are joined again. Frames at or past `video_len` are
/// ignored; input order does not matter.
pub fn merge_segments(frames: &[FrameIndex], gap_tolerance: u32, pad: u32, video_len: u32) -> Vec<Segment> {
    let mut sorted: Vec<FrameIndex> = frames.iter().copied().filter(|&f| f < video_len).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let runs = merge_sorted(sorted.into_iter().map(|f| [f, f]), gap_tolerance);
    let padded = runs
        .into_iter()
        .map(|[s, e]| [s.saturating_sub(pad), e.saturating_add(pad).min(video_len - 1)]);
    merge_sorted(padded, gap_tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipTimeline {
    pub player: PlayerRef,
    pub fps: f64,
    pub segments: Vec<Segment>,
    pub overlay: BTreeMap<FrameIndex, OverlayEntry>,
    pub anomalies: Vec<FrameIndex>,
}

/// Number of frames of the clip: one past the last frame with records.
pub fn video_len(doc: &OutputDocument) -> u32 {
    doc.frame.keys().next_back().map_or(0, |f| f + 1)
}

/// Timeline of one player. A player that never appears yields an empty
/// timeline (logged, not an error).
pub fn build_timeline(
    doc: &OutputDocument,
    team: &str,
    kit: KitNumber,
    gap_tolerance: u32,
    pad: u32,
    video_len: u32,
) -> ClipTimeline {
    let name = doc
        .roster(team)
        .and_then(|r| r.iter().find(|p| p.shirt_number == kit.get()))
        .map(|p| p.name.clone());
    let player = PlayerRef {
        team: team.to_string(),
        kit,
        name,
    };
    let found = player_frames(doc, team, kit);
    if found.boxes.is_empty() {
        warn!(team, kit = kit.get(), "player never appears in the output");
    }
    if !found.anomalies.is_empty() {
        warn!(team, kit = kit.get(), frames = found.anomalies.len(), "player matched by several tracks in one frame");
    }
    let frames: Vec<FrameIndex> = found.boxes.keys().copied().collect();
    let label = player.label();
    ClipTimeline {
        segments: merge_segments(&frames, gap_tolerance, pad, video_len),
        overlay: found
            .boxes
            .into_iter()
            .map(|(f, (track_id, xywh))| {
                (
                    f,
                    OverlayEntry {
                        track_id,
                        xywh,
                        label: label.clone(),
                    },
                )
            })
            .collect(),
        anomalies: found.anomalies,
        fps: doc.metadata.fps,
        player,
    }
}

/// Timeline of a player that must be on the document's roster. An unknown
/// team or kit yields [`Error::UnknownPlayer`] listing the roster.
pub fn clip_player(
    doc: &OutputDocument,
    team: &str,
    kit: u32,
    gap_tolerance: u32,
    pad: u32,
    video_len: u32,
) -> Result<ClipTimeline> {
    let roster = doc.roster(team);
    let rostered = roster
        .and_then(|r| r.iter().find(|p| p.shirt_number as u32 == kit))
        .and_then(|p| KitNumber::new(p.shirt_number as u32));
    match rostered {
        Some(k) => Ok(build_timeline(doc, team, k, gap_tolerance, pad, video_len)),
        None => {
            let info = &doc.metadata.api_info;
            let listing: Vec<String> = [
                (&info.home_team, &info.home_team_player),
                (&info.away_team, &info.away_team_player),
            ]
            .iter()
            .flat_map(|(t, ps)| ps.iter().map(move |p| format!("{t} #{} {}", p.shirt_number, p.name)))
            .collect();
            Err(Error::UnknownPlayer {
                team: team.to_string(),
                kit,
                roster: listing.join(", "),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedPlayer {
    pub kit: KitNumber,
    pub name: Option<String>,
    /// Distinct tracklets carrying this identity.
    pub tracklets: usize,
    /// Frames in which the player appears.
    pub frames: usize,
}

/// Players with at least one resolved tracklet, per team name. Both teams
/// are always present, possibly with an empty list.
pub fn detected_players(doc: &OutputDocument) -> BTreeMap<String, Vec<DetectedPlayer>> {
    let info = &doc.metadata.api_info;
    let mut out = BTreeMap::new();
    for (team, idx) in [(&info.home_team, info.home_team_idx), (&info.away_team, info.away_team_idx)] {
        let mut by_kit: BTreeMap<i32, (BTreeSet<TrackId>, BTreeSet<FrameIndex>)> = BTreeMap::new();
        for r in doc.records().filter(|r| r.team_id == idx && r.kit_number > 0) {
            let e = by_kit.entry(r.kit_number).or_default();
            e.0.insert(r.track_id);
            e.1.insert(r.frame);
        }
        let players = by_kit
            .into_iter()
            .filter_map(|(k, (tracks, frames))| {
                let kit = KitNumber::new(k as u32)?;
                Some(DetectedPlayer {
                    kit,
                    name: doc
                        .roster(team)
                        .and_then(|r| r.iter().find(|p| p.shirt_number == kit.get()))
                        .map(|p| p.name.clone()),
                    tracklets: tracks.len(),
                    frames: frames.len(),
                })
            })
            .collect();
        out.insert(team.clone(), players);
    }
    out
}

fn seconds(frame: FrameIndex, fps: f64) -> f64 {
    (frame as f64 / fps * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdlSegment {
    pub start_frame: FrameIndex,
    pub end_frame: FrameIndex,
    /// `start_frame / fps`, 3 decimals.
    pub start_seconds: f64,
    /// `end_frame / fps`, 3 decimals.
    pub end_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdlDocument {
    pub version: u32,
    pub player: PlayerRef,
    pub label: String,
    pub fps: f64,
    pub segments: Vec<EdlSegment>,
    pub frame_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlaySidecar {
    pub fps: f64,
    pub frames: BTreeMap<FrameIndex, OverlayEntry>,
}

pub fn export_edl(t: &ClipTimeline) -> (EdlDocument, OverlaySidecar) {
    let segments: Vec<EdlSegment> = t
        .segments
        .iter()
        .map(|&[s, e]| EdlSegment {
            start_frame: s,
            end_frame: e,
            start_seconds: seconds(s, t.fps),
            end_seconds: seconds(e, t.fps),
        })
        .collect();
    let edl = EdlDocument {
        version: 1,
        label: t.player.label(),
        player: t.player.clone(),
        fps: t.fps,
        frame_count: t.segments.iter().map(|[s, e]| (e - s + 1) as u64).sum(),
        segments,
    };
    let overlay = OverlaySidecar {
        fps: t.fps,
        frames: t.overlay.clone(),
    };
    (edl, overlay)
}

fn numbered(dst: &str, i: usize) -> String {
    let file_start = dst.rfind('/').map_or(0, |p| p + 1);
    match dst[file_start..].rfind('.') {
        Some(dot) if dot > 0 => {
            let at = file_start + dot;
            format!("{}_{i:03}{}", &dst[..at], &dst[at..])
        }
        _ => format!("{dst}_{i:03}"),
    }
}

/// One command line per segment from a user template. Placeholders:
/// `{in}` start time and `{out}` exclusive end time (`(end + 1) / fps`) in
/// seconds with 3 decimals, `{src}` the source video, `{dst}` the
/// destination with a `_NNN` segment suffix before its extension.
pub fn render_cut_commands(template: &str, edl: &EdlDocument, src: &str, dst: &str) -> String {
    let mut out = String::new();
    for (i, s) in edl.segments.iter().enumerate() {
        let line = template
            .replace("{in}", &format!("{:.3}", s.start_seconds))
            .replace("{out}", &format!("{:.3}", seconds(s.end_frame + 1, edl.fps)))
            .replace("{src}", src)
            .replace("{dst}", &numbered(dst, i));
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
