//! The `output.json` document: match metadata plus one record per frame and
//! track with the final team and kit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::resolve::PlayerIdentity;
use crate::error::{Error, Result};
use crate::model::{Detection, FrameIndex, GameMetadata, KitNumber, PlayerDb, TeamSide, TrackId};

/// Decimal places kept for every real in the document.
pub const PRECISION: i32 = 4;

fn round(x: f64) -> f64 {
    let f = 10f64.powi(PRECISION);
    let r = (x * f).round() / f;
    // Normalize -0.0 so output bytes do not depend on the sign of zero.
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterPlayer {
    pub name: String,
    pub shirt_number: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiInfo {
    pub home_team: String,
    pub home_color: [u8; 3],
    pub away_team: String,
    pub away_color: [u8; 3],
    pub home_team_idx: i32,
    pub away_team_idx: i32,
    pub home_team_player: Vec<RosterPlayer>,
    pub away_team_player: Vec<RosterPlayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMetadata {
    pub id: String,
    pub game_id: String,
    pub clip_id: String,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub video_url: String,
    pub api_info: ApiInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub frame: FrameIndex,
    pub track_id: TrackId,
    pub xywh: [f64; 4],
    pub conf: f64,
    pub avg_rgb: Option<[f64; 3]>,
    pub brisque_score: f64,
    pub iou: f64,
    /// Home 0, away 1, unset -1.
    pub team_id: i32,
    /// Unset -1.
    pub kit_number: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub metadata: OutputMetadata,
    pub frame: BTreeMap<FrameIndex, BTreeMap<TrackId, OutputRecord>>,
}

impl OutputDocument {
    /// Canonical serialization: fixed key order, fixed precision, trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn records(&self) -> impl Iterator<Item = &OutputRecord> {
        self.frame.values().flat_map(|m| m.values())
    }

    pub fn record_count(&self) -> usize {
        self.frame.values().map(BTreeMap::len).sum()
    }

    pub fn team_index(&self, team: &str) -> Option<i32> {
        let info = &self.metadata.api_info;
        if team == info.home_team {
            Some(info.home_team_idx)
        } else if team == info.away_team {
            Some(info.away_team_idx)
        } else {
            None
        }
    }

    /// Rostered players of a team as listed in the metadata block.
    pub fn roster(&self, team: &str) -> Option<&[RosterPlayer]> {
        let info = &self.metadata.api_info;
        if team == info.home_team {
            Some(&info.home_team_player)
        } else if team == info.away_team {
            Some(&info.away_team_player)
        } else {
            None
        }
    }
}

fn roster(db: &PlayerDb, team: &str) -> Vec<RosterPlayer> {
    db.roster(team)
        .into_iter()
        .map(|(kit, e)| RosterPlayer {
            name: e.name.clone(),
            shirt_number: kit.get(),
        })
        .collect()
}

pub fn build_metadata(metadata: &GameMetadata, db: &PlayerDb) -> OutputMetadata {
    OutputMetadata {
        id: format!("{}-{}", metadata.game_id, metadata.clip_id),
        game_id: metadata.game_id.clone(),
        clip_id: metadata.clip_id.clone(),
        width: metadata.width,
        height: metadata.height,
        fps: metadata.fps,
        video_url: metadata.video_url.clone(),
        api_info: ApiInfo {
            home_team: metadata.home_team.clone(),
            home_color: metadata.home_color,
            away_team: metadata.away_team.clone(),
            away_color: metadata.away_color,
            home_team_idx: TeamSide::Home.index(),
            away_team_idx: TeamSide::Away.index(),
            home_team_player: roster(db, &metadata.home_team),
            away_team_player: roster(db, &metadata.away_team),
        },
    }
}

/// Builds the document. Every detection yields one record carrying its
/// tracklet's final team and kit; detections without an identity keep -1.
pub fn emit_output(
    metadata: &GameMetadata,
    db: &PlayerDb,
    detections: &[Detection],
    identities: &[PlayerIdentity],
) -> Result<OutputDocument> {
    let by_track: BTreeMap<TrackId, (i32, i32)> = identities
        .iter()
        .map(|i| {
            (
                i.track_id,
                (
                    i.side.map_or(-1, TeamSide::index),
                    i.kit.map_or(-1, |k: KitNumber| k.get() as i32),
                ),
            )
        })
        .collect();
    let mut frame: BTreeMap<FrameIndex, BTreeMap<TrackId, OutputRecord>> = BTreeMap::new();
    for d in detections {
        let (team_id, kit_number) = by_track.get(&d.track_id).copied().unwrap_or((-1, -1));
        let record = OutputRecord {
            frame: d.frame,
            track_id: d.track_id,
            xywh: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h].map(round),
            conf: round(d.conf),
            avg_rgb: d.avg_rgb.map(|c| c.0.map(round)),
            brisque_score: round(d.brisque),
            iou: round(d.iou_sum),
            team_id,
            kit_number,
        };
        if frame
            .entry(d.frame)
            .or_default()
            .insert(d.track_id, record)
            .is_some()
        {
            return Err(Error::DuplicateRecord {
                frame: d.frame,
                track_id: d.track_id,
            });
        }
    }
    Ok(OutputDocument {
        metadata: build_metadata(metadata, db),
        frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, Rgb, RosterEntry};

    fn meta() -> GameMetadata {
        GameMetadata {
            game_id: "77".into(),
            clip_id: "3".into(),
            width: 1280,
            height: 720,
            fps: 25.0,
            video_url: "https://example.invalid/77/playlist.m3u8".into(),
            home_team: "X".into(),
            away_team: "Y".into(),
            home_color: [255, 0, 0],
            away_color: [0, 0, 255],
        }
    }

    fn det(frame: u32, track: u32) -> Detection {
        Detection {
            frame,
            track_id: track,
            bbox: BBox::new(1.0, 2.0, 3.0, 4.0),
            conf: 0.123456,
            avg_rgb: Some(Rgb([1.0, 2.0, 3.0])),
            brisque: 20.0,
            iou_sum: 0.0,
            team_id: None,
            kit_number: None,
        }
    }

    #[test]
    fn minimal_document() {
        let mut db = PlayerDb::default();
        db.insert("X", KitNumber::new(7).unwrap(), RosterEntry { name: "J. Doe".into(), position: "FW".into() })
            .unwrap();
        let doc = emit_output(&meta(), &db, &[det(0, 1)], &[]).unwrap();
        assert_eq!(doc.record_count(), 1);
        let r = &doc.frame[&0][&1];
        assert_eq!((r.team_id, r.kit_number), (-1, -1));
        assert_eq!(r.conf, 0.1235);
        assert_eq!(doc.metadata.id, "77-3");
        assert_eq!(doc.metadata.api_info.home_team_player[0].shirt_number, 7);
        assert_eq!(doc.to_json(), doc.to_json());
        assert_eq!(OutputDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn duplicate_record_rejected() {
        let err = emit_output(&meta(), &PlayerDb::default(), &[det(0, 1), det(0, 1)], &[]);
        assert!(matches!(err, Err(Error::DuplicateRecord { frame: 0, track_id: 1 })));
    }
}
