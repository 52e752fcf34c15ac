//! Domain types shared by every stage, plus parsers for the textual inputs.

mod config;
mod playerdb;
mod records;
mod teamdb;
pub(crate) mod tokens;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{
    load_config, ColorSpace, Clustering, CropScoreFn, OcrMethod, OcrSelection, OffsetType,
    PipelineConfig,
};
pub use playerdb::{parse_player_db, PlayerDb, RosterEntry};
pub use records::{format_detection, format_tracker_output, parse_tracker_output};
pub use teamdb::{parse_team_db, TeamDb, TeamKits};

pub type FrameIndex = u32;
pub type TrackId = u32;

/// Axis-aligned box in frame pixel coordinates, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersection(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            0.0
        } else {
            ix * iy
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection(other);
        if inter == 0.0 {
            return 0.0;
        }
        inter / (self.area() + other.area() - inter)
    }
}

/// Mean color as three reals in `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgb(pub [f64; 3]);

impl Rgb {
    pub fn from_u8(c: [u8; 3]) -> Self {
        Rgb([c[0] as f64, c[1] as f64, c[2] as f64])
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|c| c.is_finite() && (0.0..=255.0).contains(c))
    }
}

/// Kit (shirt) number, always in `1..=99`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct KitNumber(u8);

impl KitNumber {
    pub fn new(n: u32) -> Option<Self> {
        (1..=99).contains(&n).then_some(KitNumber(n as u8))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Parses a decimal kit number, normalizing leading zeros.
    pub fn parse(s: &str) -> Option<Self> {
        if s.is_empty() || s.len() > 3 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        s.parse::<u32>().ok().and_then(KitNumber::new)
    }
}

impl TryFrom<u8> for KitNumber {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        KitNumber::new(v as u32).ok_or_else(|| format!("kit number {v} outside 1..=99"))
    }
}

impl From<KitNumber> for u8 {
    fn from(k: KitNumber) -> u8 {
        k.0
    }
}

impl fmt::Display for KitNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the two teams in a match. Serialized as the record-level index
/// (home = 0, away = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamSide {
    Home,
    Away,
}

impl TeamSide {
    pub fn index(self) -> i32 {
        match self {
            TeamSide::Home => 0,
            TeamSide::Away => 1,
        }
    }

    pub fn from_index(i: i64) -> Option<Self> {
        match i {
            0 => Some(TeamSide::Home),
            1 => Some(TeamSide::Away),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            TeamSide::Home => TeamSide::Away,
            TeamSide::Away => TeamSide::Home,
        }
    }
}

/// One per-frame tracker observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: FrameIndex,
    pub track_id: TrackId,
    pub bbox: BBox,
    /// Detector confidence.
    pub conf: f64,
    pub avg_rgb: Option<Rgb>,
    /// No-reference quality score, lower is better.
    pub brisque: f64,
    /// Summed IoU with every other detection in the same frame.
    pub iou_sum: f64,
    pub team_id: Option<TeamSide>,
    pub kit_number: Option<KitNumber>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamAssignment {
    pub team: String,
    pub side: TeamSide,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KitCandidate {
    pub kit: KitNumber,
    pub confidence: f64,
}

/// Detections sharing a track id, in frame order, plus identification state.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub track_id: TrackId,
    pub detections: Vec<Detection>,
    pub team_assignment: Option<TeamAssignment>,
    /// Ranked by descending confidence.
    pub kit_candidates: Vec<KitCandidate>,
}

impl Tracklet {
    pub fn first_frame(&self) -> FrameIndex {
        self.detections.first().map_or(0, |d| d.frame)
    }

    pub fn last_frame(&self) -> FrameIndex {
        self.detections.last().map_or(0, |d| d.frame)
    }

    pub fn frames(&self) -> Vec<FrameIndex> {
        self.detections.iter().map(|d| d.frame).collect()
    }
}

/// Groups detections into tracklets ordered by track id, each sorted by frame.
///
/// Fails if a `(frame, track_id)` pair occurs twice.
pub fn group_tracklets(detections: &[Detection]) -> Result<Vec<Tracklet>> {
    let mut by_track: std::collections::BTreeMap<TrackId, Vec<Detection>> = Default::default();
    for d in detections {
        by_track.entry(d.track_id).or_default().push(d.clone());
    }
    let mut out = Vec::with_capacity(by_track.len());
    for (track_id, mut dets) in by_track {
        dets.sort_by_key(|d| d.frame);
        if let Some(w) = dets.windows(2).find(|w| w[0].frame == w[1].frame) {
            return Err(Error::DuplicateRecord {
                frame: w[0].frame,
                track_id,
            });
        }
        out.push(Tracklet {
            track_id,
            detections: dets,
            team_assignment: None,
            kit_candidates: Vec::new(),
        });
    }
    Ok(out)
}

/// Match-level metadata: frame geometry and the two teams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMetadata {
    pub game_id: String,
    pub clip_id: String,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    #[serde(default)]
    pub video_url: String,
    pub home_team: String,
    pub away_team: String,
    pub home_color: [u8; 3],
    pub away_color: [u8; 3],
}

impl GameMetadata {
    pub fn validate(&self) -> Result<()> {
        if self.home_team == self.away_team {
            return Err(Error::Config(format!(
                "home and away team are both `{}`",
                self.home_team
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be > 0, got {}", self.fps)));
        }
        Ok(())
    }

    pub fn team_name(&self, side: TeamSide) -> &str {
        match side {
            TeamSide::Home => &self.home_team,
            TeamSide::Away => &self.away_team,
        }
    }

    pub fn side_of(&self, team: &str) -> Option<TeamSide> {
        if team == self.home_team {
            Some(TeamSide::Home)
        } else if team == self.away_team {
            Some(TeamSide::Away)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kit_number_normalizes_leading_zeros() {
        assert_eq!(KitNumber::parse("07"), KitNumber::new(7));
        assert_eq!(KitNumber::parse("0"), None);
        assert_eq!(KitNumber::parse("100"), None);
        assert_eq!(KitNumber::parse("-1"), None);
        assert_eq!(KitNumber::parse("7a"), None);
    }

    #[test]
    fn iou_of_disjoint_and_identical_boxes() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(10.0, 0.0, 10.0, 10.0);
        assert_eq!(a.iou(&b), 0.0);
        assert_eq!(a.iou(&a), 1.0);
        let c = BBox::new(5.0, 0.0, 10.0, 10.0);
        assert!((a.iou(&c) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_rejects_duplicate_frame_track() {
        let d = parse_tracker_output("1 1 0 0 1 1 1.0 [0 0 0] 0 0\n1 1 0 0 1 1 1.0 [0 0 0] 0 0")
            .unwrap();
        assert!(matches!(
            group_tracklets(&d),
            Err(Error::DuplicateRecord {
                frame: 1,
                track_id: 1
            })
        ));
    }

    #[test]
    fn grouping_sorts_by_frame() {
        let d = parse_tracker_output(
            "5 2 0 0 1 1 1.0 [0 0 0] 0 0\n3 2 0 0 1 1 1.0 [0 0 0] 0 0\n4 1 0 0 1 1 1.0 [] 0 0",
        )
        .unwrap();
        let t = group_tracklets(&d).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].track_id, 1);
        assert_eq!(t[1].frames(), vec![3, 5]);
    }
}
