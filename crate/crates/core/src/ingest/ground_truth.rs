//! Annotated tracklet identities, one per line:
//!
//! ```text
//! <track_id> <team_name> <kit_number|-1>
//! ```
//!
//! `-1` marks a tracklet whose kit number is never visible; such tracklets
//! count for team accuracy but not for the OCR metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{tokens, Detection, KitNumber, TrackId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtEntry {
    pub team: String,
    pub kit: Option<KitNumber>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub entries: BTreeMap<TrackId, GtEntry>,
}

impl GroundTruth {
    pub fn get(&self, track_id: TrackId) -> Option<&GtEntry> {
        self.entries.get(&track_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Track ids annotated here but absent from the tracker output.
    pub fn missing_tracks(&self, detections: &[Detection]) -> Vec<TrackId> {
        let present: BTreeSet<TrackId> = detections.iter().map(|d| d.track_id).collect();
        self.entries
            .keys()
            .filter(|t| !present.contains(t))
            .copied()
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (track, e) in &self.entries {
            s.push_str(&format!(
                "{} {} {}\n",
                track,
                tokens::quote(&e.team),
                e.kit.map_or(-1, |k| k.get() as i32)
            ));
        }
        s
    }
}

pub fn load_ground_truth(text: &str) -> Result<GroundTruth> {
    let mut gt = GroundTruth::default();
    for (line, content) in tokens::content_lines(text) {
        let toks = tokens::split(content).map_err(|m| Error::parse(line, m))?;
        let [track, team, kit] = toks.as_slice() else {
            return Err(Error::parse(
                line,
                "expected `<track_id> <team_name> <kit_number|-1>`",
            ));
        };
        let track: TrackId = track
            .parse()
            .map_err(|_| Error::parse(line, format!("bad track_id `{track}`")))?;
        let kit = match kit.as_str() {
            "-1" => None,
            k => Some(
                KitNumber::parse(k)
                    .ok_or_else(|| Error::parse(line, format!("kit `{k}` not in 1..=99 or -1")))?,
            ),
        };
        if gt
            .entries
            .insert(
                track,
                GtEntry {
                    team: team.clone(),
                    kit,
                },
            )
            .is_some()
        {
            return Err(Error::DuplicateTrack(track));
        }
    }
    Ok(gt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let gt = load_ground_truth("3 TeamA 7\n4 TeamB -1\n5 \"FC Two\" 10\n").unwrap();
        assert_eq!(
            gt.get(3),
            Some(&GtEntry {
                team: "TeamA".into(),
                kit: KitNumber::new(7)
            })
        );
        assert_eq!(gt.get(4).unwrap().kit, None);
        assert_eq!(gt.get(5).unwrap().team, "FC Two");
        assert_eq!(load_ground_truth(&gt.to_text()).unwrap(), gt);
    }

    #[test]
    fn duplicate_track() {
        assert!(matches!(
            load_ground_truth("3 TeamA 7\n3 TeamB 8"),
            Err(Error::DuplicateTrack(3))
        ));
    }

    #[test]
    fn bad_kit() {
        assert!(load_ground_truth("3 TeamA 0").is_err());
        assert!(load_ground_truth("3 TeamA").is_err());
    }
}
