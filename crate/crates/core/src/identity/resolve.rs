//! Roster lookup and team-versus-kit collision arbitration.

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::model::{
    FrameIndex, GameMetadata, KitCandidate, KitNumber, PlayerDb, TeamSide, TrackId, Tracklet,
};

/// Final identity of one tracklet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerIdentity {
    pub track_id: TrackId,
    pub team: Option<String>,
    pub side: Option<TeamSide>,
    pub team_conf: f64,
    pub kit: Option<KitNumber>,
    pub kit_conf: f64,
    pub player_name: Option<String>,
    pub position: Option<String>,
    /// Team flipped because the kit reading was the stronger evidence.
    pub team_overridden: bool,
    /// Kit replaced by a weaker candidate or unset.
    pub kit_dropped: bool,
    /// OCR candidates, best first.
    pub candidates: Vec<KitCandidate>,
    /// Index of `kit` in `candidates`.
    pub candidate_rank: Option<usize>,
    pub first_frame: FrameIndex,
    pub last_frame: FrameIndex,
    pub frame_count: usize,
    #[serde(skip)]
    pub frames: Vec<FrameIndex>,
}

impl PlayerIdentity {
    /// Confidence used to pick which of two colliding tracklets yields: the
    /// weaker of the two pieces of evidence behind the `(team, kit)` claim.
    pub fn combined_conf(&self) -> f64 {
        self.team_conf.min(self.kit_conf)
    }

    /// Whether the two tracklets share at least one frame.
    pub fn overlaps(&self, other: &PlayerIdentity) -> bool {
        if self.last_frame < other.first_frame || other.last_frame < self.first_frame {
            return false;
        }
        let (mut i, mut j) = (0, 0);
        while i < self.frames.len() && j < other.frames.len() {
            match self.frames[i].cmp(&other.frames[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    fn set_kit(&mut self, rank: Option<usize>, db: &PlayerDb) {
        self.candidate_rank = rank;
        match rank {
            Some(r) => {
                let c = self.candidates[r];
                self.kit = Some(c.kit);
                self.kit_conf = c.confidence;
            }
            None => {
                self.kit = None;
                self.kit_conf = 0.0;
            }
        }
        self.lookup(db);
    }

    fn lookup(&mut self, db: &PlayerDb) {
        let entry = match (&self.team, self.kit) {
            (Some(team), Some(kit)) => db.get(team, kit),
            _ => None,
        };
        self.player_name = entry.map(|e| e.name.clone());
        self.position = entry.map(|e| e.position.clone());
    }

    /// First rostered candidate for the current team ranked after `after`.
    fn next_rostered(&self, after: Option<usize>, db: &PlayerDb) -> Option<usize> {
        let team = self.team.as_deref()?;
        let start = after.map_or(0, |r| r + 1);
        (start..self.candidates.len()).find(|&r| db.contains(team, self.candidates[r].kit))
    }
}

/// Looks the tracklet's best rostered kit candidate up in its team's roster.
/// Candidates missing from the roster are skipped; if none is rostered the
/// kit stays unset and `kit_dropped` is raised.
pub fn resolve_player(t: &Tracklet, db: &PlayerDb) -> PlayerIdentity {
    let frames = t.frames();
    let mut id = PlayerIdentity {
        track_id: t.track_id,
        team: t.team_assignment.as_ref().map(|a| a.team.clone()),
        side: t.team_assignment.as_ref().map(|a| a.side),
        team_conf: t.team_assignment.as_ref().map_or(0.0, |a| a.confidence),
        kit: None,
        kit_conf: 0.0,
        player_name: None,
        position: None,
        team_overridden: false,
        kit_dropped: false,
        candidates: t.kit_candidates.clone(),
        candidate_rank: None,
        first_frame: t.first_frame(),
        last_frame: t.last_frame(),
        frame_count: frames.len(),
        frames,
    };
    let rank = id.next_rostered(None, db);
    id.kit_dropped = rank.is_none() && id.team.is_some() && !id.candidates.is_empty();
    id.set_kit(rank, db);
    id
}

fn find_collision(ids: &[PlayerIdentity]) -> Option<(usize, usize)> {
    for i in 0..ids.len() {
        let (Some(side), Some(kit)) = (ids[i].side, ids[i].kit) else {
            continue;
        };
        for j in i + 1..ids.len() {
            if ids[j].side == Some(side) && ids[j].kit == Some(kit) && ids[i].overlaps(&ids[j]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Revises co-occurring tracklets that resolved to the same team and kit
/// until none remain.
///
/// Of each colliding pair the one with the lower combined confidence yields
/// (the higher track id on a tie). It switches to the other team when its
/// kit confidence exceeds its team confidence, the kit is rostered for the
/// other team, no identity of the other team carries that kit, and it has
/// not switched before. Otherwise it falls back to its next rostered
/// candidate, or to no kit.
pub fn resolve_collisions(
    mut ids: Vec<PlayerIdentity>,
    metadata: &GameMetadata,
    db: &PlayerDb,
) -> Vec<PlayerIdentity> {
    ids.sort_by_key(|i| i.track_id);
    // Every revision either flips a team once or advances a candidate rank.
    let bound: usize = ids.iter().map(|i| i.candidates.len() + 2).sum();
    for _ in 0..=bound {
        let Some((a, b)) = find_collision(&ids) else {
            return ids;
        };
        let loser = if ids[a].combined_conf() < ids[b].combined_conf() { a } else { b };
        let side = ids[loser].side.expect("collision implies a team");
        let kit = ids[loser].kit.expect("collision implies a kit");
        let other = side.other();
        let other_name = metadata.team_name(other).to_string();
        let kit_free = !ids.iter().any(|x| x.side == Some(other) && x.kit == Some(kit));
        let l = &mut ids[loser];
        if l.kit_conf > l.team_conf && !l.team_overridden && kit_free && db.contains(&other_name, kit) {
            debug!(track_id = l.track_id, kit = kit.get(), "team overridden by kit evidence");
            l.side = Some(other);
            l.team = Some(other_name);
            l.team_overridden = true;
            l.lookup(db);
        } else {
            debug!(track_id = l.track_id, kit = kit.get(), "kit yields to a stronger tracklet");
            let next = l.next_rostered(l.candidate_rank, db);
            l.kit_dropped = true;
            l.set_kit(next, db);
        }
    }
    unreachable!("collision resolution exceeded its revision bound")
}

/// Resolves every tracklet, then arbitrates collisions.
pub fn resolve_identities(
    tracklets: &[Tracklet],
    metadata: &GameMetadata,
    db: &PlayerDb,
) -> Vec<PlayerIdentity> {
    let ids = tracklets.iter().map(|t| resolve_player(t, db)).collect();
    resolve_collisions(ids, metadata, db)
}
