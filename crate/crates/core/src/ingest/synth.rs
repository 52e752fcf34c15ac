//! Synthetic match generator used as a ground-truth oracle.
//!
//! Players are kit-colored rectangles carrying their number as a 5x7 glyph,
//! moving on a striped pitch. The generator emits exactly what a tracker
//! front end would hand to the pipeline:
//!
//! - boxes follow a bounded random walk inside one private grid cell per
//!   player, so boxes never overlap except during occlusion episodes, when a
//!   player is moved onto its row neighbour;
//! - `brisque = max(0, 20 + 4 * speed + N(0, 1.5))`, speed in pixels/frame;
//! - `conf ~ U[0.6, 0.99]`;
//! - `iou_sum` is the exact sum of IoUs with the other boxes of the frame,
//!   accumulated in ascending track id order;
//! - `avg_rgb` is the mean of the rendered trim ROI.
//!
//! A player leaving the view and coming back gets a new track id. Lighting
//! noise darkens whole appearances: each tracklet is shaded by
//! `clamp(1 - |N(0, sigma)|, 0.15, 1)`.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::font::{digits_of, ink_at, text_size};
use super::frames::{FrameSource, Raster, Rect};
use super::ground_truth::{GroundTruth, GtEntry};
use crate::color::{mean_color, roi_frame_rect};
use crate::error::{Error, Result};
use crate::model::{
    format_tracker_output, BBox, Detection, GameMetadata, KitNumber, OffsetType, PlayerDb, Rgb,
    RosterEntry, TeamDb, TeamKits, TrackId,
};

const OCCLUSION_BLOCK: u32 = 50;
const ABSENCE_BLOCK: u32 = 75;
const CELL_MARGIN: u32 = 8;
const MIN_SHADE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTeam {
    pub name: String,
    pub kit: [u8; 3],
    /// Kit numbers; the first `players_per_team` take the field.
    pub roster: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub frames: u32,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub field_color: [u8; 3],
    /// Home team first.
    pub teams: [SyntheticTeam; 2],
    pub players_per_team: usize,
    pub player_width: u32,
    pub player_height: u32,
    pub glyph_scale: u32,
    /// Maximum speed of the random walk, pixels per frame.
    pub max_speed: f64,
    /// Chance per player and 50-frame block of an occlusion episode.
    pub occlusion_rate: f64,
    /// Chance per rendered glyph of showing a wrong number.
    pub ocr_noise_rate: f64,
    /// Spread of the per-tracklet darkening.
    pub lighting_noise_sigma: f64,
    /// Chance per frame that a player's number faces the camera.
    pub glyph_visible_rate: f64,
    /// Number of players (in field order) whose number is never visible.
    pub hidden_kit_players: usize,
    /// Chance per player and 75-frame block of being out of view.
    pub absence_rate: f64,
    pub game_id: String,
    pub clip_id: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            frames: 900,
            fps: 25.0,
            width: 1280,
            height: 720,
            field_color: [40, 140, 60],
            teams: [
                SyntheticTeam {
                    name: "Rosso FC".into(),
                    kit: [200, 30, 30],
                    roster: vec![7, 10, 23, 4, 9, 14, 99],
                },
                SyntheticTeam {
                    name: "Blu United".into(),
                    kit: [30, 60, 200],
                    roster: vec![1, 11, 5, 8, 17, 21, 3],
                },
            ],
            players_per_team: 5,
            player_width: 40,
            player_height: 100,
            glyph_scale: 3,
            max_speed: 2.0,
            occlusion_rate: 0.0,
            ocr_noise_rate: 0.0,
            lighting_noise_sigma: 0.0,
            glyph_visible_rate: 1.0,
            hidden_kit_players: 0,
            absence_rate: 0.0,
            game_id: "900001".into(),
            clip_id: "1".into(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synthetic(m));
        if self.frames == 0 {
            return bad("frames must be >= 1".into());
        }
        if !(self.fps > 0.0) {
            return bad("fps must be > 0".into());
        }
        for (name, v) in [
            ("occlusion_rate", self.occlusion_rate),
            ("ocr_noise_rate", self.ocr_noise_rate),
            ("glyph_visible_rate", self.glyph_visible_rate),
            ("absence_rate", self.absence_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if !(self.lighting_noise_sigma >= 0.0) {
            return bad("lighting_noise_sigma must be >= 0".into());
        }
        if self.max_speed < 0.0 {
            return bad("max_speed must be >= 0".into());
        }
        let [a, b] = &self.teams;
        if a.name == b.name {
            return bad("team names must differ".into());
        }
        if a.kit == b.kit || a.kit == self.field_color || b.kit == self.field_color {
            return bad("kit colors must differ from each other and from the field".into());
        }
        for t in &self.teams {
            if t.roster.len() < self.players_per_team {
                return bad(format!(
                    "team {} has {} rostered players, {} needed",
                    t.name,
                    t.roster.len(),
                    self.players_per_team
                ));
            }
            let mut seen = std::collections::BTreeSet::new();
            for &k in &t.roster {
                if KitNumber::new(k as u32).is_none() || !seen.insert(k) {
                    return bad(format!("team {} has invalid or repeated kit {k}", t.name));
                }
            }
        }
        if self.players_per_team == 0 {
            return bad("players_per_team must be >= 1".into());
        }
        let (tw, th) = text_size(2, self.glyph_scale.max(1));
        if self.glyph_scale == 0
            || tw > self.player_width
            || self.player_height / 2 + 4 + th > self.player_height
        {
            return bad("player box too small for its number".into());
        }
        let (cw, ch) = self.cell_size();
        if cw < self.player_width + 2 * CELL_MARGIN || ch < self.player_height + 2 * CELL_MARGIN {
            return bad("frame too small for the requested players".into());
        }
        Ok(())
    }

    fn player_count(&self) -> usize {
        2 * self.players_per_team
    }

    fn grid(&self) -> (u32, u32) {
        let rows = if self.player_count() > 1 { 2 } else { 1 };
        let cols = (self.player_count() as u32).div_ceil(rows);
        (cols, rows)
    }

    fn cell_size(&self) -> (u32, u32) {
        let (cols, rows) = self.grid();
        (self.width / cols, self.height / rows)
    }
}

/// One player box as drawn in one frame.
#[derive(Debug, Clone, PartialEq)]
struct Placed {
    player: usize,
    track_id: TrackId,
    rect: Rect,
    shade: f64,
    /// Number drawn on the back, if visible.
    glyph: Option<u8>,
    speed: f64,
}

/// Everything needed to render any frame region on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    width: u32,
    height: u32,
    field_color: [u8; 3],
    glyph_scale: u32,
    kits: Vec<[u8; 3]>,
    frames: Vec<Vec<Placed>>,
}

fn scaled(c: [u8; 3], g: f64) -> [u8; 3] {
    c.map(|v| (v as f64 * g).round().clamp(0.0, 255.0) as u8)
}

fn glyph_ink_color(kit: [u8; 3]) -> [u8; 3] {
    let luma = 0.299 * kit[0] as f64 + 0.587 * kit[1] as f64 + 0.114 * kit[2] as f64;
    if luma > 128.0 {
        [0, 0, 0]
    } else {
        [255, 255, 255]
    }
}

impl SyntheticScene {
    pub fn frame_count(&self) -> u32 {
        self.frames.len() as u32
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    fn field_at(&self, x: u32) -> [u8; 3] {
        if (x / 80) % 2 == 1 {
            scaled(self.field_color, 0.9)
        } else {
            self.field_color
        }
    }

    /// Renders the pixels of `rect` in frame `index`.
    pub fn render_region(&self, index: u32, rect: Rect) -> Result<Raster> {
        let placed = self.frames.get(index as usize).ok_or(Error::FrameOutOfRange {
            index,
            count: self.frame_count(),
        })?;
        let mut out = Raster::new(rect.w, rect.h, [0, 0, 0]);
        for x in 0..rect.w {
            let c = self.field_at(rect.x + x);
            for y in 0..rect.h {
                out.set_pixel(x, y, c);
            }
        }
        for p in placed {
            let x0 = p.rect.x.max(rect.x);
            let y0 = p.rect.y.max(rect.y);
            let x1 = p.rect.right().min(rect.right());
            let y1 = p.rect.bottom().min(rect.bottom());
            if x0 >= x1 || y0 >= y1 {
                continue;
            }
            let kit = self.kits[p.player];
            let body = scaled(kit, p.shade);
            let ink = scaled(glyph_ink_color(kit), p.shade);
            let digits = p.glyph.map(digits_of);
            let (tw, th) = text_size(digits.as_ref().map_or(0, |d| d.len() as u32), self.glyph_scale);
            let gx = (p.rect.w - tw) / 2;
            let gy = p.rect.h / 2 + 4;
            for y in y0..y1 {
                for x in x0..x1 {
                    let (lx, ly) = (x - p.rect.x, y - p.rect.y);
                    let inked = match &digits {
                        Some(d) if lx >= gx && lx < gx + tw && ly >= gy && ly < gy + th => {
                            ink_at(d, self.glyph_scale, lx - gx, ly - gy)
                        }
                        _ => false,
                    };
                    out.set_pixel(x - rect.x, y - rect.y, if inked { ink } else { body });
                }
            }
        }
        Ok(out)
    }
}

/// A generated match: frames, tracker output, databases and ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticMatch {
    pub spec: SyntheticSpec,
    pub seed: u64,
    pub scene: Arc<SyntheticScene>,
    pub detections: Vec<Detection>,
    pub ground_truth: GroundTruth,
    pub team_db: TeamDb,
    pub player_db: PlayerDb,
    pub metadata: GameMetadata,
}

impl SyntheticMatch {
    pub fn frame_source(&self) -> FrameSource {
        FrameSource::Synthetic(self.scene.clone())
    }

    pub fn tracker_output(&self) -> String {
        format_tracker_output(&self.detections)
    }

    /// Writes the dataset layout consumed by `pitchid run`: `tracks.txt`,
    /// `team_db.txt`, `player_db.txt`, `metadata.json`, `ground_truth.txt`
    /// and, when `with_frames`, one PPM per frame under `frames/`.
    pub fn write_to_dir(&self, dir: &Path, with_frames: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::path(&p, e))
        };
        write("tracks.txt", self.tracker_output())?;
        write("team_db.txt", self.team_db.to_text())?;
        write("player_db.txt", self.player_db.to_text())?;
        write(
            "metadata.json",
            serde_json::to_string_pretty(&self.metadata)? + "\n",
        )?;
        write("ground_truth.txt", self.ground_truth.to_text())?;
        if with_frames {
            self.frame_source().write_dir(&dir.join("frames"))?;
        }
        Ok(())
    }
}

const SURNAMES: [&str; 16] = [
    "Berg", "Dahl", "Eide", "Foss", "Haug", "Lund", "Moen", "Nes", "Ruud", "Sand", "Strand",
    "Vik", "Aas", "Bakke", "Holm", "Lie",
];

fn player_name(team: usize, idx: usize) -> String {
    let initial = (b'A' + ((idx * 7 + team * 3) % 26) as u8) as char;
    format!("{initial}. {}", SURNAMES[(idx + team * 8) % SURNAMES.len()])
}

fn invert(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| 255 - v)
}

fn wrong_number(truth: u8, rng: &mut ChaCha8Rng) -> u8 {
    // Uniform over 1..=99 without `truth`.
    let offset = rng.random_range(1..99u32);
    ((truth as u32 - 1 + offset) % 99 + 1) as u8
}

struct Walker {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    bounds: (f64, f64, f64, f64),
}

impl Walker {
    fn step(&mut self, rng: &mut ChaCha8Rng, accel: &Normal<f64>, max_speed: f64) -> f64 {
        self.vx = (self.vx + accel.sample(rng)).clamp(-max_speed, max_speed);
        self.vy = (self.vy + accel.sample(rng)).clamp(-max_speed, max_speed);
        let (x0, y0, x1, y1) = self.bounds;
        let (ox, oy) = (self.x.round(), self.y.round());
        self.x += self.vx;
        self.y += self.vy;
        if self.x < x0 || self.x > x1 {
            self.vx = -self.vx;
            self.x = self.x.clamp(x0, x1);
        }
        if self.y < y0 || self.y > y1 {
            self.vy = -self.vy;
            self.y = self.y.clamp(y0, y1);
        }
        ((self.x.round() - ox).powi(2) + (self.y.round() - oy).powi(2)).sqrt()
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Generates a match. Deterministic for a fixed `(spec, seed)`.
pub fn generate_synthetic_match(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticMatch> {
    spec.validate()?;
    let n = spec.player_count();
    // Field order alternates teams: home 0, away 0, home 1, ...
    let team_of = |p: usize| p % 2;
    let kit_of = |p: usize| spec.teams[p % 2].roster[p / 2];
    let (cols, _) = spec.grid();
    let (cw, ch) = spec.cell_size();
    let (pw, ph) = (spec.player_width, spec.player_height);

    let mut motion = rng(seed, 1);
    let mut events = rng(seed, 2);
    let mut glyphs = rng(seed, 3);
    let mut emission = rng(seed, 4);
    let accel = Normal::new(0.0, 0.5).expect("valid normal");
    let shade_dist = Normal::new(0.0, spec.lighting_noise_sigma.max(f64::MIN_POSITIVE))
        .expect("valid normal");
    let brisque_noise = Normal::new(0.0, 1.5).expect("valid normal");

    let mut walkers: Vec<Walker> = (0..n)
        .map(|p| {
            let cx = (p as u32 % cols) * cw;
            let cy = (p as u32 / cols) * ch;
            let x0 = (cx + CELL_MARGIN) as f64;
            let y0 = (cy + CELL_MARGIN) as f64;
            let x1 = (cx + cw - pw - CELL_MARGIN) as f64;
            let y1 = (cy + ch - ph - CELL_MARGIN) as f64;
            Walker {
                x: motion.random_range(x0..=x1),
                y: motion.random_range(y0..=y1),
                vx: 0.0,
                vy: 0.0,
                bounds: (x0, y0, x1, y1),
            }
        })
        .collect();

    let absence_blocks = spec.frames.div_ceil(ABSENCE_BLOCK) as usize;
    let absent: Vec<Vec<bool>> = (0..n)
        .map(|_| {
            (0..absence_blocks)
                .map(|_| events.random::<f64>() < spec.absence_rate)
                .collect()
        })
        .collect();
    let occlusion_blocks = spec.frames.div_ceil(OCCLUSION_BLOCK) as usize;
    let occluding: Vec<Vec<bool>> = (0..n)
        .map(|_| {
            (0..occlusion_blocks)
                .map(|_| events.random::<f64>() < spec.occlusion_rate)
                .collect()
        })
        .collect();
    // Right-hand neighbour in the same grid row.
    let neighbour = |p: usize| {
        let q = p + 1;
        (q < n && q as u32 / cols == p as u32 / cols).then_some(q)
    };

    let mut next_track: TrackId = 1;
    let mut current: Vec<Option<(TrackId, f64)>> = vec![None; n];
    let mut gt = GroundTruth::default();
    let mut frames = Vec::with_capacity(spec.frames as usize);
    for f in 0..spec.frames {
        let speeds: Vec<f64> = walkers
            .iter_mut()
            .map(|w| w.step(&mut motion, &accel, spec.max_speed))
            .collect();
        let mut placed = Vec::new();
        for p in 0..n {
            if absent[p][(f / ABSENCE_BLOCK) as usize] {
                current[p] = None;
                continue;
            }
            let (track_id, shade) = match current[p] {
                Some(t) => t,
                None => {
                    let id = next_track;
                    next_track += 1;
                    let shade = if spec.lighting_noise_sigma > 0.0 {
                        (1.0 - shade_dist.sample(&mut emission).abs()).clamp(MIN_SHADE, 1.0)
                    } else {
                        1.0
                    };
                    let hidden = p < spec.hidden_kit_players;
                    gt.entries.insert(
                        id,
                        GtEntry {
                            team: spec.teams[team_of(p)].name.clone(),
                            kit: if hidden {
                                None
                            } else {
                                KitNumber::new(kit_of(p) as u32)
                            },
                        },
                    );
                    current[p] = Some((id, shade));
                    (id, shade)
                }
            };
            let (mut x, mut y) = (walkers[p].x.round(), walkers[p].y.round());
            if occluding[p][(f / OCCLUSION_BLOCK) as usize] {
                if let Some(q) = neighbour(p) {
                    x = walkers[q].x.round() - (pw / 2) as f64;
                    y = walkers[q].y.round();
                }
            }
            let glyph = if p < spec.hidden_kit_players
                || glyphs.random::<f64>() >= spec.glyph_visible_rate
            {
                None
            } else if glyphs.random::<f64>() < spec.ocr_noise_rate {
                Some(wrong_number(kit_of(p), &mut glyphs))
            } else {
                Some(kit_of(p))
            };
            placed.push(Placed {
                player: p,
                track_id,
                rect: Rect::new(x as u32, y as u32, pw, ph),
                shade,
                glyph,
                speed: speeds[p],
            });
        }
        frames.push(placed);
    }

    let scene = Arc::new(SyntheticScene {
        width: spec.width,
        height: spec.height,
        field_color: spec.field_color,
        glyph_scale: spec.glyph_scale,
        kits: (0..n).map(|p| spec.teams[team_of(p)].kit).collect(),
        frames,
    });

    let mut detections = Vec::new();
    for (f, placed) in scene.frames.iter().enumerate() {
        let mut order: Vec<&Placed> = placed.iter().collect();
        order.sort_by_key(|p| p.track_id);
        let boxes: Vec<BBox> = order
            .iter()
            .map(|p| BBox::new(p.rect.x as f64, p.rect.y as f64, pw as f64, ph as f64))
            .collect();
        for (i, p) in order.iter().enumerate() {
            let bbox = boxes[i];
            let iou_sum: f64 = boxes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| bbox.iou(b))
                .sum();
            let roi = roi_frame_rect(&bbox, OffsetType::Trim, spec.width, spec.height)
                .ok_or(Error::OutOfFrame)?;
            let avg = mean_color(&scene.render_region(f as u32, roi)?);
            let conf = emission.random_range(0.6..0.99);
            let brisque = (20.0 + 4.0 * p.speed + brisque_noise.sample(&mut emission)).max(0.0);
            detections.push(Detection {
                frame: f as u32,
                track_id: p.track_id,
                bbox,
                conf,
                avg_rgb: Some(avg),
                brisque,
                iou_sum,
                team_id: None,
                kit_number: None,
            });
        }
    }

    let mut team_db = TeamDb::default();
    team_db.insert(
        spec.teams[0].name.clone(),
        TeamKits {
            home: spec.teams[0].kit,
            away: invert(spec.teams[0].kit),
        },
    )?;
    team_db.insert(
        spec.teams[1].name.clone(),
        TeamKits {
            home: invert(spec.teams[1].kit),
            away: spec.teams[1].kit,
        },
    )?;
    let mut player_db = PlayerDb::default();
    for (t, team) in spec.teams.iter().enumerate() {
        for (i, &k) in team.roster.iter().enumerate() {
            let position = match i % 4 {
                0 => "FW",
                1 => "MF",
                2 => "DF",
                _ => "GK",
            };
            player_db.insert(
                &team.name,
                KitNumber::new(k as u32).expect("validated"),
                RosterEntry {
                    name: player_name(t, i),
                    position: position.into(),
                },
            )?;
        }
    }
    let metadata = GameMetadata {
        game_id: spec.game_id.clone(),
        clip_id: spec.clip_id.clone(),
        width: spec.width,
        height: spec.height,
        fps: spec.fps,
        video_url: format!("synthetic:{seed}"),
        home_team: spec.teams[0].name.clone(),
        away_team: spec.teams[1].name.clone(),
        home_color: spec.teams[0].kit,
        away_color: spec.teams[1].kit,
    };

    Ok(SyntheticMatch {
        spec: spec.clone(),
        seed,
        scene,
        detections,
        ground_truth: gt,
        team_db,
        player_db,
        metadata,
    })
}

/// Mean color a player's kit renders at under the given shade.
pub fn shaded_kit(kit: [u8; 3], shade: f64) -> Rgb {
    Rgb::from_u8(scaled(kit, shade))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            frames: 60,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic_match(&small(), 5).unwrap();
        let b = generate_synthetic_match(&small(), 5).unwrap();
        assert_eq!(a.tracker_output(), b.tracker_output());
        assert_eq!(a.scene, b.scene);
        let c = generate_synthetic_match(&small(), 6).unwrap();
        assert_ne!(a.tracker_output(), c.tracker_output());
    }

    #[test]
    fn clean_match_has_no_overlap_and_exact_colors() {
        let m = generate_synthetic_match(&small(), 0).unwrap();
        assert_eq!(m.detections.len(), 600);
        assert!(m.detections.iter().all(|d| d.iou_sum == 0.0));
        for d in &m.detections {
            let gt = m.ground_truth.get(d.track_id).unwrap();
            let kit = m.spec.teams.iter().find(|t| t.name == gt.team).unwrap().kit;
            assert_eq!(d.avg_rgb.unwrap(), Rgb::from_u8(kit));
        }
    }

    #[test]
    fn short_roster_is_rejected() {
        let mut spec = small();
        spec.teams[1].roster.truncate(3);
        assert!(matches!(
            generate_synthetic_match(&spec, 0),
            Err(Error::Synthetic(m)) if m.contains("Blu United")
        ));
    }

    #[test]
    fn absence_creates_new_tracks() {
        let spec = SyntheticSpec {
            frames: 300,
            absence_rate: 0.5,
            ..Default::default()
        };
        let m = generate_synthetic_match(&spec, 1).unwrap();
        assert!(m.ground_truth.len() > 10);
        assert!(m.ground_truth.missing_tracks(&m.detections).is_empty());
    }

    #[test]
    fn occlusion_produces_overlap() {
        let spec = SyntheticSpec {
            frames: 200,
            occlusion_rate: 0.5,
            ..Default::default()
        };
        let m = generate_synthetic_match(&spec, 2).unwrap();
        assert!(m.detections.iter().any(|d| d.iou_sum > 0.0));
    }

    #[test]
    fn render_out_of_range() {
        let m = generate_synthetic_match(&small(), 0).unwrap();
        assert!(matches!(
            m.frame_source().read_frame(60),
            Err(Error::FrameOutOfRange { index: 60, count: 60 })
        ));
        assert_eq!(m.frame_source().read_frame(0).unwrap().width, 1280);
    }
}
