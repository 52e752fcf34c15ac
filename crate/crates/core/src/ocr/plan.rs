//! Which crops of a tracklet are submitted to OCR, and in what order.

use serde::{Deserialize, Serialize};

use super::score::crop_score;
use crate::model::{CropScoreFn, FrameIndex, OcrSelection, PipelineConfig, TrackId, Tracklet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    TopN,
    TimeZones,
    ScoreGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub frame: FrameIndex,
    pub score: f64,
}

/// A half-open frame interval `[start, end)` and its submissions, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub start: FrameIndex,
    pub end: FrameIndex,
    pub entries: Vec<PlanEntry>,
}

impl Zone {
    pub fn contains(&self, frame: FrameIndex) -> bool {
        (self.start..self.end).contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrPlan {
    pub track_id: TrackId,
    pub paradigm: Paradigm,
    pub zones: Vec<Zone>,
}

impl OcrPlan {
    pub fn len(&self) -> usize {
        self.zones.iter().map(|z| z.entries.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> impl Iterator<Item = &PlanEntry> {
        self.zones.iter().flat_map(|z| z.entries.iter())
    }
}

fn scored(t: &Tracklet, f: CropScoreFn, seed: u64) -> Vec<PlanEntry> {
    t.detections
        .iter()
        .map(|d| PlanEntry {
            frame: d.frame,
            score: crop_score(d, f, seed),
        })
        .collect()
}

/// Best first: ascending score, then earlier frame.
fn rank(entries: &mut [PlanEntry]) {
    entries.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.frame.cmp(&b.frame)));
}

fn whole_span(t: &Tracklet, paradigm: Paradigm, entries: Vec<PlanEntry>) -> OcrPlan {
    OcrPlan {
        track_id: t.track_id,
        paradigm,
        zones: vec![Zone {
            start: t.first_frame(),
            end: t.last_frame() + 1,
            entries,
        }],
    }
}

/// Half-open intervals splitting the frames `first..=last` into `zones`
/// parts of equal width, the remainder going to the last one. With fewer
/// frames than zones the leading intervals are empty.
pub fn zone_bounds(first: FrameIndex, last: FrameIndex, zones: usize) -> Vec<(FrameIndex, FrameIndex)> {
    let width = (last - first + 1) / zones as u32;
    (0..zones as u32)
        .map(|i| {
            let start = first + i * width;
            let end = if i + 1 == zones as u32 { last + 1 } else { start + width };
            (start, end)
        })
        .collect()
}

pub fn split_time_zones(
    t: &Tracklet,
    zones: usize,
    per_zone: usize,
    f: CropScoreFn,
    seed: u64,
) -> OcrPlan {
    assert!(zones >= 1, "zones must be >= 1");
    if t.detections.is_empty() {
        return OcrPlan {
            track_id: t.track_id,
            paradigm: Paradigm::TimeZones,
            zones: Vec::new(),
        };
    }
    let (first, last) = (t.first_frame(), t.last_frame());
    let width = (last - first + 1) / zones as u32;
    let mut buckets: Vec<Vec<PlanEntry>> = vec![Vec::new(); zones];
    for e in scored(t, f, seed) {
        let i = if width == 0 {
            zones - 1
        } else {
            (((e.frame - first) / width) as usize).min(zones - 1)
        };
        buckets[i].push(e);
    }
    let zones = zone_bounds(first, last, zones)
        .into_iter()
        .zip(buckets)
        .map(|((start, end), mut entries)| {
            rank(&mut entries);
            entries.truncate(per_zone);
            Zone { start, end, entries }
        })
        .collect();
    OcrPlan {
        track_id: t.track_id,
        paradigm: Paradigm::TimeZones,
        zones,
    }
}

pub fn select_top_n(t: &Tracklet, n: usize, f: CropScoreFn, seed: u64) -> OcrPlan {
    let mut entries = scored(t, f, seed);
    rank(&mut entries);
    entries.truncate(n);
    whole_span(t, Paradigm::TopN, entries)
}

/// Every crop scoring at most `max_score`, best first.
pub fn score_gate(t: &Tracklet, max_score: f64, f: CropScoreFn, seed: u64) -> OcrPlan {
    let mut entries: Vec<_> = scored(t, f, seed)
        .into_iter()
        .filter(|e| e.score <= max_score)
        .collect();
    rank(&mut entries);
    whole_span(t, Paradigm::ScoreGate, entries)
}

/// Plan for a tracklet under the configured paradigm, considering only
/// detections at or above the detector confidence threshold.
pub fn plan_for(t: &Tracklet, config: &PipelineConfig) -> OcrPlan {
    let eligible = Tracklet {
        track_id: t.track_id,
        detections: t
            .detections
            .iter()
            .filter(|d| d.conf >= config.det_conf_threshold)
            .cloned()
            .collect(),
        team_assignment: None,
        kit_candidates: Vec::new(),
    };
    let (f, seed) = (config.crop_score_fn, config.rng_seed);
    match config.ocr_selection {
        OcrSelection::TopN { n } => select_top_n(&eligible, n, f, seed),
        OcrSelection::TimeZones { zones, per_zone } => {
            split_time_zones(&eligible, zones, per_zone, f, seed)
        }
        OcrSelection::ScoreGate { max_score } => score_gate(&eligible, max_score, f, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, Detection};

    fn tracklet(frames: impl IntoIterator<Item = (u32, f64)>) -> Tracklet {
        Tracklet {
            track_id: 4,
            detections: frames
                .into_iter()
                .map(|(frame, brisque)| Detection {
                    frame,
                    track_id: 4,
                    bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
                    conf: 0.9,
                    avg_rgb: None,
                    brisque,
                    iou_sum: 0.0,
                    team_id: None,
                    kit_number: None,
                })
                .collect(),
            team_assignment: None,
            kit_candidates: vec![],
        }
    }

    #[test]
    fn equal_zone_split() {
        // [1,20], [21,40], [41,60], [61,80], [81,100]
        assert_eq!(
            zone_bounds(1, 100, 5),
            vec![(1, 21), (21, 41), (41, 61), (61, 81), (81, 101)]
        );
        assert_eq!(zone_bounds(0, 10, 3), vec![(0, 3), (3, 6), (6, 11)]);
        assert_eq!(zone_bounds(5, 7, 5), vec![(5, 5), (5, 5), (5, 5), (5, 5), (5, 8)]);
    }

    #[test]
    fn zones_of_a_long_tracklet() {
        let t = tracklet((1..=100).map(|f| (f, f as f64)));
        let plan = split_time_zones(&t, 5, 10, CropScoreFn::IouScore, 0);
        assert_eq!(plan.zones.len(), 5);
        for z in &plan.zones {
            assert_eq!(z.entries.len(), 10);
            assert!(z.entries.iter().all(|e| z.contains(e.frame)));
            // Best first within the zone.
            assert_eq!(z.entries[0].frame, z.start);
        }
    }

    #[test]
    fn fewer_detections_than_zones() {
        let t = tracklet([(5, 1.0), (6, 2.0), (7, 3.0)]);
        let plan = split_time_zones(&t, 5, 10, CropScoreFn::IouScore, 0);
        assert_eq!(plan.len(), 3);
        assert!(plan.zones.iter().filter(|z| z.entries.is_empty()).count() >= 2);
    }

    #[test]
    fn per_zone_keeps_lowest_scores() {
        let t = tracklet((0..30).map(|f| (f, ((f * 7) % 30) as f64)));
        let plan = split_time_zones(&t, 1, 10, CropScoreFn::IouScore, 0);
        let scores: Vec<f64> = plan.entries().map(|e| e.score).collect();
        assert_eq!(scores, (0..10).map(|s| s as f64).collect::<Vec<_>>());
    }

    #[test]
    fn top_n_orders_and_truncates() {
        let t = tracklet([(0, 3.0), (1, 1.0), (2, 2.0)]);
        let plan = select_top_n(&t, 2, CropScoreFn::IouScore, 0);
        assert_eq!(plan.entries().map(|e| e.frame).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(select_top_n(&t, 20, CropScoreFn::IouScore, 0).len(), 3);
    }

    #[test]
    fn ties_break_by_earlier_frame() {
        let t = tracklet([(9, 1.0), (3, 1.0), (5, 1.0)]);
        let mut t = t;
        t.detections.sort_by_key(|d| d.frame);
        let plan = select_top_n(&t, 3, CropScoreFn::IouScore, 0);
        assert_eq!(plan.entries().map(|e| e.frame).collect::<Vec<_>>(), vec![3, 5, 9]);
    }

    #[test]
    fn gate_filters_by_score() {
        let t = tracklet([(0, 30.0), (1, 10.0), (2, 20.0)]);
        let plan = score_gate(&t, 20.0, CropScoreFn::IouScore, 0);
        assert_eq!(plan.entries().map(|e| e.frame).collect::<Vec<_>>(), vec![1, 2]);
    }
}
