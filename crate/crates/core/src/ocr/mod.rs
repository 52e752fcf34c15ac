//! Kit-number recognition: crop scoring, submission planning, engines and
//! candidate aggregation.

pub mod aggregate;
pub mod engine;
pub mod execute;
pub mod mock;
pub mod plan;
pub mod score;

use rayon::prelude::*;

pub use aggregate::aggregate_kit_candidates;
pub use engine::{CommandOcr, MockOcr, OcrEngine, OcrRegistry, RawReading};
pub use execute::{execute_plan, run_ocr, OcrReading, TrackletReadings};
pub use plan::{plan_for, score_gate, select_top_n, split_time_zones, OcrPlan, Paradigm, PlanEntry, Zone};
pub use score::{base_score, crop_score};

use crate::error::{Error, Result};
use crate::ingest::{FrameSource, Rect};
use crate::model::{PipelineConfig, Tracklet};

/// Plans and runs OCR for every tracklet, in parallel across tracklets, and
/// stores the ranked candidates on each tracklet. Output is in tracklet order.
pub fn recognize_tracklets(
    tracklets: &mut [Tracklet],
    frames: &FrameSource,
    engine: &dyn OcrEngine,
    config: &PipelineConfig,
) -> Vec<TrackletReadings> {
    let (width, height) = frames.dimensions().unwrap_or((0, 0));
    let results: Vec<TrackletReadings> = tracklets
        .par_iter()
        .map(|t| {
            let plan = plan_for(t, config);
            let crop = |frame| -> Result<_> {
                let d = t
                    .detections
                    .binary_search_by_key(&frame, |d| d.frame)
                    .map(|i| &t.detections[i])
                    .expect("plan frames come from the tracklet");
                let rect: Rect =
                    Rect::from_bbox(&d.bbox, width, height).ok_or(Error::OutOfFrame)?;
                frames.read_region(frame, rect)
            };
            execute_plan(
                &plan,
                engine,
                crop,
                config.stop_at_detection,
                config.ocr_conf_threshold,
            )
        })
        .collect();
    for (t, r) in tracklets.iter_mut().zip(&results) {
        t.kit_candidates = aggregate_kit_candidates(&r.readings);
    }
    results
}

/// Candidates from kit numbers already present in the tracker records, used
/// when no frames are available: one full-confidence reading per record.
pub fn candidates_from_records(tracklets: &mut [Tracklet]) {
    for t in tracklets {
        let readings: Vec<OcrReading> = t
            .detections
            .iter()
            .filter_map(|d| {
                d.kit_number.map(|k| OcrReading {
                    digits: k.to_string(),
                    confidence: 1.0,
                    frame: d.frame,
                })
            })
            .collect();
        t.kit_candidates = aggregate_kit_candidates(&readings);
    }
}
