//! Running a plan against an engine, with early-exit rules.

use serde::{Deserialize, Serialize};

use super::engine::OcrEngine;
use super::plan::{OcrPlan, Paradigm};
use crate::error::Result;
use crate::ingest::Raster;
use crate::model::{FrameIndex, TrackId};

/// A kit-number reading attributed to one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrReading {
    /// One or two decimal digits.
    pub digits: String,
    pub confidence: f64,
    pub frame: FrameIndex,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackletReadings {
    pub track_id: TrackId,
    /// Crops actually sent to the engine.
    pub submissions: usize,
    pub readings: Vec<OcrReading>,
    /// Per-crop engine failures; the plan continues past them.
    pub errors: Vec<String>,
}

fn is_kit_text(s: &str) -> bool {
    (1..=2).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit())
}

/// Runs the engine on one crop, keeping only 1-2 digit readings with a
/// finite confidence, clamped to `[0, 1]`.
pub fn run_ocr(engine: &dyn OcrEngine, crop: &Raster, frame: FrameIndex) -> Result<Vec<OcrReading>> {
    Ok(engine
        .recognize(crop)?
        .into_iter()
        .filter(|r| r.confidence.is_finite())
        .map(|r| (r.text.trim().to_string(), r.confidence))
        .filter(|(t, _)| is_kit_text(t))
        .map(|(digits, c)| OcrReading {
            digits,
            confidence: c.clamp(0.0, 1.0),
            frame,
        })
        .collect())
}

/// Submits plan entries in order.
///
/// A reading at or above `conf_threshold` ends the current zone of a
/// time-zone plan; with `stop_at_detection` it ends the whole plan for every
/// paradigm. `crop` maps a frame to the pixels of this tracklet's box.
pub fn execute_plan(
    plan: &OcrPlan,
    engine: &dyn OcrEngine,
    mut crop: impl FnMut(FrameIndex) -> Result<Raster>,
    stop_at_detection: bool,
    conf_threshold: f64,
) -> TrackletReadings {
    let mut out = TrackletReadings {
        track_id: plan.track_id,
        ..Default::default()
    };
    'zones: for zone in &plan.zones {
        for entry in &zone.entries {
            let readings = crop(entry.frame).and_then(|r| {
                out.submissions += 1;
                run_ocr(engine, &r, entry.frame)
            });
            let readings = match readings {
                Ok(r) => r,
                Err(e) => {
                    out.errors.push(format!("frame {}: {e}", entry.frame));
                    continue;
                }
            };
            let hit = readings.iter().any(|r| r.confidence >= conf_threshold);
            out.readings.extend(readings);
            if hit {
                if stop_at_detection {
                    break 'zones;
                }
                if plan.paradigm == Paradigm::TimeZones {
                    continue 'zones;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocr::engine::RawReading;
    use crate::ocr::plan::{PlanEntry, Zone};
    use std::collections::HashMap;
    use std::sync::Mutex;

    /// Reads a scripted `(text, conf)` per frame, encoded in the crop width.
    struct Scripted {
        script: HashMap<u32, (&'static str, f64)>,
        seen: Mutex<Vec<u32>>,
    }

    impl OcrEngine for Scripted {
        fn id(&self) -> &str {
            "scripted"
        }
        fn recognize(&self, crop: &Raster) -> Result<Vec<RawReading>> {
            self.seen.lock().unwrap().push(crop.width);
            Ok(self
                .script
                .get(&crop.width)
                .map(|&(t, c)| RawReading {
                    text: t.into(),
                    confidence: c,
                })
                .into_iter()
                .collect())
        }
    }

    fn plan(zones: &[&[u32]], paradigm: Paradigm) -> OcrPlan {
        OcrPlan {
            track_id: 1,
            paradigm,
            zones: zones
                .iter()
                .map(|fs| Zone {
                    start: 0,
                    end: 0,
                    entries: fs.iter().map(|&f| PlanEntry { frame: f, score: 0.0 }).collect(),
                })
                .collect(),
        }
    }

    fn run(p: &OcrPlan, script: &[(u32, &'static str, f64)], stop: bool, thr: f64) -> (TrackletReadings, Vec<u32>) {
        let engine = Scripted {
            script: script.iter().map(|&(f, t, c)| (f, (t, c))).collect(),
            seen: Mutex::new(vec![]),
        };
        let r = execute_plan(p, &engine, |f| Ok(Raster::new(f, 1, [0, 0, 0])), stop, thr);
        let seen = engine.seen.into_inner().unwrap();
        (r, seen)
    }

    #[test]
    fn hit_skips_rest_of_zone_only() {
        let p = plan(&[&[1, 2, 3], &[4, 5]], Paradigm::TimeZones);
        let (r, seen) = run(&p, &[(1, "7", 0.9)], false, 0.5);
        assert_eq!(seen, vec![1, 4, 5]);
        assert_eq!(r.submissions, 3);
    }

    #[test]
    fn stop_at_detection_skips_later_zones() {
        let p = plan(&[&[1, 2], &[3], &[4], &[5], &[6]], Paradigm::TimeZones);
        let (_, seen) = run(&p, &[(1, "7", 0.9)], true, 0.5);
        assert_eq!(seen, vec![1]);
    }

    #[test]
    fn no_hit_submits_everything() {
        let p = plan(&[&[1, 2, 3], &[4, 5]], Paradigm::TimeZones);
        let (r, _) = run(&p, &[(1, "7", 0.4), (4, "7", 0.3)], true, 0.5);
        assert_eq!(r.submissions, 5);
        assert_eq!(r.readings.len(), 2);
    }

    #[test]
    fn top_n_continues_after_hit_without_stop() {
        let p = plan(&[&[1, 2, 3]], Paradigm::TopN);
        let (_, seen) = run(&p, &[(1, "7", 0.9)], false, 0.5);
        assert_eq!(seen, vec![1, 2, 3]);
    }

    #[test]
    fn non_digit_text_is_filtered_and_does_not_hit() {
        let p = plan(&[&[1, 2]], Paradigm::TimeZones);
        let (r, seen) = run(&p, &[(1, "AB", 0.99), (2, "123", 0.99)], false, 0.5);
        assert_eq!(seen, vec![1, 2]);
        assert!(r.readings.is_empty());
    }

    #[test]
    fn crop_errors_are_recorded_and_skipped() {
        let p = plan(&[&[1, 2]], Paradigm::TopN);
        let engine = Scripted {
            script: HashMap::new(),
            seen: Mutex::new(vec![]),
        };
        let r = execute_plan(
            &p,
            &engine,
            |f| {
                if f == 1 {
                    Err(crate::Error::OutOfFrame)
                } else {
                    Ok(Raster::new(f, 1, [0; 3]))
                }
            },
            false,
            0.5,
        );
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.submissions, 1);
    }
}
