//! Sample base: colors of low-overlap detections in the active color space.

use serde::{Deserialize, Serialize};

use super::space::to_color_space;
use crate::error::{Error, Result};
use crate::model::{ColorSpace, Detection, FrameIndex, PipelineConfig, Rgb, TrackId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorSample {
    pub track_id: TrackId,
    pub frame: FrameIndex,
    /// Transformed and normalized color.
    pub vector: [f64; 3],
}

/// Per-component affine map `v -> (v - offset) * factor` fitted on the
/// sample base, so points outside the base and the reference kit color
/// transform identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub offset: [f64; 3],
    pub factor: [f64; 3],
}

impl Normalizer {
    pub const IDENTITY: Normalizer = Normalizer {
        offset: [0.0; 3],
        factor: [1.0; 3],
    };

    /// `normalize` is min-max to `[0, 1]`; `scale` is a z-score. With both,
    /// min-max is applied first. Constant components keep a unit factor.
    pub fn fit(vectors: &[[f64; 3]], normalize: bool, scale: bool) -> Normalizer {
        let mut n = Normalizer::IDENTITY;
        if vectors.is_empty() {
            return n;
        }
        if normalize {
            for c in 0..3 {
                let (lo, hi) = vectors
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v[c]), hi.max(v[c]))
                    });
                n.offset[c] = lo;
                n.factor[c] = if hi > lo { 1.0 / (hi - lo) } else { 1.0 };
            }
        }
        if scale {
            let count = vectors.len() as f64;
            for c in 0..3 {
                let vals: Vec<f64> = vectors
                    .iter()
                    .map(|v| (v[c] - n.offset[c]) * n.factor[c])
                    .collect();
                let mean = vals.iter().sum::<f64>() / count;
                let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
                let sd = var.sqrt();
                // Compose: ((v - o) * f - mean) / sd = (v - (o + mean / f)) * (f / sd)
                n.offset[c] += mean / n.factor[c];
                if sd > 0.0 {
                    n.factor[c] /= sd;
                }
            }
        }
        n
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        [
            (v[0] - self.offset[0]) * self.factor[0],
            (v[1] - self.offset[1]) * self.factor[1],
            (v[2] - self.offset[2]) * self.factor[2],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBase {
    pub samples: Vec<ColorSample>,
    pub normalizer: Normalizer,
    pub color_space: ColorSpace,
}

impl SampleBase {
    pub fn vectors(&self) -> Vec<[f64; 3]> {
        self.samples.iter().map(|s| s.vector).collect()
    }

    /// Maps a raw color through the same transform as the base.
    pub fn project(&self, rgb: Rgb) -> [f64; 3] {
        self.normalizer.apply(to_color_space(rgb, self.color_space))
    }
}

/// Whether a detection may contribute color evidence at all.
pub fn usable(d: &Detection, config: &PipelineConfig) -> bool {
    d.avg_rgb.is_some() && d.conf >= config.det_conf_threshold
}

/// Builds the sample base from detections whose summed overlap is at most
/// `iou_threshold`, in `(frame, track_id)` order, keeping at most
/// `max_samples` when given.
pub fn build_sample_base(
    detections: &[Detection],
    iou_threshold: f64,
    config: &PipelineConfig,
    max_samples: Option<usize>,
) -> Result<SampleBase> {
    let mut eligible: Vec<&Detection> = detections
        .iter()
        .filter(|d| usable(d, config) && d.iou_sum <= iou_threshold)
        .collect();
    eligible.sort_by_key(|d| (d.frame, d.track_id));
    if let Some(max) = max_samples {
        eligible.truncate(max);
    }
    if eligible.len() < 2 {
        return Err(Error::InsufficientSamples(eligible.len()));
    }
    let raw: Vec<[f64; 3]> = eligible
        .iter()
        .map(|d| to_color_space(d.avg_rgb.expect("usable"), config.color_space))
        .collect();
    let normalizer = Normalizer::fit(&raw, config.normalize, config.scale);
    let samples = eligible
        .iter()
        .zip(raw)
        .map(|(d, v)| ColorSample {
            track_id: d.track_id,
            frame: d.frame,
            vector: normalizer.apply(v),
        })
        .collect();
    Ok(SampleBase {
        samples,
        normalizer,
        color_space: config.color_space,
    })
}
