//! Pipeline configuration (`config.json`). Every field is optional; missing
//! fields take the defaults below.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpace {
    Rgb,
    Cielab,
    WeightedRgb,
}

impl ColorSpace {
    pub fn label(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "RGB",
            ColorSpace::Cielab => "CIELAB",
            ColorSpace::WeightedRgb => "W. RGB",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clustering {
    Kmeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetType {
    Trim,
    Center,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcrMethod {
    Paddle,
    Easy,
    Mock,
}

impl OcrMethod {
    pub fn id(self) -> &'static str {
        match self {
            OcrMethod::Paddle => "paddle",
            OcrMethod::Easy => "easy",
            OcrMethod::Mock => "mock",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OcrMethod::Paddle => "Paddle",
            OcrMethod::Easy => "Easy",
            OcrMethod::Mock => "Mock",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropScoreFn {
    IouScore,
    IouArea,
    IouRandom,
}

/// How crops are chosen for OCR submission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OcrSelection {
    /// The `n` best-scoring crops of the whole tracklet.
    TopN { n: usize },
    /// The tracklet span cut into `zones` intervals, at most `per_zone` crops each.
    TimeZones { zones: usize, per_zone: usize },
    /// Every crop whose score is at most `max_score`.
    ScoreGate { max_score: f64 },
}

impl Default for OcrSelection {
    fn default() -> Self {
        OcrSelection::TimeZones {
            zones: 5,
            per_zone: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub color_space: ColorSpace,
    pub clustering: Clustering,
    pub offset_type: OffsetType,
    /// Per-component min-max over the sample base.
    pub normalize: bool,
    /// Per-component z-score over the sample base.
    pub scale: bool,
    /// Maximum summed overlap for a detection to join the sample base.
    pub iou_threshold: f64,
    pub ocr_method: OcrMethod,
    /// External command templates keyed by OCR method id. `{crop}` is replaced
    /// by the crop file path; without it the path is appended.
    pub ocr_commands: BTreeMap<String, String>,
    pub crop_score_fn: CropScoreFn,
    pub ocr_selection: OcrSelection,
    pub ocr_conf_threshold: f64,
    pub stop_at_detection: bool,
    pub det_conf_threshold: f64,
    pub appearance_threshold: f64,
    pub clip_gap_tolerance: u32,
    pub clip_pad: u32,
    pub rng_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            color_space: ColorSpace::Cielab,
            clustering: Clustering::Kmeans,
            offset_type: OffsetType::Trim,
            normalize: true,
            scale: false,
            iou_threshold: 0.0,
            ocr_method: OcrMethod::Paddle,
            ocr_commands: BTreeMap::new(),
            crop_score_fn: CropScoreFn::IouScore,
            ocr_selection: OcrSelection::default(),
            ocr_conf_threshold: 0.5,
            stop_at_detection: false,
            det_conf_threshold: 0.25,
            appearance_threshold: 0.25,
            clip_gap_tolerance: 12,
            clip_pad: 0,
            rng_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iou_threshold", self.iou_threshold),
            ("ocr_conf_threshold", self.ocr_conf_threshold),
            ("det_conf_threshold", self.det_conf_threshold),
            ("appearance_threshold", self.appearance_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        match self.ocr_selection {
            OcrSelection::TopN { n } if n < 1 => {
                return Err(Error::Config("ocr_selection.n must be >= 1".into()))
            }
            OcrSelection::TimeZones { zones, per_zone } if zones < 1 || per_zone < 1 => {
                return Err(Error::Config(
                    "ocr_selection.zones and per_zone must be >= 1".into(),
                ))
            }
            OcrSelection::ScoreGate { max_score } if !(max_score >= 0.0) => {
                return Err(Error::Config(
                    "ocr_selection.max_score must be >= 0".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn load_config(json: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig =
        serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
