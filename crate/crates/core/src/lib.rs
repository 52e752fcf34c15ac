//! Soccer tracklet identification engine.
//!
//! Takes multi-object-tracker output for a soccer clip and resolves every
//! tracklet to a team (two-cluster color model over kit colors) and a player
//! (scheduled kit-number OCR plus roster lookup). The resolved per-frame
//! records feed player clip timelines and an evaluation harness.
//!
//! Stages, in pipeline order:
//!
//! * [`model`]: records, team/player lookup tables and configuration.
//! * [`ingest`]: frame rasters, ground truth and the synthetic match generator.
//! * [`color`]: ROI color extraction, color spaces, k-means and team mapping.
//! * [`ocr`]: crop scoring, OCR scheduling, engine adapters and aggregation.
//! * [`identity`]: roster lookup, collision resolution and `output.json`.
//! * [`clip`]: per-player segment timelines and EDL export.
//! * [`eval`]: team/OCR/combined accuracy reports.
//! * [`pipeline`]: end-to-end orchestration with artifacts on disk.

pub mod clip;
pub mod color;
pub mod error;
pub mod eval;
pub mod identity;
pub mod ingest;
pub mod model;
pub mod ocr;
pub mod pipeline;
pub mod schema;

pub use error::{Error, Result};
pub use model::{
    BBox, ColorSpace, CropScoreFn, Detection, GameMetadata, KitCandidate, KitNumber, OcrMethod,
    OcrSelection, OffsetType, PipelineConfig, PlayerDb, Rgb, TeamAssignment, TeamDb, TeamSide,
    Tracklet,
};
