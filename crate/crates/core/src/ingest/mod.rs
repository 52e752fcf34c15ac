//! Frame access, ground truth, and the synthetic match generator.

pub mod font;
pub mod frames;
pub mod ground_truth;
pub mod synth;

pub use frames::{frame_file_name, FrameSource, Raster, RasterDir, Rect};
pub use ground_truth::{load_ground_truth, GroundTruth, GtEntry};
pub use synth::{generate_synthetic_match, SyntheticMatch, SyntheticScene, SyntheticSpec, SyntheticTeam};
