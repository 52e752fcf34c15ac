//! Team identification from kit colors.

pub mod kmeans;
pub mod roi;
pub mod sample;
pub mod space;
pub mod team;

pub use kmeans::{kmeans2, KMeansFit};
pub use roi::{avg_rgb, mean_color, roi_frame_rect, roi_rect};
pub use sample::{build_sample_base, ColorSample, Normalizer, SampleBase};
pub use space::{distance, srgb_to_lab, to_color_space};
pub use team::{
    assign_tracklet_teams, fit_cluster_model, map_clusters_to_teams, ClusterModel,
    ONLINE_FREEZE_SAMPLES,
};
