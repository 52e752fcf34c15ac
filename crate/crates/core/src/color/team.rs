//! Cluster model fitting, cluster-to-team mapping and tracklet assignment.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::kmeans::kmeans2;
use super::sample::{build_sample_base, usable, Normalizer};
use super::space::{distance, to_color_space};
use crate::error::Result;
use crate::model::{
    ColorSpace, Detection, FrameIndex, GameMetadata, PipelineConfig, Rgb, TeamAssignment, TeamDb,
    TeamSide, TrackId, Tracklet,
};

/// Sample count after which the online model stops learning.
pub const ONLINE_FREEZE_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centers: [[f64; 3]; 2],
    /// Team side of cluster 0 and cluster 1.
    pub cluster_to_team: [TeamSide; 2],
    pub color_space: ColorSpace,
    pub normalizer: Normalizer,
    pub sample_count: usize,
    /// Cluster of every detection that was part of the sample base.
    #[serde(skip)]
    pub base_assignments: HashMap<(TrackId, FrameIndex), u8>,
}

impl ClusterModel {
    pub fn project(&self, rgb: Rgb) -> [f64; 3] {
        self.normalizer.apply(to_color_space(rgb, self.color_space))
    }
}

/// Maps the cluster nearest the home team's home kit color to the home team.
/// Equidistant centers map cluster 0 to home.
pub fn map_clusters_to_teams(
    centers: &[[f64; 3]; 2],
    metadata: &GameMetadata,
    team_db: &TeamDb,
    color_space: ColorSpace,
    normalizer: &Normalizer,
) -> Result<[TeamSide; 2]> {
    let home = team_db.get(&metadata.home_team)?.home;
    let reference = normalizer.apply(to_color_space(Rgb::from_u8(home), color_space));
    let d0 = distance(&reference, &centers[0]);
    let d1 = distance(&reference, &centers[1]);
    if (d0 - d1).abs() <= 1e-9 * d0.max(d1) {
        warn!(d0, d1, "cluster centers equidistant from home kit color; cluster 0 -> home");
    }
    if d1 < d0 && (d0 - d1).abs() > 1e-9 * d0.max(d1) {
        Ok([TeamSide::Away, TeamSide::Home])
    } else {
        Ok([TeamSide::Home, TeamSide::Away])
    }
}

/// Fits the two-team color model. `max_samples` caps the sample base at the
/// earliest detections (online mode).
pub fn fit_cluster_model(
    detections: &[Detection],
    metadata: &GameMetadata,
    team_db: &TeamDb,
    config: &PipelineConfig,
    max_samples: Option<usize>,
) -> Result<ClusterModel> {
    let base = build_sample_base(detections, config.iou_threshold, config, max_samples)?;
    let fit = kmeans2(&base.vectors(), config.rng_seed)?;
    let cluster_to_team = map_clusters_to_teams(
        &fit.centers,
        metadata,
        team_db,
        config.color_space,
        &base.normalizer,
    )?;
    let base_assignments = base
        .samples
        .iter()
        .zip(&fit.assignments)
        .map(|(s, &a)| ((s.track_id, s.frame), a))
        .collect();
    Ok(ClusterModel {
        centers: fit.centers,
        cluster_to_team,
        color_space: config.color_space,
        normalizer: base.normalizer,
        sample_count: base.samples.len(),
        base_assignments,
    })
}

/// Assigns a team to every tracklet by majority over its usable detections.
///
/// Base samples keep their k-means cluster; other detections go to the
/// nearest center. Confidence is the majority fraction times the mean of
/// `1 - d_own / (d_own + d_other)`. Majority ties go to the cluster with the
/// smaller summed distance, then to cluster 0. Tracklets without usable
/// detections stay unassigned.
pub fn assign_tracklet_teams(
    tracklets: &mut [Tracklet],
    model: &ClusterModel,
    metadata: &GameMetadata,
    config: &PipelineConfig,
) {
    for t in tracklets.iter_mut() {
        t.team_assignment = assign_one(t, model, metadata, config);
    }
}

fn assign_one(
    t: &Tracklet,
    model: &ClusterModel,
    metadata: &GameMetadata,
    config: &PipelineConfig,
) -> Option<TeamAssignment> {
    let mut votes = [0usize; 2];
    let mut summed = [0.0f64; 2];
    let mut margin_sum = 0.0;
    let mut n = 0usize;
    for d in t.detections.iter().filter(|d| usable(d, config)) {
        let v = model.project(d.avg_rgb.expect("usable"));
        let dist = [distance(&v, &model.centers[0]), distance(&v, &model.centers[1])];
        let label = match model.base_assignments.get(&(d.track_id, d.frame)) {
            Some(&l) => l as usize,
            None => usize::from(dist[1] < dist[0]),
        };
        let own = dist[label];
        let other = dist[1 - label];
        votes[label] += 1;
        summed[0] += dist[0];
        summed[1] += dist[1];
        margin_sum += if own + other > 0.0 {
            1.0 - own / (own + other)
        } else {
            0.5
        };
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let cluster = if votes[0] != votes[1] {
        usize::from(votes[1] > votes[0])
    } else {
        if summed[0] == summed[1] {
            warn!(track_id = t.track_id, "team vote tie; defaulting to cluster 0");
        }
        usize::from(summed[1] < summed[0])
    };
    let fraction = votes[cluster] as f64 / n as f64;
    let confidence = (fraction * margin_sum / n as f64).clamp(0.0, 1.0);
    let side = model.cluster_to_team[cluster];
    Some(TeamAssignment {
        team: metadata.team_name(side).to_string(),
        side,
        confidence,
    })
}
