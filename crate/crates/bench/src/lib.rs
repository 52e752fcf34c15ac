//! Shared fixtures for the criterion benches under `benches/`.

use pitchid_core::ingest::{generate_synthetic_match, SyntheticMatch, SyntheticSpec};
use pitchid_core::{BBox, Detection, Tracklet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A tracklet of `len` consecutive frames with random crop metadata.
pub fn random_tracklet(len: u32, seed: u64) -> Tracklet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tracklet {
        track_id: 1,
        detections: (0..len)
            .map(|frame| Detection {
                frame,
                track_id: 1,
                bbox: BBox::new(0.0, 0.0, 40.0, 100.0),
                conf: rng.random_range(0.6..0.99),
                avg_rgb: None,
                brisque: rng.random_range(10.0..60.0),
                iou_sum: rng.random_range(0.0..1.5),
                team_id: None,
                kit_number: None,
            })
            .collect(),
        team_assignment: None,
        kit_candidates: Vec::new(),
    }
}

/// `n` color samples from two well separated blobs plus noise.
pub fn two_blobs(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let base = if i % 2 == 0 { [200.0, 30.0, 30.0] } else { [30.0, 60.0, 200.0] };
            base.map(|c| c + rng.random_range(-25.0..25.0))
        })
        .collect()
}

pub fn small_match(frames: u32) -> SyntheticMatch {
    let spec = SyntheticSpec {
        frames,
        ..SyntheticSpec::default()
    };
    generate_synthetic_match(&spec, 1).expect("default spec is valid")
}
