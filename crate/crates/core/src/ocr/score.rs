//! Crop quality scores. Lower is better.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CropScoreFn, Detection};

/// Weight of the log-area bonus in `iou_area`.
pub const EPS_AREA: f64 = 0.1;
/// Width of the uniform jitter in `iou_random`.
pub const EPS_RAND: f64 = 1.0;

/// `brisque * iou_sum + brisque`, evaluated as `brisque * (1 + iou_sum)`.
pub fn base_score(brisque: f64, iou_sum: f64) -> f64 {
    brisque * (1.0 + iou_sum)
}

/// Deterministic jitter in `[0, EPS_RAND)` for one detection.
pub fn jitter(seed: u64, d: &Detection) -> f64 {
    let key = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((d.track_id as u64) << 32 | d.frame as u64);
    ChaCha8Rng::seed_from_u64(key).random::<f64>() * EPS_RAND
}

pub fn crop_score(d: &Detection, f: CropScoreFn, seed: u64) -> f64 {
    let base = base_score(d.brisque, d.iou_sum);
    match f {
        CropScoreFn::IouScore => base,
        // Larger crops are slightly preferred; clamped so scores stay >= 0.
        CropScoreFn::IouArea => (base - EPS_AREA * (1.0 + d.bbox.area()).ln()).max(0.0),
        CropScoreFn::IouRandom => base + jitter(seed, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BBox;

    fn det(brisque: f64, iou: f64) -> Detection {
        Detection {
            frame: 3,
            track_id: 2,
            bbox: BBox::new(0.0, 0.0, 10.0, 20.0),
            conf: 1.0,
            avg_rgb: None,
            brisque,
            iou_sum: iou,
            team_id: None,
            kit_number: None,
        }
    }

    #[test]
    fn equation_examples() {
        assert_eq!(crop_score(&det(20.0, 0.0), CropScoreFn::IouScore, 0), 20.0);
        assert_eq!(crop_score(&det(10.0, 0.5), CropScoreFn::IouScore, 0), 15.0);
        assert_eq!(crop_score(&det(0.0, 0.9), CropScoreFn::IouScore, 0), 0.0);
    }

    #[test]
    fn area_prefers_larger_crops() {
        let small = det(10.0, 0.0);
        let mut large = det(10.0, 0.0);
        large.bbox.w = 100.0;
        let s = crop_score(&small, CropScoreFn::IouArea, 0);
        let l = crop_score(&large, CropScoreFn::IouArea, 0);
        assert!(l < s && s < 10.0);
        assert_eq!(crop_score(&det(0.0, 0.0), CropScoreFn::IouArea, 0), 0.0);
    }

    #[test]
    fn random_jitter_is_bounded_and_seeded() {
        let d = det(10.0, 0.2);
        let a = crop_score(&d, CropScoreFn::IouRandom, 1);
        assert_eq!(a, crop_score(&d, CropScoreFn::IouRandom, 1));
        assert!((12.0..12.0 + EPS_RAND).contains(&a));
        assert_ne!(a, crop_score(&d, CropScoreFn::IouRandom, 2));
    }
}
