//! Production code checked against independent implementations: the
//! `palette` crate for colorimetry, brute force for 2-means, and direct
//! geometry for the generator's overlap sums.

use palette::white_point::D65;
use palette::{FromColor, Lab, Srgb};
use pitchid_core::color::kmeans::kmeans2;
use pitchid_core::color::space::srgb_to_lab;
use pitchid_core::ingest::{generate_synthetic_match, SyntheticSpec};
use pitchid_core::{BBox, Detection};
use proptest::prelude::*;

#[test]
fn lab_matches_palette_forward() {
    let mut worst = [0.0f64; 3];
    for r in (0..=255).step_by(15) {
        for g in (0..=255).step_by(15) {
            for b in (0..=255).step_by(15) {
                let ours = srgb_to_lab([r as f64, g as f64, b as f64]);
                let srgb = Srgb::new(r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
                let theirs: Lab<D65, f64> = Lab::from_color(srgb);
                for (w, d) in worst.iter_mut().zip([ours[0] - theirs.l, ours[1] - theirs.a, ours[2] - theirs.b]) {
                    *w = w.max(d.abs());
                }
            }
        }
    }
    // The two differ only in how the D65 white point is rounded.
    assert!(worst.iter().all(|&w| w < 0.05), "{worst:?}");
}

fn sse(samples: &[[f64; 3]], labels: &[u8]) -> f64 {
    (0..2u8)
        .map(|c| {
            let members: Vec<_> = samples.iter().zip(labels).filter(|(_, &l)| l == c).map(|(s, _)| *s).collect();
            if members.is_empty() {
                return 0.0;
            }
            let n = members.len() as f64;
            let mean: [f64; 3] = std::array::from_fn(|k| members.iter().map(|m| m[k]).sum::<f64>() / n);
            members
                .iter()
                .map(|m| (0..3).map(|k| (m[k] - mean[k]).powi(2)).sum::<f64>())
                .sum()
        })
        .sum()
}

fn brute_force(samples: &[[f64; 3]]) -> f64 {
    let n = samples.len();
    (1u32..1 << (n - 1))
        .map(|mask| {
            let labels: Vec<u8> = (0..n).map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as u8 }).collect();
            sse(samples, &labels)
        })
        .fold(f64::INFINITY, f64::min)
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(0.0f64..100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kmeans_reaches_the_brute_force_optimum(samples in prop::collection::vec(point(), 2..=12), seed in any::<u64>()) {
        prop_assume!(samples.iter().any(|s| s != &samples[0]));
        let fit = kmeans2(&samples, seed).unwrap();
        let best = brute_force(&samples);
        prop_assert!((fit.sse - best).abs() <= 1e-9 * best.max(1.0), "{} vs {}", fit.sse, best);
        prop_assert!((sse(&samples, &fit.assignments) - fit.sse).abs() <= 1e-9 * best.max(1.0));
    }

    #[test]
    fn kmeans_partition_ignores_scale(samples in prop::collection::vec(point(), 2..=12), c in 0.001f64..1000.0) {
        prop_assume!(samples.iter().any(|s| s != &samples[0]));
        let a = kmeans2(&samples, 3).unwrap().assignments;
        let scaled: Vec<_> = samples.iter().map(|s| s.map(|v| v * c)).collect();
        let b = kmeans2(&scaled, 3).unwrap().assignments;
        let flip = a[0] != b[0];
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x != y) == flip));
    }
}

fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.w * a.h + b.w * b.h - inter)
}

#[test]
fn generated_iou_sums_match_geometry() {
    let spec = SyntheticSpec {
        frames: 200,
        occlusion_rate: 0.5,
        ..SyntheticSpec::default()
    };
    let m = generate_synthetic_match(&spec, 13).unwrap();
    let mut by_frame: std::collections::BTreeMap<u32, Vec<&Detection>> = Default::default();
    for d in &m.detections {
        by_frame.entry(d.frame).or_default().push(d);
    }
    let mut overlapping = 0;
    for dets in by_frame.values() {
        for d in dets {
            let want: f64 = dets.iter().filter(|o| o.track_id != d.track_id).map(|o| iou(&d.bbox, &o.bbox)).sum();
            assert!((d.iou_sum - want).abs() < 1e-9, "track {} frame {}: {} vs {want}", d.track_id, d.frame, d.iou_sum);
            overlapping += usize::from(want > 0.0);
        }
    }
    assert!(overlapping > 0, "occlusion episodes should produce overlaps");
}
