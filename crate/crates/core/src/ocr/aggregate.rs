//! Ranking kit-number hypotheses from a tracklet's readings.

use std::collections::BTreeMap;

use super::execute::OcrReading;
use crate::model::{KitCandidate, KitNumber};

/// Groups readings by kit number and ranks them by summed confidence,
/// normalized by the total. Readings that are not a valid kit (such as
/// `0`) are dropped. Ties rank the lower kit first. If every confidence is
/// zero, readings are counted instead.
pub fn aggregate_kit_candidates(readings: &[OcrReading]) -> Vec<KitCandidate> {
    let mut sums: BTreeMap<KitNumber, (f64, usize)> = BTreeMap::new();
    for r in readings {
        if let Some(k) = KitNumber::parse(&r.digits) {
            let e = sums.entry(k).or_default();
            e.0 += r.confidence;
            e.1 += 1;
        }
    }
    let total: f64 = sums.values().map(|v| v.0).sum();
    let count: usize = sums.values().map(|v| v.1).sum();
    let mut out: Vec<KitCandidate> = sums
        .into_iter()
        .map(|(kit, (sum, n))| KitCandidate {
            kit,
            confidence: if total > 0.0 {
                sum / total
            } else {
                n as f64 / count as f64
            },
        })
        .collect();
    // Stable sort keeps ascending kit order among equal confidences.
    out.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(d: &str, c: f64) -> OcrReading {
        OcrReading {
            digits: d.into(),
            confidence: c,
            frame: 0,
        }
    }

    fn kit(n: u32) -> KitNumber {
        KitNumber::new(n).unwrap()
    }

    #[test]
    fn grouped_and_normalized() {
        let c = aggregate_kit_candidates(&[r("7", 0.9), r("7", 0.8), r("1", 0.95)]);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].kit, kit(7));
        assert!((c[0].confidence - 1.7 / 2.65).abs() < 1e-12);
        assert_eq!(c[1].kit, kit(1));
        assert!((c[1].confidence - 0.95 / 2.65).abs() < 1e-12);
    }

    #[test]
    fn empty_and_singleton() {
        assert!(aggregate_kit_candidates(&[]).is_empty());
        let c = aggregate_kit_candidates(&[r("10", 0.4)]);
        assert_eq!(c, vec![KitCandidate { kit: kit(10), confidence: 1.0 }]);
    }

    #[test]
    fn leading_zero_and_zero_kit() {
        let c = aggregate_kit_candidates(&[r("07", 0.5), r("7", 0.5), r("0", 0.9)]);
        assert_eq!(c, vec![KitCandidate { kit: kit(7), confidence: 1.0 }]);
    }

    #[test]
    fn zero_confidence_falls_back_to_counts() {
        let c = aggregate_kit_candidates(&[r("3", 0.0), r("3", 0.0), r("4", 0.0)]);
        assert_eq!(c[0].kit, kit(3));
        assert!((c[0].confidence - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sums_to_one_and_order_free(
            raw in prop::collection::vec((1u8..100, 0.01f64..1.0), 1..30),
            rot in 0usize..30,
        ) {
            let readings: Vec<_> = raw.iter().map(|(k, c)| r(&k.to_string(), *c)).collect();
            let a = aggregate_kit_candidates(&readings);
            let total: f64 = a.iter().map(|c| c.confidence).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(a.windows(2).all(|w| w[0].confidence >= w[1].confidence));
            let mut shuffled = readings.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let b = aggregate_kit_candidates(&shuffled);
            prop_assert_eq!(
                a.iter().map(|c| c.kit).collect::<Vec<_>>(),
                b.iter().map(|c| c.kit).collect::<Vec<_>>()
            );
        }
    }
}
