//! Two-cluster k-means.
//!
//! Each restart seeds with k-means++ (deterministic for a fixed seed), runs
//! Lloyd iterations until the centers move less than [`TOLERANCE`] or
//! [`MAX_ITER`] is hit, then applies Hartigan single-point transfers. The
//! restart with the lowest within-cluster SSE wins; ties keep the earlier one.
//! Inputs of at most [`PAIR_SEEDING_LIMIT`] samples additionally restart
//! from every pair of distinct samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::distance_sq;
use crate::error::{Error, Result};

pub const MAX_ITER: usize = 100;
pub const TOLERANCE: f64 = 1e-9;
pub const RESTARTS: usize = 10;
/// Up to this many samples, every pair of samples also seeds a restart.
pub const PAIR_SEEDING_LIMIT: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: [[f64; 3]; 2],
    /// Cluster index (0 or 1) per sample.
    pub assignments: Vec<u8>,
    pub sse: f64,
}

pub fn kmeans2(samples: &[[f64; 3]], seed: u64) -> Result<KMeansFit> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(samples.len()));
    }
    if samples.iter().all(|s| s == &samples[0]) {
        return Err(Error::DegenerateSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..RESTARTS {
        let init = plus_plus_init(samples, &mut rng);
        let fit = hartigan(samples, lloyd(samples, init));
        if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
            best = Some(fit);
        }
    }
    if samples.len() <= PAIR_SEEDING_LIMIT {
        // Small inputs are where a bad restart costs the most; also start
        // from every pair of distinct samples.
        for i in 0..samples.len() {
            for j in i + 1..samples.len() {
                if samples[i] == samples[j] {
                    continue;
                }
                let fit = hartigan(samples, lloyd(samples, [samples[i], samples[j]]));
                if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
                    best = Some(fit);
                }
            }
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_init(samples: &[[f64; 3]], rng: &mut ChaCha8Rng) -> [[f64; 3]; 2] {
    let first = samples[rng.random_range(0..samples.len())];
    let d2: Vec<f64> = samples.iter().map(|s| distance_sq(s, &first)).collect();
    let total: f64 = d2.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut second = *samples
        .iter()
        .zip(&d2)
        .rev()
        .find(|(_, d)| **d > 0.0)
        .map(|(s, _)| s)
        .expect("samples are not all identical");
    for (s, d) in samples.iter().zip(&d2) {
        if *d <= 0.0 {
            continue;
        }
        if target < *d {
            second = *s;
            break;
        }
        target -= d;
    }
    [first, second]
}

fn nearest(s: &[f64; 3], centers: &[[f64; 3]; 2]) -> (u8, f64) {
    let d0 = distance_sq(s, &centers[0]);
    let d1 = distance_sq(s, &centers[1]);
    if d1 < d0 {
        (1, d1)
    } else {
        (0, d0)
    }
}

fn assign(samples: &[[f64; 3]], centers: &[[f64; 3]; 2]) -> Vec<u8> {
    samples.iter().map(|s| nearest(s, centers).0).collect()
}

fn means(samples: &[[f64; 3]], labels: &[u8]) -> ([[f64; 3]; 2], [usize; 2]) {
    let mut sums = [[0.0; 3]; 2];
    let mut counts = [0usize; 2];
    for (s, &l) in samples.iter().zip(labels) {
        let l = l as usize;
        counts[l] += 1;
        for c in 0..3 {
            sums[l][c] += s[c];
        }
    }
    let mut centers = [[0.0; 3]; 2];
    for k in 0..2 {
        if counts[k] > 0 {
            centers[k] = sums[k].map(|v| v / counts[k] as f64);
        }
    }
    (centers, counts)
}

fn sse(samples: &[[f64; 3]], labels: &[u8], centers: &[[f64; 3]; 2]) -> f64 {
    samples
        .iter()
        .zip(labels)
        .map(|(s, &l)| distance_sq(s, &centers[l as usize]))
        .sum()
}

fn lloyd(samples: &[[f64; 3]], mut centers: [[f64; 3]; 2]) -> KMeansFit {
    let mut labels = assign(samples, &centers);
    for _ in 0..MAX_ITER {
        let (mut next, counts) = means(samples, &labels);
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            // Re-seed the empty cluster from the point farthest from its center.
            let far = samples
                .iter()
                .zip(&labels)
                .enumerate()
                .max_by(|(_, (a, &la)), (_, (b, &lb))| {
                    distance_sq(a, &next[la as usize]).total_cmp(&distance_sq(b, &next[lb as usize]))
                })
                .map(|(i, _)| i)
                .expect("non-empty samples");
            next[empty] = samples[far];
            labels[far] = empty as u8;
            let (recomputed, _) = means(samples, &labels);
            next[1 - empty] = recomputed[1 - empty];
        }
        let shift = (0..2)
            .map(|k| distance_sq(&centers[k], &next[k]).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        let relabeled = assign(samples, &centers);
        let stable = relabeled == labels;
        labels = relabeled;
        if shift < TOLERANCE || stable {
            break;
        }
    }
    let (centers, counts) = means(samples, &labels);
    debug_assert!(counts.iter().all(|&c| c > 0));
    let sse = sse(samples, &labels, &centers);
    KMeansFit {
        centers,
        assignments: labels,
        sse,
    }
}

/// Moves single points between clusters while doing so lowers the SSE.
fn hartigan(samples: &[[f64; 3]], fit: KMeansFit) -> KMeansFit {
    let mut labels = fit.assignments;
    let (_, mut counts) = means(samples, &labels);
    if counts.contains(&0) {
        return lloyd(samples, fit.centers);
    }
    let mut sums = [[0.0; 3]; 2];
    for (s, &l) in samples.iter().zip(&labels) {
        for c in 0..3 {
            sums[l as usize][c] += s[c];
        }
    }
    let center = |sums: &[[f64; 3]; 2], counts: &[usize; 2], k: usize| -> [f64; 3] {
        sums[k].map(|v| v / counts[k] as f64)
    };
    let mut moved = true;
    let mut passes = 0;
    while moved && passes < MAX_ITER {
        moved = false;
        passes += 1;
        for (i, s) in samples.iter().enumerate() {
            let from = labels[i] as usize;
            let to = 1 - from;
            if counts[from] <= 1 {
                continue;
            }
            let na = counts[from] as f64;
            let nb = counts[to] as f64;
            let da = distance_sq(s, &center(&sums, &counts, from));
            let db = distance_sq(s, &center(&sums, &counts, to));
            let gain = na / (na - 1.0) * da - nb / (nb + 1.0) * db;
            if gain > 1e-12 * (da + db) {
                for c in 0..3 {
                    sums[from][c] -= s[c];
                    sums[to][c] += s[c];
                }
                counts[from] -= 1;
                counts[to] += 1;
                labels[i] = to as u8;
                moved = true;
            }
        }
    }
    let (centers, _) = means(samples, &labels);
    let sse = sse(samples, &labels, &centers);
    KMeansFit {
        centers,
        assignments: labels,
        sse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_samples_are_their_own_clusters() {
        let s = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let fit = kmeans2(&s, 3).unwrap();
        assert_ne!(fit.assignments[0], fit.assignments[1]);
        assert_eq!(fit.centers[fit.assignments[0] as usize], s[0]);
        assert_eq!(fit.centers[fit.assignments[1] as usize], s[1]);
        assert_eq!(fit.sse, 0.0);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let s = vec![[7.0, 7.0, 7.0]; 20];
        assert!(matches!(kmeans2(&s, 0), Err(Error::DegenerateSamples)));
        assert!(matches!(kmeans2(&s[..1], 0), Err(Error::InsufficientSamples(1))));
    }

    #[test]
    fn separates_red_and_blue_for_every_seed() {
        let mut s = Vec::new();
        for i in 0..10 {
            let j = i as f64 * 0.5;
            s.push([250.0 - j, 5.0 + j, 5.0]);
            s.push([5.0, 5.0 + j, 250.0 - j]);
        }
        for seed in 0..50 {
            let fit = kmeans2(&s, seed).unwrap();
            for (i, &l) in fit.assignments.iter().enumerate() {
                assert_eq!(l == fit.assignments[0], i % 2 == 0, "seed {seed}");
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let s: Vec<[f64; 3]> = (0..40)
            .map(|i| {
                let x = (i * 37 % 101) as f64;
                [x, (i * 13 % 29) as f64, (i % 7) as f64]
            })
            .collect();
        assert_eq!(kmeans2(&s, 9).unwrap(), kmeans2(&s, 9).unwrap());
    }
}
