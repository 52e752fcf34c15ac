//! Color-space transforms applied before clustering.

use crate::model::{ColorSpace, Rgb};

/// Luminance-motivated channel weights for weighted RGB.
pub const WEIGHTS: [f64; 3] = [0.3, 0.59, 0.11];

// Linear sRGB -> CIE XYZ, D65 white, 2 degree observer.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

// Reference white as the image of linear (1, 1, 1), so sRGB white maps to
// exactly L* = 100, a* = b* = 0.
const WHITE: [f64; 3] = [
    SRGB_TO_XYZ[0][0] + SRGB_TO_XYZ[0][1] + SRGB_TO_XYZ[0][2],
    SRGB_TO_XYZ[1][0] + SRGB_TO_XYZ[1][1] + SRGB_TO_XYZ[1][2],
    SRGB_TO_XYZ[2][0] + SRGB_TO_XYZ[2][1] + SRGB_TO_XYZ[2][2],
];

pub fn to_color_space(rgb: Rgb, space: ColorSpace) -> [f64; 3] {
    let c = rgb.0;
    match space {
        ColorSpace::Rgb => c,
        ColorSpace::WeightedRgb => [c[0] * WEIGHTS[0], c[1] * WEIGHTS[1], c[2] * WEIGHTS[2]],
        ColorSpace::Cielab => srgb_to_lab(c),
    }
}

fn srgb_to_linear(c: f64) -> f64 {
    let c = c / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB channels in `[0, 255]` to CIE L*a*b*.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    for (out, row) in xyz.iter_mut().zip(&SRGB_TO_XYZ) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Euclidean distance; ΔE*ab when both points are L*a*b*.
pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    distance_sq(a, b).sqrt()
}

pub fn distance_sq(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weighted() {
        assert_eq!(
            to_color_space(Rgb([100.0, 100.0, 100.0]), ColorSpace::WeightedRgb),
            [30.0, 59.0, 11.0]
        );
    }

    #[test]
    fn lab_anchors() {
        let w = srgb_to_lab([255.0; 3]);
        assert!((w[0] - 100.0).abs() < 1e-6 && w[1].abs() < 1e-6 && w[2].abs() < 1e-6, "{w:?}");
        let k = srgb_to_lab([0.0; 3]);
        assert!(k.iter().all(|v| v.abs() < 1e-6), "{k:?}");
    }

    #[test]
    fn lab_red() {
        let r = srgb_to_lab([255.0, 0.0, 0.0]);
        let want = [53.24, 80.09, 67.20];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 0.05, "{r:?}");
        }
    }

    proptest! {
        #[test]
        fn rgb_is_identity(c in prop::array::uniform3(0.0f64..=255.0)) {
            prop_assert_eq!(to_color_space(Rgb(c), ColorSpace::Rgb), c);
        }

        #[test]
        fn weighted_is_linear(c in prop::array::uniform3(0.0f64..=255.0), alpha in 0.0f64..=1.0) {
            let scaled = Rgb(c.map(|v| v * alpha));
            let a = to_color_space(scaled, ColorSpace::WeightedRgb);
            let b = to_color_space(Rgb(c), ColorSpace::WeightedRgb).map(|v| v * alpha);
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).abs() <= 1e-9 * (1.0 + b[i].abs()));
            }
        }
    }
}
